#pragma once

#include "freeflow/rootset.hpp"
#include "freeflow/spectral.hpp"

#include <array>
#include <cstddef>
#include <functional>
#include <span>
#include <vector>

namespace freeflow::pdecheck {

/// Density slices on one shared x-grid at increasing times. `times` is the
/// field's own time coordinate: t for the transport form, s = 1 - t for the
/// dilated form (slices are then labelled with t = 1 - s).
class SpaceTimeField {
public:
  /// Throws DomainError for fewer than 3 slices, InvariantError for
  /// non-increasing times or differing grids.
  SpaceTimeField(std::vector<double> times, std::vector<spectral::DensityGrid> slices);

  const std::vector<double>& times() const noexcept { return times_; }
  const std::vector<spectral::DensityGrid>& slices() const noexcept { return slices_; }
  const spectral::GridSpec& grid() const noexcept { return grid_; }
  std::size_t size() const noexcept { return times_.size(); }

private:
  std::vector<double> times_;
  std::vector<spectral::DensityGrid> slices_;
  spectral::GridSpec grid_;
};

struct ResidualOptions {
  /// Points with u <= delta_rel * max u (at the slice or either time
  /// neighbour) are outside the support.
  double delta_rel = 1e-3;
  /// Points within this many cells of the masked boundary are dropped.
  std::size_t erosion = 3;
  /// core_max_abs is taken over u > core_rel * max u.
  double core_rel = 0.5;
  spectral::HilbertScheme scheme = spectral::HilbertScheme::edge_corrected;
};

struct ResidualSlice {
  double time = 0.0;             // field time coordinate of the slice
  std::vector<double> residual;  // NaN outside the evaluation region
  double max_abs = 0.0;
  double median_abs = 0.0;
  double core_max_abs = 0.0;
  std::array<double, 2> region{0.0, 0.0};  // [x_lo, x_hi] of evaluated points
  std::size_t points = 0;
};

/// R = d_t u + (1/pi) d_x arctan(Hu / u), central differences in t and x, at
/// every interior time.
std::vector<ResidualSlice> transport_residual(const SpaceTimeField& u, const ResidualOptions& opt = {});

/// R = -s d_s f + x d_x f - (1/pi) d_x arctan(f / Hf) on a field indexed by s.
/// arctan(f / Hf) is taken as the continuous branch atan2(f, Hf) in (0, pi).
std::vector<ResidualSlice> shlyakhtenko_tao_residual(const SpaceTimeField& f, const ResidualOptions& opt = {});

/// Largest max_abs / core_max_abs over slices.
double max_residual(const std::vector<ResidualSlice>& slices);
double max_core_residual(const std::vector<ResidualSlice>& slices);
double median_residual(const std::vector<ResidualSlice>& slices);

/// Central difference of atan2(num, den) (the angle of den + i num).
std::vector<double> ddx_arctan_direct(std::span<const double> num, std::span<const double> den, double dx);

/// (num' den - num den') / (num^2 + den^2) with central-differenced num', den'.
std::vector<double> ddx_arctan_quotient(std::span<const double> num, std::span<const double> den, double dx);

/// Exact semicircle solution u(t, x) = (2/pi) sqrt(1 - c t - x^2); c = 1 is
/// the true flow, c = 2 the negative control.
double semicircle_solution(double t, double x, double c = 1.0);

/// Fields sampled from u(t, x): times t_lo + j (t_hi - t_lo) / nt, j = 0..nt,
/// and x over [-x_max, x_max] with nx intervals.
SpaceTimeField transport_field(const std::function<double(double, double)>& u, std::size_t nx, std::size_t nt,
                               double t_lo, double t_hi, double x_max);

/// f(s, x) = u(1 - s, s x) for s in [s_lo, s_hi] (ns intervals).
SpaceTimeField dilated_field(const std::function<double(double, double)>& u, std::size_t nx, std::size_t ns,
                             double s_lo, double s_hi, double x_max);

/// Same as transport_field on the exact semicircle (t in [0, 0.5], |x| <= 1.1)
/// and dilated_field (s in [0.5, 1], |x| <= 1.6).
SpaceTimeField semicircle_transport_field(std::size_t nx, std::size_t nt, double c = 1.0, double t_hi = 0.5);
SpaceTimeField semicircle_dilated_field(std::size_t nx, std::size_t ns, double c = 1.0, double s_lo = 0.5);

/// f(s, x) = u(1 - s, s x) built from a transport field by monotone cubic
/// interpolation in x. The s-grid is 1 - t in increasing order; the x-grid is
/// the u-grid stretched by 1 / s_min so every slice is covered.
SpaceTimeField dilate_field(const SpaceTimeField& u_field);

/// KDE slices of flow states on one grid covering every state (len points).
SpaceTimeField flow_field(const std::vector<FlowState>& states, std::size_t len = 512);

/// Residual statistics at two resolutions and the ratio coarse / fine of the
/// core max residual.
struct ConvergenceReport {
  double coarse = 0.0;
  double fine = 0.0;
  double ratio = 0.0;
};
ConvergenceReport convergence(const std::vector<ResidualSlice>& coarse, const std::vector<ResidualSlice>& fine);

/// max |H[u(s .)](x_i) - (Hu)(s x_i)| over the grid, with the discrete
/// transform on the left and an exact transform `hu` on the right.
double dilation_commutator(const std::function<double(double)>& u, const std::function<double(double)>& hu,
                           double s, const spectral::GridSpec& grid,
                           spectral::HilbertScheme scheme = spectral::HilbertScheme::odd_offset);

/// Exact Hilbert transform of P(y) 1_{[-1,1]}(y) for a polynomial P
/// (ascending coefficients).
double polynomial_bump_hilbert(std::span<const double> coefficients, double x);

/// Change of variables f(s, x) = u(1 - s, s x) at s = 1/k, compared with the
/// density of the dilated roots.
struct EquivalenceReport {
  double k = 1.0;
  double s = 1.0;
  double slice_t = 0.0;
  /// L1 distance between f(s, .) = u(1 - s, s .) and the predicted density,
  /// both normalized to mass 1.
  double l1_distance = 0.0;
  /// max |R_S(s, x) - s R_T(1 - s, s x)| over points where both residuals
  /// exist, and the same divided by max |R_S|; NaN when not computable.
  double consistency_max_abs = 0.0;
  double consistency_rel = 0.0;
};

/// `predicted` is a density (any grid) of the dilated roots. The field must
/// have a slice within time_tol of t = 1 - 1/k.
EquivalenceReport equivalence_check(const SpaceTimeField& u_field, double k, const spectral::DensityGrid& predicted,
                                    double time_tol = 1e-9, const ResidualOptions& opt = {});

}  // namespace freeflow::pdecheck
