#pragma once

#include "freeflow/rootset.hpp"

#include <complex>
#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <vector>

namespace freeflow::spectral {

/// Uniform grid x_i = x0 + i dx, i = 0..len-1.
struct GridSpec {
  double x0 = 0.0;
  double dx = 1.0;
  std::size_t len = 0;

  double x(std::size_t i) const noexcept { return x0 + static_cast<double>(i) * dx; }
  double x_end() const noexcept { return x(len - 1); }
  bool operator==(const GridSpec&) const = default;
};

/// Nonnegative density samples on a uniform grid, labelled with a flow time.
class DensityGrid {
public:
  /// Throws InvariantError unless len >= 8, dx > 0, all values finite and
  /// nonnegative, and the mass dx * sum(u) is positive.
  DensityGrid(double x0, double dx, std::vector<double> u, double t = 0.0);
  DensityGrid(const GridSpec& grid, std::vector<double> u, double t = 0.0)
      : DensityGrid(grid.x0, grid.dx, std::move(u), t) {}

  double x0() const noexcept { return x0_; }
  double dx() const noexcept { return dx_; }
  double t() const noexcept { return t_; }
  std::size_t size() const noexcept { return u_.size(); }
  double x(std::size_t i) const noexcept { return x0_ + static_cast<double>(i) * dx_; }
  GridSpec grid() const noexcept { return {x0_, dx_, u_.size()}; }
  std::span<const double> values() const noexcept { return u_; }
  double operator[](std::size_t i) const noexcept { return u_[i]; }

  /// dx * sum(u).
  double mass() const;
  double max_value() const;
  double mean() const;
  double variance() const;

  /// Copy scaled to unit mass.
  DensityGrid normalized() const;

private:
  double x0_;
  double dx_;
  std::vector<double> u_;
  double t_;
};

/// Silverman bandwidth 1.06 sigma m^{-1/5}; sigma is the sample standard
/// deviation. A single root (or a zero spread) falls back to 0.1 * scale.
double silverman_bandwidth(const RootSet& r);

/// Default KDE grid: `len` points over [min - pad, max + pad] with
/// pad = max(0.1 * range, 4 h), so the grid always covers the
/// kernel support required by kde().
GridSpec default_grid(const RootSet& r, std::size_t len = 512, std::optional<double> bandwidth = {});

/// Gaussian kernel density estimate of the flow density at time t: the
/// result is rescaled so dx * sum(u) = r.size() / n0 (= 1 - t for a flow
/// state). Throws DomainError if the grid does not cover
/// [min - 3h, max + 3h].
DensityGrid kde(const RootSet& r, std::size_t n0, double t, const GridSpec& grid,
                std::optional<double> bandwidth = {});

enum class HilbertScheme {
  /// (1/pi) sum_{j - i odd} u_j / (x_i - x_j) * 2 dx. Linear; second order
  /// for densities that are smooth up to the grid edge.
  odd_offset,
  /// odd_offset applied to u - m, plus the exact transform of m, where m is a
  /// square-root edge model sqrt((R - y)(y - L)) (p + q y) fitted to both
  /// support edges. Removes the O(dx^1.5) endpoint error for densities with
  /// square-root edges; falls back to odd_offset when the support is not a
  /// single interval with detectable square-root edges.
  edge_corrected,
};

/// Hf(x) = (1/pi) p.v. int f(y) / (x - y) dy for arbitrary grid samples.
std::vector<double> hilbert_transform(std::span<const double> f, double dx,
                                      HilbertScheme scheme = HilbertScheme::odd_offset,
                                      double x0 = 0.0);

/// Hilbert transform of a density grid on the same grid (len >= 16).
std::vector<double> hilbert(const DensityGrid& g, HilbertScheme scheme = HilbertScheme::odd_offset);

/// Parameters of the square-root edge model fitted by the edge-corrected
/// scheme, if both edges were detected.
struct EdgeModel {
  double left = 0.0, right = 0.0;  // support endpoints L < R
  double p = 0.0, q = 0.0;         // m(y) = sqrt((R - y)(y - L)) (p + q y)
  double operator()(double y) const;
  /// Exact (1/pi) p.v. int m(y) / (x - y) dy.
  double hilbert(double x) const;
};
std::optional<EdgeModel> fit_edge_model(std::span<const double> f, double x0, double dx);

/// Empirical Cauchy transform (1/m) sum 1/(z - r_i).
std::complex<double> cauchy(const RootSet& r, std::complex<double> z);

/// Monotone piecewise-cubic (Fritsch-Carlson) interpolant of a density grid;
/// zero outside the grid. Preserves nonnegativity.
class MonotoneCubic {
public:
  explicit MonotoneCubic(const DensityGrid& g);
  MonotoneCubic(double x0, double dx, std::vector<double> values);
  double operator()(double x) const;

private:
  double x0_, dx_;
  std::vector<double> v_;
  std::vector<double> slope_;
};

/// Samples f on the grid (for closed-form densities).
std::vector<double> sample_on_grid(const GridSpec& grid, const std::function<double(double)>& f);

/// dx * sum |g_i / mass(g) - f(x_i)|, with f a unit-mass density.
double l1_distance_normalized(const DensityGrid& g, const std::function<double(double)>& f);

/// dx * sum |a_i / mass(a) - b_i / mass(b)| on a shared grid.
double l1_distance_normalized(const DensityGrid& a, const DensityGrid& b);

}  // namespace freeflow::spectral
