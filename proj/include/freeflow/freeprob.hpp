#pragma once

#include "freeflow/rootset.hpp"
#include "freeflow/spectral.hpp"

#include <cstddef>
#include <vector>

namespace freeflow::freeprob {

inline constexpr int kMaxOrder = 16;
inline constexpr int kMaxEmpiricalOrder = 8;

/// Raw moments m_1..m_N (m[j] has order j + 1), 1 <= N <= 16.
struct MomentSequence {
  std::vector<double> m;
  int order() const noexcept { return static_cast<int>(m.size()); }
};

/// Free cumulants kappa_1..kappa_N (kappa[j] has order j + 1), 1 <= N <= 16.
struct CumulantSequence {
  std::vector<double> kappa;
  int order() const noexcept { return static_cast<int>(kappa.size()); }
};

/// R(s) = sum_{j >= 0} kappa_{j+1} s^j truncated at the cumulant order.
struct RSeries {
  std::vector<double> coefficients;
  double operator()(double s) const;
};

/// Solves m_n = sum_{k=1}^{n} kappa_k [z^{n-k}] M(z)^k, M(z) = sum_{i>=0} m_i z^i
/// with m_0 = 1, for kappa by forward recursion.
CumulantSequence moments_to_cumulants(const MomentSequence& m);

/// The same relation read as a definition of m_n.
MomentSequence cumulants_to_moments(const CumulantSequence& kappa);

RSeries r_series(const CumulantSequence& kappa);

/// kappa_n -> k kappa_n for every n (the R-transform of the k-th free
/// convolution power is k R). Throws DomainError for k < 1.
CumulantSequence boxplus_power_cumulants(const CumulantSequence& kappa, double k);

/// Derivatives to take on a degree-n polynomial so that the flow stops at the
/// time matching the power k: round((1 - 1/k) n). The resulting time is within
/// 1/(2n) of 1 - 1/k.
std::size_t boxplus_derivatives(double k, std::size_t n);

/// Dilated roots {k y_j} of a flow stopped at t = 1 - 1/k (within 1/(2 n0)).
/// The unweighted empirical measure of the result approximates mu^{boxplus k}.
RootSet boxplus_predict(const FlowState& f, double k);

/// Unweighted sample moments of the roots, order <= 8.
MomentSequence empirical_moments(const RootSet& r, int order);

/// log(kappa_n(after) / kappa_n(before)) / log k for each order; NaN where the
/// ratio is not positive (e.g. odd cumulants of symmetric laws) or k == 1.
std::vector<double> scaling_exponents(const CumulantSequence& before, const CumulantSequence& after, double k);

/// chi = int int log|s - t| du(s) du(t) + 3/4 + log(2 pi) / 2.
///
/// The grid density is read as piecewise constant on cells of width dx; the
/// double integral over each pair of cells is exact, including the singular
/// diagonal. Requires unit mass (|mass - 1| <= 1e-9, else DomainError). Returns
/// -infinity when fewer than two cells carry mass.
double free_entropy(const spectral::DensityGrid& g);

/// Phi = (2 pi^2 / 3) int u^3 dx by the Riemann sum. Requires unit mass.
double free_fisher(const spectral::DensityGrid& g);

/// Exact affine change of variables x -> (x - mean) / sigma applied to the
/// grid, so the result has mean 0 and variance 1 (no interpolation).
spectral::DensityGrid variance_normalized(const spectral::DensityGrid& g);

}  // namespace freeflow::freeprob
