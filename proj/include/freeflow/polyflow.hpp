#pragma once

#include "freeflow/rootset.hpp"

#include <cstddef>
#include <functional>
#include <vector>

namespace freeflow::polyflow {

/// Called after every derivative step with (steps done, steps requested).
using ProgressSink = std::function<void(std::size_t, std::size_t)>;

/// Roots of p' for p = prod (x - r_i).
///
/// Root j is the unique zero of S(y) = sum_i 1/(y - r_i) inside
/// (r_j, r_{j+1}). Each bracket is solved independently (in parallel when
/// OpenMP threads are available) by safeguarded Newton iteration on the
/// pole-cleared function (y - r_j)(y - r_{j+1}) S(y), started from the
/// two-pole model root; bisection takes over whenever a Newton step leaves
/// the current bracket. Results are written to disjoint slots and do not
/// depend on the thread count.
RootSet critical_roots(const RootSet& r);

/// Number of derivatives taken at time t: floor(t * n), guarded against
/// representation error in t * n.
std::size_t derivative_count(double t, std::size_t n);

/// Differentiates floor(t * n) times, n = r.size().
FlowState flow(const RootSet& r, double t, const ProgressSink& progress = {});

/// Differentiates exactly `derivatives` times.
FlowState flow_steps(const RootSet& r, std::size_t derivatives, const ProgressSink& progress = {});

/// One flow, snapshotted at each requested time (any order; duplicates kept).
std::vector<FlowState> flow_checkpoints(const RootSet& r, const std::vector<double>& times,
                                        const ProgressSink& progress = {});

/// Same as flow_checkpoints but the caller also sees every intermediate
/// (parent, child) pair, e.g. to audit invariants at each step.
void flow_visit(const RootSet& r, std::size_t derivatives,
                const std::function<void(const RootSet& parent, const RootSet& child)>& visit);

struct VietaReport {
  double e1_err = 0.0;  // relative error of e1(child) = (n-1)/n e1(parent)
  double e2_err = 0.0;  // relative error of e2(child) = (n-2)/n e2(parent)
};

/// Checks the exact elementary-symmetric identities forced by one
/// differentiation. Errors are scaled by sum |r_i| and sum_{i<j} |r_i r_j|
/// respectively, so cancellation in e1 or e2 does not inflate them.
VietaReport vieta_check(const RootSet& parent, const RootSet& child);

/// e1 = sum r_i and e2 = sum_{i<j} r_i r_j, accumulated in extended precision.
std::pair<double, double> elementary_e1_e2(const RootSet& r);

double min_gap(const RootSet& r);

/// (max root - min root) / (1 - t).
double support_ratio(const FlowState& f);

/// (1 / n0^2) sum_{i,j} (y_i - y_j)^2 over the current roots.
double quadratic_spread(const FlowState& f);

/// Ascending coefficients of n^{l/2} (l!/n!) p^{(n-l)}(x / sqrt(n)) for the
/// roots r; monic (coefficient of x^l is exactly 1). Requires 1 <= l <= 6
/// and n >= 100 l; the roots should come from a mean-0, variance-1 law.
std::vector<double> hermite_tail(const RootSet& r, int l);

struct ShiftedPolynomial {
  double shift = 0.0;               // c in P(x) ~ He_l(x + c)
  std::vector<double> coefficients;  // ascending coefficients of P(x - c)
};

/// Removes the shift c = a_{l-1} / l, i.e. recentres the roots at zero.
ShiftedPolynomial remove_shift(const std::vector<double>& monic);

/// Ascending coefficients of the probabilists' Hermite polynomial He_l.
std::vector<double> probabilists_hermite(int l);

}  // namespace freeflow::polyflow
