#pragma once

#include <cstddef>
#include <span>

namespace freeflow {

/// Pairwise (tree) summation of term(i) for i in [begin, end).
///
/// Leaves of at most 32 terms are summed left to right; larger ranges are
/// split at the midpoint. The rounding error grows like O(log n) instead of
/// O(n), and the association order depends only on the range, so results
/// are bitwise reproducible.
template <class Term>
double pairwise_sum(std::size_t begin, std::size_t end, const Term& term) {
  const std::size_t count = end - begin;
  if (count <= 32) {
    double acc = 0.0;
    for (std::size_t i = begin; i < end; ++i) acc += term(i);
    return acc;
  }
  const std::size_t mid = begin + count / 2;
  return pairwise_sum(begin, mid, term) + pairwise_sum(mid, end, term);
}

inline double pairwise_sum(std::span<const double> values) {
  return pairwise_sum(0, values.size(), [&](std::size_t i) { return values[i]; });
}

}  // namespace freeflow
