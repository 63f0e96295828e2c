#include "freeflow/rootset.hpp"

#include "freeflow/errors.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace freeflow {

RootSet::RootSet(std::vector<double> roots) : roots_(std::move(roots)) {
  if (roots_.empty()) throw InvariantError("RootSet: empty root set");
  double maxabs = 0.0;
  for (std::size_t i = 0; i < roots_.size(); ++i) {
    if (!std::isfinite(roots_[i])) {
      throw InvariantError("RootSet: non-finite root at index " + std::to_string(i));
    }
    if (i > 0 && !(roots_[i] > roots_[i - 1])) {
      throw InvariantError("RootSet: roots not strictly increasing at index " + std::to_string(i));
    }
    maxabs = std::max(maxabs, std::abs(roots_[i]));
  }
  scale_ = std::max(1.0, maxabs);
}

RootSet RootSet::from_unsorted(std::vector<double> roots) {
  std::sort(roots.begin(), roots.end());
  return RootSet(std::move(roots));
}

FlowState::FlowState(RootSet current, std::size_t n0, std::size_t derivatives)
    : current_(std::move(current)), n0_(n0), d_(derivatives) {
  if (d_ >= n0_) throw InvariantError("FlowState: derivatives applied must be < n0");
  if (current_.size() != n0_ - d_) {
    throw InvariantError("FlowState: root count " + std::to_string(current_.size()) +
                         " != n0 - d = " + std::to_string(n0_ - d_));
  }
}

}  // namespace freeflow
