#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace freeflow {

/// Sorted, strictly increasing, finite real roots of a monic real-rooted
/// polynomial. The polynomial itself is never expanded.
class RootSet {
public:
  /// Takes ownership of already sorted roots; throws InvariantError if they
  /// are empty, non-finite or not strictly increasing.
  explicit RootSet(std::vector<double> roots);

  /// Sorts first, then validates (duplicates still fail).
  static RootSet from_unsorted(std::vector<double> roots);

  std::size_t size() const noexcept { return roots_.size(); }
  double operator[](std::size_t i) const noexcept { return roots_[i]; }
  std::span<const double> values() const noexcept { return roots_; }
  const std::vector<double>& vector() const noexcept { return roots_; }

  double front() const noexcept { return roots_.front(); }
  double back() const noexcept { return roots_.back(); }

  /// max(1, max |root|); the reference magnitude for relative tolerances.
  double scale() const noexcept { return scale_; }

  bool operator==(const RootSet&) const = default;

private:
  std::vector<double> roots_;
  double scale_ = 1.0;
};

/// Root set reached after `derivatives` differentiations of a degree-n0
/// polynomial.
class FlowState {
public:
  FlowState(RootSet current, std::size_t n0, std::size_t derivatives);

  const RootSet& current() const noexcept { return current_; }
  std::size_t n0() const noexcept { return n0_; }
  std::size_t derivatives() const noexcept { return d_; }
  /// d / n0, always in [0, 1).
  double t() const noexcept { return static_cast<double>(d_) / static_cast<double>(n0_); }

private:
  RootSet current_;
  std::size_t n0_;
  std::size_t d_;
};

}  // namespace freeflow
