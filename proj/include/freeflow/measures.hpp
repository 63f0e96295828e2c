#pragma once

#include "freeflow/rootset.hpp"

#include <cstdint>
#include <filesystem>
#include <memory>
#include <string>
#include <variant>
#include <vector>

namespace freeflow::measures {

struct Semicircle {
  double radius = 1.0;
};

struct Uniform {
  double a = 0.0;
  double b = 1.0;
};

struct PointMass {
  double a = 0.0;
};

/// Finite sample loaded from a text file.
struct Empirical {
  std::filesystem::path path;
  std::shared_ptr<const std::vector<double>> values;  // sorted
};

/// A compactly supported probability measure on the real line.
class MeasureSpec {
public:
  using Family = std::variant<Semicircle, Uniform, PointMass, Empirical>;

  static MeasureSpec semicircle(double radius);
  static MeasureSpec uniform(double a, double b);
  static MeasureSpec point_mass(double a);
  /// Reads the file eagerly; throws InputError if it is missing or malformed.
  static MeasureSpec empirical(const std::filesystem::path& path);
  static MeasureSpec empirical(std::vector<double> values);

  const Family& family() const noexcept { return family_; }
  bool closed_form() const noexcept { return !std::holds_alternative<Empirical>(family_); }
  bool has_density() const noexcept {
    return std::holds_alternative<Semicircle>(family_) || std::holds_alternative<Uniform>(family_);
  }

  /// Smallest closed interval carrying all the mass.
  double support_lo() const;
  double support_hi() const;

  std::string name() const;

private:
  explicit MeasureSpec(Family f) : family_(std::move(f)) {}
  Family family_;
};

/// n i.i.d. draws, sorted, with near-ties pushed apart so the result is a
/// valid RootSet. Deterministic in (spec, n, seed).
RootSet sample(const MeasureSpec& spec, std::size_t n, std::uint64_t seed);

/// Pointwise density; 0 outside the support. Point masses report 0 off the
/// atom and +inf on it.
double density(const MeasureSpec& spec, double x);

/// Raw moments m_1..m_order, order <= 16.
std::vector<double> exact_moments(const MeasureSpec& spec, int order);

/// Cumulative distribution of the semicircle law of the given radius.
double semicircle_cdf(double radius, double x);

/// Inverse of semicircle_cdf by bracketed Newton iteration.
double semicircle_quantile(double radius, double p);

std::vector<double> read_sample_file(const std::filesystem::path& path);

}  // namespace freeflow::measures
