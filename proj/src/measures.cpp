#include "freeflow/measures.hpp"

#include "freeflow/errors.hpp"
#include "freeflow/rng.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <numbers>
#include <sstream>

namespace freeflow::measures {

namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

// A point mass is sampled as a uniform draw of this half-width around the atom.
double atom_halfwidth(double a) { return 0x1.0p-40 * std::max(1.0, std::abs(a)); }

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

}  // namespace

MeasureSpec MeasureSpec::semicircle(double radius) {
  if (!(radius > 0.0) || !std::isfinite(radius)) {
    throw DomainError("semicircle: radius must be a positive finite real");
  }
  return MeasureSpec(Semicircle{radius});
}

MeasureSpec MeasureSpec::uniform(double a, double b) {
  if (!(a < b) || !std::isfinite(a) || !std::isfinite(b)) {
    throw DomainError("uniform: need finite a < b");
  }
  return MeasureSpec(Uniform{a, b});
}

MeasureSpec MeasureSpec::point_mass(double a) {
  if (!std::isfinite(a)) throw DomainError("pointmass: atom must be finite");
  return MeasureSpec(PointMass{a});
}

MeasureSpec MeasureSpec::empirical(const std::filesystem::path& path) {
  auto values = read_sample_file(path);
  std::sort(values.begin(), values.end());
  return MeasureSpec(
      Empirical{path, std::make_shared<const std::vector<double>>(std::move(values))});
}

MeasureSpec MeasureSpec::empirical(std::vector<double> values) {
  if (values.empty()) throw InputError("empirical: no values");
  for (double v : values) {
    if (!std::isfinite(v)) throw InputError("empirical: non-finite value");
  }
  std::sort(values.begin(), values.end());
  return MeasureSpec(Empirical{{}, std::make_shared<const std::vector<double>>(std::move(values))});
}

double MeasureSpec::support_lo() const {
  return std::visit(Overloaded{
                        [](const Semicircle& s) { return -s.radius; },
                        [](const Uniform& u) { return u.a; },
                        [](const PointMass& p) { return p.a; },
                        [](const Empirical& e) { return e.values->front(); },
                    },
                    family_);
}

double MeasureSpec::support_hi() const {
  return std::visit(Overloaded{
                        [](const Semicircle& s) { return s.radius; },
                        [](const Uniform& u) { return u.b; },
                        [](const PointMass& p) { return p.a; },
                        [](const Empirical& e) { return e.values->back(); },
                    },
                    family_);
}

std::string MeasureSpec::name() const {
  std::ostringstream os;
  os.precision(17);
  std::visit(Overloaded{
                 [&](const Semicircle& s) { os << "semicircle(r=" << s.radius << ")"; },
                 [&](const Uniform& u) { os << "uniform(a=" << u.a << ", b=" << u.b << ")"; },
                 [&](const PointMass& p) { os << "pointmass(a=" << p.a << ")"; },
                 [&](const Empirical& e) {
                   os << "empirical(" << e.path.string() << ", " << e.values->size() << " values)";
                 },
             },
             family_);
  return os.str();
}

double semicircle_cdf(double radius, double x) {
  const double xi = x / radius;
  if (xi <= -1.0) return 0.0;
  if (xi >= 1.0) return 1.0;
  return 0.5 + (xi * std::sqrt(1.0 - xi * xi) + std::asin(xi)) / std::numbers::pi;
}

double semicircle_quantile(double radius, double p) {
  if (!(p >= 0.0 && p <= 1.0)) throw DomainError("semicircle_quantile: p outside [0, 1]");
  if (p == 0.0) return -radius;
  if (p == 1.0) return radius;
  // Work on the unit semicircle; F'(xi) = (2/pi) sqrt(1 - xi^2) vanishes at
  // the edges, so Newton steps leaving the bracket fall back to bisection.
  double lo = -1.0, hi = 1.0;
  double xi = std::sin(std::numbers::pi * (p - 0.5));  // exact at the centre, monotone
  for (int it = 0; it < 200; ++it) {
    const double f = semicircle_cdf(1.0, xi) - p;
    if (f == 0.0) break;
    if (f < 0.0) lo = xi; else hi = xi;
    const double fp = (2.0 / std::numbers::pi) * std::sqrt(std::max(0.0, 1.0 - xi * xi));
    double next = fp > 0.0 ? xi - f / fp : 0.5 * (lo + hi);
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    const double step = std::abs(next - xi);
    xi = next;
    if (step <= 4.0 * std::numeric_limits<double>::epsilon() || hi - lo <= 1e-16) break;
  }
  return radius * xi;
}

RootSet sample(const MeasureSpec& spec, std::size_t n, std::uint64_t seed) {
  if (n < 2) throw DomainError("sample: need n >= 2");
  const CounterRng rng(seed);
  std::vector<double> x(n);
  double width = 0.0;

  std::visit(Overloaded{
                 [&](const Semicircle& s) {
                   for (std::size_t i = 0; i < n; ++i) {
                     x[i] = semicircle_quantile(s.radius, rng.uniform(i));
                   }
                   width = 2.0 * s.radius;
                 },
                 [&](const Uniform& u) {
                   for (std::size_t i = 0; i < n; ++i) x[i] = u.a + (u.b - u.a) * rng.uniform(i);
                   width = u.b - u.a;
                 },
                 [&](const PointMass& p) {
                   const double h = atom_halfwidth(p.a);
                   for (std::size_t i = 0; i < n; ++i) x[i] = p.a + h * (2.0 * rng.uniform(i) - 1.0);
                   width = 2.0 * h;
                 },
                 [&](const Empirical& e) {
                   const auto& v = *e.values;
                   const std::size_t count = v.size();
                   if (n <= count) {
                     // seeded partial Fisher-Yates: a subset without replacement
                     std::vector<std::size_t> idx(count);
                     for (std::size_t i = 0; i < count; ++i) idx[i] = i;
                     for (std::size_t i = 0; i < n; ++i) {
                       const std::size_t j =
                           i + static_cast<std::size_t>(rng.bits(i) % (count - i));
                       std::swap(idx[i], idx[j]);
                       x[i] = v[idx[i]];
                     }
                   } else {
                     for (std::size_t i = 0; i < n; ++i) x[i] = v[rng.bits(i) % count];
                   }
                   width = v.back() - v.front();
                   if (!(width > 0.0)) width = std::max(1.0, std::abs(v.front()));
                 },
             },
             spec.family());

  std::sort(x.begin(), x.end());
  const double eps = 0x1.0p-40 * width;
  for (std::size_t i = 1; i < n; ++i) {
    if (x[i] - x[i - 1] < eps) {
      x[i] = std::max(x[i - 1] + eps, std::nextafter(x[i - 1], std::numeric_limits<double>::infinity()));
    }
  }
  return RootSet(std::move(x));
}

double density(const MeasureSpec& spec, double x) {
  return std::visit(
      Overloaded{
          [&](const Semicircle& s) {
            const double r2 = s.radius * s.radius;
            const double v = r2 - x * x;
            return v > 0.0 ? 2.0 / (std::numbers::pi * r2) * std::sqrt(v) : 0.0;
          },
          [&](const Uniform& u) { return (x >= u.a && x <= u.b) ? 1.0 / (u.b - u.a) : 0.0; },
          [&](const PointMass& p) {
            return x == p.a ? std::numeric_limits<double>::infinity() : 0.0;
          },
          [&](const Empirical&) -> double {
            throw UnsupportedError("density: empirical measures have no closed-form density");
          },
      },
      spec.family());
}

std::vector<double> exact_moments(const MeasureSpec& spec, int order) {
  if (order < 1 || order > 16) throw DomainError("exact_moments: order must be in [1, 16]");
  std::vector<double> m(static_cast<std::size_t>(order));
  std::visit(
      Overloaded{
          [&](const Semicircle& s) {
            // even moments: Catalan(j) * (r/2)^(2j)
            const double q = 0.25 * s.radius * s.radius;
            double catalan = 1.0, qp = 1.0;
            for (int k = 1; k <= order; ++k) {
              if (k % 2 == 1) {
                m[k - 1] = 0.0;
                continue;
              }
              const int j = k / 2;
              catalan = catalan * 2.0 * (2.0 * j - 1.0) / (j + 1.0);
              qp *= q;
              m[k - 1] = catalan * qp;
            }
          },
          [&](const Uniform& u) {
            for (int k = 1; k <= order; ++k) {
              m[k - 1] = (std::pow(u.b, k + 1) - std::pow(u.a, k + 1)) / ((k + 1) * (u.b - u.a));
            }
          },
          [&](const PointMass& p) {
            double v = 1.0;
            for (int k = 1; k <= order; ++k) m[k - 1] = (v *= p.a);
          },
          [&](const Empirical&) {
            throw UnsupportedError(
                "exact_moments: empirical measure; use sample moments of the root set");
          },
      },
      spec.family());
  return m;
}

std::vector<double> read_sample_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open sample file '" + path.string() + "'");
  std::vector<double> values;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto s = trim(line);
    if (s.empty() || s.front() == '#') continue;
    double v = 0.0;
    // from_chars ignores the global locale: '.' is always the separator
    const char* first = s.data();
    if (*first == '+') ++first;
    const auto [ptr, ec] = std::from_chars(first, s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size() || !std::isfinite(v)) {
      throw InputError(path.string() + ":" + std::to_string(lineno) + ": not a real number: '" +
                       std::string(s) + "'");
    }
    values.push_back(v);
  }
  if (values.empty()) throw InputError("sample file '" + path.string() + "' has no values");
  return values;
}

}  // namespace freeflow::measures
