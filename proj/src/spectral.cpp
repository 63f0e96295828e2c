#include "freeflow/spectral.hpp"

#include "freeflow/errors.hpp"
#include "freeflow/summation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

namespace freeflow::spectral {

namespace {

constexpr double kInvPi = std::numbers::inv_pi;

// (1/pi) p.v. int sqrt(1 - tau^2) / (xi - tau) d tau over [-1, 1].
double unit_semicircle_hilbert(double xi) {
  if (std::abs(xi) <= 1.0) return xi;
  const double s = std::sqrt(xi * xi - 1.0);
  // xi - sgn(xi) s, written without cancellation
  return 1.0 / (xi + std::copysign(s, xi));
}

struct EdgeFit {
  double edge;   // zero of the fitted u^2
  double slope;  // a, with u ~ a sqrt(distance to the edge)
};

// Fits u^2 by the quadratic through the three outermost positive nodes
// f[j], f[j - dir], f[j - 2 dir]; `dir` is +1 for the right edge. The zero
// must fall inside the edge cell [x_j, x_{j+dir}].
std::optional<EdgeFit> fit_edge(std::span<const double> f, double x0, double dx, std::size_t j, int dir) {
  const auto at = [&](long k) { return f[static_cast<std::size_t>(static_cast<long>(j) + k * dir)]; };
  const double w0 = at(0) * at(0), w1 = at(-1) * at(-1), w2 = at(-2) * at(-2);
  // w(tau) = w0 + beta tau + gamma tau^2, tau = outward distance / dx
  const double gamma = 0.5 * (w0 - 2.0 * w1 + w2);
  const double beta = 0.5 * (3.0 * w0 - 4.0 * w1 + w2);
  double tau = std::numeric_limits<double>::quiet_NaN();
  if (std::abs(gamma) <= 1e-12 * (std::abs(beta) + w0)) {
    if (beta < 0.0) tau = -w0 / beta;
  } else {
    const double disc = beta * beta - 4.0 * gamma * w0;
    if (disc >= 0.0) {
      const double q = -0.5 * (beta + std::copysign(std::sqrt(disc), beta));
      const double t1 = q / gamma;
      const double t2 = q != 0.0 ? w0 / q : std::numeric_limits<double>::quiet_NaN();
      for (double c : {t1, t2}) {
        if (c >= 0.0 && c <= 1.0 && !(tau <= c)) tau = c;
      }
    }
  }
  if (!(tau >= 0.0 && tau <= 1.0)) return std::nullopt;
  const double slope2 = -(beta + 2.0 * gamma * tau) / dx;
  if (!(slope2 > 0.0)) return std::nullopt;
  const double xj = x0 + static_cast<double>(j) * dx;
  return EdgeFit{xj + dir * tau * dx, std::sqrt(slope2)};
}

std::vector<double> odd_offset(std::span<const double> f) {
  const std::size_t n = f.size();
  std::vector<double> h(n);
  // the weights 2 dx / (pi (x_i - x_j)) do not depend on dx
#pragma omp parallel for schedule(static)
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t reach = std::max(i, n - 1 - i);
    h[i] = pairwise_sum(0, (reach + 1) / 2, [&](std::size_t q) {
      const std::size_t k = 2 * q + 1;
      const double left = k <= i ? f[i - k] : 0.0;
      const double right = i + k < n ? f[i + k] : 0.0;
      return (left - right) / static_cast<double>(k);
    }) * (2.0 * kInvPi);
  }
  return h;
}

}  // namespace

DensityGrid::DensityGrid(double x0, double dx, std::vector<double> u, double t)
    : x0_(x0), dx_(dx), u_(std::move(u)), t_(t) {
  if (!std::isfinite(x0_) || !(dx_ > 0.0) || !std::isfinite(dx_)) {
    throw InvariantError("DensityGrid: need finite x0 and dx > 0");
  }
  if (u_.size() < 8) throw InvariantError("DensityGrid: need at least 8 points");
  if (!(t_ >= 0.0 && t_ < 1.0)) throw InvariantError("DensityGrid: time label outside [0, 1)");
  for (double v : u_) {
    if (!std::isfinite(v) || v < 0.0) throw InvariantError("DensityGrid: values must be finite and >= 0");
  }
  if (!(mass() > 0.0)) throw InvariantError("DensityGrid: mass must be positive");
}

double DensityGrid::mass() const { return dx_ * pairwise_sum(u_); }

double DensityGrid::max_value() const { return *std::max_element(u_.begin(), u_.end()); }

double DensityGrid::mean() const {
  const double m1 = pairwise_sum(0, u_.size(), [&](std::size_t i) { return x(i) * u_[i]; });
  return m1 / pairwise_sum(u_);
}

double DensityGrid::variance() const {
  const double mu = mean();
  const double m2 = pairwise_sum(0, u_.size(), [&](std::size_t i) {
    const double d = x(i) - mu;
    return d * d * u_[i];
  });
  return m2 / pairwise_sum(u_);
}

DensityGrid DensityGrid::normalized() const {
  const double m = mass();
  std::vector<double> v(u_);
  for (double& e : v) e /= m;
  return DensityGrid(x0_, dx_, std::move(v), t_);
}

double silverman_bandwidth(const RootSet& r) {
  const std::size_t m = r.size();
  if (m >= 2) {
    const double mean = pairwise_sum(r.values()) / static_cast<double>(m);
    const double ss = pairwise_sum(0, m, [&](std::size_t i) {
      const double d = r[i] - mean;
      return d * d;
    });
    const double sigma = std::sqrt(ss / static_cast<double>(m - 1));
    if (sigma > 0.0) return 1.06 * sigma * std::pow(static_cast<double>(m), -0.2);
  }
  return 0.1 * r.scale();
}

GridSpec default_grid(const RootSet& r, std::size_t len, std::optional<double> bandwidth) {
  if (len < 8) throw DomainError("default_grid: need at least 8 points");
  const double h = bandwidth.value_or(silverman_bandwidth(r));
  const double range = r.back() - r.front();
  const double pad = std::max(0.1 * range, 4.0 * h);
  const double lo = r.front() - pad;
  const double hi = r.back() + pad;
  return {lo, (hi - lo) / static_cast<double>(len - 1), len};
}

DensityGrid kde(const RootSet& r, std::size_t n0, double t, const GridSpec& grid,
                std::optional<double> bandwidth) {
  if (n0 < r.size()) throw DomainError("kde: n0 is smaller than the number of roots");
  if (grid.len < 8 || !(grid.dx > 0.0)) throw DomainError("kde: grid needs >= 8 points and dx > 0");
  const double h = bandwidth.value_or(silverman_bandwidth(r));
  if (!(h > 0.0)) throw DomainError("kde: bandwidth must be positive");
  if (grid.x0 > r.front() - 3.0 * h || grid.x_end() < r.back() + 3.0 * h) {
    throw DomainError("kde: grid [" + std::to_string(grid.x0) + ", " + std::to_string(grid.x_end()) +
                      "] does not cover the roots +- 3h = [" + std::to_string(r.front() - 3.0 * h) + ", " +
                      std::to_string(r.back() + 3.0 * h) + "]");
  }
  const std::size_t m = r.size();
  const auto roots = r.values();
  std::vector<double> u(grid.len);
  // Beyond 10 h the kernel is below 2e-22 of its peak.
  const double cutoff = 10.0 * h;
#pragma omp parallel for schedule(static)
  for (std::size_t i = 0; i < grid.len; ++i) {
    const double x = grid.x(i);
    const auto first = std::lower_bound(roots.begin(), roots.end(), x - cutoff) - roots.begin();
    const auto last = std::upper_bound(roots.begin(), roots.end(), x + cutoff) - roots.begin();
    u[i] = pairwise_sum(static_cast<std::size_t>(first), static_cast<std::size_t>(last), [&](std::size_t k) {
      const double z = (x - roots[k]) / h;
      return std::exp(-0.5 * z * z);
    });
  }
  const double target = static_cast<double>(m) / static_cast<double>(n0);
  const double raw = grid.dx * pairwise_sum(u);
  if (!(raw > 0.0)) throw NumericalError("kde: estimate vanished on the grid");
  const double factor = target / raw;
  for (double& v : u) v *= factor;
  return DensityGrid(grid, std::move(u), t);
}

double EdgeModel::operator()(double y) const {
  if (!(y > left && y < right)) return 0.0;
  return std::sqrt((right - y) * (y - left)) * (p + q * y);
}

double EdgeModel::hilbert(double x) const {
  const double c = 0.5 * (right + left);
  const double h = 0.5 * (right - left);
  const double xi = (x - c) / h;
  const double h1 = unit_semicircle_hilbert(xi);
  return h * ((p + q * c) * h1 + q * h * (xi * h1 - 0.5));
}

std::optional<EdgeModel> fit_edge_model(std::span<const double> f, double x0, double dx) {
  const std::size_t n = f.size();
  std::size_t first = n, last = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (f[i] > 0.0) {
      if (first == n) first = i;
      last = i;
    }
  }
  // single interval, strictly inside the grid, with room for the fits
  if (first == n || first == 0 || last + 1 >= n || last < first + 5) return std::nullopt;
  for (std::size_t i = first; i <= last; ++i) {
    if (!(f[i] > 0.0)) return std::nullopt;
  }
  const auto right = fit_edge(f, x0, dx, last, +1);
  const auto left = fit_edge(f, x0, dx, first, -1);
  if (!right || !left) return std::nullopt;
  const double width = right->edge - left->edge;
  if (!(width > 0.0)) return std::nullopt;
  // m ~ a_R sqrt(R - y) near R requires p + q R = a_R / sqrt(R - L), same at L.
  const double w = std::sqrt(width);
  const double vr = right->slope / w, vl = left->slope / w;
  EdgeModel model;
  model.left = left->edge;
  model.right = right->edge;
  model.q = (vr - vl) / width;
  model.p = vr - model.q * model.right;
  return model;
}

std::vector<double> hilbert_transform(std::span<const double> f, double dx, HilbertScheme scheme, double x0) {
  if (f.size() < 2) throw DomainError("hilbert_transform: need at least 2 samples");
  if (!(dx > 0.0)) throw DomainError("hilbert_transform: dx must be positive");
  if (scheme == HilbertScheme::odd_offset) return odd_offset(f);

  const auto model = fit_edge_model(f, x0, dx);
  if (!model) return odd_offset(f);
  std::vector<double> rest(f.begin(), f.end());
  for (std::size_t i = 0; i < rest.size(); ++i) rest[i] -= (*model)(x0 + static_cast<double>(i) * dx);
  auto h = odd_offset(rest);
  for (std::size_t i = 0; i < h.size(); ++i) h[i] += model->hilbert(x0 + static_cast<double>(i) * dx);
  return h;
}

std::vector<double> hilbert(const DensityGrid& g, HilbertScheme scheme) {
  if (g.size() < 16) throw DomainError("hilbert: need at least 16 grid points");
  return hilbert_transform(g.values(), g.dx(), scheme, g.x0());
}

std::complex<double> cauchy(const RootSet& r, std::complex<double> z) {
  const double zr = z.real(), zi = z.imag();
  if (!std::isfinite(zr) || !std::isfinite(zi)) throw DomainError("cauchy: z must be finite");
  if (zi == 0.0) {
    if (std::binary_search(r.values().begin(), r.values().end(), zr)) {
      throw SingularityError("cauchy: z coincides with a root");
    }
    if (zr > r.front() && zr < r.back()) {
      throw DomainError("cauchy: real z must lie outside [min root, max root]");
    }
  }
  const std::size_t m = r.size();
  // 1/(z - r) = (a - i b) / (a^2 + b^2): conj(z) gives the exact conjugate
  const double re = pairwise_sum(0, m, [&](std::size_t k) {
    const double a = zr - r[k];
    return a / (a * a + zi * zi);
  });
  const double im = pairwise_sum(0, m, [&](std::size_t k) {
    const double a = zr - r[k];
    return -zi / (a * a + zi * zi);
  });
  return {re / static_cast<double>(m), im / static_cast<double>(m)};
}

MonotoneCubic::MonotoneCubic(const DensityGrid& g)
    : MonotoneCubic(g.x0(), g.dx(), std::vector<double>(g.values().begin(), g.values().end())) {}

MonotoneCubic::MonotoneCubic(double x0, double dx, std::vector<double> values)
    : x0_(x0), dx_(dx), v_(std::move(values)) {
  const std::size_t n = v_.size();
  if (n < 2 || !(dx_ > 0.0)) throw DomainError("MonotoneCubic: need >= 2 values and dx > 0");
  std::vector<double> delta(n - 1);
  for (std::size_t i = 0; i + 1 < n; ++i) delta[i] = (v_[i + 1] - v_[i]) / dx_;
  slope_.assign(n, 0.0);
  slope_[0] = delta[0];
  slope_[n - 1] = delta[n - 2];
  for (std::size_t i = 1; i + 1 < n; ++i) {
    slope_[i] = delta[i - 1] * delta[i] > 0.0 ? 0.5 * (delta[i - 1] + delta[i]) : 0.0;
  }
  for (std::size_t i = 0; i + 1 < n; ++i) {
    if (delta[i] == 0.0) {
      slope_[i] = slope_[i + 1] = 0.0;
      continue;
    }
    const double alpha = slope_[i] / delta[i];
    const double beta = slope_[i + 1] / delta[i];
    if (alpha < 0.0) slope_[i] = 0.0;
    if (beta < 0.0) slope_[i + 1] = 0.0;
    const double s = alpha * alpha + beta * beta;
    if (s > 9.0) {
      const double tau = 3.0 / std::sqrt(s);
      slope_[i] = tau * alpha * delta[i];
      slope_[i + 1] = tau * beta * delta[i];
    }
  }
}

double MonotoneCubic::operator()(double x) const {
  const double pos = (x - x0_) / dx_;
  const double last = static_cast<double>(v_.size() - 1);
  if (!(pos >= 0.0 && pos <= last)) return 0.0;
  std::size_t i = static_cast<std::size_t>(pos);
  if (i >= v_.size() - 1) i = v_.size() - 2;
  const double s = pos - static_cast<double>(i);
  const double s2 = s * s, s3 = s2 * s;
  const double h00 = 2 * s3 - 3 * s2 + 1, h10 = s3 - 2 * s2 + s;
  const double h01 = -2 * s3 + 3 * s2, h11 = s3 - s2;
  return h00 * v_[i] + h10 * dx_ * slope_[i] + h01 * v_[i + 1] + h11 * dx_ * slope_[i + 1];
}

std::vector<double> sample_on_grid(const GridSpec& grid, const std::function<double(double)>& f) {
  std::vector<double> v(grid.len);
  for (std::size_t i = 0; i < grid.len; ++i) v[i] = f(grid.x(i));
  return v;
}

double l1_distance_normalized(const DensityGrid& g, const std::function<double(double)>& f) {
  const double m = g.mass();
  return g.dx() * pairwise_sum(0, g.size(), [&](std::size_t i) { return std::abs(g[i] / m - f(g.x(i))); });
}

double l1_distance_normalized(const DensityGrid& a, const DensityGrid& b) {
  if (!(a.grid() == b.grid())) throw DomainError("l1_distance_normalized: grids differ");
  const double ma = a.mass(), mb = b.mass();
  return a.dx() * pairwise_sum(0, a.size(), [&](std::size_t i) { return std::abs(a[i] / ma - b[i] / mb); });
}

}  // namespace freeflow::spectral
