#include "freeflow/freeprob.hpp"

#include "freeflow/errors.hpp"
#include "freeflow/summation.hpp"

#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

namespace freeflow::freeprob {

namespace {

void check_order(int n, int cap, const char* where) {
  if (n < 1 || n > cap) {
    throw DomainError(std::string(where) + ": order must be in [1, " + std::to_string(cap) + "]");
  }
}

// powers[k][j] = [z^j] M(z)^k for k = 0..n, j = 0..n, with M(z) = 1 + sum m_i z^i.
std::vector<std::vector<double>> series_powers(const std::vector<double>& full, int n) {
  const auto len = static_cast<std::size_t>(n + 1);
  std::vector<std::vector<double>> powers(len, std::vector<double>(len, 0.0));
  powers[0][0] = 1.0;
  for (std::size_t k = 1; k < len; ++k) {
    for (std::size_t j = 0; j < len; ++j) {
      double acc = 0.0;
      for (std::size_t i = 0; i <= j && i < full.size(); ++i) acc += full[i] * powers[k - 1][j - i];
      powers[k][j] = acc;
    }
  }
  return powers;
}

// [z^{n-k}] M^k summed against kappa_k for k = 1..n-1 (the k = n term is kappa_n).
double lower_terms(const std::vector<double>& full, const std::vector<double>& kappa, int n) {
  const auto powers = series_powers(full, n);
  double acc = 0.0;
  for (int k = 1; k < n; ++k) acc += kappa[static_cast<std::size_t>(k - 1)] * powers[static_cast<std::size_t>(k)][static_cast<std::size_t>(n - k)];
  return acc;
}

// Mean over a unit square pair of cells k apart of log|s - t|, in units of dx.
// G(x) = x^2 log|x| / 2 - 3 x^2 / 4 is the second antiderivative of log|x|.
double cell_pair_log(std::size_t k) {
  if (k == 0) return -1.5;
  const double x = static_cast<double>(k);
  if (k >= 8) {
    // second difference of G expanded in 1/k: log k - sum 1/(j (2j+1) (2j+2) k^{2j})
    const double inv2 = 1.0 / (x * x);
    double p = inv2, corr = 0.0;
    for (int j = 1; j <= 6; ++j) {
      corr += p / (j * (2.0 * j + 1.0) * (2.0 * j + 2.0));
      p *= inv2;
    }
    return std::log(x) - corr;
  }
  const auto G = [](double v) { return v == 0.0 ? 0.0 : 0.5 * v * v * std::log(std::abs(v)) - 0.75 * v * v; };
  return G(x + 1.0) - 2.0 * G(x) + G(x - 1.0);
}

void require_unit_mass(const spectral::DensityGrid& g, const char* where) {
  const double m = g.mass();
  if (!(std::abs(m - 1.0) <= 1e-9)) {
    throw DomainError(std::string(where) + ": density has mass " + std::to_string(m) +
                      "; normalize it to mass 1 first (DensityGrid::normalized)");
  }
}

}  // namespace

double RSeries::operator()(double s) const {
  double acc = 0.0;
  for (auto it = coefficients.rbegin(); it != coefficients.rend(); ++it) acc = acc * s + *it;
  return acc;
}

CumulantSequence moments_to_cumulants(const MomentSequence& m) {
  const int n = m.order();
  check_order(n, kMaxOrder, "moments_to_cumulants");
  std::vector<double> full(1, 1.0);
  full.insert(full.end(), m.m.begin(), m.m.end());
  std::vector<double> kappa(static_cast<std::size_t>(n), 0.0);
  for (int j = 1; j <= n; ++j) {
    kappa[static_cast<std::size_t>(j - 1)] = m.m[static_cast<std::size_t>(j - 1)] - lower_terms(full, kappa, j);
  }
  return {kappa};
}

MomentSequence cumulants_to_moments(const CumulantSequence& kappa) {
  const int n = kappa.order();
  check_order(n, kMaxOrder, "cumulants_to_moments");
  std::vector<double> full(1, 1.0);
  for (int j = 1; j <= n; ++j) {
    // [z^{j-k}] M^k for k >= 1 only involves m_0..m_{j-1}
    const double v = kappa.kappa[static_cast<std::size_t>(j - 1)] + lower_terms(full, kappa.kappa, j);
    full.push_back(v);
  }
  return {std::vector<double>(full.begin() + 1, full.end())};
}

RSeries r_series(const CumulantSequence& kappa) {
  check_order(kappa.order(), kMaxOrder, "r_series");
  return {kappa.kappa};
}

CumulantSequence boxplus_power_cumulants(const CumulantSequence& kappa, double k) {
  if (!(k >= 1.0) || !std::isfinite(k)) throw DomainError("boxplus_power_cumulants: need k >= 1");
  check_order(kappa.order(), kMaxOrder, "boxplus_power_cumulants");
  CumulantSequence out = kappa;
  for (double& v : out.kappa) v *= k;
  return out;
}

std::size_t boxplus_derivatives(double k, std::size_t n) {
  if (!(k >= 1.0) || !std::isfinite(k)) throw DomainError("boxplus_derivatives: need k >= 1");
  const double target = (1.0 - 1.0 / k) * static_cast<double>(n);
  auto d = static_cast<std::size_t>(std::llround(target));
  if (d >= n) d = n - 1;
  return d;
}

RootSet boxplus_predict(const FlowState& f, double k) {
  if (!(k >= 1.0) || !std::isfinite(k)) throw DomainError("boxplus_predict: need k >= 1");
  const double required = 1.0 - 1.0 / k;
  const double tol = 0.5 / static_cast<double>(f.n0()) + 1e-12;
  if (std::abs(f.t() - required) > tol) {
    throw DomainError("boxplus_predict: flow stopped at t = " + std::to_string(f.t()) + ", but k = " +
                      std::to_string(k) + " requires t = " + std::to_string(required) + " (take " +
                      std::to_string(boxplus_derivatives(k, f.n0())) + " derivatives)");
  }
  std::vector<double> y(f.current().vector());
  for (double& v : y) v *= k;
  return RootSet(std::move(y));
}

MomentSequence empirical_moments(const RootSet& r, int order) {
  check_order(order, kMaxEmpiricalOrder, "empirical_moments");
  const std::size_t n = r.size();
  MomentSequence out;
  for (int p = 1; p <= order; ++p) {
    const double s = pairwise_sum(0, n, [&](std::size_t i) {
      double v = 1.0;
      for (int q = 0; q < p; ++q) v *= r[i];
      return v;
    });
    out.m.push_back(s / static_cast<double>(n));
  }
  return out;
}

std::vector<double> scaling_exponents(const CumulantSequence& before, const CumulantSequence& after, double k) {
  if (before.order() != after.order()) throw DomainError("scaling_exponents: orders differ");
  std::vector<double> e(before.kappa.size(), std::numeric_limits<double>::quiet_NaN());
  if (!(k > 1.0)) return e;
  for (std::size_t j = 0; j < e.size(); ++j) {
    const double ratio = after.kappa[j] / before.kappa[j];
    if (ratio > 0.0 && std::isfinite(ratio)) e[j] = std::log(ratio) / std::log(k);
  }
  return e;
}

double free_entropy(const spectral::DensityGrid& g) {
  require_unit_mass(g, "free_entropy");
  const auto u = g.values();
  const std::size_t n = u.size();
  std::size_t positive = 0;
  for (double v : u) positive += v > 0.0 ? 1 : 0;
  if (positive < 2) return -std::numeric_limits<double>::infinity();

  // sum_{i,j} u_i u_j g(|i - j|) = sum_k g(k) c_k with c_k the autocorrelation
  std::vector<double> terms(n);
#pragma omp parallel for schedule(static)
  for (std::size_t k = 0; k < n; ++k) {
    const double c = pairwise_sum(0, n - k, [&](std::size_t i) { return u[i] * u[i + k]; });
    terms[k] = (k == 0 ? 1.0 : 2.0) * c * cell_pair_log(k);
  }
  const double dx = g.dx();
  const double mass = g.mass();
  const double energy = mass * mass * std::log(dx) + dx * dx * pairwise_sum(terms);
  return energy + 0.75 + 0.5 * std::log(2.0 * std::numbers::pi);
}

double free_fisher(const spectral::DensityGrid& g) {
  require_unit_mass(g, "free_fisher");
  const auto u = g.values();
  const double cube = pairwise_sum(0, u.size(), [&](std::size_t i) { return u[i] * u[i] * u[i]; });
  return 2.0 * std::numbers::pi * std::numbers::pi / 3.0 * g.dx() * cube;
}

spectral::DensityGrid variance_normalized(const spectral::DensityGrid& g) {
  const double mu = g.mean();
  const double sigma = std::sqrt(g.variance());
  if (!(sigma > 0.0)) throw DomainError("variance_normalized: zero variance");
  std::vector<double> v(g.values().begin(), g.values().end());
  for (double& e : v) e *= sigma;
  return spectral::DensityGrid((g.x0() - mu) / sigma, g.dx() / sigma, std::move(v), g.t());
}

}  // namespace freeflow::freeprob
