#include "freeflow/polyflow.hpp"

#include "freeflow/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <string>

namespace freeflow::polyflow {

namespace {

constexpr int kMaxIterations = 60;
constexpr double kRelTol = 1e-13;
constexpr double kTinyBracket = 4e-13;

// sum 1/(y - r_i) and sum 1/(y - r_i)^2 over a contiguous block
struct Sums {
  double inv = 0.0;
  double inv2 = 0.0;
};

Sums leaf_sums(const double* r, std::size_t count, double y) {
  // four independent lanes; fixed association, so still deterministic
  double s0 = 0, s1 = 0, s2 = 0, s3 = 0;
  double q0 = 0, q1 = 0, q2 = 0, q3 = 0;
  std::size_t i = 0;
  for (; i + 4 <= count; i += 4) {
    const double v0 = 1.0 / (y - r[i]);
    const double v1 = 1.0 / (y - r[i + 1]);
    const double v2 = 1.0 / (y - r[i + 2]);
    const double v3 = 1.0 / (y - r[i + 3]);
    s0 += v0; s1 += v1; s2 += v2; s3 += v3;
    q0 += v0 * v0; q1 += v1 * v1; q2 += v2 * v2; q3 += v3 * v3;
  }
  for (; i < count; ++i) {
    const double v = 1.0 / (y - r[i]);
    s0 += v;
    q0 += v * v;
  }
  return {(s0 + s1) + (s2 + s3), (q0 + q1) + (q2 + q3)};
}

Sums pairwise_sums(const double* r, std::size_t count, double y) {
  if (count <= 128) return leaf_sums(r, count, y);
  const std::size_t half = count / 2;
  const Sums a = pairwise_sums(r, half, y);
  const Sums b = pairwise_sums(r + half, count - half, y);
  return {a.inv + b.inv, a.inv2 + b.inv2};
}

// Zero of S in (r[j], r[j+1]).
//
// The two bracketing poles are factored out:
//   g(y) = (y - a)(y - b) S(y) = (y - a) + (y - b) + (y - a)(y - b) rho(y),
// where rho sums the remaining m - 2 terms and is smooth on [a, b].
// g(a) = a - b < 0 < g(b) and g has the sign of -S, so the bracket is kept
// by sign. Newton on g is close to linear; on S itself it would fight the
// poles.
double bracket_root(const double* r, std::size_t m, std::size_t j, double tol) {
  const double a = r[j];
  const double b = r[j + 1];
  const double mid = 0.5 * (a + b);
  if (b - a < kTinyBracket / kRelTol * tol) return mid;

  auto rest = [&](double y) {
    const Sums left = pairwise_sums(r, j, y);
    const Sums right = pairwise_sums(r + j + 2, m - j - 2, y);
    return Sums{left.inv + right.inv, -(left.inv2 + right.inv2)};  // rho, rho'
  };

  // Start from the root of the model 2 d + (d^2 - h^2)(rho0 + rho1 d),
  // d = y - mid, with rho linearised at the midpoint.
  const double half = 0.5 * (b - a);
  const Sums at_mid = rest(mid);
  const double rho0 = at_mid.inv, rho1 = at_mid.inv2;
  double d = rho0 * half * half / (1.0 + std::sqrt(1.0 + rho0 * rho0 * half * half));
  for (int k = 0; k < 3; ++k) {
    const double q = d * d - half * half;
    const double gm = 2.0 * d + q * (rho0 + rho1 * d);
    const double dgm = 2.0 + 2.0 * d * (rho0 + rho1 * d) + q * rho1;
    if (!(dgm > 0.0)) break;
    const double nd = d - gm / dgm;
    if (!(std::abs(nd) < half)) break;
    d = nd;
  }
  double y = mid + d;

  double lo = a, hi = b;
  double prev_y = 0.0, prev_dg = 0.0;
  bool have_prev = false;
  for (int it = 0; it < kMaxIterations; ++it) {
    const Sums rr = rest(y);
    const double da = y - a, db = y - b;
    const double g = da + db + da * db * rr.inv;
    const double dg = 2.0 + (da + db) * rr.inv + da * db * rr.inv2;
    if (g == 0.0) break;
    if (g < 0.0) lo = y; else hi = y;

    if (dg > 0.0) {
      const double newton = y - g / dg;
      const double step = std::abs(newton - y);
      if (step <= tol) {
        y = std::clamp(newton, lo, hi);
        break;
      }
      if (newton > lo && newton < hi) {
        // quadratic convergence: the error after this step is about
        // |g''/(2 g')| step^2, with g'' from the last two derivatives
        if (have_prev && y != prev_y) {
          const double curvature = std::abs((dg - prev_dg) / (y - prev_y)) / (2.0 * dg);
          if (curvature * step * step <= 0.1 * tol) {
            y = newton;
            break;
          }
        }
        prev_y = y;
        prev_dg = dg;
        have_prev = true;
        y = newton;
        continue;
      }
    }
    have_prev = false;
    y = 0.5 * (lo + hi);
    if (hi - lo <= tol) break;
  }
  // strict interlacing, even if rounding put y onto an endpoint
  if (!(y > a)) y = std::nextafter(a, b);
  if (!(y < b)) y = std::nextafter(b, a);
  return y;
}

}  // namespace

RootSet critical_roots(const RootSet& r) {
  const std::size_t m = r.size();
  if (m < 2) throw DomainError("critical_roots: need at least 2 roots");
  const double* roots = r.values().data();
  const double tol = kRelTol * r.scale();
  std::vector<double> out(m - 1);
  const auto count = static_cast<std::ptrdiff_t>(m - 1);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t j = 0; j < count; ++j) {
    out[static_cast<std::size_t>(j)] = bracket_root(roots, m, static_cast<std::size_t>(j), tol);
  }
  return RootSet(std::move(out));
}

std::size_t derivative_count(double t, std::size_t n) {
  if (!(t >= 0.0 && t < 1.0)) {
    throw DomainError("flow: t must lie in [0, 1), got " + std::to_string(t));
  }
  // t*n with t = 0.29, n = 100 evaluates to 28.999999999999996
  const double x = t * static_cast<double>(n);
  const auto d = static_cast<std::size_t>(std::floor(x + 1e-9 * std::max(1.0, x)));
  if (d >= n) throw DomainError("flow: floor(t n) must be <= n - 1");
  return d;
}

FlowState flow_steps(const RootSet& r, std::size_t derivatives, const ProgressSink& progress) {
  const std::size_t n = r.size();
  if (derivatives >= n) throw DomainError("flow: cannot take n or more derivatives");
  if (derivatives > 0 && n < 2) throw DomainError("flow: need n >= 2");
  RootSet current = r;
  for (std::size_t d = 0; d < derivatives; ++d) {
    current = critical_roots(current);
    if (progress) progress(d + 1, derivatives);
  }
  return FlowState(std::move(current), n, derivatives);
}

FlowState flow(const RootSet& r, double t, const ProgressSink& progress) {
  if (r.size() < 2) throw DomainError("flow: need n >= 2");
  return flow_steps(r, derivative_count(t, r.size()), progress);
}

std::vector<FlowState> flow_checkpoints(const RootSet& r, const std::vector<double>& times,
                                        const ProgressSink& progress) {
  const std::size_t n = r.size();
  if (n < 2) throw DomainError("flow: need n >= 2");
  std::vector<std::size_t> steps;
  steps.reserve(times.size());
  for (double t : times) steps.push_back(derivative_count(t, n));
  const std::size_t last = steps.empty() ? 0 : *std::max_element(steps.begin(), steps.end());

  std::vector<std::size_t> order(steps.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t x, std::size_t y) { return steps[x] < steps[y]; });

  std::vector<std::optional<FlowState>> snaps(steps.size());
  RootSet current = r;
  std::size_t next = 0;
  for (std::size_t d = 0;; ++d) {
    while (next < order.size() && steps[order[next]] == d) {
      snaps[order[next]].emplace(current, n, d);
      ++next;
    }
    if (d == last) break;
    current = critical_roots(current);
    if (progress) progress(d + 1, last);
  }
  std::vector<FlowState> out;
  out.reserve(snaps.size());
  for (auto& s : snaps) out.push_back(std::move(*s));
  return out;
}

void flow_visit(const RootSet& r, std::size_t derivatives,
                const std::function<void(const RootSet&, const RootSet&)>& visit) {
  if (derivatives >= r.size()) throw DomainError("flow: cannot take n or more derivatives");
  RootSet current = r;
  for (std::size_t d = 0; d < derivatives; ++d) {
    RootSet child = critical_roots(current);
    visit(current, child);
    current = std::move(child);
  }
}

std::pair<double, double> elementary_e1_e2(const RootSet& r) {
  long double e1 = 0.0L, p2 = 0.0L;
  for (double x : r.values()) {
    e1 += x;
    p2 += static_cast<long double>(x) * x;
  }
  return {static_cast<double>(e1), static_cast<double>((e1 * e1 - p2) / 2.0L)};
}

VietaReport vieta_check(const RootSet& parent, const RootSet& child) {
  const std::size_t n = parent.size();
  if (child.size() + 1 != n) {
    throw DomainError("vieta_check: child must have exactly one root fewer than parent");
  }
  long double e1 = 0, p2 = 0, a1 = 0;
  for (double x : parent.values()) {
    e1 += x;
    p2 += static_cast<long double>(x) * x;
    a1 += std::abs(x);
  }
  const long double e2 = (e1 * e1 - p2) / 2;
  const long double a2 = (a1 * a1 - p2) / 2;  // sum_{i<j} |r_i r_j|

  const auto [c1, c2] = elementary_e1_e2(child);
  const long double f1 = static_cast<long double>(n - 1) / n;
  const long double f2 = static_cast<long double>(n - 2) / n;

  auto rel = [](long double err, long double denom) {
    return static_cast<double>(denom > 0 ? err / denom : err);
  };
  VietaReport rep;
  rep.e1_err = rel(std::abs(c1 - f1 * e1), f1 * a1);
  rep.e2_err = rel(std::abs(c2 - f2 * e2), f2 * a2);
  return rep;
}

double min_gap(const RootSet& r) {
  if (r.size() < 2) throw DomainError("min_gap: need at least 2 roots");
  double g = std::numeric_limits<double>::infinity();
  for (std::size_t i = 1; i < r.size(); ++i) g = std::min(g, r[i] - r[i - 1]);
  return g;
}

double support_ratio(const FlowState& f) {
  if (f.current().size() < 2) throw DomainError("support_ratio: need at least 2 roots");
  return (f.current().back() - f.current().front()) / (1.0 - f.t());
}

double quadratic_spread(const FlowState& f) {
  const auto y = f.current().values();
  long double mean = 0;
  for (double v : y) mean += v;
  mean /= static_cast<long double>(y.size());
  long double ss = 0;
  for (double v : y) ss += (v - mean) * (v - mean);
  // sum_{i,j} (y_i - y_j)^2 = 2 m sum (y - mean)^2
  const long double n0 = static_cast<long double>(f.n0());
  return static_cast<double>(2.0L * static_cast<long double>(y.size()) * ss / (n0 * n0));
}

std::vector<double> hermite_tail(const RootSet& r, int l) {
  if (l < 1 || l > 6) throw DomainError("hermite_tail: l must be in [1, 6]");
  const std::size_t n = r.size();
  if (n < 100 * static_cast<std::size_t>(l)) {
    throw DomainError("hermite_tail: need at least 100 l roots");
  }
  // power sums, then Newton's identities k e_k = sum_{i=1}^k (-1)^{i-1} e_{k-i} p_i
  std::vector<long double> p(static_cast<std::size_t>(l) + 1, 0.0L);
  for (double x : r.values()) {
    long double v = 1.0L;
    for (int k = 1; k <= l; ++k) p[k] += (v *= x);
  }
  std::vector<long double> e(static_cast<std::size_t>(l) + 1, 0.0L);
  e[0] = 1.0L;
  for (int k = 1; k <= l; ++k) {
    long double acc = 0.0L;
    for (int i = 1; i <= k; ++i) acc += ((i % 2 == 1) ? 1.0L : -1.0L) * e[k - i] * p[i];
    e[k] = acc / k;
  }
  // p^{(n-l)}(x) = sum_k (-1)^k e_k (n-k)!/(l-k)! x^{l-k}; rescaled so the
  // leading coefficient is 1.
  const long double nn = static_cast<long double>(n);
  std::vector<double> a(static_cast<std::size_t>(l) + 1, 0.0);
  long double falling_l = 1.0L;  // l!/(l-k)!
  long double falling_n = 1.0L;  // n!/(n-k)!
  long double root_n = 1.0L;     // n^{k/2}
  for (int k = 0; k <= l; ++k) {
    if (k > 0) {
      falling_l *= (l - k + 1);
      falling_n *= (nn - (k - 1));
      root_n *= std::sqrt(nn);
    }
    const long double sign = (k % 2 == 0) ? 1.0L : -1.0L;
    a[static_cast<std::size_t>(l - k)] = static_cast<double>(sign * e[k] * falling_l * root_n / falling_n);
  }
  return a;
}

ShiftedPolynomial remove_shift(const std::vector<double>& monic) {
  const int l = static_cast<int>(monic.size()) - 1;
  if (l < 1) throw DomainError("remove_shift: need degree >= 1");
  ShiftedPolynomial out;
  out.shift = monic[static_cast<std::size_t>(l - 1)] / l;
  // P(x - c) = sum_j a_j (x - c)^j
  std::vector<double> q(monic.size(), 0.0);
  const double mc = -out.shift;
  for (int j = 0; j <= l; ++j) {
    double binom = 1.0;
    for (int i = 0; i <= j; ++i) {
      // coefficient of x^i in (x - c)^j: C(j, i) (-c)^{j-i}
      q[static_cast<std::size_t>(i)] += monic[static_cast<std::size_t>(j)] * binom * std::pow(mc, j - i);
      binom = binom * (j - i) / (i + 1);
    }
  }
  out.coefficients = std::move(q);
  return out;
}

std::vector<double> probabilists_hermite(int l) {
  if (l < 0) throw DomainError("probabilists_hermite: negative degree");
  std::vector<double> prev{1.0};
  if (l == 0) return prev;
  std::vector<double> cur{0.0, 1.0};
  for (int k = 1; k < l; ++k) {
    // He_{k+1} = x He_k - k He_{k-1}
    std::vector<double> next(cur.size() + 1, 0.0);
    for (std::size_t i = 0; i < cur.size(); ++i) next[i + 1] += cur[i];
    for (std::size_t i = 0; i < prev.size(); ++i) next[i] -= k * prev[i];
    prev = std::move(cur);
    cur = std::move(next);
  }
  return cur;
}

}  // namespace freeflow::polyflow
