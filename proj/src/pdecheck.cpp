#include "freeflow/pdecheck.hpp"

#include "freeflow/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

namespace freeflow::pdecheck {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

enum class Form { transport, dilated };

double median_of(std::vector<double> v) {
  if (v.empty()) return kNaN;
  const auto mid = v.begin() + static_cast<std::ptrdiff_t>(v.size() / 2);
  std::nth_element(v.begin(), mid, v.end());
  if (v.size() % 2 == 1) return *mid;
  const double hi = *mid;
  const double lo = *std::max_element(v.begin(), mid);
  return 0.5 * (lo + hi);
}

std::vector<char> support_mask(const spectral::DensityGrid& g, double delta_rel) {
  const double cut = delta_rel * g.max_value();
  std::vector<char> m(g.size());
  for (std::size_t i = 0; i < g.size(); ++i) m[i] = g[i] > cut ? 1 : 0;
  return m;
}

std::vector<ResidualSlice> residuals(const SpaceTimeField& F, const ResidualOptions& opt, Form form) {
  const std::size_t nt = F.size();
  const auto& grid = F.grid();
  const std::size_t nx = grid.len;
  const double dx = grid.dx;

  std::vector<std::vector<double>> angle(nt);
  std::vector<std::vector<char>> mask(nt);
  if (nx < 16) throw DomainError("residuals: need at least 16 grid points");
  // slices are independent; each writes only its own vectors
#pragma omp parallel for schedule(dynamic)
  for (std::size_t n = 0; n < nt; ++n) {
    const auto& g = F.slices()[n];
    mask[n] = support_mask(g, opt.delta_rel);
    if (n == 0 || n + 1 == nt) continue;  // boundary slices only feed time differences
    const auto h = spectral::hilbert(g, opt.scheme);
    angle[n].resize(nx);
    for (std::size_t i = 0; i < nx; ++i) {
      angle[n][i] = form == Form::transport ? std::atan2(h[i], g[i]) : std::atan2(g[i], h[i]);
    }
  }

  std::vector<ResidualSlice> out;
  const std::size_t e = std::max<std::size_t>(opt.erosion, 1);
  for (std::size_t n = 1; n + 1 < nt; ++n) {
    const auto& prev = F.slices()[n - 1];
    const auto& cur = F.slices()[n];
    const auto& next = F.slices()[n + 1];
    const double dt = F.times()[n + 1] - F.times()[n - 1];
    const double s = F.times()[n];
    const double core_cut = opt.core_rel * cur.max_value();

    std::vector<char> base(nx);
    for (std::size_t i = 0; i < nx; ++i) base[i] = mask[n - 1][i] && mask[n][i] && mask[n + 1][i];

    ResidualSlice slice;
    slice.time = F.times()[n];
    slice.residual.assign(nx, kNaN);
    std::vector<double> abs_values;
    double x_lo = std::numeric_limits<double>::infinity(), x_hi = -x_lo;
    for (std::size_t i = e; i + e < nx; ++i) {
      bool inside = true;
      for (std::size_t j = i - e; j <= i + e && inside; ++j) inside = base[j] != 0;
      if (!inside) continue;
      const double dtheta = (angle[n][i + 1] - angle[n][i - 1]) / (2.0 * dx);
      const double time_diff = (next[i] - prev[i]) / dt;
      double r;
      if (form == Form::transport) {
        r = time_diff + std::numbers::inv_pi * dtheta;
      } else {
        const double x = grid.x(i);
        const double fx = (cur[i + 1] - cur[i - 1]) / (2.0 * dx);
        r = -s * time_diff + x * fx - std::numbers::inv_pi * dtheta;
      }
      slice.residual[i] = r;
      abs_values.push_back(std::abs(r));
      slice.max_abs = std::max(slice.max_abs, std::abs(r));
      if (cur[i] > core_cut) slice.core_max_abs = std::max(slice.core_max_abs, std::abs(r));
      x_lo = std::min(x_lo, grid.x(i));
      x_hi = std::max(x_hi, grid.x(i));
    }
    slice.points = abs_values.size();
    if (slice.points == 0) {
      slice.max_abs = slice.median_abs = slice.core_max_abs = kNaN;
      slice.region = {kNaN, kNaN};
    } else {
      slice.median_abs = median_of(std::move(abs_values));
      slice.region = {x_lo, x_hi};
    }
    out.push_back(std::move(slice));
  }
  return out;
}

// Linear interpolation of a residual array; NaN unless both neighbours exist.
double sample_residual(const std::vector<double>& r, const spectral::GridSpec& grid, double x) {
  const double pos = (x - grid.x0) / grid.dx;
  if (!(pos >= 0.0 && pos <= static_cast<double>(grid.len - 1))) return kNaN;
  auto i = static_cast<std::size_t>(pos);
  if (i + 1 >= grid.len) i = grid.len - 2;
  const double w = pos - static_cast<double>(i);
  return (1.0 - w) * r[i] + w * r[i + 1];
}

}  // namespace

SpaceTimeField::SpaceTimeField(std::vector<double> times, std::vector<spectral::DensityGrid> slices)
    : times_(std::move(times)), slices_(std::move(slices)) {
  if (times_.size() != slices_.size()) throw InvariantError("SpaceTimeField: one slice per time required");
  if (times_.size() < 3) throw DomainError("SpaceTimeField: need at least 3 time slices");
  grid_ = slices_.front().grid();
  for (std::size_t n = 0; n < times_.size(); ++n) {
    if (!std::isfinite(times_[n]) || (n > 0 && !(times_[n] > times_[n - 1]))) {
      throw InvariantError("SpaceTimeField: times must be finite and strictly increasing");
    }
    if (!(slices_[n].grid() == grid_)) throw InvariantError("SpaceTimeField: slices must share one grid");
  }
}

std::vector<ResidualSlice> transport_residual(const SpaceTimeField& u, const ResidualOptions& opt) {
  return residuals(u, opt, Form::transport);
}

std::vector<ResidualSlice> shlyakhtenko_tao_residual(const SpaceTimeField& f, const ResidualOptions& opt) {
  return residuals(f, opt, Form::dilated);
}

double max_residual(const std::vector<ResidualSlice>& slices) {
  double m = 0.0;
  for (const auto& s : slices) m = std::max(m, s.max_abs);
  return m;
}

double max_core_residual(const std::vector<ResidualSlice>& slices) {
  double m = 0.0;
  for (const auto& s : slices) m = std::max(m, s.core_max_abs);
  return m;
}

double median_residual(const std::vector<ResidualSlice>& slices) {
  std::vector<double> all;
  for (const auto& s : slices) {
    for (double r : s.residual) {
      if (!std::isnan(r)) all.push_back(std::abs(r));
    }
  }
  return median_of(std::move(all));
}

std::vector<double> ddx_arctan_direct(std::span<const double> num, std::span<const double> den, double dx) {
  if (num.size() != den.size() || num.size() < 3) throw DomainError("ddx_arctan_direct: need matching arrays of length >= 3");
  const std::size_t n = num.size();
  std::vector<double> out(n, kNaN);
  for (std::size_t i = 1; i + 1 < n; ++i) {
    out[i] = (std::atan2(num[i + 1], den[i + 1]) - std::atan2(num[i - 1], den[i - 1])) / (2.0 * dx);
  }
  return out;
}

std::vector<double> ddx_arctan_quotient(std::span<const double> num, std::span<const double> den, double dx) {
  if (num.size() != den.size() || num.size() < 3) throw DomainError("ddx_arctan_quotient: need matching arrays of length >= 3");
  const std::size_t n = num.size();
  std::vector<double> out(n, kNaN);
  for (std::size_t i = 1; i + 1 < n; ++i) {
    const double dn = (num[i + 1] - num[i - 1]) / (2.0 * dx);
    const double dd = (den[i + 1] - den[i - 1]) / (2.0 * dx);
    const double r2 = num[i] * num[i] + den[i] * den[i];
    out[i] = r2 > 0.0 ? (dn * den[i] - num[i] * dd) / r2 : kNaN;
  }
  return out;
}

double semicircle_solution(double t, double x, double c) {
  const double v = 1.0 - c * t - x * x;
  return v > 0.0 ? 2.0 * std::numbers::inv_pi * std::sqrt(v) : 0.0;
}

SpaceTimeField transport_field(const std::function<double(double, double)>& u, std::size_t nx, std::size_t nt,
                               double t_lo, double t_hi, double x_max) {
  if (nx < 16 || nt < 2) throw DomainError("transport_field: need nx >= 16 and nt >= 2");
  if (!(t_lo >= 0.0 && t_hi > t_lo && t_hi < 1.0)) throw DomainError("transport_field: need 0 <= t_lo < t_hi < 1");
  const spectral::GridSpec grid{-x_max, 2.0 * x_max / static_cast<double>(nx), nx + 1};
  std::vector<double> times;
  std::vector<spectral::DensityGrid> slices;
  for (std::size_t j = 0; j <= nt; ++j) {
    const double t = t_lo + (t_hi - t_lo) * static_cast<double>(j) / static_cast<double>(nt);
    times.push_back(t);
    slices.emplace_back(grid, spectral::sample_on_grid(grid, [&](double x) { return u(t, x); }), t);
  }
  return {std::move(times), std::move(slices)};
}

SpaceTimeField dilated_field(const std::function<double(double, double)>& u, std::size_t nx, std::size_t ns,
                             double s_lo, double s_hi, double x_max) {
  if (nx < 16 || ns < 2) throw DomainError("dilated_field: need nx >= 16 and ns >= 2");
  if (!(s_lo > 0.0 && s_hi > s_lo && s_hi <= 1.0)) throw DomainError("dilated_field: need 0 < s_lo < s_hi <= 1");
  const spectral::GridSpec grid{-x_max, 2.0 * x_max / static_cast<double>(nx), nx + 1};
  std::vector<double> times;
  std::vector<spectral::DensityGrid> slices;
  for (std::size_t j = 0; j <= ns; ++j) {
    const double s = s_lo + (s_hi - s_lo) * static_cast<double>(j) / static_cast<double>(ns);
    times.push_back(s);
    slices.emplace_back(grid, spectral::sample_on_grid(grid, [&](double x) { return u(1.0 - s, s * x); }), 1.0 - s);
  }
  return {std::move(times), std::move(slices)};
}

SpaceTimeField semicircle_transport_field(std::size_t nx, std::size_t nt, double c, double t_hi) {
  return transport_field([c](double t, double x) { return semicircle_solution(t, x, c); }, nx, nt, 0.0, t_hi, 1.1);
}

SpaceTimeField semicircle_dilated_field(std::size_t nx, std::size_t ns, double c, double s_lo) {
  return dilated_field([c](double t, double x) { return semicircle_solution(t, x, c); }, nx, ns, s_lo, 1.0, 1.6);
}

SpaceTimeField flow_field(const std::vector<FlowState>& states, std::size_t len) {
  if (states.size() < 3) throw DomainError("flow_field: need at least 3 flow states");
  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  for (const auto& st : states) {
    const double h = spectral::silverman_bandwidth(st.current());
    lo = std::min(lo, st.current().front() - 4.0 * h);
    hi = std::max(hi, st.current().back() + 4.0 * h);
  }
  const spectral::GridSpec grid{lo, (hi - lo) / static_cast<double>(len - 1), len};
  std::vector<double> times;
  std::vector<spectral::DensityGrid> slices;
  for (const auto& st : states) {
    times.push_back(st.t());
    slices.push_back(spectral::kde(st.current(), st.n0(), st.t(), grid));
  }
  return {std::move(times), std::move(slices)};
}

ConvergenceReport convergence(const std::vector<ResidualSlice>& coarse, const std::vector<ResidualSlice>& fine) {
  ConvergenceReport r;
  r.coarse = max_core_residual(coarse);
  r.fine = max_core_residual(fine);
  r.ratio = r.coarse / r.fine;
  return r;
}

double dilation_commutator(const std::function<double(double)>& u, const std::function<double(double)>& hu,
                           double s, const spectral::GridSpec& grid, spectral::HilbertScheme scheme) {
  if (!(s > 0.0)) throw DomainError("dilation_commutator: need s > 0");
  const auto v = spectral::sample_on_grid(grid, [&](double x) { return u(s * x); });
  const auto h = spectral::hilbert_transform(v, grid.dx, scheme, grid.x0);
  double err = 0.0;
  for (std::size_t i = 0; i < grid.len; ++i) err = std::max(err, std::abs(h[i] - hu(s * grid.x(i))));
  return err;
}

double polynomial_bump_hilbert(std::span<const double> a, double x) {
  // (1/pi) [P(x) log|(1 + x)/(1 - x)| + int_{-1}^{1} (P(y) - P(x)) / (x - y) dy]
  double p = 0.0;
  for (auto it = a.rbegin(); it != a.rend(); ++it) p = p * x + *it;
  double q = 0.0;
  for (std::size_t k = 1; k < a.size(); ++k) {
    // (y^k - x^k) / (y - x) = sum_j y^j x^{k-1-j}; only even j survive on [-1, 1]
    for (std::size_t j = 0; j < k; j += 2) {
      q -= a[k] * 2.0 / static_cast<double>(j + 1) * std::pow(x, static_cast<double>(k - 1 - j));
    }
  }
  const double l = std::abs(std::abs(x) - 1.0) > 0.0 ? std::log(std::abs((1.0 + x) / (1.0 - x))) : 0.0;
  return std::numbers::inv_pi * ((p != 0.0 ? p * l : 0.0) + q);
}

SpaceTimeField dilate_field(const SpaceTimeField& u_field) {
  const auto& ts = u_field.times();
  const double s_min = 1.0 - ts.back();
  if (!(s_min > 0.0)) throw DomainError("dilate_field: field times must be < 1");
  const auto& ug = u_field.grid();
  const spectral::GridSpec fgrid{ug.x0 / s_min, ug.dx / s_min, ug.len};
  std::vector<double> svals;
  std::vector<spectral::DensityGrid> fslices;
  for (std::size_t n = ts.size(); n-- > 0;) {
    const double sn = 1.0 - ts[n];
    const spectral::MonotoneCubic interp(u_field.slices()[n]);
    auto v = spectral::sample_on_grid(fgrid, [&](double x) { return interp(sn * x); });
    svals.push_back(sn);
    fslices.emplace_back(fgrid, std::move(v), ts[n]);
  }
  return {std::move(svals), std::move(fslices)};
}

EquivalenceReport equivalence_check(const SpaceTimeField& u_field, double k, const spectral::DensityGrid& predicted,
                                    double time_tol, const ResidualOptions& opt) {
  if (!(k >= 1.0) || !std::isfinite(k)) throw DomainError("equivalence_check: need k >= 1");
  const double s = 1.0 / k;
  const double t_star = 1.0 - s;
  std::size_t idx = u_field.size();
  for (std::size_t n = 0; n < u_field.size(); ++n) {
    if (std::abs(u_field.times()[n] - t_star) <= time_tol) idx = n;
  }
  if (idx == u_field.size()) {
    throw DomainError("equivalence_check: field has no slice at t = " + std::to_string(t_star));
  }

  EquivalenceReport rep;
  rep.k = k;
  rep.s = s;
  rep.slice_t = u_field.times()[idx];

  // (i) f(s, x) = u(1 - s, s x) on the predicted grid
  const spectral::MonotoneCubic slice(u_field.slices()[idx]);
  std::vector<double> f(predicted.size());
  for (std::size_t i = 0; i < f.size(); ++i) f[i] = slice(s * predicted.x(i));
  const spectral::DensityGrid fg(predicted.grid(), std::move(f), predicted.t());
  rep.l1_distance = spectral::l1_distance_normalized(fg, predicted);

  // (ii) R_S(s, x) = s R_T(1 - s, s x) on the dilated copy of the whole field
  rep.consistency_max_abs = rep.consistency_rel = kNaN;
  if (!(u_field.times().back() < 1.0)) return rep;
  const auto f_field = dilate_field(u_field);
  const auto& ug = u_field.grid();
  const auto& fgrid = f_field.grid();
  const auto rt = transport_residual(u_field, opt);
  const auto rs = shlyakhtenko_tao_residual(f_field, opt);
  // interior slices line up in reverse order. Compared on the core region only:
  // near the edges both residuals are dominated by the unresolved square root.
  double diff = 0.0, scale = 0.0;
  std::size_t used = 0;
  for (std::size_t m = 0; m < rs.size(); ++m) {
    const auto& a = rs[m];
    const auto& b = rt[rt.size() - 1 - m];
    const auto& fs = f_field.slices()[m + 1];
    const double core_cut = opt.core_rel * fs.max_value();
    for (std::size_t i = 0; i < fgrid.len; ++i) {
      if (std::isnan(a.residual[i]) || !(fs[i] > core_cut)) continue;
      const double other = sample_residual(b.residual, ug, a.time * fgrid.x(i));
      if (std::isnan(other)) continue;
      diff = std::max(diff, std::abs(a.residual[i] - a.time * other));
      scale = std::max(scale, std::abs(a.residual[i]));
      ++used;
    }
  }
  if (used > 0) {
    rep.consistency_max_abs = diff;
    rep.consistency_rel = scale > 0.0 ? diff / scale : 0.0;
  }
  return rep;
}

}  // namespace freeflow::pdecheck
