// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any fails.
// Tolerances are fixed here; nothing is read from the environment.
#include "freeflow/errors.hpp"
#include "freeflow/freeprob.hpp"
#include "freeflow/measures.hpp"
#include "freeflow/pdecheck.hpp"
#include "freeflow/polyflow.hpp"
#include "freeflow/spectral.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <map>
#include <numbers>
#include <random>
#include <string>
#include <vector>

namespace ff = freeflow;
using ff::FlowState;
using ff::RootSet;
using ff::measures::MeasureSpec;
using ff::spectral::DensityGrid;

namespace {

constexpr double pi = std::numbers::pi;
constexpr std::size_t kN = 4000;

int failures = 0;
std::map<int, bool> verdicts;

void report(int id, bool pass, const std::string& detail) {
  std::printf("criterion %2d: %s  %s\n", id, pass ? "PASS" : "FAIL", detail.c_str());
  std::fflush(stdout);
  verdicts[id] = pass;
  if (!pass) ++failures;
}

void info(const std::string& line) {
  std::printf("info: %s\n", line.c_str());
  std::fflush(stdout);
}

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

DensityGrid unit_kde(const RootSet& r) {
  return ff::spectral::kde(r, r.size(), 0.0, ff::spectral::default_grid(r));
}

double t_for(double k) { return static_cast<double>(ff::freeprob::boxplus_derivatives(k, kN)) / kN; }

const FlowState& at(const std::vector<FlowState>& states, double t) {
  for (const auto& s : states) {
    if (std::abs(s.t() - t) < 0.5 / kN) return s;
  }
  throw ff::DomainError("acceptance: missing checkpoint");
}

struct FlowRun {
  std::vector<FlowState> states;
  double seconds = 0.0;
};

FlowRun run_flow(const MeasureSpec& spec, std::vector<double> times) {
  const auto r = ff::measures::sample(spec, kN, 1);
  const auto t0 = std::chrono::steady_clock::now();
  FlowRun run;
  run.states = ff::polyflow::flow_checkpoints(r, times);
  run.seconds = seconds_since(t0);
  return run;
}

// ---------------------------------------------------------------- criteria

void boxplus_closed_form(const FlowRun& sc) {
  bool pass = true;
  std::string detail;
  for (double k : {2.0, 4.0}) {
    const auto pred = ff::freeprob::boxplus_predict(at(sc.states, t_for(k)), k);
    const double l1 = ff::spectral::l1_distance_normalized(unit_kde(pred), [k](double x) {
      const double v = 1.0 / k - x * x / (k * k);
      return v > 0.0 ? 2.0 / pi * std::sqrt(v) : 0.0;
    });
    pass = pass && l1 < 0.08;
    detail += "k=" + fmt("%g", k) + " L1 " + fmt("%.4f", l1) + "; ";
  }
  // the shared flow to t = 0.9 covers both powers, so it bounds each one
  pass = pass && sc.seconds < 600.0;
  report(1, pass, detail + "(< 0.08), flow " + fmt("%.0f", sc.seconds) + " s (< 600 s)");
}

void flow_closed_form(const FlowRun& sc) {
  bool pass = true;
  std::string detail;
  for (double t : {0.25, 0.5, 0.75}) {
    const auto& s = at(sc.states, t);
    const auto g = ff::spectral::kde(s.current(), kN, t, ff::spectral::default_grid(s.current()));
    const double l1 = ff::spectral::l1_distance_normalized(g, [t](double x) {
      return ff::pdecheck::semicircle_solution(t, x) / (1.0 - t);
    });
    pass = pass && l1 < 0.08;
    detail += "t=" + fmt("%g", t) + " L1 " + fmt("%.4f", l1) + "; ";
  }
  report(2, pass, detail + "(< 0.08)");
}

void vieta_suite() {
  double worst = 0.0;
  std::size_t steps = 0;
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const auto r = ff::measures::sample(MeasureSpec::semicircle(1), 500, seed);
    ff::polyflow::flow_visit(r, r.size() - 1, [&](const RootSet& p, const RootSet& c) {
      if (p.size() < 3) return;  // e2 of a single root is empty
      const auto v = ff::polyflow::vieta_check(p, c);
      worst = std::max({worst, v.e1_err, v.e2_err});
      ++steps;
    });
  }
  report(3, worst < 1e-9, "20 runs, n=500, " + std::to_string(steps) + " steps, worst relative error " + fmt("%.2e", worst) + " (< 1e-9)");
}

void interlacing_and_gap() {
  std::size_t violations = 0, steps = 0;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    for (const auto& spec : {MeasureSpec::semicircle(1), MeasureSpec::uniform(-1, 1)}) {
      const auto r = ff::measures::sample(spec, 1000, seed);
      ff::polyflow::flow_visit(r, r.size() - 1, [&](const RootSet& p, const RootSet& c) {
        const double slack = 1e-12 * p.scale();
        for (std::size_t j = 0; j < c.size(); ++j) {
          if (!(c[j] > p[j] - slack && c[j] < p[j + 1] + slack)) ++violations;
        }
        if (c.size() >= 2 && ff::polyflow::min_gap(c) < ff::polyflow::min_gap(p) - slack) ++violations;
        ++steps;
      });
    }
  }
  report(4, violations == 0, "10 runs, n=1000, " + std::to_string(steps) + " steps, " + std::to_string(violations) + " violations");
}

void conservation(const FlowRun& sc) {
  const auto& s0 = at(sc.states, 0.0);
  const double q0 = ff::polyflow::quadratic_spread(s0);
  auto mean = [](const RootSet& r) {
    long double m = 0;
    for (double v : r.values()) m += v;
    return static_cast<double>(m / static_cast<long double>(r.size()));
  };
  const double mean0 = mean(s0.current());
  bool count_ok = true;
  double mean_err = 0.0, q_err = 0.0;
  for (int i = 1; i <= 9; ++i) {
    const double t = i / 10.0;
    const auto& s = at(sc.states, t);
    count_ok = count_ok && s.current().size() == kN - static_cast<std::size_t>(std::llround(t * kN));
    // first moment of the mass-(1 - t) measure against (1 - t) times the initial one
    mean_err = std::max(mean_err, std::abs((1.0 - t) * mean(s.current()) - (1.0 - t) * mean0));
    q_err = std::max(q_err, std::abs(ff::polyflow::quadratic_spread(s) / q0 / std::pow(1.0 - t, 3) - 1.0));
  }
  report(5, count_ok && mean_err <= 1e-9 && q_err <= 0.03,
         std::string("mass count ") + (count_ok ? "exact" : "WRONG") + ", mean error " + fmt("%.1e", mean_err) +
             " (<= 1e-9), quadratic law relative error " + fmt("%.4f", q_err) + " (<= 0.03), t = 0.1..0.9");
}

void cumulants(const FlowRun& sc) {
  using namespace ff::freeprob;
  // Round trip on moment sequences of probability measures on [-1, 1]: random
  // discrete measures plus the closed-form families.
  std::mt19937_64 gen(5);
  std::uniform_real_distribution<double> d(-1.0, 1.0), w(0.0, 1.0);
  double round_trip = 0.0;
  auto track = [&](const std::vector<double>& m) {
    const auto back = cumulants_to_moments(moments_to_cumulants({m}));
    for (std::size_t i = 0; i < m.size(); ++i) round_trip = std::max(round_trip, std::abs(back.m[i] - m[i]) / std::max(1.0, std::abs(m[i])));
  };
  for (int trial = 0; trial < 1000; ++trial) {
    const int atoms = 1 + trial % 9;
    std::vector<double> m(16, 0.0), x, p;
    double total = 0.0;
    for (int i = 0; i < atoms; ++i) {
      x.push_back(d(gen));
      p.push_back(w(gen));
      total += p.back();
    }
    for (int i = 0; i < atoms; ++i) {
      double v = 1.0;
      for (std::size_t k = 0; k < 16; ++k) m[k] += p[static_cast<std::size_t>(i)] / total * (v *= x[static_cast<std::size_t>(i)]);
    }
    track(m);
  }
  for (const auto& spec : {MeasureSpec::semicircle(1), MeasureSpec::uniform(-1, 1), MeasureSpec::point_mass(0.5)}) {
    track(ff::measures::exact_moments(spec, 16));
  }
  // Arbitrary sequences are ill-conditioned (cumulants reach ~1e9); report the
  // error relative to the largest cumulant.
  double arbitrary = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<double> m(16);
    for (double& v : m) v = d(gen);
    const auto kappa = moments_to_cumulants({m});
    const auto back = cumulants_to_moments(kappa);
    double kmax = 1.0;
    for (double v : kappa.kappa) kmax = std::max(kmax, std::abs(v));
    for (std::size_t i = 0; i < 16; ++i) arbitrary = std::max(arbitrary, std::abs(back.m[i] - m[i]) / kmax);
  }
  // variance-1 semicircle: m_{2j} counts non-crossing pairings, the Catalan numbers
  std::vector<double> kappa(16, 0.0);
  kappa[1] = 1.0;
  const auto sc_m = cumulants_to_moments({kappa});
  bool catalan = true;
  double cat = 1.0;
  for (int j = 1; j <= 8; ++j) {
    cat = cat * 2.0 * (2.0 * j - 1.0) / (j + 1.0);
    catalan = catalan && sc_m.m[static_cast<std::size_t>(2 * j - 1)] == cat && sc_m.m[static_cast<std::size_t>(2 * j - 2)] == 0.0;
  }
  const auto k_mu = moments_to_cumulants(empirical_moments(at(sc.states, 0.0).current(), 4));
  double scaling = 0.0;
  std::string detail;
  for (double k : {2.0, 3.0}) {
    const auto pred = boxplus_predict(at(sc.states, t_for(k)), k);
    const auto k_pred = moments_to_cumulants(empirical_moments(pred, 4));
    const double rel = std::abs(k_pred.kappa[1] / (k * k_mu.kappa[1]) - 1.0);
    scaling = std::max(scaling, rel);
    detail += "k=" + fmt("%g", k) + " " + fmt("%.4f", rel) + "; ";
  }
  report(6, round_trip <= 1e-12 && arbitrary <= 1e-12 && catalan && scaling <= 0.1,
         "round trip on measure moments " + fmt("%.1e", round_trip) + " (<= 1e-12), on arbitrary sequences " +
             fmt("%.1e", arbitrary) + " of the largest cumulant (<= 1e-12), Catalan pairings " + (catalan ? "exact" : "WRONG") +
             ", kappa2 scaling error " + detail + "(<= 0.1)");
}

void pde_convergence() {
  using namespace ff::pdecheck;
  const auto t = convergence(transport_residual(semicircle_transport_field(200, 20)),
                             transport_residual(semicircle_transport_field(400, 40)));
  const auto s = convergence(shlyakhtenko_tao_residual(semicircle_dilated_field(200, 20)),
                             shlyakhtenko_tao_residual(semicircle_dilated_field(400, 40)));
  const auto tn = convergence(transport_residual(semicircle_transport_field(200, 20, 2.0, 0.25)),
                              transport_residual(semicircle_transport_field(400, 40, 2.0, 0.25)));
  const auto sn = convergence(shlyakhtenko_tao_residual(semicircle_dilated_field(200, 20, 2.0, 0.75)),
                              shlyakhtenko_tao_residual(semicircle_dilated_field(400, 40, 2.0, 0.75)));
  auto second = [](double r) { return r >= 3.0 && r <= 5.0; };
  // a control fails to converge if it neither shrinks at second order nor drops below 0.1
  auto stuck = [&](const ConvergenceReport& c) { return !second(c.ratio) && c.fine > 0.1; };
  report(7, second(t.ratio) && second(s.ratio) && stuck(tn) && stuck(sn),
         "refinement ratio transport " + fmt("%.2f", t.ratio) + ", dilated " + fmt("%.2f", s.ratio) +
             " (in [3, 5]); controls " + fmt("%.3f", tn.fine) + " ratio " + fmt("%.2f", tn.ratio) + ", " +
             fmt("%.3f", sn.fine) + " ratio " + fmt("%.2f", sn.ratio) + " (not converging)");
}

void proof_identities() {
  using namespace ff::pdecheck;
  auto arctan_gap = [](std::size_t n) {
    const double dx = 6.0 / static_cast<double>(n);
    std::vector<double> f(n + 1), h(n + 1);
    for (std::size_t i = 0; i <= n; ++i) {
      const double x = -3.0 + dx * static_cast<double>(i);
      f[i] = 2.0 + std::sin(x);
      h[i] = 0.5 + std::cos(2.0 * x) * std::exp(-0.1 * x * x);
    }
    const auto a = ddx_arctan_direct(f, h, dx);
    const auto b = ddx_arctan_quotient(h, f, dx);
    double e = 0.0;
    for (std::size_t i = 1; i < n; ++i) e = std::max(e, std::abs(a[i] + b[i]));
    return e;
  };
  const std::vector<double> c4{1, 0, -4, 0, 6, 0, -4, 0, 1};
  auto u = [](double y) { return std::abs(y) < 1 ? std::pow(1 - y * y, 4) : 0.0; };
  auto hu = [&](double x) { return polynomial_bump_hilbert(c4, x); };
  std::vector<double> arctan, commute;
  for (std::size_t n : {128u, 256u, 512u}) {
    arctan.push_back(arctan_gap(n));
    commute.push_back(dilation_commutator(u, hu, 0.6, ff::spectral::GridSpec{-4.0, 8.0 / n, n + 1}));
  }
  bool pass = true;
  for (std::size_t i = 1; i < 3; ++i) {
    pass = pass && arctan[i - 1] / arctan[i] >= 3.0 && commute[i - 1] / commute[i] >= 3.0;
  }
  report(8, pass, "arctan identity " + fmt("%.2e", arctan[0]) + " -> " + fmt("%.2e", arctan[2]) +
                      ", ratios " + fmt("%.2f", arctan[0] / arctan[1]) + "/" + fmt("%.2f", arctan[1] / arctan[2]) +
                      "; dilation commutator " + fmt("%.2e", commute[0]) + " -> " + fmt("%.2e", commute[2]) +
                      ", ratios " + fmt("%.2f", commute[0] / commute[1]) + "/" + fmt("%.2f", commute[1] / commute[2]) +
                      " (each >= 3)");
}

void entropy_fisher(const FlowRun& sc, const FlowRun& un) {
  using namespace ff::freeprob;
  auto semicircle_grid = [](double radius) {
    const std::size_t len = 2001;
    const double x0 = -1.1 * radius, dx = 2.2 * radius / static_cast<double>(len - 1);
    std::vector<double> u(len);
    for (std::size_t i = 0; i < len; ++i) u[i] = ff::measures::density(MeasureSpec::semicircle(radius), x0 + dx * static_cast<double>(i));
    return DensityGrid(x0, dx, std::move(u)).normalized();
  };
  const double phi = free_fisher(semicircle_grid(1.0));
  // nested adaptive quadrature of the log energy of semicircle(2), frozen
  constexpr double chi_oracle = 1.4189385332046727;
  const double chi = free_entropy(semicircle_grid(2.0));
  bool mono = true;
  std::string detail;
  for (const auto* run : {&sc, &un}) {
    double prev_chi = -INFINITY, prev_phi = INFINITY;
    detail += run == &sc ? "semicircle chi/phi" : "; uniform chi/phi";
    for (double k : {1.0, 1.5, 2.0, 3.0, 4.0}) {
      const auto g = variance_normalized(unit_kde(boxplus_predict(at(run->states, t_for(k)), k)));
      const double c = free_entropy(g), p = free_fisher(g);
      mono = mono && c >= prev_chi - 0.01 * std::abs(prev_chi) && p <= prev_phi + 0.01 * std::abs(prev_phi);
      prev_chi = c;
      prev_phi = p;
      detail += " " + fmt("%.4f", c) + "/" + fmt("%.4f", p);
    }
  }
  report(9, std::abs(phi - 2.0) <= 1e-2 && std::abs(chi - chi_oracle) <= 1e-3 && mono,
         "phi(semicircle(1)) " + fmt("%.5f", phi) + " (2 +- 1e-2), chi(semicircle(2)) " + fmt("%.6f", chi) +
             " vs " + fmt("%.6f", chi_oracle) + " (+- 1e-3); k=1..4 " + detail + " (1% slack)");
}

void hermite_shape() {
  const auto spec = MeasureSpec::uniform(-std::sqrt(3.0), std::sqrt(3.0));  // mean 0, variance 1
  std::map<std::size_t, double> mean_err;
  double worst_1e4 = 0.0;
  const int seeds = 10;
  for (std::size_t n : {1000u, 10000u, 100000u}) {
    for (int seed = 1; seed <= seeds; ++seed) {
      const auto r = ff::measures::sample(spec, n, static_cast<std::uint64_t>(seed));
      double err = 0.0;
      for (int l : {2, 3}) {
        const auto p = ff::polyflow::remove_shift(ff::polyflow::hermite_tail(r, l));
        const auto he = ff::polyflow::probabilists_hermite(l);
        for (std::size_t i = 0; i < he.size(); ++i) err = std::max(err, std::abs(p.coefficients[i] - he[i]));
      }
      mean_err[n] += err / seeds;
      if (n == 10000) worst_1e4 = std::max(worst_1e4, err);
    }
  }
  const bool improving = mean_err[10000] < mean_err[1000] && mean_err[100000] < mean_err[10000];
  report(10, worst_1e4 < 0.1 && improving,
         "worst coefficient error at n=1e4 over 10 seeds " + fmt("%.4f", worst_1e4) + " (< 0.1); mean error n=1e3/1e4/1e5 " +
             fmt("%.4f", mean_err[1000]) + "/" + fmt("%.4f", mean_err[10000]) + "/" + fmt("%.4f", mean_err[100000]) +
             " (decreasing)");
}

}  // namespace

int main() {
  try {
    std::vector<double> times;
    for (int i = 0; i <= 9; ++i) times.push_back(i / 10.0);
    for (double t : {0.25, 0.45, 0.55, 0.75}) times.push_back(t);
    for (double k : {1.5, 2.0, 3.0, 4.0}) times.push_back(t_for(k));

    const auto t_sc = std::chrono::steady_clock::now();
    const auto sc = run_flow(MeasureSpec::semicircle(1), times);
    info("semicircle(1) flow, n=4000, seed 1, to t=0.9: " + fmt("%.1f", sc.seconds) + " s");
    boxplus_closed_form(sc);
    flow_closed_form(sc);
    conservation(sc);
    cumulants(sc);

    const auto field = ff::pdecheck::flow_field({at(sc.states, 0.4), at(sc.states, 0.45), at(sc.states, 0.5),
                                                 at(sc.states, 0.55), at(sc.states, 0.6)});
    const auto res = ff::pdecheck::transport_residual(field);
    info("transport residual of the KDE flow field, t=0.45..0.55: median " + fmt("%.4f", ff::pdecheck::median_residual(res)) +
         ", max " + fmt("%.4f", ff::pdecheck::max_residual(res)));
    {
      const auto pred = ff::freeprob::boxplus_predict(at(sc.states, 0.5), 2.0);
      const auto eq = ff::pdecheck::equivalence_check(field, 2.0, unit_kde(pred));
      info("change of variables on the KDE flow field, k=2: L1 " + fmt("%.2e", eq.l1_distance) +
           ", residual consistency " + fmt("%.4f", eq.consistency_rel) + " of max");
    }
    info("semicircle block total " + fmt("%.1f", seconds_since(t_sc)) + " s");

    const auto un = run_flow(MeasureSpec::uniform(-1, 1), {0.0, t_for(1.5), t_for(2.0), t_for(3.0), t_for(4.0)});
    info("uniform(-1,1) flow, n=4000, seed 1, to t=0.75: " + fmt("%.1f", un.seconds) + " s");

    vieta_suite();
    interlacing_and_gap();
    pde_convergence();
    proof_identities();
    entropy_fisher(sc, un);
    hermite_shape();
  } catch (const std::exception& e) {
    std::printf("acceptance aborted: %s\n", e.what());
    return 2;
  }
  std::printf("summary:");
  for (const auto& [id, pass] : verdicts) std::printf(" %d:%s", id, pass ? "PASS" : "FAIL");
  std::printf("\n%s: %d criteria failed\n", failures == 0 ? "ALL PASS" : "FAILURES", failures);
  return failures == 0 ? 0 : 1;
}
