#include "freeflow/errors.hpp"
#include "freeflow/freeprob.hpp"
#include "freeflow/measures.hpp"
#include "freeflow/polyflow.hpp"

#include <boost/math/quadrature/tanh_sinh.hpp>
#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

using namespace freeflow;
using namespace freeflow::freeprob;
using measures::MeasureSpec;
using spectral::DensityGrid;

namespace {

constexpr double pi = std::numbers::pi;

// Brute force: m_n = sum over non-crossing partitions of [n] of prod kappa_|B|.
// Partitions are enumerated as restricted growth strings.
double nc_moment(const std::vector<double>& kappa, int n) {
  std::vector<int> block(static_cast<std::size_t>(n), 0);
  double total = 0.0;
  std::function<void(int, int)> rec = [&](int pos, int used) {
    if (pos == n) {
      // crossing: a < b < c < d with a, c in one block and b, d in another
      for (int a = 0; a < n; ++a)
        for (int b = a + 1; b < n; ++b)
          for (int c = b + 1; c < n; ++c)
            for (int d = c + 1; d < n; ++d)
              if (block[a] == block[c] && block[b] == block[d] && block[a] != block[b]) return;
      std::vector<int> size(static_cast<std::size_t>(used), 0);
      for (int v : block) ++size[static_cast<std::size_t>(v)];
      double p = 1.0;
      for (int s : size) p *= kappa[static_cast<std::size_t>(s - 1)];
      total += p;
      return;
    }
    for (int b = 0; b <= used; ++b) {
      block[static_cast<std::size_t>(pos)] = b;
      rec(pos + 1, b == used ? used + 1 : used);
    }
  };
  rec(0, 0);
  return total;
}

DensityGrid semicircle_grid(double radius, std::size_t len = 2001) {
  const double x0 = -1.1 * radius;
  const double dx = 2.2 * radius / static_cast<double>(len - 1);
  std::vector<double> u(len);
  for (std::size_t i = 0; i < len; ++i) u[i] = measures::density(MeasureSpec::semicircle(radius), x0 + dx * i);
  return DensityGrid(x0, dx, std::move(u)).normalized();
}

// int int log|s - t| rho(s) rho(t) by nested tanh-sinh, splitting the inner
// integral at the log singularity.
double log_energy(const std::function<double(double)>& rho, double a, double b) {
  boost::math::quadrature::tanh_sinh<double> q;
  auto inner = [&](double s) {
    auto f = [&](double t) { return t == s ? 0.0 : std::log(std::abs(s - t)) * rho(t); };
    double v = 0.0;
    if (s > a) v += q.integrate(f, a, s, 1e-10);
    if (s < b) v += q.integrate(f, s, b, 1e-10);
    return v * rho(s);
  };
  return q.integrate(inner, a, b, 1e-9);
}

}  // namespace

TEST_SUITE("freeprob") {

TEST_CASE("moments from cumulants agree with non-crossing partition enumeration") {
  std::mt19937_64 gen(3);
  std::uniform_real_distribution<double> d(-1.0, 1.0);
  for (int trial = 0; trial < 3; ++trial) {
    std::vector<double> kappa(8);
    for (double& v : kappa) v = d(gen);
    const auto m = cumulants_to_moments({kappa});
    for (int n = 1; n <= 8; ++n) {
      const double oracle = nc_moment(kappa, n);
      CHECK(m.m[static_cast<std::size_t>(n - 1)] == doctest::Approx(oracle).epsilon(1e-12).scale(1.0));
    }
  }
}

TEST_CASE("cumulant examples") {
  // semicircle of variance 1: Catalan moments, only kappa_2 survives
  const auto sc = moments_to_cumulants({measures::exact_moments(MeasureSpec::semicircle(2), 16)});
  for (int n = 1; n <= 16; ++n) CHECK(sc.kappa[static_cast<std::size_t>(n - 1)] == doctest::Approx(n == 2 ? 1.0 : 0.0).scale(1.0).epsilon(1e-10));
  const auto un = moments_to_cumulants({measures::exact_moments(MeasureSpec::uniform(-1, 1), 4)});
  CHECK(un.kappa[1] == doctest::Approx(1.0 / 3));
  CHECK(un.kappa[3] == doctest::Approx(-1.0 / 45));
  // point mass at a: kappa_1 = a, others 0
  const auto pm = moments_to_cumulants({measures::exact_moments(MeasureSpec::point_mass(1.5), 6)});
  CHECK(pm.kappa[0] == 1.5);
  for (int n = 2; n <= 6; ++n) CHECK(std::abs(pm.kappa[static_cast<std::size_t>(n - 1)]) < 1e-12);
}

TEST_CASE("moment and cumulant transforms are mutually inverse on measures") {
  // moments of random discrete probability measures on [-1, 1]
  std::mt19937_64 gen(11);
  std::uniform_real_distribution<double> d(-1.0, 1.0), w(0.0, 1.0);
  double worst = 0.0;
  for (int trial = 0; trial < 500; ++trial) {
    const int atoms = 1 + trial % 9;
    std::vector<double> x(static_cast<std::size_t>(atoms)), p(static_cast<std::size_t>(atoms));
    double total = 0.0;
    for (int i = 0; i < atoms; ++i) {
      x[static_cast<std::size_t>(i)] = d(gen);
      total += (p[static_cast<std::size_t>(i)] = w(gen));
    }
    std::vector<double> m(16, 0.0);
    for (int i = 0; i < atoms; ++i) {
      double v = 1.0;
      for (std::size_t k = 0; k < 16; ++k) m[k] += p[static_cast<std::size_t>(i)] / total * (v *= x[static_cast<std::size_t>(i)]);
    }
    const auto back = cumulants_to_moments(moments_to_cumulants({m}));
    for (std::size_t i = 0; i < 16; ++i) worst = std::max(worst, std::abs(back.m[i] - m[i]) / std::max(1.0, std::abs(m[i])));
  }
  CHECK(worst <= 1e-12);
  for (const auto& spec : {MeasureSpec::semicircle(1), MeasureSpec::uniform(-1, 1), MeasureSpec::uniform(0, 1)}) {
    const MomentSequence m{measures::exact_moments(spec, 16)};
    const auto back = cumulants_to_moments(moments_to_cumulants(m));
    for (std::size_t i = 0; i < 16; ++i) CHECK(back.m[i] == doctest::Approx(m.m[i]).epsilon(1e-12).scale(1.0));
  }
  CHECK_THROWS_AS(moments_to_cumulants({std::vector<double>(17, 0.0)}), DomainError);
  CHECK_THROWS_AS(cumulants_to_moments({{}}), DomainError);
}

TEST_CASE("round trip error of arbitrary sequences is bounded by their conditioning") {
  // sequences that are no measure's moments have cumulants up to ~1e9, so the
  // bound scales with the largest intermediate value
  std::mt19937_64 gen(12);
  std::uniform_real_distribution<double> d(-1.0, 1.0);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<double> m(16), k(16);
    for (double& v : m) v = d(gen);
    for (double& v : k) v = d(gen);
    const auto kappa = moments_to_cumulants({m});
    const auto back = cumulants_to_moments(kappa);
    double kmax = 1.0;
    for (double v : kappa.kappa) kmax = std::max(kmax, std::abs(v));
    for (std::size_t i = 0; i < 16; ++i) CHECK(std::abs(back.m[i] - m[i]) <= 1e-12 * kmax);
    const auto moments = cumulants_to_moments({k});
    const auto kback = moments_to_cumulants(moments);
    double mmax = 1.0;
    for (double v : moments.m) mmax = std::max(mmax, std::abs(v));
    for (std::size_t i = 0; i < 16; ++i) CHECK(std::abs(kback.kappa[i] - k[i]) <= 1e-12 * mmax);
  }
}

TEST_CASE("r series evaluates the cumulant power series") {
  const auto r = r_series({{0.5, 1.0, -2.0}});
  CHECK(r(0.1) == doctest::Approx(0.5 + 0.1 - 0.02));
}

TEST_CASE("boxplus powers scale cumulants linearly") {
  const auto p = boxplus_power_cumulants({{0.5, 1.0, -2.0}}, 3.0);
  CHECK(p.kappa == std::vector<double>{1.5, 3.0, -6.0});
  CHECK_THROWS_AS(boxplus_power_cumulants({{1.0}}, 0.5), DomainError);
  // semicircle: mu^{boxplus k} is the semicircle of radius r sqrt(k)
  const auto k4 = cumulants_to_moments(boxplus_power_cumulants(moments_to_cumulants({measures::exact_moments(MeasureSpec::semicircle(1), 8)}), 4.0));
  const auto sc2 = measures::exact_moments(MeasureSpec::semicircle(2), 8);
  for (std::size_t i = 0; i < 8; ++i) CHECK(k4.m[i] == doctest::Approx(sc2[i]).scale(1.0));
}

TEST_CASE("derivative counts for boxplus powers") {
  CHECK(boxplus_derivatives(1.0, 4000) == 0);
  CHECK(boxplus_derivatives(1.5, 4000) == 1333);
  CHECK(boxplus_derivatives(2.0, 4000) == 2000);
  CHECK(boxplus_derivatives(3.0, 4000) == 2667);
  CHECK(boxplus_derivatives(4.0, 4000) == 3000);
  CHECK(boxplus_derivatives(1e9, 10) == 9);
  CHECK_THROWS_AS(boxplus_derivatives(0.9, 10), DomainError);
}

TEST_CASE("boxplus prediction") {
  const auto r = measures::sample(MeasureSpec::semicircle(1), 1000, 2);
  const auto same = boxplus_predict(polyflow::flow_steps(r, 0), 1.0);
  CHECK(same == r);
  const auto half = polyflow::flow_steps(r, 500);
  const auto two = boxplus_predict(half, 2.0);
  CHECK(two.size() == 500);
  CHECK(two[0] == 2.0 * half.current()[0]);
  // semicircle(1) has variance 1/4; its square has variance 1/2
  const auto m = empirical_moments(two, 2);
  CHECK(std::abs(m.m[1] - 0.5) < 0.02);
  try {
    boxplus_predict(half, 3.0);
    FAIL("expected DomainError");
  } catch (const DomainError& e) {
    CHECK(std::string(e.what()).find("667 derivatives") != std::string::npos);
  }
  // t = 6/9 is exactly 1 - 1/3
  CHECK_NOTHROW(boxplus_predict(polyflow::flow_steps(measures::sample(MeasureSpec::semicircle(1), 9, 1), 6), 3.0));
}

TEST_CASE("empirical moments and exponents") {
  const RootSet r({-1.0, 0.0, 2.0});
  const auto m = empirical_moments(r, 3);
  CHECK(m.m[0] == doctest::Approx(1.0 / 3));
  CHECK(m.m[1] == doctest::Approx(5.0 / 3));
  CHECK(m.m[2] == doctest::Approx(7.0 / 3));
  CHECK_THROWS_AS(empirical_moments(r, 9), DomainError);
  const auto e = scaling_exponents({{1.0, 2.0, -3.0}}, {{2.0, 8.0, 6.0}}, 2.0);
  CHECK(e[0] == doctest::Approx(1.0));
  CHECK(e[1] == doctest::Approx(2.0));
  CHECK(std::isnan(e[2]));
  CHECK_THROWS_AS(scaling_exponents({{1.0}}, {{1.0, 2.0}}, 2.0), DomainError);
}

TEST_CASE("free fisher information") {
  CHECK(free_fisher(semicircle_grid(1.0)) == doctest::Approx(2.0).epsilon(1e-2));
  CHECK(free_fisher(semicircle_grid(2.0)) == doctest::Approx(0.5).epsilon(1e-2));
  const DensityGrid unit(0.0, 1.0 / 1000, std::vector<double>(1000, 1.0));
  CHECK(free_fisher(unit) == doctest::Approx(2.0 * pi * pi / 3.0).epsilon(1e-12));
  CHECK_THROWS_AS(free_fisher(DensityGrid(0.0, 0.1, std::vector<double>(20, 1.0))), DomainError);
}

TEST_CASE("free entropy against the quadrature oracle") {
  // nested adaptive quadrature, frozen once in double precision
  constexpr double frozen = 1.4189385332046727;
  const double constant = 0.75 + 0.5 * std::log(2.0 * pi);
  const double live = log_energy([](double x) { return measures::density(MeasureSpec::semicircle(2), x); }, -2.0, 2.0) + constant;
  CHECK(live == doctest::Approx(frozen).epsilon(1e-8));
  const double chi = free_entropy(semicircle_grid(2.0));
  CHECK(std::abs(chi - frozen) < 1e-3);
  CHECK(std::abs(free_entropy(semicircle_grid(4.0)) - (chi + std::log(2.0))) < 1e-3);

  const double uniform_live = log_energy([](double) { return 1.0; }, 0.0, 1.0) + constant;
  CHECK(uniform_live == doctest::Approx(-1.5 + constant).epsilon(1e-8));
  const DensityGrid unit(0.0, 1.0 / 1000, std::vector<double>(1000, 1.0));
  // cells cover [-dx/2, 1 - dx/2], a unit interval, so the value is exact up to the series
  CHECK(free_entropy(unit) == doctest::Approx(uniform_live).epsilon(1e-9));
}

TEST_CASE("free entropy sentinels and errors") {
  std::vector<double> spike(16, 0.0);
  spike[8] = 10.0;
  CHECK(free_entropy(DensityGrid(0.0, 0.1, spike)) == -std::numeric_limits<double>::infinity());
  CHECK_THROWS_AS(free_entropy(DensityGrid(0.0, 0.1, std::vector<double>(16, 1.0))), DomainError);
}

TEST_CASE("variance normalization") {
  const auto g = semicircle_grid(3.0);
  const auto v = variance_normalized(g);
  CHECK(v.variance() == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(v.mean() == doctest::Approx(0.0).scale(1.0).epsilon(1e-12));
  CHECK(v.mass() == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(free_entropy(v) == doctest::Approx(free_entropy(semicircle_grid(2.0))).epsilon(1e-3));
}

}  // TEST_SUITE
