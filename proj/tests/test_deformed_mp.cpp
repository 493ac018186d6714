#include <doctest.h>

#include <cmath>
#include <complex>
#include <vector>

#include "mpedge/deformed_mp.hpp"
#include "mpedge/errors.hpp"

using namespace mpedge;

namespace {

PopulationSpectrum two_atom(std::size_t M) {
  const Atom atoms[] = {{4.0, 0.5}, {1.0, 0.5}};
  return PopulationSpectrum::from_atoms(atoms, M);
}

// Closed-form Stieltjes transform of the null-case law, principal square roots split
// so the branch cut stays on the support.
cplx m_mp(cplx z, double d) {
  const double lp = std::pow(1.0 + 1.0 / std::sqrt(d), 2), lm = std::pow(1.0 - 1.0 / std::sqrt(d), 2);
  const cplx i(0.0, 1.0);
  return (1.0 / d - 1.0 - z + i * std::sqrt(lp - z) * std::sqrt(z - lm)) / (2.0 * z);
}

}  // namespace

TEST_CASE("f and f' null-case values") {
  const auto pop = PopulationSpectrum::identity(10);
  CHECK(f_of_m(-0.5, pop, AspectRatio(10, 10)) == doctest::Approx(4.0).epsilon(1e-14));
  CHECK(f_prime_of_m(-0.5, pop, AspectRatio(10, 10)) == doctest::Approx(0.0).epsilon(1e-14));
  CHECK(f_of_m(-2.0 / 3.0, pop, AspectRatio(40, 10)) == doctest::Approx(2.25).epsilon(1e-14));
  CHECK(std::abs(f_prime_of_m(-2.0 / 3.0, pop, AspectRatio(40, 10))) < 1e-13);
  // Far left of the poles f' ~ (1 - 1/d)/m²; at d = 1 the leading terms cancel.
  CHECK(f_prime_of_m(-1e6, pop, AspectRatio(40, 10)) > 0.0);

  // For |m| → ∞ the sum contributes (1/d)/m, so f ~ -(1 - 1/d)/m.
  const cplx m(0.0, 1e6);
  const cplx f = f_of_m(m, two_atom(10), AspectRatio(20, 10));
  CHECK(std::abs(f - (-0.5 / m)) / std::abs(0.5 / m) <= 1e-5);
}

TEST_CASE("pole guard") {
  const auto pop = PopulationSpectrum::identity(4);
  CHECK_THROWS_AS(f_of_m(0.0, pop, AspectRatio(4, 4)), PoleProximity);
  CHECK_THROWS_AS(f_of_m(-1.0, pop, AspectRatio(4, 4)), PoleProximity);
  CHECK_THROWS_AS(f_prime_of_m(cplx(-1.0, 1e-14), pop, AspectRatio(4, 4)), PoleProximity);
}

TEST_CASE("solver matches the closed form and the asymptotics") {
  const auto pop = PopulationSpectrum::identity(10);
  const auto v = solve_m2c({2.0, 1.0}, pop, AspectRatio(10, 10));
  CHECK(std::abs(v.m2c - m_mp({2.0, 1.0}, 1.0)) <= 10 * kSolverTolerance);

  const cplx big(0.0, 1e6);
  const auto w = solve_m2c(big, pop, AspectRatio(10, 10));
  CHECK(std::abs(w.m2c * big + 1.0) <= 1e-5);
}

TEST_CASE("two-atom population just above the soft edge") {
  const auto pop = two_atom(100);
  const AspectRatio d(200, 100);
  const auto e = edge_report(pop, d);
  const auto v = solve_m2c({e.lambda_r, 1e-3}, pop, d);
  CHECK(v.residual <= kSolverTolerance);
  CHECK(v.m2c.imag() > 0.0);
  CHECK(std::abs(v.m1c + (1.0 - d.value()) / v.z - d.value() * v.m2c) <= 1e-13 * std::abs(v.m1c));
}

TEST_CASE("null-case oracle on a 100-point grid") {
  for (double dv : {0.5, 1.0, 2.0, 4.0}) {
    const auto pop = PopulationSpectrum::identity(100);
    const auto d = AspectRatio::from_ratio(100, dv);
    const double lp = std::pow(1.0 + 1.0 / std::sqrt(dv), 2);
    double worst = 0.0;
    for (int a = 0; a < 10; ++a) {
      for (int b = 0; b < 10; ++b) {
        const cplx z(0.1 + 1.3 * lp * a / 9.0, 1e-3 * std::pow(1e3, b / 9.0));
        const auto v = solve_m2c(z, pop, d);
        CHECK(v.m2c.imag() >= 0.0);
        worst = std::max(worst, std::abs(v.m2c - m_mp(z, dv)));
      }
    }
    CAPTURE(dv);
    CHECK(worst <= 1e-10);
  }
}

TEST_CASE("density") {
  const auto pop = PopulationSpectrum::identity(10);
  const AspectRatio one(10, 10);
  CHECK(density_at(2.0, pop, one) == doctest::Approx(1.0 / (2.0 * M_PI)).epsilon(1e-6));
  CHECK(density_at(4.2, pop, one) <= 1e-4);
  CHECK(density_at(-0.5, pop, AspectRatio(20, 10)) == 0.0);

  // square-root vanishing at the soft edge
  const auto two = two_atom(100);
  const AspectRatio d(200, 100);
  const double lr = edge_report(two, d).lambda_r;
  std::vector<double> ratio;
  for (double k : {1e-4, 1e-3, 1e-2}) ratio.push_back(density_at(lr - k, two, d) / std::sqrt(k));
  const auto [lo, hi] = std::minmax_element(ratio.begin(), ratio.end());
  CHECK(*hi / *lo <= 1.15);
}

TEST_CASE("total mass of the density") {
  for (const auto& pop : {PopulationSpectrum::identity(100), two_atom(100)}) {
    const TailMass tail(pop, AspectRatio(50, 100));
    CHECK(tail.total() >= 0.999);
    CHECK(tail.total() <= 1.001);
  }
  // For d > 1 the continuous part carries 1/d; the rest is the atom at zero.
  const TailMass tail(PopulationSpectrum::identity(100), AspectRatio(200, 100));
  CHECK(tail.total() == doctest::Approx(0.5).epsilon(1e-6));
}

TEST_CASE("support edges") {
  const auto null = PopulationSpectrum::identity(100);
  auto a = support_edges(null, AspectRatio(100, 100));
  REQUIRE(a.intervals.size() == 1);
  CHECK(a.intervals[0].lo == 0.0);
  CHECK(a.intervals[0].hi == doctest::Approx(4.0).epsilon(1e-12));
  CHECK(a.critical_points[0].m == doctest::Approx(-0.5).epsilon(1e-10));
  CHECK(a.hard_edge_at_zero);

  a = support_edges(null, AspectRatio(400, 100));
  REQUIRE(a.intervals.size() == 1);
  CHECK(a.intervals[0].lo == doctest::Approx(0.25).epsilon(1e-12));
  CHECK(a.intervals[0].hi == doctest::Approx(2.25).epsilon(1e-12));

  // Two atoms, d = 4: a genuine gap in the bulk. Values from an independent
  // mpmath root scan of f'(m) = 0.
  const auto two = two_atom(100);
  const AspectRatio d4(400, 100);
  a = support_edges(two, d4);
  REQUIRE(a.intervals.size() == 2);
  CHECK(a.intervals[0].lo == doctest::Approx(0.3245186579700275).epsilon(1e-9));
  CHECK(a.intervals[0].hi == doctest::Approx(1.5674120292122709).epsilon(1e-9));
  CHECK(a.intervals[1].lo == doctest::Approx(1.876339139826859).epsilon(1e-9));
  CHECK(a.intervals[1].hi == doctest::Approx(7.481730172990843).epsilon(1e-9));
  for (const auto& c : a.critical_points) {
    CHECK(std::abs(c.edge - f_of_m(c.m, two, d4)) <= 1e-9);
    CHECK(std::abs(f_prime_of_m(c.m, two, d4)) <= 1e-9);
  }

  a = support_edges(two, AspectRatio(200, 100));
  REQUIRE(a.intervals.size() == 1);
  CHECK(a.intervals[0].lo == doctest::Approx(0.1222241416755433).epsilon(1e-9));
  CHECK(a.intervals[0].hi == doctest::Approx(9.299949950238611).epsilon(1e-9));
}

TEST_CASE("edge report") {
  const auto null = PopulationSpectrum::identity(100);
  auto e = edge_report(null, AspectRatio(100, 100));
  CHECK(e.lambda_r == doctest::Approx(4.0).epsilon(1e-12));
  CHECK(e.b1 == doctest::Approx(-0.5).epsilon(1e-10));
  CHECK(e.gamma0 == doctest::Approx(std::pow(2.0, -4.0 / 3.0)).epsilon(1e-9));
  CHECK(e.margin_sigma1 == doctest::Approx(0.5).epsilon(1e-10));
  CHECK(e.regular);

  e = edge_report(null, AspectRatio(400, 100));
  CHECK(e.lambda_r == doctest::Approx(2.25).epsilon(1e-12));
  CHECK(e.b1 == doctest::Approx(-2.0 / 3.0).epsilon(1e-10));
  CHECK(e.gamma0 == doctest::Approx(2.0 / std::pow(3.0, 4.0 / 3.0)).epsilon(1e-9));
  CHECK(e.b1 > -1.0 / null.sigma_max());
  CHECK(e.b1 < 0.0);

  CHECK_THROWS_AS(edge_report(null, AspectRatio(100, 100), 0.6), RegularityFailed);
  CHECK_FALSE(edge_report_unchecked(null, AspectRatio(100, 100), 0.6).regular);
}

TEST_CASE("classical locations") {
  const auto null = PopulationSpectrum::identity(100);
  const AspectRatio d(100, 100);
  const auto g = classical_locations(null, d, 100, 1, 100);
  REQUIRE(g.size() == 100);
  CHECK(g[0] == edge_report(null, d).lambda_r);
  for (std::size_t j = 1; j < g.size(); ++j) CHECK(g[j] <= g[j - 1]);
  // scipy quad + brentq on the closed-form density
  CHECK(g[1] == doctest::Approx(3.6766912284124356).epsilon(1e-8));
  CHECK(g[9] == doctest::Approx(2.6820263661944543).epsilon(1e-8));
  CHECK(g[49] == doctest::Approx(0.6808775009917964).epsilon(1e-8));
  CHECK(g[89] == doctest::Approx(0.029930242289165934).epsilon(1e-7));
}
