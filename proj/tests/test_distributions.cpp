#include <doctest.h>

#include <cmath>
#include <numbers>
#include <vector>

#include "mpedge/distributions.hpp"
#include "mpedge/errors.hpp"
#include "mpedge/quadrature.hpp"

using namespace mpedge;

namespace {

// ∫_a^b f by composite 32-point Gauss-Legendre on `panels` equal panels.
template <class F>
double integrate(F f, double a, double b, int panels = 200) {
  const auto& r = gauss_legendre(32);
  const double h = (b - a) / panels;
  double sum = 0.0;
  for (int p = 0; p < panels; ++p) {
    const double c = a + (p + 0.5) * h;
    for (std::size_t i = 0; i < r.nodes.size(); ++i) sum += 0.5 * h * r.weights[i] * f(c + 0.5 * h * r.nodes[i]);
  }
  return sum;
}

struct Moments {
  double mean = 0.0, var = 0.0, var_of_square = 0.0;
};

Moments sample_moments(const EntryDistribution& d, int n, std::uint64_t seed) {
  CounterRng rng(seed);
  double s = 0.0, s2 = 0.0, s4 = 0.0;
  for (int i = 0; i < n; ++i) {
    const double q = d.sample(rng);
    s += q;
    s2 += q * q;
    s4 += q * q * q * q;
  }
  return {s / n, s2 / n - (s / n) * (s / n), s4 / n - (s2 / n) * (s2 / n)};
}

}  // namespace

TEST_CASE("parsing") {
  CHECK(EntryDistribution::parse("gaussian").kind() == DistKind::Gaussian);
  CHECK(EntryDistribution::parse("rademacher").kind() == DistKind::Rademacher);
  CHECK(EntryDistribution::parse("heavy").kind() == DistKind::HeavyTail);
  const auto p = EntryDistribution::parse("pareto:3.5");
  CHECK(p.kind() == DistKind::Pareto);
  CHECK(p.pareto_shape() == 3.5);
  CHECK(p.name() == "pareto:3.5");
  CHECK_THROWS_AS(EntryDistribution::parse("pareto:2"), ValidationError);
  CHECK_THROWS_AS(EntryDistribution::parse("pareto:x"), ValidationError);
  CHECK_THROWS_AS(EntryDistribution::parse("cauchy"), ValidationError);
  CHECK_THROWS_AS(EntryDistribution::parse("tabulated:/nonexistent/file"), ValidationError);
}

TEST_CASE("heavy-tail second moment by quadrature") {
  // y² f(y) dy with f = -S', in t = ln y: e⁴ (4t + 1) e^{-2t} / t² dt on [1, ∞)
  const double e4 = std::exp(4.0);
  const double m2 = integrate([&](double t) { return e4 * (4 * t + 1) * std::exp(-2 * t) / (t * t); }, 1.0, 40.0, 400);
  CHECK(m2 == doctest::Approx(kHeavyTailSecondMoment).epsilon(1e-13));
  CHECK(kHeavyTailScale * kHeavyTailScale == doctest::Approx(kHeavyTailSecondMoment).epsilon(1e-15));
}

TEST_CASE("standardization: mean 0 and variance 1 within 4/sqrt(n)") {
  const int n = 1000000;
  const double tol = 4.0 / std::sqrt(static_cast<double>(n));
  for (const auto& d : {EntryDistribution::gaussian(), EntryDistribution::rademacher(), EntryDistribution::heavy_tail(),
                        EntryDistribution::pareto(5.0), EntryDistribution::pareto(3.5)}) {
    CAPTURE(d.name());
    const auto m = sample_moments(d, n, 99);
    CHECK(std::abs(m.mean) <= tol);
    // Pareto q² has kurtosis far above 1 (infinite for a <= 4), so scale by its sample spread.
    const double var_tol = d.kind() == DistKind::Pareto ? tol * std::sqrt(m.var_of_square) : tol;
    CHECK(std::abs(m.var - 1.0) <= var_tol);
  }
}

TEST_CASE("heavy-tail raw survival at e^2") {
  const int n = 1000000;
  CounterRng rng(5);
  int hits = 0;
  for (int i = 0; i < n; ++i) hits += heavy_tail_draw_raw(rng) > std::exp(2.0);
  const double p = 1.0 / (2.0 * std::exp(4.0));
  const double se = std::sqrt(p * (1 - p) / n);
  CHECK(std::abs(static_cast<double>(hits) / n - p) <= 3 * se);
  CHECK(heavy_tail_survival_raw(std::exp(2.0)) == doctest::Approx(p).epsilon(1e-15));
  CHECK(heavy_tail_survival_raw(2.0) == 1.0);
}

TEST_CASE("closed-form survival") {
  CHECK(EntryDistribution::gaussian().survival(0.0) == 1.0);
  CHECK(EntryDistribution::gaussian().survival(1.959963984540054) == doctest::Approx(0.05).epsilon(1e-12));
  CHECK(EntryDistribution::rademacher().survival(1.5) == 0.0);
  CHECK(EntryDistribution::rademacher().survival(1.0) == 1.0);
  const auto h = EntryDistribution::heavy_tail();
  CHECK(h.survival(std::exp(2.0) / kHeavyTailScale) == doctest::Approx(0.5 / std::exp(4.0)).epsilon(1e-13));
  CHECK_THROWS_AS(h.survival(-1.0), ValidationError);
}

TEST_CASE("pareto tail: s^4 P grows for a = 3.5 and flattens for a = 4") {
  const auto p35 = EntryDistribution::pareto(3.5);
  std::vector<double> grid;
  for (int k = 0; k <= 20; ++k) grid.push_back(5.0 * std::pow(10.0, k / 20.0));
  const auto t = p35.tail_condition_estimate(grid);
  for (std::size_t i = 1; i < t.size(); ++i) CHECK(t[i].second > t[i - 1].second);

  // empirical frequencies agree with the closed form at s = 5 and 10
  const int n = 2000000;
  CounterRng rng(17);
  int c5 = 0, c10 = 0;
  for (int i = 0; i < n; ++i) {
    const double q = std::abs(p35.sample(rng));
    c5 += q >= 5.0;
    c10 += q >= 10.0;
  }
  for (auto [s, c] : {std::pair{5.0, c5}, std::pair{10.0, c10}}) {
    const double p = p35.survival(s);
    CHECK(std::abs(static_cast<double>(c) / n - p) <= 4 * std::sqrt(p / n));
  }

  const auto p4 = EntryDistribution::pareto(4.0).tail_condition_estimate({1000.0, 10000.0, 100000.0});
  CHECK(p4[0].second > 0.0);
  CHECK(p4[2].second / p4[0].second == doctest::Approx(1.0).epsilon(0.02));
}

TEST_CASE("tail diagnostic sequences") {
  std::vector<double> grid;
  for (int k = 0; k <= 30; ++k) grid.push_back(10.0 * std::pow(1000.0, k / 30.0));
  const auto h = EntryDistribution::heavy_tail().tail_condition_estimate(grid);
  for (std::size_t i = 1; i < h.size(); ++i) CHECK(h[i].second < h[i - 1].second);
  CHECK(EntryDistribution::gaussian().tail_condition_estimate({8.0})[0].second < 1e-6);
  CHECK_THROWS_AS(EntryDistribution::gaussian().tail_condition_estimate({2.0, 1.0}), ValidationError);
}

TEST_CASE("tail classes") {
  CHECK(EntryDistribution::gaussian().tail_class() == TailClass::ConditionHolds);
  CHECK(EntryDistribution::rademacher().tail_class() == TailClass::ConditionHolds);
  CHECK(EntryDistribution::heavy_tail().tail_class() == TailClass::ConditionHolds);
  CHECK(EntryDistribution::pareto(4.5).tail_class() == TailClass::ConditionHolds);
  CHECK(EntryDistribution::pareto(4.0).tail_class() == TailClass::ConditionFails);
  CHECK(EntryDistribution::pareto(3.0).tail_class() == TailClass::ConditionFails);
}

TEST_CASE("cutoff moments") {
  const double T = 2.5;
  const auto g = EntryDistribution::gaussian().tail_moments(T);
  CHECK(g.alpha == doctest::Approx(std::erfc(T / std::numbers::sqrt2)).epsilon(1e-15));
  CHECK(g.beta == 0.0);
  CHECK(EntryDistribution::rademacher().tail_moments(1.5).alpha == 0.0);
  CHECK(EntryDistribution::heavy_tail().tail_moments(20.0).alpha ==
        doctest::Approx(heavy_tail_survival_raw(20.0 * kHeavyTailScale)).epsilon(1e-15));

  // Pareto(3.5) against direct quadrature over y (x_m = 1), in t = ln y.
  for (double TT : {0.5, 2.0, 8.0}) {
    const double a = 3.5;
    const auto d = EntryDistribution::pareto(a);
    const double mu = d.shift(), sd = d.scale();
    auto q = [&](double y) { return (y - mu) / sd; };
    auto dens_t = [&](double t) { return a * std::exp(-a * t); };  // density of t = ln y
    double alpha = 0.0, beta = 0.0;
    const double hi = std::log(mu + TT * sd);
    alpha += integrate(dens_t, hi, hi + 40.0);
    beta += integrate([&](double t) { return q(std::exp(t)) * dens_t(t); }, hi, hi + 40.0);
    if (mu - TT * sd > 1.0) {
      const double lo = std::log(mu - TT * sd);
      alpha += integrate(dens_t, 0.0, lo);
      beta += integrate([&](double t) { return q(std::exp(t)) * dens_t(t); }, 0.0, lo);
    }
    CAPTURE(TT);
    const auto m = d.tail_moments(TT);
    CHECK(m.alpha == doctest::Approx(alpha).epsilon(1e-10));
    CHECK(m.beta == doctest::Approx(beta).epsilon(1e-9));
  }
}

TEST_CASE("tabulated distribution") {
  std::vector<double> xs;
  CounterRng rng(3);
  for (int i = 0; i < 10000; ++i) xs.push_back(2.0 + 3.0 * rng.normal());
  const auto d = EntryDistribution::tabulated(xs);
  CHECK(d.kind() == DistKind::Tabulated);
  CHECK_THROWS_AS(d.survival(1.0), Unsupported);
  const auto est = d.survival_estimate(1.959963984540054);
  CHECK(est.std_error > 0.0);
  CHECK(std::abs(est.value - 0.05) <= 4 * est.std_error);
  CHECK_THROWS_AS(d.tail_moments(3.0), QuadratureFailure);
  const auto m = sample_moments(d, 100000, 1);
  CHECK(std::abs(m.mean) <= 4.0 / std::sqrt(1e5));
  CHECK_THROWS_AS(EntryDistribution::tabulated({1.0}), Unsupported);
}
