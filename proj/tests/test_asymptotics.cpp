#include <algorithm>
#include <cmath>
#include <numbers>

#include <doctest.h>

#include "normcrit/asymptotics.hpp"
#include "normcrit/errors.hpp"
#include "normcrit/profiles.hpp"

using namespace normcrit;

namespace {

ModelParams params(double p, double a) {
  ModelParams prm;
  prm.mu1 = 1.0;
  prm.mu2 = 1.5;
  prm.beta = 3.0;
  prm.p = p;
  prm.a1 = prm.a2 = a;
  return prm;
}

GridPtr grid() {
  static GridPtr g = build_grid(60.0, 2048, Mapping::stretched, 0.5);
  return g;
}

}  // namespace

TEST_CASE("regime names round trip") {
  for (Regime r : {Regime::small_mass_ground, Regime::small_mass_mp, Regime::p3_threshold, Regime::large_mass})
    CHECK(regime_from_string(to_string(r)) == r);
  CHECK_THROWS_AS(regime_from_string("huge"), Error);
}

TEST_CASE("log-log fit recovers an exact power law") {
  const std::vector<double> x{0.5, 1.0, 2.0, 4.0, 8.0};
  std::vector<double> y;
  for (double v : x) y.push_back(3.0 * std::pow(v, 1.7));
  const auto f = fit_log_log(x, y, "power", 1.7);
  CHECK(f.slope == doctest::Approx(1.7).epsilon(1e-12));
  CHECK(std::exp(f.intercept) == doctest::Approx(3.0).epsilon(1e-12));
  CHECK(f.residual < 1e-12);
  CHECK(f.within_tolerance);
  CHECK(f.ci_low <= f.slope);
  CHECK(f.ci_high >= f.slope);
  y[2] *= 1.1;
  const auto g = fit_log_log(x, y);
  CHECK(g.residual > 0.0);
  CHECK(g.ci_high - g.ci_low > 0.0);
  CHECK_THROWS_AS(fit_log_log(std::vector<double>{1.0}, std::vector<double>{1.0}), Error);
}

TEST_CASE("rescalings map the mass onto the profile mass") {
  const double wm = solve_scalar_profile(2.5, default_profile_grid()).mass;
  const double w3 = solve_scalar_profile(3.0, default_profile_grid()).mass;
  for (double a : {0.1, 1.0, 7.0}) {
    auto u = RadialField::sample(grid(), [](double r) { return std::exp(-r * r / 4.0); });
    u *= a / std::sqrt(mass_sq(u));
    CHECK(std::sqrt(mass_sq(rescale_to_profile(u, 2.5, 1.3, a, wm))) == doctest::Approx(wm).epsilon(1e-8));
    CHECK(std::sqrt(mass_sq(rescale_to_profile(u, 3.5, 0.7, a, wm))) == doctest::Approx(wm).epsilon(1e-8));
    if (a < w3) CHECK(std::sqrt(mass_sq(rescale_p3(u, 1.0, a, w3))) == doctest::Approx(w3).epsilon(1e-8));
  }
  auto u = RadialField::sample(grid(), [](double r) { return std::exp(-r); });
  CHECK_THROWS_AS(rescale_p3(u, 1.0, 2.0 * w3, w3), Error);
}

TEST_CASE("gradient distance is dilation invariant") {
  const auto other = build_grid(40.0, 1500, Mapping::graded, 1.0);
  const auto u = RadialField::sample(other, [](double r) { return 1.0 / (1.0 + r * r) * std::exp(-0.1 * r); });
  const auto v = bubble(1.3, grid());
  const double d0 = d12_distance(u, v);
  CHECK(d0 > 0.0);
  for (double s : {-1.0, 0.7, 2.0}) {
    auto dilated = [s](const RadialField& f) {
      auto g = std::make_shared<const RadialGrid>(f.grid->scaled(std::exp(-s)));
      RadialField out(g, f.values);
      out *= std::exp(s);
      return out;
    };
    CHECK(d12_distance(dilated(u), dilated(v)) == doctest::Approx(d0).epsilon(1e-6));
  }
  CHECK(h1_distance(v, v) == 0.0);
}

TEST_CASE("decay constant of an exact bubble is 2 sqrt 2") {
  CHECK(decay_constant(bubble(1.0, grid()), 1.0) == doctest::Approx(2.0 * std::numbers::sqrt2).epsilon(1e-12));
  CHECK(decay_constant(bubble(0.01, grid()), 0.01) == doctest::Approx(2.0 * std::numbers::sqrt2).epsilon(1e-12));
}

TEST_CASE("small-mass ground states approach the rescaled profile") {
  const auto path = halving_path(params(2.5, 4.0), 5);
  const auto rep = ground_limit_check(sweep(path, SweepMode::ground), LimitMode::small_mass);
  REQUIRE(rep.sequence.size() == 6);
  CHECK(rep.regime == Regime::small_mass_ground);
  CHECK(rep.distances_decreasing);
  CHECK(rep.distances.back() <= 5e-2);
  CHECK(rep.verdict == "converging");
  for (const auto& f : rep.fitted_rates) CHECK_MESSAGE(f.within_tolerance, f.name);
  for (double d : rep.distances) CHECK((std::isfinite(d) && d >= 0.0));

  SUBCASE("ground states are not bubbles") {
    try {
      (void)bubble_fit(rep.sequence.front().result, path.front());
      FAIL("expected fit_not_applicable");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::fit_not_applicable);
    }
  }
}

TEST_CASE("small-mass mountain-pass states concentrate as bubbles") {
  const auto path = halving_path(params(2.5, 4.0), 5);
  const auto prm = path.front();
  const auto rep = bubble_limit_check(sweep(path, SweepMode::mountain_pass));
  REQUIRE(rep.sequence.size() == 6);
  CHECK(rep.notices.empty());
  CHECK(rep.gaps_decreasing);
  const auto cc = coupled_constants(prm);
  const double level = cc.S_coupled * cc.S_coupled / 4.0;
  CHECK(rep.limit_energy_gap.back() <= 0.05 * level);
  CHECK(rep.sequence.back().bubble->k_check <= 0.05);
  REQUIRE(rep.decay_stable.has_value());
  CHECK(*rep.decay_stable);
  CHECK(rep.sequence.back().decay->constant_u ==
        doctest::Approx(2.0 * std::numbers::sqrt2 * std::sqrt(cc.k1)).epsilon(0.05));
  CHECK(rep.distances_decreasing);
}

TEST_CASE("symmetric data gives identical components") {
  auto prm = params(2.5, 0.5);
  prm.mu2 = prm.mu1;
  const auto r = solve_mountain_pass(prm);
  REQUIRE(r.converged);
  const auto fit = bubble_fit(r, prm);
  CHECK(fit.center_ratio == doctest::Approx(1.0).epsilon(1e-6));
  double worst = 0.0, top = 0.0;
  for (std::size_t i = 0; i < r.pair.u.size(); ++i) {
    worst = std::max(worst, std::abs(r.pair.u[i] - r.pair.v[i]));
    top = std::max(top, std::abs(r.pair.u[i]));
  }
  CHECK(worst <= 1e-6 * top);
}

TEST_CASE("large-mass critical branch approaches the rescaled profile") {
  std::vector<ModelParams> path;
  for (double a = 128.0; a <= 4096.0; a *= 2.0) path.push_back(params(3.5, a));
  SolverOptions opt;
  opt.continuation = true;
  const auto rep = ground_limit_check(sweep(path, SweepMode::mountain_pass, opt), LimitMode::large_mass);
  REQUIRE(rep.sequence.size() == 6);
  CHECK(rep.regime == Regime::large_mass);
  CHECK(rep.distances_decreasing);
  const auto lam = std::find_if(rep.fitted_rates.begin(), rep.fitted_rates.end(),
                                [](const RateFit& f) { return f.name == "lambda1"; });
  REQUIRE(lam != rep.fitted_rates.end());
  CHECK(lam->within_tolerance);
}

TEST_CASE("p = 3 states near the mass threshold approach a w_3 pair") {
  const double w3 = solve_scalar_profile(3.0, default_profile_grid()).mass;
  std::vector<ModelParams> path;
  for (int k = 1; k <= 5; ++k) path.push_back(params(3.0, w3 * (1.0 - std::ldexp(1.0, -k))));
  const auto rep = ground_limit_check(sweep(path, SweepMode::mountain_pass), LimitMode::p3_threshold);
  REQUIRE(rep.sequence.size() == 5);
  CHECK(rep.distances_decreasing);
  for (const auto& s : rep.sequence) {
    REQUIRE(s.nu1.has_value());
    CHECK(*s.nu1 > 0.0);
    CHECK(*s.nu2 > 0.0);
  }
}
