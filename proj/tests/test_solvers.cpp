#include <algorithm>
#include <cmath>

#include <doctest.h>

#include "normcrit/errors.hpp"
#include "normcrit/fiber.hpp"
#include "normcrit/profiles.hpp"
#include "normcrit/solvers.hpp"

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

double bubble_level(const ModelParams& prm) {
  const auto cc = coupled_constants(prm);
  return cc.S_coupled * cc.S_coupled / 4.0;
}

void check_certificates(const SolveResult& r, const ModelParams& prm) {
  REQUIRE(r.converged);
  const double g = r.grad_sq();
  CHECK(r.pohozaev_residual <= 1e-6 * (1.0 + g));
  CHECK(r.pair.mass_error() <= 1e-10);
  CHECK(r.lambda1 > 0.0);
  if (!r.pair.scalar()) CHECK(r.lambda2 > 0.0);
  CHECK(r.tangent_gradient_residual <= 1e-8 * (1.0 + std::sqrt(g)));
  if (!r.pair.scalar()) CHECK(sign_diagnostic(r.pair, prm).identity_gap <= 1e-5);
  const auto mult = multipliers(r.pair, prm);
  CHECK(mult.lambda1 == doctest::Approx(r.lambda1).epsilon(1e-6));
  const auto u = r.pair.u.values;
  CHECK(*std::min_element(u.begin(), u.end()) >= -1e-8 * *std::max_element(u.begin(), u.end()));
}

}  // namespace

TEST_CASE("branch names round trip") {
  for (Branch b : {Branch::ground_plus, Branch::mountain_pass, Branch::scalar_plus, Branch::scalar_minus})
    CHECK(branch_from_string(to_string(b)) == b);
  CHECK_THROWS_AS(branch_from_string("saddle"), Error);
}

TEST_CASE("ground and mountain-pass levels are ordered") {
  const auto prm = params(2.5, 1.0);
  const auto plus = solve_local_min(prm);
  const auto minus = solve_mountain_pass(prm);
  check_certificates(plus, prm);
  check_certificates(minus, prm);
  CHECK(plus.branch == Branch::ground_plus);
  CHECK(minus.branch == Branch::mountain_pass);
  CHECK_FALSE(plus.boundary_hit);
  CHECK(plus.energy < 0.0);
  CHECK(minus.energy > 0.0);
  CHECK(minus.energy < plus.energy + bubble_level(prm));
  CHECK(classify(plus.pair, prm).label == FiberLabel::Pplus);
  CHECK(classify(minus.pair, prm).label == FiberLabel::Pminus);

  // energy below -K a^{(4-p)/(3-p)} for each component
  const double wm = solve_scalar_profile(2.5, default_profile_grid()).mass;
  const double K = scalar_closed_form_constant(2.5, 1.0, wm);
  CHECK(plus.energy < -K * std::pow(1.0, 3.0));

  SUBCASE("accepted flow steps never raise the energy") {
    const auto& h = plus.energy_history;
    REQUIRE(h.size() > 2);
    for (std::size_t i = 1; i < h.size(); ++i) CHECK(h[i] <= h[i - 1] + 1e-10 * std::abs(h[i - 1]));
  }
  SUBCASE("coupled levels sit below the semitrivial ones") {
    const auto m1 = solve_scalar_branch(prm.p, prm.mu1, prm.alpha1, prm.a1, ScalarBranch::minus);
    const auto m2 = solve_scalar_branch(prm.p, prm.mu2, prm.alpha2, prm.a2, ScalarBranch::minus);
    REQUIRE(m1.converged);
    REQUIRE(m2.converged);
    CHECK(minus.energy < std::min(m1.energy, m2.energy));
    const auto p1 = solve_scalar_branch(prm.p, prm.mu1, prm.alpha1, prm.a1, ScalarBranch::plus);
    const auto p2 = solve_scalar_branch(prm.p, prm.mu2, prm.alpha2, prm.a2, ScalarBranch::plus);
    CHECK(plus.energy < std::min(p1.energy, p2.energy));
    CHECK(std::min(p1.energy, p2.energy) < 0.0);
  }
}

TEST_CASE("scalar ground level approaches the closed form as mu vanishes") {
  const double wm = solve_scalar_profile(2.5, default_profile_grid()).mass;
  const double K = scalar_closed_form_constant(2.5, 1.0, wm);
  for (double a : {0.5, 1.0, 2.0}) {
    const auto r = solve_scalar_branch(2.5, 1e-4, 1.0, a, ScalarBranch::plus);
    REQUIRE(r.converged);
    CHECK(r.pair.scalar());
    const double closed = -K * std::pow(a, 3.0);
    CHECK(std::abs(r.energy - closed) <= 0.02 * std::abs(closed));
    CHECK(r.lambda1 == doctest::Approx(scalar_closed_form_lambda(2.5, 1.0, a, wm)).epsilon(0.02));
  }
}

TEST_CASE("scalar ground level decreases with mass") {
  double prev = 0.0;
  for (double a : {0.25, 0.5, 1.0, 1.5, 2.0}) {
    const auto r = solve_scalar_branch(2.5, 1.0, 1.0, a, ScalarBranch::plus);
    REQUIRE(r.converged);
    CHECK(r.energy < prev);
    prev = r.energy;
  }
}

TEST_CASE("geometry refusals name the violated inequality") {
  auto prm = params(2.5, 60.0);
  try {
    (void)solve_local_min(prm);
    FAIL("expected a geometry error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::geometry);
    CHECK(std::string(e.what()).find("T <= gamma1") != std::string::npos);
  }
  CHECK_THROWS_AS((void)solve_local_min(params(3.5, 1.0)), Error);
  auto bad = params(2.5, 1.0);
  bad.beta = 1.2;
  try {
    (void)solve_mountain_pass(bad);
    FAIL("expected an admissibility error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::admissibility);
  }
}

TEST_CASE("sweeps record failures and keep going") {
  std::vector<ModelParams> grid;
  for (double beta : {0.5, 1.2, 3.0}) {
    auto prm = params(2.5, 1.0);
    prm.beta = beta;
    grid.push_back(prm);
  }
  const auto out = sweep(grid, SweepMode::ground);
  REQUIRE(out.size() == 3);
  CHECK(out[0].result.has_value());
  CHECK_FALSE(out[1].result.has_value());
  CHECK(out[1].error_kind == "admissibility");
  CHECK(out[2].result.has_value());
  CHECK(out[2].params.beta == 3.0);
}

TEST_CASE("halving path and warm starts") {
  const auto path = halving_path(params(2.5, 2.0), 6);
  REQUIRE(path.size() == 7);
  CHECK(path.back().a1 == doctest::Approx(2.0 / 64.0));
  CHECK(path.back().a2 == doctest::Approx(2.0 / 64.0));

  const auto warm = sweep(path, SweepMode::ground, {}, true);
  const auto cold = sweep(path, SweepMode::ground, {}, false);
  std::size_t fewer = 0;
  for (std::size_t i = 1; i < path.size(); ++i) {
    REQUIRE(warm[i].result);
    REQUIRE(cold[i].result);
    CHECK(warm[i].result->energy == doctest::Approx(cold[i].result->energy).epsilon(1e-6));
    if (warm[i].result->iterations < cold[i].result->iterations) ++fewer;
  }
  CHECK(fewer * 5 >= (path.size() - 1) * 4);

  const auto threaded = sweep(path, SweepMode::ground, {}, false, 2);
  for (std::size_t i = 0; i < path.size(); ++i) CHECK(threaded[i].result->energy == cold[i].result->energy);
}

TEST_CASE("p = 3 threshold sequences") {
  const double wn = solve_scalar_profile(3.0, default_profile_grid()).mass;
  auto prm = params(3.0, 1.2 * wn);
  const double level = bubble_level(prm);
  const double sharp = 2.0 * wn / 3.0;

  SUBCASE("supercritical masses drive the level to zero") {
    const double M = 2.0 * 2.0 * prm.a1 / 3.0;
    double prev = INFINITY;
    for (int n = 0; n <= 5; ++n) {
      const auto pt = threshold_sequence_energy(prm, M, M, n);
      CHECK(pt.energy > 0.0);
      CHECK(pt.energy < prev);
      CHECK(pt.ratio_u == doctest::Approx(pt.limit_u + (M - pt.limit_u) * std::ldexp(1.0, -n)).epsilon(1e-8));
      prev = pt.energy;
    }
    CHECK(prev < 1e-2 * level);
  }
  SUBCASE("subcritical masses keep a positive floor") {
    prm.a1 = prm.a2 = 0.8 * wn / prm.alpha1;
    CHECK(threshold_sequence_energy(prm, 2.0 * sharp, 2.0 * sharp, 0).limit_u == doctest::Approx(sharp).epsilon(1e-3));
    double floor = INFINITY;
    for (int n = 0; n <= 10; ++n) floor = std::min(floor, threshold_sequence_energy(prm, 2.0 * sharp, 2.0 * sharp, n).energy);
    CHECK(floor > 0.02 * level);
  }
  SUBCASE("equality in the sharp inequality has no fiber maximum") {
    prm.a1 = prm.a2 = wn;
    try {
      (void)threshold_sequence_energy(prm, sharp, sharp, 0);
      FAIL("expected projection_undefined");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::projection_undefined);
    }
  }
  SUBCASE("ratios below the sharp constant are infeasible") {
    try {
      (void)threshold_sequence_energy(params(3.0, 0.5 * wn), 0.9 * sharp, sharp, 0);
      FAIL("expected infeasible");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::infeasible);
    }
  }
  CHECK_THROWS_AS((void)threshold_sequence_energy(params(2.5, 1.0), 20.0, 20.0, 0), Error);
}

TEST_CASE("negative alpha probe flags every near-critical sample") {
  auto prm = params(2.5, 1.0);
  prm.alpha1 = prm.alpha2 = -1.0;
  SolverOptions opt;
  opt.max_iterations = 3000;
  const auto rep = nonexistence_probe(prm, opt);
  CHECK(rep.heuristic);
  CHECK(rep.iterations > 0);
  CHECK(rep.near_critical > 0);
  CHECK(rep.flag_every_near_critical);
  CHECK_FALSE(rep.converged_positive);
  CHECK(rep.spreading_monotone_tail);
  CHECK(rep.last_sign.verdict == SignVerdict::nonexistence_consistent);
  CHECK(rep.residual_history.size() == rep.spreading.size());

  prm.alpha1 = prm.alpha2 = 1.0;
  const auto control = solve_mountain_pass(prm, {}, opt);
  CHECK(control.converged);
}
