#include <cmath>
#include <random>

#include <doctest.h>

#include "normcrit/functionals.hpp"
#include "normcrit/profiles.hpp"

using namespace normcrit;

namespace {

GridPtr grid() { return build_grid(20.0, 2048, Mapping::stretched, 1.0); }

RadialField gauss(GridPtr g, double amp, double width) {
  return RadialField::sample(g, [=](double r) { return amp * std::exp(-r * r / (width * width)); });
}

ModelParams params() {
  ModelParams prm;
  prm.mu1 = 1.0;
  prm.mu2 = 1.5;
  prm.beta = 3.0;
  prm.p = 2.5;
  prm.a1 = 0.7;
  prm.a2 = 0.4;
  return prm;
}

// Smooth perturbation vanishing at R.
RadialField bump(GridPtr g, double c) {
  const double R = g->r_max();
  return RadialField::sample(g, [=](double r) { return (1.0 + c * r) * std::exp(-r) * (1.0 - r / R); });
}

}  // namespace

TEST_CASE("make_pair normalizes onto the mass spheres") {
  auto g = grid();
  auto s = make_pair(gauss(g, 1.0, 1.3), gauss(g, 2.0, 0.8), 0.7, 0.4);
  CHECK(s.mass_error() < 1e-14);
  CHECK(mass_sq(s.u) == doctest::Approx(0.49).epsilon(1e-14));
  CHECK(mass_sq(s.v) == doctest::Approx(0.16).epsilon(1e-14));
  CHECK_FALSE(s.scalar());
}

TEST_CASE("energy splits into scalar parts and the coupling") {
  auto g = grid();
  const ModelParams prm = params();
  auto s = make_pair(gauss(g, 1.0, 1.3), gauss(g, 2.0, 0.8), prm.a1, prm.a2);
  const double split = scalar_energy(s.u, prm.p, prm.mu1, prm.alpha1) +
                       scalar_energy(s.v, prm.p, prm.mu2, prm.alpha2) - 0.5 * prm.beta * cross(s.u, s.v);
  CHECK(energy(s, prm) == doctest::Approx(split).epsilon(1e-12));
  const Aggregates A = aggregates(s, prm);
  CHECK(energy(s, prm) == doctest::Approx(0.5 * A.A1 - A.A2 - A.A3 - A.A4).epsilon(1e-13));
}

TEST_CASE("fiber map matches the energy of dilated pairs") {
  auto g = grid();
  const ModelParams prm = params();
  auto s = make_pair(gauss(g, 1.0, 1.3), gauss(g, 2.0, 0.8), prm.a1, prm.a2);
  for (double t : {-0.4, 0.0, 0.3}) {
    PairState d{dilate(s.u, t), dilate(s.v, t), s.a1, s.a2};
    CHECK(energy(d, prm) == doctest::Approx(fiber(s, prm, t).psi).epsilon(1e-6));
  }
  const Aggregates A = aggregates(s, prm);
  const double h = 1e-4;
  const auto f = fiber(A, prm.p, 0.2);
  CHECK((fiber(A, prm.p, 0.2 + h).psi - fiber(A, prm.p, 0.2 - h).psi) / (2 * h) ==
        doctest::Approx(f.dpsi).epsilon(1e-7));
  CHECK((fiber(A, prm.p, 0.2 + h).dpsi - fiber(A, prm.p, 0.2 - h).dpsi) / (2 * h) ==
        doctest::Approx(f.d2psi).epsilon(1e-7));
  CHECK(fiber(A, prm.p, 0.0).dpsi == doctest::Approx(pohozaev(s, prm)).epsilon(1e-13));
}

TEST_CASE("gradient is the derivative of the energy") {
  auto g = grid();
  const ModelParams prm = params();
  auto s = make_pair(gauss(g, 1.0, 1.3), gauss(g, 2.0, 0.8), prm.a1, prm.a2);
  auto [gu, gv] = gradient(s, prm);
  std::mt19937 rng(7);
  std::uniform_real_distribution<double> c(-0.5, 0.5);
  for (int trial = 0; trial < 3; ++trial) {
    auto pu = bump(g, c(rng));
    auto pv = bump(g, c(rng));
    const double h = 1e-5;
    PairState plus{s.u + h * pu, s.v + h * pv, s.a1, s.a2};
    PairState minus{s.u - h * pu, s.v - h * pv, s.a1, s.a2};
    const double fd = (energy(plus, prm) - energy(minus, prm)) / (2 * h);
    const double pairing = inner(gu, pu) + inner(gv, pv);
    CHECK(fd == doctest::Approx(pairing).epsilon(1e-6));
  }
}

TEST_CASE("the profile is a critical point with multiplier 1") {
  auto g = default_profile_grid();
  for (double p : {2.5, 3.0}) {
    auto w = solve_scalar_profile(p, g);
    ModelParams prm;
    prm.mu1 = 0.0;
    prm.alpha1 = 1.0;
    prm.p = p;
    PairState s{w.field, RadialField(g), w.mass, 0.0};
    CHECK(s.scalar());
    const auto m = multipliers(s, prm);
    CHECK(m.lambda1 == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(criticality_residual(s, prm) < 1e-7 * w.mass);
    const auto rep = sign_diagnostic(s, prm);
    CHECK(rep.identity_gap < 1e-8);
    CHECK_FALSE(rep.flag);
    CHECK(rep.verdict == SignVerdict::no_obstruction);
  }
}

TEST_CASE("sign diagnostic follows the sign of the perturbation") {
  auto g = grid();
  ModelParams prm = params();
  auto s = make_pair(gauss(g, 1.0, 1.3), gauss(g, 2.0, 0.8), prm.a1, prm.a2);
  prm.alpha1 = prm.alpha2 = -1.0;
  auto neg = sign_diagnostic(s, prm);
  CHECK(neg.rhs < 0.0);
  CHECK(neg.flag);
  CHECK(neg.verdict == SignVerdict::nonexistence_consistent);

  prm.alpha1 = prm.alpha2 = 1.0;
  auto pos = sign_diagnostic(s, prm);
  CHECK_FALSE(pos.flag);
  CHECK(pos.verdict == SignVerdict::no_obstruction);

  // mixed signs balanced so the right-hand side nearly cancels
  const auto n = pair_norms(s, prm.p);
  prm.alpha1 = 1.0;
  prm.alpha2 = -n.lp_u / n.lp_v;
  auto mixed = sign_diagnostic(s, prm);
  CHECK(mixed.verdict == SignVerdict::indeterminate);
}
