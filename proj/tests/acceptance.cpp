// End-to-end acceptance run. One PASS/FAIL line per criterion; the exit code
// is the number of failures.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <functional>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include <boost/math/quadrature/exp_sinh.hpp>
#include <fmt/format.h>

#include "normcrit/asymptotics.hpp"
#include "normcrit/errors.hpp"
#include "normcrit/fiber.hpp"
#include "normcrit/profiles.hpp"
#include "normcrit/solvers.hpp"

using namespace normcrit;

namespace {

constexpr double pi = std::numbers::pi;

// Tolerances.
constexpr double kSobolevTol = 5e-3;
constexpr double kSobolevSeconds = 1.0;
constexpr double kGnTol = 5e-3;
constexpr double kGnSeconds = 5.0;
constexpr double kClosedFormTol = 2e-2;
constexpr double kClosedFormSeconds = 60.0;
constexpr double kClosedFormMu = 1e-4;
constexpr int kFiberPairs = 50;
constexpr double kFiberSeconds = 30.0;
constexpr double kPohozaevTol = 1e-6;
constexpr double kMassTol = 1e-10;
constexpr double kIdentityTol = 1e-5;
constexpr double kOrderingSeconds = 600.0;
constexpr double kGroundFinal = 5e-2;
constexpr double kSlopeTol = 0.15;
constexpr double kGroundSeconds = 1200.0;
constexpr double kGapFraction = 0.05;
constexpr double kRatioTol = 0.05;
constexpr double kDecayFactor = 2.0;
constexpr double kThresholdFraction = 1e-2;
constexpr double kThresholdSeconds = 600.0;
constexpr std::size_t kProbeIterations = 200000;

struct Line {
  int id;
  bool pass;
  std::string text;
};

std::vector<Line> lines;
std::vector<std::pair<SolveResult, ModelParams>> converged;  // for the certificate audit

void report(int id, bool pass, const std::string& text) {
  lines.push_back({id, pass, text});
  fmt::print("criterion {:>2}: {}  {}\n", id, pass ? "PASS" : "FAIL", text);
  std::fflush(stdout);
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

void keep(const SolveResult& r, const ModelParams& prm) {
  if (r.converged) converged.emplace_back(r, prm);
}

ModelParams base(double p, double a) {
  ModelParams prm;
  prm.mu1 = 1.0;
  prm.mu2 = 1.5;
  prm.beta = 3.0;
  prm.p = p;
  prm.a1 = prm.a2 = a;
  return prm;
}

double level(const ModelParams& prm) {
  const auto cc = coupled_constants(prm);
  return cc.S_coupled * cc.S_coupled / 4.0;
}

void sobolev() {
  const auto t0 = std::chrono::steady_clock::now();
  const double S = sobolev_constant();
  const double dt = seconds_since(t0);
  // quadrature of |U_1|^4 over R^4
  boost::math::quadrature::exp_sinh<double> integrator;
  // r^3 U^4 = 64 t^3 / (1 + r^2), t = r / (1 + r^2), finite for every r
  const double oracle = integrator.integrate([](double r) {
    const double q = 1.0 + r * r, t = r / q;
    return 2.0 * pi * pi * 64.0 * t * t * t / q;
  });
  const double closed = 32.0 * pi * pi / 3.0;
  const double err = std::abs(S * S - oracle) / oracle;
  report(1, err <= kSobolevTol && dt < kSobolevSeconds && std::abs(oracle - closed) <= 1e-10 * closed,
         fmt::format("Sobolev S^2 = {:.8f}, quadrature {:.8f} (32 pi^2/3 = {:.8f}), rel err {:.2e}, {:.3f} s",
                     S * S, oracle, closed, err, dt));
}

// Independent shooting for w_3: fixed-step RK4 from a series start at r = h,
// bisection on w(0); returns ||w_3||_2.
double shooting_mass_p3() {
  const double h = 5e-4;
  auto shoot = [h](double b, double* mass_sq) {
    double r = h, w = b + (b - b * b) / 8.0 * h * h, dw = (b - b * b) / 4.0 * h, m = 0.0;
    auto f = [](double rr, double y, double dy) { return -3.0 / rr * dy + y - std::abs(y) * y; };
    while (r < 40.0) {
      const double k1 = f(r, w, dw);
      const double k2 = f(r + h / 2, w + h / 2 * dw, dw + h / 2 * k1);
      const double k3 = f(r + h / 2, w + h / 2 * (dw + h / 2 * k1), dw + h / 2 * k2);
      const double k4 = f(r + h, w + h * (dw + h / 2 * k2), dw + h * k3);
      const double w_new = w + h * dw + h * h / 6 * (k1 + k2 + k3);
      const double dw_new = dw + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4);
      m += pi * pi * h * (w * w * r * r * r + w_new * w_new * (r + h) * (r + h) * (r + h));
      w = w_new;
      dw = dw_new;
      r += h;
      if (w < 0.0) return 1;
      if (dw > 0.0 || (mass_sq && w < 1e-7 * b)) break;
    }
    if (mass_sq) *mass_sq = m;
    return -1;
  };
  double lo = 1.0, hi = 2.0;
  while (shoot(hi, nullptr) < 0) hi *= 2.0;
  for (int i = 0; i < 60; ++i) {
    const double mid = 0.5 * (lo + hi);
    (shoot(mid, nullptr) > 0 ? hi : lo) = mid;
  }
  double m = 0.0;
  shoot(lo, &m);
  return std::sqrt(m);
}

void gn_p3() {
  const auto t0 = std::chrono::steady_clock::now();
  const auto w = solve_scalar_profile(3.0, default_profile_grid(), CachePolicy::bypass);
  const double C = gn_constant(w);
  const double dt = seconds_since(t0);
  const double mass = shooting_mass_p3();
  const double lhs = 1.0 / (C * C * C), rhs = 2.0 * mass / 3.0;
  const double err = std::abs(lhs - rhs) / rhs;
  report(2, err <= kGnTol && dt < kGnSeconds,
         fmt::format("p = 3: 1/C^3 = {:.8f}, (2/3)|w_3| from RK4 shooting = {:.8f}, rel err {:.2e}, {:.3f} s", lhs,
                     rhs, err, dt));
}

void closed_form() {
  const auto t0 = std::chrono::steady_clock::now();
  double worst = 0.0;
  bool ok = true;
  for (double p : {2.3, 2.5, 2.7}) {
    const double wm = solve_scalar_profile(p, default_profile_grid()).mass;
    const double K = scalar_closed_form_constant(p, 1.0, wm);
    for (double a : {0.5, 1.0, 2.0}) {
      const auto r = solve_scalar_branch(p, kClosedFormMu, 1.0, a, ScalarBranch::plus);
      ModelParams prm = base(p, a);
      prm.mu1 = kClosedFormMu;
      prm.a2 = 0.0;
      keep(r, prm);
      const double target = -K * std::pow(a, (4.0 - p) / (3.0 - p));
      const double err = std::abs(r.energy - target) / std::abs(target);
      worst = std::max(worst, err);
      ok = ok && r.converged && err <= kClosedFormTol;
    }
  }
  const double dt = seconds_since(t0);
  report(3, ok && dt < kClosedFormSeconds,
         fmt::format("scalar m+ at mu = {} vs -K a^((4-p)/(3-p)), p in {{2.3, 2.5, 2.7}}, a in {{0.5, 1, 2}}: "
                     "worst rel err {:.2e}, {:.1f} s",
                     kClosedFormMu, worst, dt));
}

// Independent count: sign changes of Psi' on a dense uniform sample.
int dense_sign_changes(const Aggregates& A, double p) {
  int n = 0;
  double prev = fiber(A, p, -60.0).dpsi;
  for (int i = 1; i <= 20000; ++i) {
    const double v = fiber(A, p, -60.0 + 120.0 * i / 20000.0).dpsi;
    if ((v > 0) != (prev > 0)) ++n;
    prev = v;
  }
  return n;
}

void fiber_geometry() {
  const auto t0 = std::chrono::steady_clock::now();
  const auto grid = build_grid(40.0, 2048, Mapping::stretched, 1.0);
  std::mt19937 rng(2024);
  std::uniform_real_distribution<double> width(0.5, 3.0), shape(-0.3, 0.3);
  int violations = 0, tested = 0, skipped = 0;
  for (double p : {2.5, 3.0, 3.5}) {
    const auto prm = base(p, 0.5);
    const std::size_t expected = p < 3.0 ? 2 : 1;
    if (p < 3.0 && !geometry_for(prm).geometry_available) ++violations;
    for (int k = 0; k < kFiberPairs; ++k) {
      const double w1 = width(rng), w2 = width(rng), c1 = shape(rng), c2 = shape(rng);
      auto u = RadialField::sample(grid, [=](double r) { return (1.0 + c1 * r) * std::exp(-r * r / (w1 * w1)); });
      auto v = RadialField::sample(grid, [=](double r) { return std::exp(-r / w2) * (1.0 + c2 * r * r); });
      const auto A = aggregates(make_pair(u, v, prm.a1, prm.a2), prm);
      if (p == 3.0 && !(A.A1 > 2.0 * (A.A3 + A.A4))) {
        ++skipped;
        continue;
      }
      ++tested;
      if (count_critical_points(A, p) != expected || dense_sign_changes(A, p) != static_cast<int>(expected))
        ++violations;
    }
  }
  const double dt = seconds_since(t0);
  report(4, violations == 0 && skipped == 0 && dt < kFiberSeconds,
         fmt::format("fiber critical points, {} pairs per regime (p = 2.5, 3, 3.5): {} tested, {} violations, "
                     "{} outside the p = 3 condition, {:.1f} s",
                     kFiberPairs, tested, violations, skipped, dt));
}

void ordering() {
  const auto t0 = std::chrono::steady_clock::now();
  const auto prm = base(2.5, 1.0);
  const auto plus = solve_local_min(prm);
  const auto minus = solve_mountain_pass(prm);
  const auto m1 = solve_scalar_branch(prm.p, prm.mu1, prm.alpha1, prm.a1, ScalarBranch::minus);
  const auto m2 = solve_scalar_branch(prm.p, prm.mu2, prm.alpha2, prm.a2, ScalarBranch::minus);
  keep(plus, prm);
  keep(minus, prm);
  const double dt = seconds_since(t0);
  const bool ok = plus.converged && minus.converged && m1.converged && m2.converged && plus.energy < 0.0 &&
                  minus.energy > 0.0 && minus.energy < plus.energy + level(prm) &&
                  minus.energy < std::min(m1.energy, m2.energy) && dt < kOrderingSeconds;
  report(6, ok,
         fmt::format("p = 2.5, a = 1, beta = 3: m+ = {:.10f} < 0 < m- = {:.10f} < m+ + level = {:.10f}; "
                     "semitrivial m- = {:.10f}, {:.10f}; {:.1f} s",
                     plus.energy, minus.energy, plus.energy + level(prm), m1.energy, m2.energy, dt));
}

bool strictly_decreasing(const std::vector<double>& x) {
  for (std::size_t i = 1; i < x.size(); ++i)
    if (!(x[i] < x[i - 1])) return false;
  return x.size() >= 2;
}

void ground_asymptotics(const std::vector<ModelParams>& path) {
  const auto t0 = std::chrono::steady_clock::now();
  const auto entries = sweep(path, SweepMode::ground);
  for (const auto& e : entries)
    if (e.result) keep(*e.result, e.params);
  const auto rep = ground_limit_check(entries, LimitMode::small_mass);
  const double dt = seconds_since(t0);
  const double expected = (path.front().p - 2.0) / (3.0 - path.front().p);
  bool slopes_ok = false;
  std::string slopes;
  for (const auto& f : rep.fitted_rates)
    if (f.name == "lambda1" || f.name == "lambda2") {
      const bool in = std::abs(f.slope - expected) <= kSlopeTol * std::abs(expected);
      slopes_ok = (slopes.empty() || slopes_ok) && in;
      slopes += fmt::format(" {} {:.4f}", f.name, f.slope);
    }
  const bool ok = rep.sequence.size() == path.size() && strictly_decreasing(rep.distances) &&
                  rep.distances.back() <= kGroundFinal && slopes_ok && dt < kGroundSeconds;
  std::string d;
  for (double x : rep.distances) d += fmt::format(" {:.3e}", x);
  report(7, ok,
         fmt::format("ground halving sweep, H1 distances{}; multiplier slopes{} (expected {:.3f}); {:.1f} s", d,
                     slopes, expected, dt));
}

void bubble_asymptotics(const std::vector<ModelParams>& path) {
  const auto t0 = std::chrono::steady_clock::now();
  const auto entries = sweep(path, SweepMode::mountain_pass);
  for (const auto& e : entries)
    if (e.result) keep(*e.result, e.params);
  const auto rep = bubble_limit_check(entries);
  const double dt = seconds_since(t0);
  const double lvl = level(path.front());
  const bool complete = rep.sequence.size() == path.size() && rep.notices.empty();
  const double ratio = complete ? rep.sequence.back().bubble->center_ratio : NAN;
  const double target = complete ? rep.sequence.back().bubble->ratio_target : NAN;
  const bool ok = complete && strictly_decreasing(rep.limit_energy_gap) &&
                  rep.limit_energy_gap.back() <= kGapFraction * lvl &&
                  std::abs(ratio / target - 1.0) <= kRatioTol && rep.decay_stable.value_or(false);
  std::string g, c;
  for (double x : rep.limit_energy_gap) g += fmt::format(" {:.4f}", x);
  for (const auto& s : rep.sequence)
    if (s.decay) c += fmt::format(" {:.4f}", s.decay->constant_u);
  report(8, ok,
         fmt::format("bubble sweep, level {:.4f}, gaps{}; center ratio {:.5f} vs {:.5f}; decay constants{} "
                     "(stable within {}x: {}); {:.1f} s",
                     lvl, g, ratio, target, c, kDecayFactor, rep.decay_stable.value_or(false), dt));
}

void threshold() {
  const auto t0 = std::chrono::steady_clock::now();
  const double wn = solve_scalar_profile(3.0, default_profile_grid()).mass;
  const auto super = base(3.0, 1.2 * wn);
  const double lvl = level(super);
  const double M = 4.0 * super.a1 / 3.0;
  std::vector<double> energies;
  bool ok = true;
  try {
    for (int n = 0; n <= 6; ++n) energies.push_back(threshold_sequence_energy(super, M, M, n).energy);
  } catch (const Error&) {
    ok = false;
  }
  ok = ok && strictly_decreasing(energies) && energies.back() < kThresholdFraction * lvl && energies.back() > 0.0;
  const auto sub = base(3.0, 0.5 * wn);
  const auto r = solve_mountain_pass(sub);
  keep(r, sub);
  const double dt = seconds_since(t0);
  ok = ok && r.converged && r.energy > 0.0 && dt < kThresholdSeconds;
  std::string e;
  for (double x : energies) e += fmt::format(" {:.4g}", x);
  report(9, ok,
         fmt::format("p = 3, a = 1.2 |w_3|: energies{} vs 1% level {:.4f}; a = 0.5 |w_3|: m- = {:.8f} ({}); {:.1f} s",
                     e, kThresholdFraction * lvl, r.energy, r.converged ? "converged" : "not converged", dt));
}

void probe() {
  const auto t0 = std::chrono::steady_clock::now();
  auto prm = base(2.5, 1.0);
  prm.alpha1 = prm.alpha2 = -1.0;
  SolverOptions opt;
  opt.max_iterations = kProbeIterations;
  const auto rep = nonexistence_probe(prm, opt);
  prm.alpha1 = prm.alpha2 = 1.0;
  const auto control = solve_mountain_pass(prm);
  keep(control, prm);
  const double dt = seconds_since(t0);
  const bool ok = rep.near_critical > 0 && rep.flag_every_near_critical && !rep.converged_positive &&
                  rep.iterations >= kProbeIterations && control.converged;
  report(10, ok,
         fmt::format("alpha = -1: {} iterations, {} near-critical samples, {} flagged, converged positive: {}; "
                     "control alpha = 1 converged: {} (m- = {:.8f}); {:.1f} s",
                     rep.iterations, rep.near_critical, rep.flagged_near_critical, rep.converged_positive,
                     control.converged, control.energy, dt));
}

// Runs last, over every converged result produced above.
void certificates() {
  std::size_t bad = 0;
  double worst_p = 0.0, worst_m = 0.0, worst_id = 0.0;
  for (const auto& [r, prm] : converged) {
    const double g = r.grad_sq();
    const double p_rel = r.pohozaev_residual / g;
    const double m_rel = r.pair.mass_error();
    double id = 0.0;
    bool positive = r.lambda1 > 0.0;
    if (!r.pair.scalar()) {
      id = sign_diagnostic(r.pair, prm).identity_gap;
      positive = positive && r.lambda2 > 0.0;
    }
    worst_p = std::max(worst_p, p_rel);
    worst_m = std::max(worst_m, m_rel);
    worst_id = std::max(worst_id, id);
    if (!(p_rel <= kPohozaevTol && m_rel <= kMassTol && positive && id <= kIdentityTol)) ++bad;
  }
  report(5, bad == 0 && !converged.empty(),
         fmt::format("{} converged results: worst |P|/|grad|^2 {:.2e}, mass error {:.2e}, identity gap {:.2e}; "
                     "{} failing",
                     converged.size(), worst_p, worst_m, worst_id, bad));
}

}  // namespace

// Optional arguments pick criteria by number.
int main(int argc, char** argv) {
  std::vector<int> only;
  for (int i = 1; i < argc; ++i) only.push_back(std::atoi(argv[i]));
  const auto path = halving_path(base(2.5, 4.0), 5);
  const std::vector<std::pair<int, std::function<void()>>> runs{
      {1, sobolev},
      {2, gn_p3},
      {3, closed_form},
      {4, fiber_geometry},
      {6, ordering},
      {7, [&] { ground_asymptotics(path); }},
      {8, [&] { bubble_asymptotics(path); }},
      {9, threshold},
      {10, probe},
      {5, certificates},
  };
  for (const auto& [id, run] : runs) {
    if (!only.empty() && std::find(only.begin(), only.end(), id) == only.end()) continue;
    try {
      run();
    } catch (const std::exception& e) {
      report(id, false, fmt::format("unexpected error: {}", e.what()));
    }
  }
  std::sort(lines.begin(), lines.end(), [](const Line& a, const Line& b) { return a.id < b.id; });
  int failures = 0;
  fmt::print("\nsummary\n");
  for (const auto& l : lines) {
    fmt::print("criterion {:>2}: {}\n", l.id, l.pass ? "PASS" : "FAIL");
    failures += l.pass ? 0 : 1;
  }
  return failures;
}
