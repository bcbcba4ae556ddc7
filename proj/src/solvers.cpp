#include "normcrit/solvers.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <numbers>
#include <random>

#include <Eigen/SparseCholesky>
#include <boost/math/tools/roots.hpp>
#include <fmt/format.h>

#include "normcrit/errors.hpp"
#include "normcrit/fiber.hpp"
#include "normcrit/profiles.hpp"
#include "pair_system.hpp"

namespace normcrit {

using detail::Eval;
using detail::Iterate;
using detail::Model;
using detail::SpMat;
using detail::Vec;

std::string_view to_string(Branch b) noexcept {
  switch (b) {
    case Branch::ground_plus: return "ground_plus";
    case Branch::mountain_pass: return "mountain_pass";
    case Branch::scalar_plus: return "scalar_plus";
    case Branch::scalar_minus: return "scalar_minus";
  }
  return "unknown";
}

Branch branch_from_string(std::string_view name) {
  for (Branch b : {Branch::ground_plus, Branch::mountain_pass, Branch::scalar_plus, Branch::scalar_minus})
    if (to_string(b) == name) return b;
  throw Error(ErrorKind::construction, fmt::format("unknown branch '{}'", name));
}

double SolveResult::grad_sq() const {
  return normcrit::grad_sq(pair.u) + (pair.scalar() ? 0.0 : normcrit::grad_sq(pair.v));
}

namespace {

// Regrid when the decay length e^{-sqrt(lambda) r} and the box disagree.
constexpr double kBoxLow = 25.0, kBoxHigh = 400.0, kBoxTarget = 60.0;

bool ground_like(Branch b) { return b == Branch::ground_plus || b == Branch::scalar_plus; }

double min_lambda(const Model& m, const Eval& e) {
  return m.components == 2 ? std::min(e.lambda[0], e.lambda[1]) : e.lambda[0];
}

bool needs_regrid(const Model& m, const Iterate& it, const Eval& e) {
  const double l = min_lambda(m, e);
  if (!(l > 0.0)) return false;
  const double q = it.r_max() * std::sqrt(l);
  return q < kBoxLow || q > kBoxHigh;
}

Iterate regrid_for(const Model& m, const Iterate& it, const Eval& e, std::size_t nodes) {
  const double R = kBoxTarget / std::sqrt(min_lambda(m, e));
  return detail::regrid(m, it, R, detail::half_max_radius(it), nodes);
}

void project_max(const Model& m, Iterate& it) {
  const auto A = detail::aggregates_of(m, detail::norms_of(m, it));
  const auto cp = fiber_critical_points(A, m.p);
  if (!cp.t_minus)
    throw Error(ErrorKind::projection_undefined,
                fmt::format("fiber map has no maximum (A1 = {:.6g}, A3 + A4 = {:.6g})", A.A1, A.A3 + A.A4));
  detail::dilate_by(m, it, *cp.t_minus);
}

void project_min(const Model& m, Iterate& it) {
  const auto A = detail::aggregates_of(m, detail::norms_of(m, it));
  const auto cp = fiber_critical_points(A, m.p);
  if (!cp.s_plus) throw Error(ErrorKind::solver, "fiber map has no local minimum");
  detail::dilate_by(m, it, *cp.s_plus);
}

struct Flow {
  std::size_t iterations = 0;
  std::size_t regrids = 0;
  bool boundary_hit = false;
  bool stalled = false;
  bool dispersing = false;
};

// Share of the mass of the most spread-out component beyond half the box.
double outer_mass_fraction(const Model& m, const Iterate& it) {
  const auto& fs = *it.space;
  const auto r = fs.grid->r();
  const double half = 0.5 * fs.grid->r_max();
  double worst = 0.0;
  for (int c = 0; c < m.components; ++c) {
    double outer = 0.0, total = 0.0;
    for (Eigen::Index i = 0; i < fs.size(); ++i) {
      const double q = fs.w[i] * it.x[c][i] * it.x[c][i];
      total += q;
      if (r[static_cast<std::size_t>(i) + 1] > half) outer += q;
    }
    worst = std::max(worst, outer / total);
  }
  return worst;
}

// Semi-implicit normalized gradient flow: (W + tau K) y = W (x + tau (f - lambda x)).
Flow ground_flow(const Model& m, Iterate& it, double rho0_sq, const SolverOptions& opt, double rel_target,
                 std::size_t budget, double& tau, std::vector<double>& history) {
  Flow out;
  Eval e = detail::evaluate(m, it);
  Eigen::SimplicialLDLT<SpMat> ldlt;
  const detail::FreeSpace* analyzed = nullptr;
  while (out.iterations < budget) {
    if (e.rel <= rel_target) break;
    if (needs_regrid(m, it, e) && out.regrids < 20) {
      it = regrid_for(m, it, e, opt.nodes);
      e = detail::evaluate(m, it);
      ++out.regrids;
      continue;
    }
    const auto& fs = *it.space;
    const double s2 = it.sigma * it.sigma, s4 = s2 * s2;
    const Vec W = s4 * fs.w;
    SpMat A = (tau * s2) * fs.K;
    A.diagonal() += W;
    if (analyzed != &fs) {
      ldlt.analyzePattern(A);
      analyzed = &fs;
    }
    ldlt.factorize(A);
    Iterate trial = it;
    for (int c = 0; c < m.components; ++c) {
      const Vec rhs = W.array() * (it.x[c].array() + tau * (e.force[c].array() - e.lambda[c] * it.x[c].array()));
      trial.x[c] = ldlt.solve(rhs);
    }
    ++out.iterations;
    bool ok = trial.x[0].allFinite() && (m.components == 1 || trial.x[1].allFinite());
    Eval et;
    if (ok) {
      detail::normalize(m, trial);
      et = detail::evaluate(m, trial);
      ok = et.energy <= e.energy + 1e-10 * std::abs(e.energy);
    }
    if (!ok) {
      tau *= 0.5;
      if (tau < 1e-14) {
        out.stalled = true;
        break;
      }
      continue;
    }
    it = std::move(trial);
    e = std::move(et);
    history.push_back(e.energy);
    tau = std::min(tau * 1.5, 1e12);
    if (e.A.A1 >= rho0_sq) {
      out.boundary_hit = true;
      break;
    }
  }
  return out;
}

// Preconditioned descent on J(x) = max_s Psi_x(s) over the spheres; every
// trial point is moved to its fiber maximum.
Flow descent_max(const Model& m, Iterate& it, const SolverOptions& opt, double rel_target, std::size_t budget,
                 double& step, std::vector<double>& history, bool stop_on_dispersal = true) {
  Flow out;
  project_max(m, it);
  Eval e = detail::evaluate(m, it);
  Eigen::SimplicialLDLT<SpMat> ldlt;
  const detail::FreeSpace* analyzed = nullptr;
  while (out.iterations < budget) {
    if (e.rel <= rel_target) break;
    if (needs_regrid(m, it, e) && out.regrids < 20) {
      it = regrid_for(m, it, e, opt.nodes);
      project_max(m, it);
      e = detail::evaluate(m, it);
      ++out.regrids;
      continue;
    }
    const auto& fs = *it.space;
    const double s2 = it.sigma * it.sigma, s4 = s2 * s2;
    const Vec W = s4 * fs.w;
    std::array<Vec, 2> d;
    for (int c = 0; c < m.components; ++c) {
      const Vec g = detail::stiffness(m, it, c).cwiseMax(0.0);
      SpMat P = s2 * fs.K;
      P.diagonal() += (W.array() * (2.0 * g.array() + std::max(e.lambda[c], 0.0))).matrix();
      if (analyzed != &fs) {
        ldlt.analyzePattern(P);
        analyzed = &fs;
      }
      ldlt.factorize(P);
      d[c] = -ldlt.solve(e.residual[c]);
    }
    ++out.iterations;
    bool accepted = false;
    while (step >= 1e-10) {
      Iterate trial = it;
      for (int c = 0; c < m.components; ++c) trial.x[c] += step * d[c];
      try {
        detail::normalize(m, trial);
        project_max(m, trial);
      } catch (const Error&) {
        step *= 0.5;
        continue;
      }
      Eval et = detail::evaluate(m, trial);
      if (et.energy <= e.energy + 1e-12 * std::abs(e.energy)) {
        it = std::move(trial);
        e = std::move(et);
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) {
      out.stalled = true;
      step = 1.0;
      break;
    }
    history.push_back(e.energy);
    step = std::min(step * 1.5, 4.0);
    // a decaying state keeps e^{-R sqrt(lambda)} of its mass outside R/2
    if (stop_on_dispersal && out.iterations % 200 == 0 && outer_mass_fraction(m, it) > 0.25) {
      out.dispersing = true;
      break;
    }
  }
  return out;
}

SolveResult make_result(const Model& m, const Iterate& it, const Eval& e, Branch branch) {
  SolveResult r;
  r.pair = detail::to_pair(m, it);
  r.lambda1 = e.lambda[0];
  r.lambda2 = m.components == 2 ? e.lambda[1] : 0.0;
  r.energy = e.energy;
  r.pohozaev_residual = std::abs(e.pohozaev);
  r.tangent_gradient_residual = e.res;
  r.relative_residual = e.rel;
  r.branch = branch;
  return r;
}

// Empty string when the polished iterate is an acceptable critical point.
std::string check_critical(const Model& m, const Iterate& it, const Eval& e, Branch branch, double flow_energy,
                           const SolverOptions& opt) {
  const double A1 = e.A.A1;
  if (!(e.res <= opt.tolerance * (1.0 + std::sqrt(A1)) && e.rel <= 1e-8))
    return fmt::format("residual {:.3e} (relative {:.3e}) above tolerance", e.res, e.rel);
  if (!(std::abs(e.pohozaev) <= 1e-6 * (1.0 + A1)))
    return fmt::format("Pohozaev residual {:.3e}", std::abs(e.pohozaev));
  for (int c = 0; c < m.components; ++c) {
    const double top = it.x[c].cwiseAbs().maxCoeff();
    if (it.x[c].minCoeff() < -1e-8 * top) return fmt::format("component {} changes sign", c + 1);
    if (!(e.lambda[c] > 0.0)) return fmt::format("multiplier {} = {:.3e} not positive", c + 1, e.lambda[c]);
  }
  const double d2 = fiber(e.A, m.p, 0.0).d2psi;
  if (ground_like(branch)) {
    if (!(d2 > 0.0)) return "polished point is not on P+";
    if (!(e.energy < 0.0)) return "ground energy not negative";
  } else {
    if (!(d2 < 0.0)) return "polished point is not on P-";
    if (!(e.energy > 0.0)) return "mountain-pass energy not positive";
  }
  if (std::abs(e.energy - flow_energy) > 1e-2 * std::abs(flow_energy) + 1e-12)
    return fmt::format("Newton moved the energy from {:.8g} to {:.8g}", flow_energy, e.energy);
  return {};
}

SolveResult run_ground(const Model& m, Iterate it, double rho0_sq, const SolverOptions& opt, Branch branch) {
  std::vector<double> history;
  std::size_t used = 0, regrids = 0;
  double tau = opt.step;
  std::string why = "iteration budget exhausted";
  for (double target : {1e-3, 1e-5, 1e-7}) {
    const Flow f = ground_flow(m, it, rho0_sq, opt, target, opt.max_iterations - used, tau, history);
    used += f.iterations;
    regrids += f.regrids;
    if (f.boundary_hit) {
      SolveResult r = make_result(m, it, detail::evaluate(m, it), branch);
      r.boundary_hit = true;
      r.iterations = used;
      r.energy_history = std::move(history);
      r.message = "flow reached the wall |grad|^2 = rho0^2";
      return r;
    }
    const double flow_energy = detail::evaluate(m, it).energy;
    Iterate polished = it;
    const auto ni = detail::newton_polish(m, polished);
    const Eval e = detail::evaluate(m, polished);
    why = check_critical(m, polished, e, branch, flow_energy, opt);
    if (why.empty()) {
      SolveResult r = make_result(m, polished, e, branch);
      r.converged = true;
      r.iterations = used + static_cast<std::size_t>(ni.iterations);
      r.energy_history = std::move(history);
      r.message = fmt::format("converged after {} flow steps, {} regrids, {} Newton steps", used, regrids,
                              ni.iterations);
      return r;
    }
    if (used >= opt.max_iterations) break;
  }
  SolveResult r = make_result(m, it, detail::evaluate(m, it), branch);
  r.iterations = used;
  r.energy_history = std::move(history);
  r.message = "not converged: " + why;
  return r;
}

SolveResult run_max(const Model& m, Iterate it, const SolverOptions& opt, Branch branch) {
  std::vector<double> history;
  std::size_t used = 0, regrids = 0;
  double step = 1.0;
  std::string why = "iteration budget exhausted";
  if (opt.continuation) {
    project_max(m, it);
    const auto ni = detail::newton_polish(m, it, 60);
    const Eval e = detail::evaluate(m, it);
    SolveResult r = make_result(m, it, e, branch);
    why = check_critical(m, it, e, branch, e.energy, opt);
    r.converged = why.empty();
    r.iterations = static_cast<std::size_t>(ni.iterations);
    r.message = r.converged ? fmt::format("continued by {} Newton steps", ni.iterations) : "not converged: " + why;
    return r;
  }
  for (double target : {1e-4, 1e-6, 1e-8}) {
    const Flow f = descent_max(m, it, opt, target, opt.max_iterations - used, step, history);
    used += f.iterations;
    regrids += f.regrids;
    if (f.dispersing) {
      why = "a component disperses (over 25% of its mass beyond half the box)";
      break;
    }
    const double flow_energy = detail::evaluate(m, it).energy;
    Iterate polished = it;
    const auto ni = detail::newton_polish(m, polished);
    const Eval e = detail::evaluate(m, polished);
    why = check_critical(m, polished, e, branch, flow_energy, opt);
    if (why.empty()) {
      SolveResult r = make_result(m, polished, e, branch);
      r.converged = true;
      r.iterations = used + static_cast<std::size_t>(ni.iterations);
      r.energy_history = std::move(history);
      r.message = fmt::format("converged after {} descent steps, {} regrids, {} Newton steps", used, regrids,
                              ni.iterations);
      return r;
    }
    if (used >= opt.max_iterations) break;
  }
  SolveResult r = make_result(m, it, detail::evaluate(m, it), branch);
  r.iterations = used;
  r.energy_history = std::move(history);
  r.message = "not converged: " + why;
  return r;
}

Iterate gaussian_start(const Model& m, std::size_t nodes) {
  auto g = build_grid(40.0, nodes, Mapping::stretched, 1.0);
  auto u = RadialField::sample(g, [](double r) { return std::exp(-r * r); });
  PairState pair{u, m.components == 2 ? u : RadialField(g), m.a[0], m.components == 2 ? m.a[1] : 0.0};
  return detail::from_pair(m, pair);
}

std::array<double, 2> bubble_weights(const Model& m) {
  if (m.components == 1) return {1.0 / m.mu[0], 0.0};
  ModelParams prm = m.params();
  const auto cc = coupled_constants(prm);
  return {cc.k1, cc.k2};
}

// Core scale delta with delta^2 ln(1/delta) matched to the smaller mass.
double core_scale(double mass, double k) {
  const double target = mass * mass / (16.0 * std::numbers::pi * std::numbers::pi * k);
  auto f = [target](double d) { return d * d * std::log(1.0 / d) - target; };
  const double top = 0.36;
  if (f(top) >= 0.0) {
    std::uintmax_t iters = 200;
    auto tol = boost::math::tools::eps_tolerance<double>(40);
    const auto [lo, hi] = boost::math::tools::toms748_solve(f, 1e-300, top, tol, iters);
    return 0.5 * (lo + hi);
  }
  return top;
}

// Truncated bubble pair (sqrt(k1) U, sqrt(k2) U) times e^{-r}; seeds > 0
// perturb the core scale and the profile shape.
Iterate bubble_start(const Model& m, std::size_t nodes, int seed, std::mt19937_64& rng) {
  const auto k = bubble_weights(m);
  const double kmin = m.components == 2 ? std::min(k[0], k[1]) : k[0];
  const double amin = m.components == 2 ? std::min(m.a[0], m.a[1]) : m.a[0];
  double delta = core_scale(amin, kmin);
  std::uniform_real_distribution<double> U(-1.0, 1.0);
  double shape1 = 0.0, shape2 = 0.0;
  if (seed > 0) {
    delta *= std::exp(0.5 * U(rng));
    shape1 = 0.3 * U(rng);
    shape2 = 0.3 * U(rng);
  }
  auto g = build_grid(40.0, nodes, Mapping::stretched, delta);
  auto profile = [delta](double sh) {
    return [delta, sh](double r) {
      return bubble_value(delta, r) * std::exp(-r) * (1.0 + sh * (r / delta) / (1.0 + r * r / (delta * delta)));
    };
  };
  RadialField u = std::sqrt(k[0]) * RadialField::sample(g, profile(shape1));
  RadialField v = m.components == 2 ? std::sqrt(k[1]) * RadialField::sample(g, profile(shape2)) : RadialField(g);
  PairState pair{u, v, m.a[0], m.components == 2 ? m.a[1] : 0.0};
  return detail::from_pair(m, pair);
}

// Scaled ground-state pair of the mu = 0 problem, (L/alpha)^{1/(p-2)} w_p(sqrt(L) r);
// (a / ||w_3||) w_3 at p = 3.
std::optional<Iterate> profile_start(const Model& m, std::size_t nodes) {
  if (m.p < 3.0) return std::nullopt;
  for (int c = 0; c < m.components; ++c)
    if (!(m.alpha[c] > 0.0)) return std::nullopt;
  const auto w = solve_scalar_profile(m.p, default_profile_grid());
  std::array<double, 2> amp{}, L{};
  for (int c = 0; c < m.components; ++c) {
    if (m.p == 3.0) {
      L[c] = 1.0;
      amp[c] = m.a[c] / w.mass;
    } else {
      L[c] = scalar_closed_form_lambda(m.p, m.alpha[c], m.a[c], w.mass);
      amp[c] = std::pow(L[c] / m.alpha[c], 1.0 / (m.p - 2.0));
    }
  }
  const double lmin = m.components == 2 ? std::min(L[0], L[1]) : L[0];
  const double lmax = m.components == 2 ? std::max(L[0], L[1]) : L[0];
  auto g = build_grid(30.0 / std::sqrt(lmin), nodes, Mapping::stretched, 1.0 / std::sqrt(lmax));
  RadialField u = resample(w.field, g, amp[0], std::sqrt(L[0]));
  RadialField v = m.components == 2 ? resample(w.field, g, amp[1], std::sqrt(L[1])) : RadialField(g);
  return detail::from_pair(m, PairState{u, v, m.a[0], m.components == 2 ? m.a[1] : 0.0});
}

SolveResult mountain_pass_core(const Model& m, const std::optional<PairState>& init, const SolverOptions& opt,
                               Branch branch) {
  std::mt19937_64 rng(opt.seed);
  if (opt.continuation) {
    std::optional<Iterate> start = init ? std::optional<Iterate>(detail::from_pair(m, *init)) : profile_start(m, opt.nodes);
    return run_max(m, start ? std::move(*start) : bubble_start(m, opt.nodes, 0, rng), opt, branch);
  }
  std::optional<SolveResult> best;
  std::optional<SolveResult> fallback;
  int retries_left = opt.retries;
  int attempts = 0;
  std::string failures;
  // one extra start from the scaled profile when p >= 3
  const std::optional<Iterate> extra = init ? std::nullopt : profile_start(m, opt.nodes);
  const int starts = std::max(opt.seeds, 1) + (extra ? 1 : 0);
  for (int s = 0; s < starts; ++s) {
    const bool last = extra && s == starts - 1;
    Iterate start = last ? *extra
                         : (s == 0 && init) ? detail::from_pair(m, *init) : bubble_start(m, opt.nodes, s, rng);
    try {
      SolveResult r = run_max(m, std::move(start), opt, branch);
      ++attempts;
      if (r.converged) {
        if (!best || r.energy < best->energy) best = std::move(r);
      } else if (!fallback) {
        fallback = std::move(r);
      }
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::projection_undefined && e.kind() != ErrorKind::resolution) throw;
      failures += fmt::format("[seed {}: {}] ", s, e.what());
      if (retries_left-- > 0) --s, rng.discard(7);
    }
  }
  if (best) {
    best->message += fmt::format("; best of {} starts", attempts);
    return std::move(*best);
  }
  if (fallback) {
    fallback->message += failures.empty() ? "" : " " + failures;
    return std::move(*fallback);
  }
  throw Error(ErrorKind::projection_undefined, "every start failed: " + failures);
}

double profile_mass(double p) { return solve_scalar_profile(p, default_profile_grid()).mass; }

void check_mountain_pass_geometry(const ModelParams& prm) {
  if (prm.p > 2.0 && prm.p < 3.0 && prm.alpha1 > 0.0 && prm.alpha2 > 0.0) {
    const auto gc = geometry_for(prm);
    if (!gc.geometry_available)
      throw Error(ErrorKind::geometry,
                  fmt::format("T = {:.6g} > gamma1 = {:.6g}: the hypothesis T <= gamma1 fails", gc.T, gc.gamma1));
  }
  if (prm.p == 3.0) {
    const double w = profile_mass(3.0);
    if (!(prm.alpha1 * prm.a1 < w && prm.alpha2 * prm.a2 < w))
      throw Error(ErrorKind::geometry, fmt::format("alpha_i a_i must stay below ||w_3|| = {:.6g}", w));
  }
}

}  // namespace

SolveResult solve_local_min(const ModelParams& prm, const std::optional<PairState>& init,
                            const SolverOptions& opt) {
  prm.validate();
  if (!(prm.p < 3.0)) throw Error(ErrorKind::geometry, "local minimization needs 2 < p < 3");
  if (!(prm.alpha1 > 0.0 && prm.alpha2 > 0.0)) throw Error(ErrorKind::geometry, "local minimization needs alpha > 0");
  const auto gc = geometry_for(prm);
  if (!gc.geometry_available)
    throw Error(ErrorKind::geometry,
                fmt::format("T = {:.6g} > gamma1 = {:.6g}: the hypothesis T <= gamma1 fails", gc.T, gc.gamma1));
  const Model m = detail::pair_model(prm);
  Iterate it = init ? detail::from_pair(m, *init) : gaussian_start(m, opt.nodes);
  project_min(m, it);
  return run_ground(m, std::move(it), gc.rho0 * gc.rho0, opt, Branch::ground_plus);
}

SolveResult solve_mountain_pass(const ModelParams& prm, const std::optional<PairState>& init,
                                const SolverOptions& opt) {
  prm.validate();
  coupled_constants(prm);
  check_mountain_pass_geometry(prm);
  return mountain_pass_core(detail::pair_model(prm), init, opt, Branch::mountain_pass);
}

SolveResult solve_scalar_branch(double p, double mu, double alpha, double a, ScalarBranch branch,
                                const SolverOptions& opt, const std::optional<RadialField>& init) {
  if (!(p > 2.0 && p < 4.0) || !(mu > 0.0) || !(a > 0.0))
    throw Error(ErrorKind::construction, fmt::format("scalar problem needs 2 < p < 4, mu > 0, a > 0"));
  const Model m = detail::scalar_model(p, mu, alpha, a);
  std::optional<PairState> start;
  if (init) start = PairState{*init, RadialField(init->grid), a, 0.0};
  if (branch == ScalarBranch::plus) {
    if (!(p < 3.0) || !(alpha > 0.0)) throw Error(ErrorKind::geometry, "plus branch needs 2 < p < 3, alpha > 0");
    const auto gc = scalar_geometry_for(p, mu, alpha, a);
    if (!gc.geometry_available)
      throw Error(ErrorKind::geometry,
                  fmt::format("alpha a^(4-p) = {:.6g} > gamma1 = {:.6g}: scalar geometry fails", gc.T, gc.gamma1));
    Iterate it = start ? detail::from_pair(m, *start) : gaussian_start(m, opt.nodes);
    project_min(m, it);
    return run_ground(m, std::move(it), gc.rho0 * gc.rho0, opt, Branch::scalar_plus);
  }
  if (p < 3.0 && alpha > 0.0 && !scalar_geometry_for(p, mu, alpha, a).geometry_available)
    throw Error(ErrorKind::geometry, "scalar geometry fails for the minus branch");
  if (p == 3.0 && !(alpha * a < profile_mass(3.0)))
    throw Error(ErrorKind::geometry, "alpha a must stay below ||w_3||");
  return mountain_pass_core(m, start, opt, Branch::scalar_minus);
}

std::vector<ModelParams> halving_path(const ModelParams& base, std::size_t steps) {
  std::vector<ModelParams> out;
  for (std::size_t k = 0; k <= steps; ++k) {
    ModelParams q = base;
    q.a1 = base.a1 * std::ldexp(1.0, -static_cast<int>(k));
    q.a2 = base.a2 * std::ldexp(1.0, -static_cast<int>(k));
    out.push_back(q);
  }
  return out;
}

std::vector<SweepEntry> sweep(std::span<const ModelParams> grid, SweepMode mode, const SolverOptions& opt,
                              bool warm, unsigned threads) {
  auto solve_one = [&](const ModelParams& prm, const std::optional<PairState>& init) {
    SweepEntry e;
    e.params = prm;
    try {
      e.result = mode == SweepMode::ground ? solve_local_min(prm, init, opt) : solve_mountain_pass(prm, init, opt);
    } catch (const Error& err) {
      e.error = err.what();
      e.error_kind = std::string(to_string(err.kind()));
    }
    return e;
  };
  std::vector<SweepEntry> out(grid.size());
  if (warm || threads <= 1) {
    std::optional<PairState> last;
    for (std::size_t i = 0; i < grid.size(); ++i) {
      out[i] = solve_one(grid[i], warm ? last : std::nullopt);
      if (out[i].result && out[i].result->converged) last = out[i].result->pair;
    }
    return out;
  }
  std::size_t next = 0;
  while (next < grid.size()) {
    std::vector<std::future<SweepEntry>> batch;
    for (unsigned t = 0; t < threads && next < grid.size(); ++t, ++next)
      batch.push_back(std::async(std::launch::async, solve_one, std::cref(grid[next]), std::nullopt));
    const std::size_t first = next - batch.size();
    for (std::size_t j = 0; j < batch.size(); ++j) out[first + j] = batch[j].get();
  }
  return out;
}

}  // namespace normcrit

namespace normcrit {

namespace {

// ||grad u||^2 ||u||_2 / ||u||_3^3
double gn3_ratio(const RadialField& u) { return grad_sq(u) * std::sqrt(mass_sq(u)) / lq(u, 3.0); }

// w_3 (1 + c sin^2(3r)) with c >= 0 chosen so the ratio equals M; the
// ratio rises from the sharp value as the ripple grows.
RadialField with_ratio(const RadialField& w, double M) {
  const double base = gn3_ratio(w);
  if (M < base * (1.0 - 1e-12))
    throw Error(ErrorKind::infeasible, fmt::format("GN ratio {:.10g} below the sharp value {:.10g}", M, base));
  if (M <= base) return w;
  auto ripple = RadialField::sample(w.grid, [](double r) { return std::sin(3.0 * r) * std::sin(3.0 * r); });
  for (std::size_t i = 0; i < ripple.size(); ++i) ripple[i] *= w[i];
  auto field = [&](double c) { return w + c * ripple; };
  auto f = [&](double c) { return gn3_ratio(field(c)) - M; };
  double lo = 0.0, hi = 1e-3, prev = base - M;
  for (double v = f(hi); v < 0.0; v = f(hi)) {
    if (v <= prev || hi > 1e6)
      throw Error(ErrorKind::infeasible, fmt::format("GN ratio {:.6g} out of reach of the family", M));
    prev = v;
    lo = hi;
    hi *= 2.0;
  }
  std::uintmax_t iters = 200;
  const auto [a, b] =
      boost::math::tools::toms748_solve(f, lo, hi, boost::math::tools::eps_tolerance<double>(50), iters);
  return field(0.5 * (a + b));
}

// A u(B r) with ||.||_2 = a and ||.||_3 = 1, carried exactly on a scaled grid.
RadialField unit_cubic(const RadialField& u, double a) {
  const double m = mass_sq(u), l3 = lq(u, 3.0);
  const double A = m / (a * a * l3);
  const double B = std::pow(A * A * m / (a * a), 0.25);
  auto g = std::make_shared<const RadialGrid>(u.grid->scaled(1.0 / B));
  RadialField out(g, u.values);
  out *= A;
  return out;
}

}  // namespace

ThresholdPoint threshold_sequence_energy(const ModelParams& prm, double M1, double M2, int n) {
  if (prm.p != 3.0) throw Error(ErrorKind::construction, "threshold sequences need p = 3");
  if (n < 0) throw Error(ErrorKind::construction, "sequence index must be non-negative");
  const auto w = solve_scalar_profile(3.0, default_profile_grid());
  const double sharp = gn3_ratio(w.field);
  ThresholdPoint pt;
  pt.limit_u = std::max(2.0 * prm.alpha1 * prm.a1 / 3.0, sharp);
  pt.limit_v = std::max(2.0 * prm.alpha2 * prm.a2 / 3.0, sharp);
  const double scale = std::ldexp(1.0, -n);
  const double Mu = pt.limit_u + (M1 - pt.limit_u) * scale;
  const double Mv = pt.limit_v + (M2 - pt.limit_v) * scale;
  const RadialField u = unit_cubic(with_ratio(w.field, Mu), prm.a1);
  const RadialField v = unit_cubic(with_ratio(w.field, Mv), prm.a2);
  pt.ratio_u = gn3_ratio(u);
  pt.ratio_v = gn3_ratio(v);
  const RadialField v_on_u = u.grid->same_as(*v.grid) ? RadialField(u.grid, v.values) : resample(v, u.grid);
  Aggregates A;
  A.A1 = grad_sq(u) + grad_sq(v);
  A.A2 = 0.25 * (prm.mu1 * lq(u, 4.0) + prm.mu2 * lq(v, 4.0) + 2.0 * prm.beta * cross(u, v_on_u));
  A.A3 = prm.alpha1 / 3.0 * lq(u, 3.0);
  A.A4 = prm.alpha2 / 3.0 * lq(v, 3.0);
  const auto cp = fiber_critical_points(A, 3.0);
  if (!cp.t_minus || !(A.A1 - 2.0 * (A.A3 + A.A4) > 1e-12 * A.A1))
    throw Error(ErrorKind::projection_undefined,
                fmt::format("|grad|^2 = {:.10g} does not exceed 2/3 sum alpha_i |.|_3^3 = {:.10g}", A.A1,
                            2.0 * (A.A3 + A.A4)));
  pt.energy = fiber(A, 3.0, *cp.t_minus).psi;
  return pt;
}

ProbeReport nonexistence_probe(const ModelParams& prm, const SolverOptions& opt) {
  constexpr double kNearCritical = 1e-2;
  ProbeReport rep;
  const Model m = detail::pair_model(prm);
  std::mt19937_64 rng(opt.seed);
  double step = 1.0;
  std::vector<double> history;
  const std::size_t chunk = 100;
  try {
    Iterate it = bubble_start(m, opt.nodes, 0, rng);
    rep.stop_reason = "iteration budget exhausted";
    while (rep.iterations < opt.max_iterations) {
      const Flow f = descent_max(m, it, opt, 0.0, std::min(chunk, opt.max_iterations - rep.iterations), step, history, false);
      rep.iterations += f.iterations;
      const Eval e = detail::evaluate(m, it);
      rep.residual_history.push_back(e.rel);
      rep.energy_history.push_back(e.energy);
      rep.spreading.push_back(outer_mass_fraction(m, it));
      rep.last_sign = sign_diagnostic(detail::to_pair(m, it), prm);
      if (e.rel < kNearCritical) {
        ++rep.near_critical;
        if (rep.last_sign.flag) ++rep.flagged_near_critical;
      }
      if (e.rel < kNearCritical && rep.residual_history.size() % 20 == 1) {
        Iterate polished = it;
        detail::newton_polish(m, polished);
        const Eval ep = detail::evaluate(m, polished);
        if (check_critical(m, polished, ep, Branch::mountain_pass, e.energy, opt).empty()) {
          rep.converged_positive = true;
          rep.stop_reason = "converged to a positive critical point";
          break;
        }
      }
      if (f.stalled) {
        rep.stop_reason = "descent stalled";
        break;
      }
      if (f.iterations == 0) {
        rep.stop_reason = "residual vanished";
        break;
      }
    }
  } catch (const Error& e) {
    rep.stop_reason = fmt::format("{} error: {}", to_string(e.kind()), e.what());
  }
  rep.flag_every_near_critical = rep.flagged_near_critical == rep.near_critical;
  const std::size_t k = rep.spreading.size();
  rep.spreading_monotone_tail = k >= 2;
  for (std::size_t i = k / 2 + 1; i < k; ++i)
    if (rep.spreading[i] < rep.spreading[i - 1]) rep.spreading_monotone_tail = false;
  return rep;
}

}  // namespace normcrit
