#include "normcrit/asymptotics.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <boost/math/distributions/students_t.hpp>
#include <boost/math/tools/minima.hpp>
#include <fmt/format.h>

#include "normcrit/errors.hpp"
#include "normcrit/profiles.hpp"

namespace normcrit {

std::string_view to_string(Regime r) noexcept {
  switch (r) {
    case Regime::small_mass_ground: return "small_mass_ground";
    case Regime::small_mass_mp: return "small_mass_mp";
    case Regime::p3_threshold: return "p3_threshold";
    case Regime::large_mass: return "large_mass";
  }
  return "unknown";
}

Regime regime_from_string(std::string_view name) {
  for (Regime r : {Regime::small_mass_ground, Regime::small_mass_mp, Regime::p3_threshold, Regime::large_mass})
    if (to_string(r) == name) return r;
  throw Error(ErrorKind::construction, fmt::format("unknown regime '{}'", name));
}

RateFit fit_log_log(std::span<const double> x, std::span<const double> y, std::string name, double expected) {
  if (x.size() != y.size() || x.size() < 2)
    throw Error(ErrorKind::contract, "a rate fit needs at least two paired samples");
  const std::size_t n = x.size();
  std::vector<double> lx(n), ly(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (!(x[i] > 0.0) || !(y[i] > 0.0)) throw Error(ErrorKind::contract, "rate fits need positive samples");
    lx[i] = std::log(x[i]);
    ly[i] = std::log(y[i]);
  }
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < n; ++i) mx += lx[i], my += ly[i];
  mx /= static_cast<double>(n);
  my /= static_cast<double>(n);
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sxx += (lx[i] - mx) * (lx[i] - mx);
    sxy += (lx[i] - mx) * (ly[i] - my);
  }
  RateFit f;
  f.name = std::move(name);
  f.expected = expected;
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  double ss = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double r = ly[i] - f.intercept - f.slope * lx[i];
    ss += r * r;
  }
  f.residual = std::sqrt(ss / static_cast<double>(n));
  if (n > 2) {
    f.slope_stderr = std::sqrt(ss / static_cast<double>(n - 2) / sxx);
    const boost::math::students_t dist(static_cast<double>(n - 2));
    const double t = boost::math::quantile(boost::math::complement(dist, 0.025));
    f.ci_low = f.slope - t * f.slope_stderr;
    f.ci_high = f.slope + t * f.slope_stderr;
  } else {
    f.ci_low = f.ci_high = f.slope;
  }
  f.within_tolerance = std::abs(f.slope - expected) <= 0.15 * std::abs(expected);
  return f;
}

RadialField rescale_to_profile(const RadialField& u, double p, double alpha, double a, double w_mass) {
  const double L = scalar_closed_form_lambda(p, alpha, a, w_mass);
  auto g = std::make_shared<const RadialGrid>(u.grid->scaled(std::sqrt(L)));
  RadialField out(g, u.values);
  out *= std::pow(alpha / L, 1.0 / (p - 2.0));
  return out;
}

RadialField rescale_p3(const RadialField& u, double alpha, double a, double w_mass) {
  const double gap = 1.0 - alpha * a / w_mass;
  if (!(gap > 0.0)) throw Error(ErrorKind::contract, "the p = 3 rescaling needs alpha a < ||w_3||");
  const double r = 1.0 / std::sqrt(gap);
  const double c = a / w_mass;
  auto g = std::make_shared<const RadialGrid>(u.grid->scaled(1.0 / (c * r)));
  RadialField out(g, u.values);
  out *= c * r * r;
  return out;
}

namespace {

RadialField on_grid_of(const RadialField& u, const RadialField& ref) {
  return u.grid->same_as(*ref.grid) ? RadialField(ref.grid, u.values) : resample(u, ref.grid);
}

double center(const RadialField& u) { return u.grid->origin_value(u.span()); }

struct H1Parts {
  double diff = 0.0, ref = 0.0;
};

H1Parts h1_parts(const RadialField& u, const RadialField& ref) {
  const RadialField d = on_grid_of(u, ref) - ref;
  return {grad_sq(d) + mass_sq(d), grad_sq(ref) + mass_sq(ref)};
}

bool strictly_decreasing(const std::vector<double>& v) {
  for (std::size_t i = 1; i < v.size(); ++i)
    if (!(v[i] < v[i - 1])) return false;
  return v.size() >= 2;
}

std::string trend_verdict(const std::vector<double>& d, double tol) {
  if (d.size() < 4) return "insufficient_data";
  if (!strictly_decreasing(d)) return "not_monotone";
  return d.back() <= tol ? "converging" : "decreasing_above_tolerance";
}

}  // namespace

double d12_distance(const RadialField& u, const RadialField& v) {
  return std::sqrt(grad_sq(on_grid_of(u, v) - v) / grad_sq(v));
}

double h1_distance(const RadialField& u, const RadialField& ref) {
  const auto p = h1_parts(u, ref);
  return std::sqrt(p.diff / p.ref);
}

BubbleFit bubble_fit(const SolveResult& result, const ModelParams& prm) {
  const bool scalar = result.pair.scalar();
  double k1 = 1.0 / prm.mu1, k2 = 0.0;
  if (!scalar) {
    const auto cc = coupled_constants(prm);
    k1 = cc.k1;
    k2 = cc.k2;
  }
  const double S2 = sobolev_constant() * sobolev_constant();
  const double u0 = center(result.pair.u);
  if (!(u0 > 0.0) || result.grad_sq() < 0.5 * (k1 + k2) * S2)
    throw Error(ErrorKind::fit_not_applicable,
                fmt::format("gradient energy {:.6g} is below half the bubble level {:.6g}: no concentration",
                            result.grad_sq(), (k1 + k2) * S2));
  BubbleFit f;
  f.eps_center = std::sqrt(k1) * 2.0 * std::numbers::sqrt2 / u0;
  const auto& grid = result.pair.u.grid;
  auto distance_sq = [&](double log_eps) {
    const RadialField U = bubble(std::exp(log_eps), grid);
    double d = grad_sq(result.pair.u - std::sqrt(k1) * U);
    if (!scalar) d += grad_sq(result.pair.v - std::sqrt(k2) * U);
    return d / ((k1 + k2) * S2);
  };
  const double l0 = std::log(f.eps_center);
  const auto [best, value] = boost::math::tools::brent_find_minima(distance_sq, l0 - 2.0, l0 + 2.0, 30);
  f.eps_fit = std::exp(best);
  f.dist_d12 = std::sqrt(value);
  if (!scalar) {
    f.center_ratio = center(result.pair.v) / u0;
    f.ratio_target = std::sqrt(k2 / k1);
    f.k_check = std::abs(f.center_ratio / f.ratio_target - 1.0);
  }
  return f;
}

double decay_constant(const RadialField& u, double eps, double* r_at_max) {
  const auto r = u.grid->r();
  double best = -INFINITY, where = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    const double y = r[i] / eps;
    const double v = (1.0 + y * y) * eps * (i == 0 ? center(u) : u[i]);
    if (v > best) best = v, where = y;
  }
  if (r_at_max) *r_at_max = where;
  return best;
}

DecayReport decay_check(const SolveResult& result, double eps) {
  DecayReport d;
  d.constant_u = decay_constant(result.pair.u, eps, &d.r_at_max_u);
  if (!result.pair.scalar()) d.constant_v = decay_constant(result.pair.v, eps, &d.r_at_max_v);
  return d;
}

AsymptoticsReport ground_limit_check(std::span<const SweepEntry> entries, LimitMode mode) {
  AsymptoticsReport rep;
  rep.regime = mode == LimitMode::small_mass   ? Regime::small_mass_ground
               : mode == LimitMode::large_mass ? Regime::large_mass
                                               : Regime::p3_threshold;
  std::vector<double> a1, a2, l1, l2, e;
  for (std::size_t i = 0; i < entries.size(); ++i) {
    const auto& en = entries[i];
    if (!en.result || !en.result->converged) {
      rep.notices.push_back(fmt::format("entry {} skipped: {}", i, en.result ? en.result->message : en.error));
      continue;
    }
    const auto& prm = en.params;
    const auto& r = *en.result;
    const auto w = solve_scalar_profile(prm.p, default_profile_grid());
    AsymptoticsStep step;
    step.params = prm;
    step.result = r;
    H1Parts parts;
    auto add = [&](const H1Parts& q) {
      parts.diff += q.diff;
      parts.ref += q.ref;
    };
    if (mode == LimitMode::p3_threshold) {
      const RadialField u = rescale_p3(r.pair.u, prm.alpha1, prm.a1, w.mass);
      const RadialField v = rescale_p3(r.pair.v, prm.alpha2, prm.a2, w.mass);
      // the mass of nu w_3(sqrt(nu) x) does not depend on nu in R^4, so the
      // center value alone fixes nu
      step.nu1 = center(u) / w.center_value;
      step.nu2 = center(v) / w.center_value;
      add(h1_parts(u, resample(w.field, u.grid, *step.nu1, std::sqrt(*step.nu1))));
      add(h1_parts(v, resample(w.field, v.grid, *step.nu2, std::sqrt(*step.nu2))));
    } else {
      const RadialField u = rescale_to_profile(r.pair.u, prm.p, prm.alpha1, prm.a1, w.mass);
      const RadialField v = rescale_to_profile(r.pair.v, prm.p, prm.alpha2, prm.a2, w.mass);
      add(h1_parts(u, resample(w.field, u.grid)));
      add(h1_parts(v, resample(w.field, v.grid)));
    }
    step.distance = std::sqrt(parts.diff / parts.ref);
    rep.distances.push_back(step.distance);
    a1.push_back(prm.a1);
    a2.push_back(prm.a2);
    l1.push_back(r.lambda1);
    l2.push_back(r.lambda2);
    e.push_back(std::abs(r.energy));
    rep.sequence.push_back(std::move(step));
  }
  if (mode != LimitMode::p3_threshold && a1.size() >= 2) {
    const double p = rep.sequence.front().params.p;
    const double rate = (p - 2.0) / (3.0 - p);
    const bool positive = std::all_of(l1.begin(), l1.end(), [](double x) { return x > 0.0; }) &&
                          std::all_of(l2.begin(), l2.end(), [](double x) { return x > 0.0; });
    if (positive) {
      rep.fitted_rates.push_back(fit_log_log(a1, l1, "lambda1", rate));
      rep.fitted_rates.push_back(fit_log_log(a2, l2, "lambda2", rate));
    }
    rep.fitted_rates.push_back(fit_log_log(a1, e, "energy", (4.0 - p) / (3.0 - p)));
  }
  rep.distances_decreasing = strictly_decreasing(rep.distances);
  rep.verdict = trend_verdict(rep.distances, 5e-2);
  return rep;
}

AsymptoticsReport bubble_limit_check(std::span<const SweepEntry> entries) {
  AsymptoticsReport rep;
  rep.regime = Regime::small_mass_mp;
  std::vector<double> constants;
  double level = 0.0;
  for (std::size_t i = 0; i < entries.size(); ++i) {
    const auto& en = entries[i];
    if (!en.result || !en.result->converged) {
      rep.notices.push_back(fmt::format("entry {} skipped: {}", i, en.result ? en.result->message : en.error));
      continue;
    }
    const auto& r = *en.result;
    const auto cc = coupled_constants(en.params);
    level = cc.S_coupled * cc.S_coupled / 4.0;
    AsymptoticsStep step;
    step.params = en.params;
    step.result = r;
    step.limit_energy_gap = std::abs(r.energy - level);
    try {
      step.bubble = bubble_fit(r, en.params);
      step.distance = step.bubble->dist_d12;
      step.decay = decay_check(r, step.bubble->eps_fit);
      constants.push_back(step.decay->constant_u);
      rep.distances.push_back(step.distance);
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::fit_not_applicable) throw;
      rep.notices.push_back(fmt::format("entry {}: {}", i, e.what()));
    }
    rep.limit_energy_gap.push_back(step.limit_energy_gap);
    rep.sequence.push_back(std::move(step));
  }
  rep.distances_decreasing = strictly_decreasing(rep.distances);
  rep.gaps_decreasing = strictly_decreasing(rep.limit_energy_gap);
  if (constants.size() >= 3) {
    const auto last = std::span(constants).last(3);
    const auto [lo, hi] = std::minmax_element(last.begin(), last.end());
    rep.decay_stable = *hi <= 2.0 * *lo;
  }
  rep.verdict = trend_verdict(rep.limit_energy_gap, 0.05 * level);
  return rep;
}

}  // namespace normcrit
