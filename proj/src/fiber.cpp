#include "normcrit/fiber.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <boost/math/tools/roots.hpp>
#include <fmt/format.h>

#include "normcrit/errors.hpp"

namespace normcrit {

namespace {

constexpr double kMaxS = 300.0;

// phi(s) = c0 - c1 e^{2s} - c2 e^{e s}, -2 < e < 2.
struct ExpSum {
  double c0, c1, c2, e;
  double operator()(double s) const { return c0 - c1 * std::exp(2.0 * s) - c2 * std::exp(e * s); }
};

struct Roots {
  std::optional<double> left;   // phi crosses upward
  std::optional<double> right;  // phi crosses downward
};

double solve_between(const ExpSum& f, double lo, double hi) {
  std::uintmax_t iters = 200;
  const double flo = f(lo), fhi = f(hi);
  if (flo == 0.0) return lo;
  if (fhi == 0.0) return hi;
  auto tol = [](double a, double b) { return std::abs(a - b) <= 1e-15 * (1.0 + std::abs(a)); };
  const auto [a, b] = boost::math::tools::toms748_solve(f, lo, hi, flo, fhi, tol, iters);
  return 0.5 * (a + b);
}

// Walk from s0 in direction dir until the sign of f differs from sign0.
std::optional<double> expand(const ExpSum& f, double s0, double dir, bool positive_at_s0) {
  double step = 1.0;
  double prev = s0;
  for (int k = 0; k < 64; ++k) {
    double s = s0 + dir * step;
    if (std::abs(s) > kMaxS) s = dir * kMaxS;
    const double v = f(s);
    if ((v > 0.0) != positive_at_s0) return dir > 0 ? solve_between(f, prev, s) : solve_between(f, s, prev);
    if (std::abs(s) >= kMaxS) return std::nullopt;
    prev = s;
    step *= 2.0;
  }
  return std::nullopt;
}

Roots exp_roots(const ExpSum& f) {
  Roots out;
  if (f.e < 0.0 && f.c2 > 0.0 && f.c1 > 0.0) {
    // concave: one maximum
    const double smax = std::log(f.c2 * (-f.e) / (2.0 * f.c1)) / (2.0 - f.e);
    const double top = f(smax);
    if (top < 0.0) return out;
    if (top == 0.0) {
      out.left = out.right = smax;
      return out;
    }
    out.left = expand(f, smax, -1.0, true);
    out.right = expand(f, smax, 1.0, true);
    return out;
  }
  if (f.e == 0.0) {
    if (f.c0 > f.c2 && f.c1 > 0.0) out.right = 0.5 * std::log((f.c0 - f.c2) / f.c1);
    return out;
  }
  if (f.c1 > 0.0) {
    // f -> -inf at +inf; one downward crossing when f is positive far left
    const bool pos_left = f.e > 0.0 ? f.c0 > 0.0 : (f.c2 < 0.0 || (f.c2 == 0.0 && f.c0 > 0.0));
    if (!pos_left) return out;
    double s = 0.0;
    for (int k = 0; k < 64 && !(f(s) > 0.0); ++k) s = s - (1.0 + std::abs(s));
    if (!(f(s) > 0.0)) return out;
    out.right = expand(f, s, 1.0, true);
    return out;
  }
  if (f.e < 0.0 && f.c2 > 0.0 && f.c0 > 0.0) {
    // increasing from -inf to c0
    double s = 0.0;
    for (int k = 0; k < 64 && !(f(s) > 0.0); ++k) s = s + (1.0 + std::abs(s));
    if (f(s) > 0.0) out.left = expand(f, s, -1.0, true);
  }
  return out;
}

// e^{2s} f(e^s r) carried exactly by moving the nodes to e^{-s} r.
PairState dilated(const PairState& pair, double s) {
  if (s == 0.0) return pair;
  auto g = std::make_shared<const RadialGrid>(pair.u.grid->scaled(std::exp(-s)));
  const double amp = std::exp(2.0 * s);
  PairState out{RadialField(g, pair.u.values), RadialField(g, pair.v.values), pair.a1, pair.a2};
  out.u *= amp;
  out.v *= amp;
  return out;
}

}  // namespace

CriticalPoints fiber_critical_points(const Aggregates& A, double p) {
  const double k = p * gamma_p(p);
  const Roots r = exp_roots({A.A1, 4.0 * A.A2, k * (A.A3 + A.A4), k - 2.0});
  return {r.left, r.right};
}

FiberZeros fiber_zeros(const Aggregates& A, double p) {
  const double k = p * gamma_p(p);
  const Roots r = exp_roots({0.5 * A.A1, A.A2, A.A3 + A.A4, k - 2.0});
  return {r.left, r.right};
}

std::pair<double, double> scan_window(const Aggregates& A, double p) {
  const double k = p * gamma_p(p);
  const double B = std::abs(k * (A.A3 + A.A4));
  double lo = 0.0, hi = 0.0;
  bool any = false;
  auto take = [&](double s) {
    if (!std::isfinite(s)) return;
    lo = any ? std::min(lo, s) : s;
    hi = any ? std::max(hi, s) : s;
    any = true;
  };
  if (A.A2 > 0.0) take(0.5 * std::log(A.A1 / (4.0 * A.A2)));
  if (B > 0.0 && k != 2.0) take(std::log(A.A1 / B) / (k - 2.0));
  if (B > 0.0 && A.A2 > 0.0 && k < 2.0) take(std::log(B * (2.0 - k) / (8.0 * A.A2)) / (4.0 - k));
  return {lo - 8.0, hi + 8.0};
}

std::size_t count_critical_points(const Aggregates& A, double p, std::size_t samples) {
  const auto [lo, hi] = scan_window(A, p);
  const double k = p * gamma_p(p);
  const ExpSum h{A.A1, 4.0 * A.A2, k * (A.A3 + A.A4), k - 2.0};
  std::size_t changes = 0;
  double prev = h(lo);
  for (std::size_t i = 1; i < samples; ++i) {
    const double v = h(lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(samples - 1));
    if ((v > 0.0) != (prev > 0.0)) ++changes;
    prev = v;
  }
  return changes;
}

Projection project_minus(const PairState& pair, const ModelParams& prm) {
  const Aggregates A = aggregates(pair, prm);
  const CriticalPoints cp = fiber_critical_points(A, prm.p);
  if (!cp.t_minus)
    throw Error(ErrorKind::projection_undefined,
                fmt::format("fiber map has no local maximum (A1 = {:.6g}, A2 = {:.6g}, A3 + A4 = {:.6g})", A.A1,
                            A.A2, A.A3 + A.A4));
  const double t = *cp.t_minus;
  return {dilated(pair, t), t};
}

GeometryConstants geometry_for(const ModelParams& prm) {
  const double C = gn_constant(solve_scalar_profile(prm.p, default_profile_grid()));
  return geometry_constants(prm, C, coupled_constants(prm).S_coupled);
}

GeometryConstants scalar_geometry_for(double p, double mu, double alpha, double a) {
  const double C = gn_constant(solve_scalar_profile(p, default_profile_grid()));
  return scalar_geometry(p, mu, alpha, a, C);
}

Projection project_plus(const PairState& pair, const ModelParams& prm) {
  if (!(prm.p > 2.0 && prm.p < 3.0))
    throw Error(ErrorKind::geometry, fmt::format("P+ projection needs 2 < p < 3, got {}", prm.p));
  if (!(prm.alpha1 > 0.0) || (!pair.scalar() && !(prm.alpha2 > 0.0)))
    throw Error(ErrorKind::geometry, "P+ projection needs positive alpha");
  const GeometryConstants gc = pair.scalar() ? scalar_geometry_for(prm.p, prm.mu1, prm.alpha1, pair.a1)
                                             : geometry_for(prm);
  if (!gc.geometry_available)
    throw Error(ErrorKind::geometry, fmt::format("T = {:.6g} exceeds gamma1 = {:.6g}", gc.T, gc.gamma1));
  const Aggregates A = aggregates(pair, prm);
  const CriticalPoints cp = fiber_critical_points(A, prm.p);
  if (!cp.s_plus) throw Error(ErrorKind::solver, "no local minimum on the fiber despite T <= gamma1");
  const double s = *cp.s_plus;
  return {dilated(pair, s), s};
}

FiberReport classify(const PairState& pair, const ModelParams& prm, double tol) {
  const Aggregates A = aggregates(pair, prm);
  FiberReport rep;
  const CriticalPoints cp = fiber_critical_points(A, prm.p);
  const FiberZeros z = fiber_zeros(A, prm.p);
  rep.s_plus = cp.s_plus;
  rep.t_minus = cp.t_minus;
  rep.c = z.c;
  rep.d = z.d;
  for (const auto& s : {cp.s_plus, cp.t_minus})
    if (s) rep.second_derivs.emplace_back(*s, fiber(A, prm.p, *s).d2psi);
  const auto [lo, hi] = scan_window(A, prm.p);
  for (int i = 0; i <= 40; ++i) {
    const double s = lo + (hi - lo) * i / 40.0;
    rep.psi_at.emplace_back(s, fiber(A, prm.p, s).psi);
  }
  const FiberValue f0 = fiber(A, prm.p, 0.0);
  rep.pohozaev = f0.dpsi;
  rep.psi_dd0 = f0.d2psi;
  const double band = tol * (1.0 + A.A1);
  if (std::abs(f0.dpsi) > band)
    rep.label = FiberLabel::off_manifold;
  else if (f0.d2psi > band)
    rep.label = FiberLabel::Pplus;
  else if (f0.d2psi < -band)
    rep.label = FiberLabel::Pminus;
  else
    rep.label = FiberLabel::Pzero_band;
  return rep;
}

}  // namespace normcrit
