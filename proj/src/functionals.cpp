#include "normcrit/functionals.hpp"

#include <cmath>

#include <fmt/format.h>

#include "normcrit/errors.hpp"

namespace normcrit {

namespace {

void rescale_to(RadialField& f, double a) {
  const double m = mass_sq(f);
  if (a == 0.0) return;
  if (!(m > 0.0)) throw Error(ErrorKind::contract, "cannot normalize a zero component");
  f *= a / std::sqrt(m);
}

}  // namespace

void PairState::normalize() {
  rescale_to(u, a1);
  rescale_to(v, a2);
}

double PairState::mass_error() const {
  double e = 0.0;
  if (a1 > 0.0) e = std::max(e, std::abs(mass_sq(u) - a1 * a1) / (a1 * a1));
  if (a2 > 0.0) e = std::max(e, std::abs(mass_sq(v) - a2 * a2) / (a2 * a2));
  return e;
}

PairState make_pair(RadialField u, RadialField v, double a1, double a2) {
  require_same_grid(u, v);
  if (!(a1 > 0.0) || !(a2 >= 0.0))
    throw Error(ErrorKind::construction, fmt::format("masses ({}, {}) invalid", a1, a2));
  PairState s{std::move(u), std::move(v), a1, a2};
  s.normalize();
  return s;
}

PairNorms pair_norms(const PairState& pair, double p) {
  require_same_grid(pair.u, pair.v);
  const auto w = pair.u.grid->weights();
  PairNorms n;
  n.grad_u = grad_sq(pair.u);
  n.grad_v = pair.scalar() ? 0.0 : grad_sq(pair.v);
  for (std::size_t i = 0; i < w.size(); ++i) {
    const double x = pair.u[i], y = pair.v[i];
    const double x2 = x * x, y2 = y * y;
    n.mass_u += w[i] * x2;
    n.mass_v += w[i] * y2;
    n.l4_u += w[i] * x2 * x2;
    n.l4_v += w[i] * y2 * y2;
    n.cross += w[i] * x2 * y2;
    n.lp_u += w[i] * std::pow(std::abs(x), p);
    if (y != 0.0) n.lp_v += w[i] * std::pow(std::abs(y), p);
  }
  return n;
}

Aggregates aggregates(const PairNorms& n, const ModelParams& prm) {
  return {n.grad_u + n.grad_v,
          0.25 * (prm.mu1 * n.l4_u + prm.mu2 * n.l4_v + 2.0 * prm.beta * n.cross),
          prm.alpha1 / prm.p * n.lp_u, prm.alpha2 / prm.p * n.lp_v};
}

Aggregates aggregates(const PairState& pair, const ModelParams& prm) {
  return aggregates(pair_norms(pair, prm.p), prm);
}

double energy(const PairNorms& n, const ModelParams& prm) {
  const Aggregates A = aggregates(n, prm);
  return 0.5 * A.A1 - A.A2 - A.A3 - A.A4;
}

double energy(const PairState& pair, const ModelParams& prm) {
  return energy(pair_norms(pair, prm.p), prm);
}

double pohozaev(const PairNorms& n, const ModelParams& prm) {
  const Aggregates A = aggregates(n, prm);
  return A.A1 - 4.0 * A.A2 - prm.p * prm.gamma_p() * (A.A3 + A.A4);
}

double pohozaev(const PairState& pair, const ModelParams& prm) {
  return pohozaev(pair_norms(pair, prm.p), prm);
}

double scalar_energy(const RadialField& u, double p, double mu, double alpha) {
  return 0.5 * grad_sq(u) - 0.25 * mu * lq(u, 4.0) - alpha / p * lq(u, p);
}

FiberValue fiber(const Aggregates& A, double p, double s) {
  const double k = p * gamma_p(p);
  const double e2 = std::exp(2.0 * s), e4 = e2 * e2, ek = std::exp(k * s);
  const double B = A.A3 + A.A4;
  return {0.5 * e2 * A.A1 - e4 * A.A2 - ek * B,
          e2 * A.A1 - 4.0 * e4 * A.A2 - k * ek * B,
          2.0 * e2 * A.A1 - 16.0 * e4 * A.A2 - k * k * ek * B};
}

FiberValue fiber(const PairState& pair, const ModelParams& prm, double s) {
  return fiber(aggregates(pair, prm), prm.p, s);
}

std::pair<RadialField, RadialField> gradient(const PairState& pair, const ModelParams& prm) {
  require_same_grid(pair.u, pair.v);
  RadialField gu = radial_laplacian(pair.u);
  RadialField gv = radial_laplacian(pair.v);
  const std::size_t n = gu.size();
  const double p = prm.p;
  for (std::size_t i = 0; i < n; ++i) {
    const double x = pair.u[i], y = pair.v[i];
    gu[i] = -gu[i] - prm.mu1 * x * x * x - prm.alpha1 * std::pow(std::abs(x), p - 2.0) * x -
            prm.beta * y * y * x;
    gv[i] = -gv[i] - prm.mu2 * y * y * y - prm.alpha2 * std::pow(std::abs(y), p - 2.0) * y -
            prm.beta * x * x * y;
  }
  gu[n - 1] = 0.0;
  gv[n - 1] = 0.0;
  return {std::move(gu), std::move(gv)};
}

Multipliers multipliers(const PairNorms& n, const ModelParams& prm, double a1, double a2) {
  Multipliers m;
  m.lambda1 = (prm.mu1 * n.l4_u + prm.alpha1 * n.lp_u + prm.beta * n.cross - n.grad_u) / (a1 * a1);
  if (a2 > 0.0)
    m.lambda2 = (prm.mu2 * n.l4_v + prm.alpha2 * n.lp_v + prm.beta * n.cross - n.grad_v) / (a2 * a2);
  return m;
}

Multipliers multipliers(const PairState& pair, const ModelParams& prm) {
  return multipliers(pair_norms(pair, prm.p), prm, pair.a1, pair.a2);
}

double criticality_residual(const PairState& pair, const ModelParams& prm) {
  const auto [gu, gv] = gradient(pair, prm);
  const Multipliers m = multipliers(pair, prm);
  const auto w = pair.u.grid->weights();
  double su = 0.0, sv = 0.0;
  for (std::size_t i = 1; i + 1 < w.size(); ++i) {
    su += w[i] * std::pow(gu[i] + m.lambda1 * pair.u[i], 2);
    sv += w[i] * std::pow(gv[i] + m.lambda2 * pair.v[i], 2);
  }
  return std::sqrt(su) + std::sqrt(sv);
}

std::string_view to_string(SignVerdict v) noexcept {
  switch (v) {
    case SignVerdict::nonexistence_consistent: return "nonexistence_consistent";
    case SignVerdict::no_obstruction: return "no_obstruction";
    case SignVerdict::indeterminate: return "indeterminate";
  }
  return "unknown";
}

SignReport sign_diagnostic(const PairState& pair, const ModelParams& prm) {
  const PairNorms n = pair_norms(pair, prm.p);
  const Multipliers m = multipliers(n, prm, pair.a1, pair.a2);
  SignReport rep;
  rep.lambda1 = m.lambda1;
  rep.lambda2 = m.lambda2;
  rep.lhs = m.lambda1 * pair.a1 * pair.a1 + m.lambda2 * pair.a2 * pair.a2;
  rep.rhs = (1.0 - prm.gamma_p()) * (prm.alpha1 * n.lp_u + prm.alpha2 * n.lp_v);
  const double scale = (1.0 - prm.gamma_p()) * (std::abs(prm.alpha1) * n.lp_u + std::abs(prm.alpha2) * n.lp_v);
  rep.identity_gap = std::abs(rep.lhs - rep.rhs) / std::max(std::abs(rep.rhs), 1e-300);
  rep.criticality_residual = criticality_residual(pair, prm);

  const bool mixed = (prm.alpha1 > 0.0) != (prm.alpha2 > 0.0) && !pair.scalar();
  const double band = 1e-8 * scale;
  rep.flag = rep.rhs < -band;
  if (rep.flag)
    rep.verdict = SignVerdict::nonexistence_consistent;
  else if (mixed || std::abs(rep.rhs) <= band)
    rep.verdict = SignVerdict::indeterminate;
  else
    rep.verdict = SignVerdict::no_obstruction;
  return rep;
}

std::string_view to_string(FiberLabel l) noexcept {
  switch (l) {
    case FiberLabel::Pplus: return "P+";
    case FiberLabel::Pminus: return "P-";
    case FiberLabel::Pzero_band: return "P0-band";
    case FiberLabel::off_manifold: return "off-manifold";
  }
  return "unknown";
}

}  // namespace normcrit
