#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "normcrit/params.hpp"
#include "normcrit/radial_grid.hpp"

namespace normcrit {

// Two components on one grid with prescribed L2 norms ||u|| = a1, ||v|| = a2.
// A scalar state carries v = 0 and a2 = 0.
struct PairState {
  RadialField u, v;
  double a1 = 0.0, a2 = 0.0;

  // Rescale each nonzero component onto its sphere.
  void normalize();
  // max_i | ||.||^2 - a_i^2 | / a_i^2 over components with a_i > 0
  double mass_error() const;
  bool scalar() const noexcept { return a2 == 0.0; }
};

PairState make_pair(RadialField u, RadialField v, double a1, double a2);

struct PairNorms {
  double grad_u = 0, grad_v = 0;
  double mass_u = 0, mass_v = 0;  // squared L2 norms
  double l4_u = 0, l4_v = 0;
  double lp_u = 0, lp_v = 0;
  double cross = 0;  // int u^2 v^2
};

PairNorms pair_norms(const PairState& pair, double p);

// A1 = |grad|^2, A2 = 1/4 int(mu1 u^4 + mu2 v^4 + 2 beta u^2 v^2),
// A3 = alpha1/p |u|_p^p, A4 = alpha2/p |v|_p^p.
struct Aggregates {
  double A1 = 0, A2 = 0, A3 = 0, A4 = 0;
};

Aggregates aggregates(const PairNorms& n, const ModelParams& prm);
Aggregates aggregates(const PairState& pair, const ModelParams& prm);

double energy(const PairNorms& n, const ModelParams& prm);
double energy(const PairState& pair, const ModelParams& prm);
double pohozaev(const PairNorms& n, const ModelParams& prm);
double pohozaev(const PairState& pair, const ModelParams& prm);

// 1/2 |grad u|^2 - mu/4 |u|_4^4 - alpha/p |u|_p^p
double scalar_energy(const RadialField& u, double p, double mu, double alpha);

struct FiberValue {
  double psi = 0, dpsi = 0, d2psi = 0;
};

// Psi(s) = e^{2s} A1/2 - e^{4s} A2 - e^{p g s}(A3 + A4), g = gamma_p
FiberValue fiber(const Aggregates& A, double p, double s);
FiberValue fiber(const PairState& pair, const ModelParams& prm, double s);

// Gu = -lap u - mu1 u^3 - alpha1 |u|^{p-2} u - beta v^2 u, likewise Gv.
// The outer node carries the Dirichlet condition and is set to 0.
std::pair<RadialField, RadialField> gradient(const PairState& pair, const ModelParams& prm);

struct Multipliers {
  double lambda1 = 0, lambda2 = 0;
};

Multipliers multipliers(const PairNorms& n, const ModelParams& prm, double a1, double a2);
Multipliers multipliers(const PairState& pair, const ModelParams& prm);

// ||Gu + lambda1 u|| + ||Gv + lambda2 v|| in weighted L2 over interior nodes.
double criticality_residual(const PairState& pair, const ModelParams& prm);

enum class SignVerdict { nonexistence_consistent, no_obstruction, indeterminate };
std::string_view to_string(SignVerdict v) noexcept;

// Identity lambda1 a1^2 + lambda2 a2^2 = (1 - gamma_p)(alpha1 |u|_p^p + alpha2 |v|_p^p)
// at critical points on the Pohozaev set.
struct SignReport {
  double lambda1 = 0, lambda2 = 0;
  double lhs = 0;  // lambda1 a1^2 + lambda2 a2^2
  double rhs = 0;
  double identity_gap = 0;  // |lhs - rhs| / |rhs|
  double criticality_residual = 0;
  bool flag = false;  // rhs < 0: a multiplier must be negative
  SignVerdict verdict = SignVerdict::indeterminate;
};

SignReport sign_diagnostic(const PairState& pair, const ModelParams& prm);

enum class FiberLabel { Pplus, Pminus, Pzero_band, off_manifold };
std::string_view to_string(FiberLabel l) noexcept;

struct FiberReport {
  std::optional<double> s_plus;
  std::optional<double> t_minus;
  std::optional<double> c, d;  // zeros of Psi
  std::vector<std::pair<double, double>> psi_at;
  std::vector<std::pair<double, double>> second_derivs;  // (s, Psi''(s)) at critical points
  double pohozaev = 0;
  double psi_dd0 = 0;
  FiberLabel label = FiberLabel::off_manifold;
};

}  // namespace normcrit
