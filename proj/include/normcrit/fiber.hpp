#pragma once

#include <cstddef>
#include <optional>

#include "normcrit/functionals.hpp"
#include "normcrit/profiles.hpp"

namespace normcrit {

// Critical points of s -> Psi(s): s_plus is a local minimum, t_minus a
// local maximum. Found from the sign structure of e^{-2s} Psi'(s), which is
// concave when 2 < p < 3 and the perturbation is focusing.
struct CriticalPoints {
  std::optional<double> s_plus;
  std::optional<double> t_minus;
};

CriticalPoints fiber_critical_points(const Aggregates& A, double p);

// Zeros c < d of Psi itself.
struct FiberZeros {
  std::optional<double> c, d;
};

FiberZeros fiber_zeros(const Aggregates& A, double p);

// Window in s that contains every critical point, built from the scale
// balances of the aggregates alone.
std::pair<double, double> scan_window(const Aggregates& A, double p);

// Sign changes of Psi' on an even sample of the scan window.
std::size_t count_critical_points(const Aggregates& A, double p, std::size_t samples = 400);

struct Projection {
  PairState pair;
  double s = 0.0;
};

// Projections return the dilated pair on the grid scaled by e^{-s}, so
// norms transform exactly.
//
// Dilates onto the Pohozaev set at t_minus. Throws projection_undefined
// when Psi has no local maximum (for p = 3: |grad|^2 <= 2/3 sum alpha_i |.|_3^3).
Projection project_minus(const PairState& pair, const ModelParams& prm);

// Dilates onto P+ at s_plus. Needs 2 < p < 3, positive alpha and T <= gamma1;
// otherwise throws a geometry error.
Projection project_plus(const PairState& pair, const ModelParams& prm);

// Geometry constants for the pair (or for the u component of a scalar state),
// with C_p from the profile on the default grid.
GeometryConstants geometry_for(const ModelParams& prm);
GeometryConstants scalar_geometry_for(double p, double mu, double alpha, double a);

// Labels P+/P- when |P| <= tol (1 + |grad|^2) and Psi''(0) lies outside the
// band of the same width.
FiberReport classify(const PairState& pair, const ModelParams& prm, double tol = 1e-6);

}  // namespace normcrit
