#include "normcrit/errors.hpp"

#include <cmath>

#include <fmt/format.h>

#include "normcrit/params.hpp"

namespace normcrit {

std::string_view to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::contract: return "contract";
    case ErrorKind::construction: return "construction";
    case ErrorKind::admissibility: return "admissibility";
    case ErrorKind::geometry: return "geometry";
    case ErrorKind::resolution: return "resolution";
    case ErrorKind::solver: return "solver";
    case ErrorKind::convergence: return "convergence";
    case ErrorKind::projection_undefined: return "projection_undefined";
    case ErrorKind::infeasible: return "infeasible";
    case ErrorKind::fit_not_applicable: return "fit_not_applicable";
    case ErrorKind::io: return "io";
  }
  return "unknown";
}

double gamma_p(double p) noexcept { return 2.0 * (p - 2.0) / p; }

void ModelParams::validate() const {
  auto finite = [](double x) { return std::isfinite(x); };
  if (!(p > 2.0 && p < 4.0))
    throw Error(ErrorKind::construction, fmt::format("exponent p = {} outside (2, 4)", p));
  if (!(mu1 > 0.0 && mu2 > 0.0) || !finite(mu1) || !finite(mu2))
    throw Error(ErrorKind::construction, "mu1 and mu2 must be positive");
  if (!(a1 > 0.0 && a2 > 0.0) || !finite(a1) || !finite(a2))
    throw Error(ErrorKind::construction, "masses a1 and a2 must be positive");
  if (!finite(beta) || !finite(alpha1) || !finite(alpha2))
    throw Error(ErrorKind::construction, "beta and alpha must be finite");
}

}  // namespace normcrit
