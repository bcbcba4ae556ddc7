#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "normcrit/params.hpp"
#include "normcrit/radial_grid.hpp"

namespace normcrit {

// Positive radial solution of -lap w + w = w^{p-1} in R^4 on a given grid.
struct ScalarProfile {
  double p = 0.0;
  RadialField field;
  double mass = 0.0;      // ||w||_2
  double lp = 0.0;        // ||w||_p^p
  double grad_sq = 0.0;   // ||grad w||_2^2
  double center_value = 0.0;
  double shooting_center = 0.0;  // w(0) from the ODE bracket before the discrete polish
  double residual = 0.0;         // weighted L2 residual relative to ||w||_2
};

enum class CachePolicy { use, bypass };

// Shooting on the radial ODE, then Newton on the discrete equation.
// Throws solver error when no bracket exists in b in [1, 1e3] and
// convergence error when the residual stays above 1e-7.
ScalarProfile solve_scalar_profile(double p, GridPtr grid, CachePolicy cache = CachePolicy::use);

// Default grid for profile work: graded, R = 20, N = 4096.
GridPtr default_profile_grid();

// ||-lap w + w - w^{p-1}|| / ||w|| with the public Laplacian.
double profile_residual(const RadialField& w, double p);

// ||u||_p / (||grad u||^{g} ||u||_2^{1-g}), g = 2(p-2)/p
double gn_quotient(const RadialField& u, double p);
// Sharp constant, attained by w_p.
double gn_constant(const ScalarProfile& profile);

// 2 sqrt(2) eps / (eps^2 + r^2)
double bubble_value(double eps, double r);
// Throws resolution error when fewer than four nodes resolve the core.
RadialField bubble(double eps, GridPtr grid);
// ||grad U_eps||^2 / ||U_eps||_4^2 on the given grid.
double sobolev_quotient(double eps, GridPtr grid);
// Sobolev constant S from a wide stretched grid; computed once.
double sobolev_constant();

// U_eps times a quintic blend from 1 on [0, r_in] to 0 beyond r_out.
RadialField cutoff_bubble(double eps, double r_in, double r_out, GridPtr grid);

struct CoupledConstants {
  double k1 = 0.0;
  double k2 = 0.0;
  double S = 0.0;
  double S_coupled = 0.0;  // sqrt(k1 + k2) S
};

// Throws admissibility error for beta inside [min mu, max mu] (or beta = mu,
// or beta <= 0).
CoupledConstants coupled_constants(const ModelParams& params);
bool beta_admissible(double mu1, double mu2, double beta) noexcept;

struct GeometryConstants {
  double p = 0.0;
  double gamma_p = 0.0;
  double C_p = 0.0;
  double S = 0.0;
  double k1 = 0.0, k2 = 0.0;
  double S_coupled = 0.0;
  double D1 = 0.0, D2 = 0.0, D3 = 0.0;
  double T = 0.0;
  // Two-root regime only (2 < p < 3); NaN otherwise.
  double gamma1 = 0.0;
  double gamma0 = 0.0;
  double rho0 = 0.0;
  std::optional<double> R0, R1;
  bool geometry_available = false;  // 2 < p < 3 and T <= gamma1

  // 1/2 rho^2 - D1 rho^4 - (D2 + D3) rho^{p gamma_p}
  double h(double rho) const;
};

GeometryConstants geometry_constants(const ModelParams& params, double C_p, double S_coupled);

// Scalar analogue: D1 = mu / (4 S^2), T = alpha a^{4-p}.
GeometryConstants scalar_geometry(double p, double mu, double alpha, double a, double C_p);

// K_{p,alpha} of the mu = 0 scalar problem, 2 < p < 3 or 3 < p < 4.
double scalar_closed_form_constant(double p, double alpha, double w_mass);
// Multiplier of the mu = 0 scalar solution with mass a.
double scalar_closed_form_lambda(double p, double alpha, double a, double w_mass);

// Profile cache on disk. Files: <dir>/wp_p<p>_N<N>_R<R>.tsv.
std::filesystem::path cache_directory();
std::filesystem::path cache_file(double p, const RadialGrid& grid);

struct CacheEntry {
  std::filesystem::path file;
  double p = 0.0;
  std::size_t n = 0;
  double r_max = 0.0;
  std::string mapping;
  double mass = 0.0;
};

std::vector<CacheEntry> list_cache();
std::size_t clear_cache();
std::optional<ScalarProfile> load_cached_profile(double p, GridPtr grid);
void store_profile(const ScalarProfile& profile);

}  // namespace normcrit
