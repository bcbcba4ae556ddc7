#pragma once

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "normcrit/solvers.hpp"

namespace normcrit {

enum class Regime { small_mass_ground, small_mass_mp, p3_threshold, large_mass };
std::string_view to_string(Regime r) noexcept;
Regime regime_from_string(std::string_view name);

enum class LimitMode { small_mass, large_mass, p3_threshold };

// Least-squares line through (log x, log y).
struct RateFit {
  std::string name;
  double slope = 0.0;
  double intercept = 0.0;
  double slope_stderr = 0.0;
  double ci_low = 0.0, ci_high = 0.0;  // 95%, Student t
  double residual = 0.0;               // rms of the fit in log y
  double expected = 0.0;
  bool within_tolerance = false;       // |slope - expected| <= 15% |expected|
};

RateFit fit_log_log(std::span<const double> x, std::span<const double> y, std::string name = {},
                    double expected = 0.0);

struct BubbleFit {
  double eps_center = 0.0;    // from u(0) = sqrt(k1) 2 sqrt(2) / eps
  double eps_fit = 0.0;       // minimizer of the gradient distance
  double dist_d12 = 0.0;      // |grad(pair - bubble pair)| / |grad bubble pair|
  double center_ratio = 0.0;  // v(0) / u(0)
  double ratio_target = 0.0;  // sqrt(k2 / k1)
  double k_check = 0.0;       // |center_ratio / ratio_target - 1|
};

// Throws fit_not_applicable when the pair carries less than half the
// gradient energy of the limiting bubble pair.
BubbleFit bubble_fit(const SolveResult& result, const ModelParams& prm);

// sup_r (1 + r^2) eps u(eps r), for each component.
struct DecayReport {
  double constant_u = 0.0, constant_v = 0.0;
  double r_at_max_u = 0.0, r_at_max_v = 0.0;
};

double decay_constant(const RadialField& u, double eps, double* r_at_max = nullptr);
DecayReport decay_check(const SolveResult& result, double eps);

// (L/alpha)^{1/(p-2)}-normalized field y -> (alpha/L)^{1/(p-2)} u(y / sqrt(L)) with
// L = scalar_closed_form_lambda; carried exactly on a scaled grid. Maps mass
// a to ||w_p||.
RadialField rescale_to_profile(const RadialField& u, double p, double alpha, double a, double w_mass);

// The p = 3 near-threshold rescaling (a/|w_3|) r^2 u((a/|w_3|) r x),
// r = (1 - alpha a / |w_3|)^{-1/2}.
RadialField rescale_p3(const RadialField& u, double alpha, double a, double w_mass);

// |grad(u - v)| / |grad v| after moving u onto v's grid.
double d12_distance(const RadialField& u, const RadialField& v);
// H1 distance relative to the H1 norm of the reference.
double h1_distance(const RadialField& u, const RadialField& ref);

struct AsymptoticsStep {
  ModelParams params;
  SolveResult result;
  double distance = 0.0;
  double limit_energy_gap = 0.0;           // mountain-pass regime only
  std::optional<double> nu1, nu2;          // p = 3 threshold fit
  std::optional<BubbleFit> bubble;
  std::optional<DecayReport> decay;
};

struct AsymptoticsReport {
  Regime regime = Regime::small_mass_ground;
  std::vector<AsymptoticsStep> sequence;
  std::vector<double> distances;
  std::vector<RateFit> fitted_rates;
  std::vector<double> limit_energy_gap;
  std::vector<std::string> notices;  // skipped entries
  bool distances_decreasing = false;
  bool gaps_decreasing = false;
  std::optional<bool> decay_stable;  // last three constants within a factor 2
  std::string verdict;
};

// Limits of ground (small mass), large-mass or p = 3 threshold sequences
// against the rescaled w_p pair.
AsymptoticsReport ground_limit_check(std::span<const SweepEntry> entries, LimitMode mode);

// Small-mass mountain-pass sequences against the bubble pair.
AsymptoticsReport bubble_limit_check(std::span<const SweepEntry> entries);

}  // namespace normcrit
