#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "normcrit/functionals.hpp"
#include "normcrit/params.hpp"

namespace normcrit {

enum class Branch { ground_plus, mountain_pass, scalar_plus, scalar_minus };
std::string_view to_string(Branch b) noexcept;
Branch branch_from_string(std::string_view name);

struct SolverOptions {
  std::size_t nodes = 2048;
  double step = 0.05;        // initial flow step
  double tolerance = 1e-8;   // residual <= tolerance (1 + |grad pair|)
  std::size_t max_iterations = 200000;
  int seeds = 3;             // mountain-pass starts
  std::uint64_t seed = 1;
  int retries = 3;           // extra starts after a failed projection
  // Mountain pass only: skip the descent and follow the critical point
  // nearest the start by Newton (the scaled w_p pair for p >= 3 when no
  // start is given). Used for branches that are critical but not minimal.
  bool continuation = false;
};

struct SolveResult {
  PairState pair;
  double lambda1 = 0.0, lambda2 = 0.0;
  double energy = 0.0;
  double pohozaev_residual = 0.0;          // |P|
  double tangent_gradient_residual = 0.0;  // weighted L2 of (Gu + l1 u, Gv + l2 v)
  double relative_residual = 0.0;          // the same over the size of the terms
  std::size_t iterations = 0;
  Branch branch = Branch::ground_plus;
  bool boundary_hit = false;
  bool converged = false;
  std::string message;
  std::vector<double> energy_history;  // accepted flow energies

  double grad_sq() const;
};

// Local minimizer on P+ inside the ball |grad|^2 < rho0^2.
SolveResult solve_local_min(const ModelParams& prm, const std::optional<PairState>& init = {},
                            const SolverOptions& opt = {});

// Minimizer of the fiber maximum over the product of spheres.
SolveResult solve_mountain_pass(const ModelParams& prm, const std::optional<PairState>& init = {},
                                const SolverOptions& opt = {});

enum class ScalarBranch { plus, minus };

SolveResult solve_scalar_branch(double p, double mu, double alpha, double a, ScalarBranch branch,
                                const SolverOptions& opt = {},
                                const std::optional<RadialField>& init = {});

enum class SweepMode { ground, mountain_pass };

struct SweepEntry {
  ModelParams params;
  std::optional<SolveResult> result;
  std::string error;  // set when the solve threw
  std::string error_kind;
};

// Solves in input order. With warm starts each solve begins from the last
// converged state; otherwise up to `threads` solves run concurrently.
std::vector<SweepEntry> sweep(std::span<const ModelParams> grid, SweepMode mode, const SolverOptions& opt = {},
                              bool warm = true, unsigned threads = 1);

// params.a1 * 2^-k for k = 0..steps, with a2 following at fixed ratio.
std::vector<ModelParams> halving_path(const ModelParams& base, std::size_t steps);

// Energy at the fiber maximum of the test pair with GN ratios relaxed from
// (M1, M2) toward their limits: M_i(n) = M_i* + (M_i - M_i*) 2^-n with
// M_i* = max(2 alpha_i a_i / 3, 1/C3^3). p must be 3.
struct ThresholdPoint {
  double energy = 0.0;
  double ratio_u = 0.0, ratio_v = 0.0;  // realized GN ratios
  double limit_u = 0.0, limit_v = 0.0;  // M_i*
};

ThresholdPoint threshold_sequence_energy(const ModelParams& prm, double M1, double M2, int n);

struct ProbeReport {
  std::size_t iterations = 0;
  std::size_t near_critical = 0;        // samples with relative residual below 1e-2
  std::size_t flagged_near_critical = 0;
  bool flag_every_near_critical = false;
  bool converged_positive = false;
  std::vector<double> residual_history;
  std::vector<double> energy_history;
  std::vector<double> spreading;  // fraction of mass beyond R/2
  bool spreading_monotone_tail = false;  // over the last half of samples
  std::string stop_reason;
  SignReport last_sign;
  bool heuristic = true;
};

// Runs the constrained flow with negative alpha and reports what it sees.
// Samples are taken every 100 descent steps; a Newton solve is attempted on
// every 20th near-critical sample. Heuristic evidence only.
ProbeReport nonexistence_probe(const ModelParams& prm, const SolverOptions& opt = {});

}  // namespace normcrit
