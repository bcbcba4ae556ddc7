#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "normcrit/cli.hpp"
#include "normcrit/errors.hpp"

using namespace normcrit;

namespace {

const char* kFooter = R"(Outputs (in --out):
  result.json   full serialization of the run, including profiles
  summary.csv   one row per solve, 17 significant digits, columns:
                label,p,mu1,mu2,beta,alpha1,alpha2,a1,a2,branch,converged,energy,
                lambda1,lambda2,pohozaev_residual,tangent_gradient_residual,
                relative_residual,iterations,boundary_hit,error
  profile_<label>.tsv   columns r, u, v

Exit codes: 0 success, 1 usage or config error, 2 not converged,
3 refused (T > gamma1, p outside the branch range, excluded beta).
The profile cache lives in $NORMCRIT_CACHE (default ./cache).)";

// Command-line values; each one overrides the config file when given.
struct Overrides {
  std::optional<std::string> config;
  std::optional<std::string> out;
  std::optional<double> p, mu1, mu2, beta, alpha1, alpha2, a1, a2, a;
  std::optional<std::size_t> nodes, max_iterations;
  std::optional<double> tolerance;
  std::optional<int> seeds;
  std::optional<std::uint64_t> seed;
  std::optional<unsigned> threads;
  std::optional<std::string> branch, mode, regime, input;
  std::optional<std::size_t> steps;
  std::optional<double> ratio;
  std::vector<double> betas;
  bool doubling = false, cold = false, continuation = false;

  void apply(cli::RunConfig& c) const {
    if (out) c.output = *out;
    auto set = [](const std::optional<double>& from, double& to) {
      if (from) to = *from;
    };
    set(p, c.params.p);
    set(mu1, c.params.mu1);
    set(mu2, c.params.mu2);
    set(beta, c.params.beta);
    set(alpha1, c.params.alpha1);
    set(alpha2, c.params.alpha2);
    set(a, c.params.a1);
    set(a, c.params.a2);
    set(a1, c.params.a1);
    set(a2, c.params.a2);
    if (nodes) c.solver.nodes = *nodes;
    if (max_iterations) c.solver.max_iterations = *max_iterations;
    if (tolerance) c.solver.tolerance = *tolerance;
    if (seeds) c.solver.seeds = *seeds;
    if (seed) c.solver.seed = *seed;
    if (continuation) c.solver.continuation = true;
    if (threads) c.threads = *threads;
    if (branch) c.branch = *branch;
    if (mode) c.sweep.mode = *mode;
    if (regime) c.regime = *regime;
    if (input) c.input = *input;
    if (steps) c.sweep.steps = *steps;
    if (ratio) c.sweep.ratio = *ratio;
    if (!betas.empty()) c.sweep.betas = betas;
    if (doubling) c.sweep.doubling = true;
    if (cold) c.sweep.warm = false;
  }
};

void common(CLI::App* app, Overrides& o) {
  app->add_option("--config", o.config, "JSON config file; flags override its values");
  app->add_option("--out", o.out, "output directory (default out)");
  app->add_option("--p", o.p, "subcritical exponent in (2, 4)");
  app->add_option("--mu1", o.mu1);
  app->add_option("--mu2", o.mu2);
  app->add_option("--beta", o.beta, "coupling");
  app->add_option("--alpha1", o.alpha1);
  app->add_option("--alpha2", o.alpha2);
  app->add_option("--a", o.a, "both masses");
  app->add_option("--a1", o.a1);
  app->add_option("--a2", o.a2);
  app->add_option("--nodes", o.nodes, "solver grid nodes");
  app->add_option("--tol", o.tolerance, "relative residual tolerance");
  app->add_option("--max-iter", o.max_iterations);
  app->add_option("--seeds", o.seeds, "mountain-pass starts");
  app->add_option("--seed", o.seed, "random seed");
  app->add_option("--threads", o.threads);
  app->add_flag("--continuation", o.continuation, "mountain pass by Newton continuation from the scaled profile");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"normcrit: normalized solutions of coupled cubic systems with a subcritical perturbation"};
  app.footer(kFooter);
  app.require_subcommand(1);
  Overrides o;

  std::vector<CLI::App*> runs;
  runs.push_back(app.add_subcommand("constants", "geometry constants, k1, k2, S and a C_p table"));
  auto* scalar = app.add_subcommand("scalar", "single-equation branch");
  scalar->add_option("--branch", o.branch, "plus | minus")->check(CLI::IsMember({"plus", "minus"}));
  runs.push_back(scalar);
  runs.push_back(app.add_subcommand("ground", "local minimizer (2 < p < 3, T <= gamma1)"));
  runs.push_back(app.add_subcommand("mp", "mountain-pass solution"));
  auto* sw = app.add_subcommand("sweep", "mass halving (or doubling) path, or a beta list");
  sw->add_option("--mode", o.mode, "ground | mp")->check(CLI::IsMember({"ground", "mp"}));
  sw->add_option("--steps", o.steps, "number of halvings");
  sw->add_option("--ratio", o.ratio, "a1 / a2 along the path");
  sw->add_option("--betas", o.betas, "sweep beta at fixed masses instead");
  sw->add_flag("--doubling", o.doubling, "double the masses instead of halving");
  sw->add_flag("--cold", o.cold, "no warm starts (solves may run in parallel)");
  runs.push_back(sw);
  auto* asym = app.add_subcommand("asym", "limit checks on a sweep's result.json");
  asym->add_option("--input", o.input, "sweep result.json (default <out>/result.json)");
  asym->add_option("--regime", o.regime, "small_mass_ground | small_mass_mp | p3_threshold | large_mass");
  runs.push_back(asym);
  runs.push_back(app.add_subcommand("probe", "heuristic flow probe for negative alpha"));
  for (auto* r : runs) common(r, o);

  auto* cache = app.add_subcommand("cache", "profile cache administration");
  std::string action;
  cache->add_option("action", action, "list | clear | warm")->required();
  cache->add_option("--config", o.config);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? cli::ok : cli::usage;
  }

  cli::RunConfig cfg;
  try {
    if (o.config) cfg = cli::load_config(*o.config);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return cli::usage;
  }
  if (cache->parsed()) return cli::cache_admin(action, cfg, std::cout);

  for (auto* r : runs)
    if (r->parsed()) cfg.command = r->get_name();
  o.apply(cfg);
  return cli::execute(cfg, std::cerr);
}
