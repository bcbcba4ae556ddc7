#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "normcrit/asymptotics.hpp"
#include "normcrit/radial_grid.hpp"
#include "normcrit/solvers.hpp"

namespace normcrit::cli {

enum Exit : int { ok = 0, usage = 1, nonconverged = 2, refused = 3 };

// Profile grid for constants and cache warming; solvers size their own
// grids from solver.nodes.
struct GridSpec {
  double r_max = 20.0;
  std::size_t n = 4096;
  Mapping mapping = Mapping::graded;
  double inner_scale = 1.0;
};

struct SweepSpec {
  std::string mode = "ground";  // ground | mp
  double ratio = 1.0;           // a1 / a2
  std::size_t steps = 5;
  bool doubling = false;        // masses doubled instead of halved
  bool warm = true;
  std::vector<double> betas;    // when set, sweeps beta at fixed masses
};

struct RunConfig {
  std::string command;
  ModelParams params;
  GridSpec grid;
  SolverOptions solver;
  SweepSpec sweep;
  std::string branch = "plus";  // scalar command
  std::string regime;           // asym; derived from the sweep when empty
  std::filesystem::path input;  // asym; <output>/result.json when empty
  std::vector<double> cache_p{2.5, 3.0, 3.5};
  std::filesystem::path output = "out";
  unsigned threads = 1;
};

// Throws Error(construction) on unknown keys, wrong types or values out of
// range.
RunConfig parse_config(const nlohmann::json& j);
RunConfig load_config(const std::filesystem::path& file);
nlohmann::json to_json(const RunConfig& cfg);

nlohmann::json to_json(const ModelParams& prm);
ModelParams params_from_json(const nlohmann::json& j);
nlohmann::json to_json(const SolveResult& r, bool with_profile = true);
SolveResult solve_result_from_json(const nlohmann::json& j);
nlohmann::json to_json(const AsymptoticsReport& rep);
nlohmann::json to_json(const ProbeReport& rep);

// Fixed columns; see summary_header().
std::string summary_header();
std::string summary_row(const std::string& label, const ModelParams& prm, const SolveResult* r,
                        const std::string& error = {});

// Runs one command and writes result.json, summary.csv and profile_*.tsv
// into cfg.output. Messages go to log.
int execute(const RunConfig& cfg, std::ostream& log);

// list | clear | warm
int cache_admin(const std::string& action, const RunConfig& cfg, std::ostream& out);

}  // namespace normcrit::cli
