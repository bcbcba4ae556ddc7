#include "normcrit/cli.hpp"

#include <cmath>
#include <fstream>
#include <ostream>
#include <set>
#include <type_traits>

#include <fmt/format.h>

#include "normcrit/errors.hpp"
#include "normcrit/fiber.hpp"
#include "normcrit/profiles.hpp"

namespace normcrit::cli {

using nlohmann::json;

namespace {

// Reads an object and rejects keys nobody asked for.
class Reader {
 public:
  Reader(const json& j, std::string where) : j_(j), where_(std::move(where)) {
    if (!j_.is_object()) throw Error(ErrorKind::construction, fmt::format("{} must be an object", where_));
  }
  ~Reader() = default;

  template <class T>
  void get(const char* key, T& out) {
    used_.insert(key);
    if (!j_.contains(key)) return;
    if constexpr (std::is_unsigned_v<T> && !std::is_same_v<T, bool>)
      if (const json& v = j_.at(key); !v.is_number_integer() || (!v.is_number_unsigned() && v.get<long long>() < 0))
        throw Error(ErrorKind::construction, fmt::format("{}.{} must be a non-negative integer", where_, key));
    try {
      out = j_.at(key).get<T>();
    } catch (const json::exception&) {
      throw Error(ErrorKind::construction, fmt::format("{}.{} has the wrong type", where_, key));
    }
  }
  const json* sub(const char* key) {
    used_.insert(key);
    return j_.contains(key) ? &j_.at(key) : nullptr;
  }
  void finish() const {
    for (const auto& [k, v] : j_.items())
      if (!used_.count(k)) throw Error(ErrorKind::construction, fmt::format("unknown key '{}' in {}", k, where_));
  }

 private:
  const json& j_;
  std::string where_;
  std::set<std::string> used_;
};

void require(bool ok, const std::string& what) {
  if (!ok) throw Error(ErrorKind::construction, what);
}

const std::set<std::string> kCommands{"constants", "scalar", "ground", "mp", "sweep", "asym", "probe"};

// NaN and infinities become null.
json num(double x) { return std::isfinite(x) ? json(x) : json(nullptr); }
double as_num(const json& j) { return j.is_null() ? NAN : j.get<double>(); }

std::string g17(double x) { return fmt::format("{:.17g}", x); }

void write_text(const std::filesystem::path& file, const std::string& text) {
  std::ofstream out(file, std::ios::binary);
  if (!out) throw Error(ErrorKind::io, fmt::format("cannot write {}", file.string()));
  out << text;
  if (!out) throw Error(ErrorKind::io, fmt::format("write to {} failed", file.string()));
}

void write_profile(const std::filesystem::path& file, const PairState& pair) {
  std::string text = "# r\tu\tv\n";
  const auto r = pair.u.grid->r();
  for (std::size_t i = 0; i < pair.u.size(); ++i)
    text += fmt::format("{}\t{}\t{}\n", g17(r[i]), g17(pair.u[i]), g17(pair.v.size() ? pair.v[i] : 0.0));
  write_text(file, text);
}

json grid_json(const RadialGrid& g) {
  return {{"r_max", g.r_max()}, {"n", g.size()}, {"mapping", std::string(to_string(g.mapping()))},
          {"inner_scale", g.inner_scale()}};
}

json fit_json(const RateFit& f) {
  return {{"name", f.name},       {"slope", f.slope},     {"intercept", f.intercept},
          {"slope_stderr", f.slope_stderr}, {"ci_low", f.ci_low}, {"ci_high", f.ci_high},
          {"residual", f.residual}, {"expected", f.expected}, {"within_tolerance", f.within_tolerance}};
}

int exit_for(ErrorKind k) {
  switch (k) {
    case ErrorKind::admissibility:
    case ErrorKind::geometry: return refused;
    case ErrorKind::construction:
    case ErrorKind::contract:
    case ErrorKind::io: return usage;
    default: return nonconverged;
  }
}

}  // namespace

RunConfig parse_config(const json& j) {
  RunConfig c;
  Reader top(j, "config");
  top.get("command", c.command);
  if (const json* p = top.sub("params")) c.params = params_from_json(*p);
  if (const json* g = top.sub("grid")) {
    Reader r(*g, "grid");
    std::string mapping = std::string(to_string(c.grid.mapping));
    r.get("r_max", c.grid.r_max);
    r.get("n", c.grid.n);
    r.get("mapping", mapping);
    r.get("inner_scale", c.grid.inner_scale);
    r.finish();
    c.grid.mapping = mapping_from_string(mapping);
  }
  if (const json* s = top.sub("solver")) {
    Reader r(*s, "solver");
    r.get("nodes", c.solver.nodes);
    r.get("step", c.solver.step);
    r.get("tolerance", c.solver.tolerance);
    r.get("max_iterations", c.solver.max_iterations);
    r.get("seeds", c.solver.seeds);
    r.get("seed", c.solver.seed);
    r.get("retries", c.solver.retries);
    r.get("continuation", c.solver.continuation);
    r.finish();
  }
  if (const json* s = top.sub("sweep")) {
    Reader r(*s, "sweep");
    r.get("mode", c.sweep.mode);
    r.get("ratio", c.sweep.ratio);
    r.get("steps", c.sweep.steps);
    r.get("doubling", c.sweep.doubling);
    r.get("warm", c.sweep.warm);
    r.get("betas", c.sweep.betas);
    r.finish();
  }
  top.get("branch", c.branch);
  top.get("regime", c.regime);
  std::string input, output = c.output.string();
  top.get("input", input);
  top.get("output", output);
  c.input = input;
  c.output = output;
  top.get("cache_p", c.cache_p);
  top.get("threads", c.threads);
  top.finish();
  return c;
}

void validate(const RunConfig& c) {
  require(c.command.empty() || kCommands.count(c.command), fmt::format("unknown command '{}'", c.command));
  c.params.validate();
  require(c.grid.r_max > 0.0 && c.grid.n >= 64 && c.grid.inner_scale > 0.0, "grid needs r_max > 0, n >= 64");
  require(c.solver.nodes >= 64 && c.solver.nodes <= (1u << 20), "solver.nodes must lie in [64, 2^20]");
  require(c.solver.step > 0.0 && c.solver.tolerance > 0.0, "solver step and tolerance must be positive");
  require(c.solver.max_iterations >= 1 && c.solver.seeds >= 1 && c.solver.retries >= 0,
          "solver needs max_iterations >= 1, seeds >= 1, retries >= 0");
  require(c.sweep.mode == "ground" || c.sweep.mode == "mp", "sweep.mode must be ground or mp");
  require(c.sweep.ratio > 0.0 && c.sweep.steps <= 40, "sweep needs ratio > 0 and at most 40 steps");
  require(c.branch == "plus" || c.branch == "minus", "branch must be plus or minus");
  if (!c.regime.empty()) (void)regime_from_string(c.regime);
  require(c.threads >= 1 && c.threads <= 256, "threads must lie in [1, 256]");
  for (double p : c.cache_p) require(p > 2.0 && p < 4.0, "cache_p entries must lie in (2, 4)");
}

RunConfig load_config(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw Error(ErrorKind::io, fmt::format("cannot read {}", file.string()));
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw Error(ErrorKind::construction, fmt::format("{}: {}", file.string(), e.what()));
  }
  return parse_config(j);
}

json to_json(const RunConfig& c) {
  return {{"command", c.command},
          {"params", to_json(c.params)},
          {"grid",
           {{"r_max", c.grid.r_max},
            {"n", c.grid.n},
            {"mapping", std::string(to_string(c.grid.mapping))},
            {"inner_scale", c.grid.inner_scale}}},
          {"solver",
           {{"nodes", c.solver.nodes},
            {"step", c.solver.step},
            {"tolerance", c.solver.tolerance},
            {"max_iterations", c.solver.max_iterations},
            {"seeds", c.solver.seeds},
            {"seed", c.solver.seed},
            {"retries", c.solver.retries},
            {"continuation", c.solver.continuation}}},
          {"sweep",
           {{"mode", c.sweep.mode},
            {"ratio", c.sweep.ratio},
            {"steps", c.sweep.steps},
            {"doubling", c.sweep.doubling},
            {"warm", c.sweep.warm},
            {"betas", c.sweep.betas}}},
          {"branch", c.branch},
          {"regime", c.regime},
          {"input", c.input.string()},
          {"output", c.output.string()},
          {"cache_p", c.cache_p},
          {"threads", c.threads}};
}

json to_json(const ModelParams& p) {
  return {{"p", p.p},           {"mu1", p.mu1}, {"mu2", p.mu2}, {"beta", p.beta},
          {"alpha1", p.alpha1}, {"alpha2", p.alpha2}, {"a1", p.a1}, {"a2", p.a2}};
}

ModelParams params_from_json(const json& j) {
  ModelParams p;
  Reader r(j, "params");
  r.get("p", p.p);
  r.get("mu1", p.mu1);
  r.get("mu2", p.mu2);
  r.get("beta", p.beta);
  r.get("alpha1", p.alpha1);
  r.get("alpha2", p.alpha2);
  r.get("a1", p.a1);
  r.get("a2", p.a2);
  r.finish();
  return p;
}

json to_json(const SolveResult& r, bool with_profile) {
  json j{{"branch", std::string(to_string(r.branch))},
         {"energy", num(r.energy)},
         {"lambda1", num(r.lambda1)},
         {"lambda2", num(r.lambda2)},
         {"pohozaev_residual", num(r.pohozaev_residual)},
         {"tangent_gradient_residual", num(r.tangent_gradient_residual)},
         {"relative_residual", num(r.relative_residual)},
         {"iterations", r.iterations},
         {"boundary_hit", r.boundary_hit},
         {"converged", r.converged},
         {"message", r.message},
         {"energy_history", r.energy_history}};
  j["pair"] = {{"a1", r.pair.a1}, {"a2", r.pair.a2}};
  if (with_profile && r.pair.u.grid) {
    j["pair"]["grid"] = grid_json(*r.pair.u.grid);
    j["pair"]["u"] = r.pair.u.values;
    j["pair"]["v"] = r.pair.v.values;
  }
  return j;
}

SolveResult solve_result_from_json(const json& j) {
  SolveResult r;
  try {
    r.branch = branch_from_string(j.at("branch").get<std::string>());
    r.energy = as_num(j.at("energy"));
    r.lambda1 = as_num(j.at("lambda1"));
    r.lambda2 = as_num(j.at("lambda2"));
    r.pohozaev_residual = as_num(j.at("pohozaev_residual"));
    r.tangent_gradient_residual = as_num(j.at("tangent_gradient_residual"));
    r.relative_residual = as_num(j.at("relative_residual"));
    r.iterations = j.at("iterations").get<std::size_t>();
    r.boundary_hit = j.at("boundary_hit").get<bool>();
    r.converged = j.at("converged").get<bool>();
    r.message = j.at("message").get<std::string>();
    r.energy_history = j.at("energy_history").get<std::vector<double>>();
    const json& pj = j.at("pair");
    r.pair.a1 = pj.at("a1").get<double>();
    r.pair.a2 = pj.at("a2").get<double>();
    if (pj.contains("grid")) {
      const json& g = pj.at("grid");
      auto grid = build_grid(g.at("r_max").get<double>(), g.at("n").get<std::size_t>(),
                             mapping_from_string(g.at("mapping").get<std::string>()), g.at("inner_scale").get<double>());
      r.pair.u = RadialField(grid, pj.at("u").get<std::vector<double>>());
      r.pair.v = RadialField(grid, pj.at("v").get<std::vector<double>>());
    }
  } catch (const json::exception& e) {
    throw Error(ErrorKind::construction, fmt::format("malformed solve result: {}", e.what()));
  }
  return r;
}

json to_json(const AsymptoticsReport& rep) {
  json steps = json::array();
  for (const auto& s : rep.sequence) {
    json e{{"params", to_json(s.params)}, {"result", to_json(s.result, false)}, {"distance", num(s.distance)}};
    if (rep.regime == Regime::small_mass_mp) e["limit_energy_gap"] = num(s.limit_energy_gap);
    if (s.nu1) e["nu1"] = *s.nu1, e["nu2"] = *s.nu2;
    if (s.bubble)
      e["bubble"] = {{"eps_center", s.bubble->eps_center}, {"eps_fit", s.bubble->eps_fit},
                     {"dist_d12", s.bubble->dist_d12},     {"center_ratio", num(s.bubble->center_ratio)},
                     {"ratio_target", num(s.bubble->ratio_target)}, {"k_check", num(s.bubble->k_check)}};
    if (s.decay)
      e["decay"] = {{"constant_u", s.decay->constant_u}, {"constant_v", s.decay->constant_v},
                    {"r_at_max_u", s.decay->r_at_max_u}, {"r_at_max_v", s.decay->r_at_max_v}};
    steps.push_back(std::move(e));
  }
  json fits = json::array();
  for (const auto& f : rep.fitted_rates) fits.push_back(fit_json(f));
  json j{{"regime", std::string(to_string(rep.regime))},
         {"sequence", std::move(steps)},
         {"distances", rep.distances},
         {"fitted_rates", std::move(fits)},
         {"limit_energy_gap", rep.limit_energy_gap},
         {"notices", rep.notices},
         {"distances_decreasing", rep.distances_decreasing},
         {"gaps_decreasing", rep.gaps_decreasing},
         {"verdict", rep.verdict}};
  j["decay_stable"] = rep.decay_stable ? json(*rep.decay_stable) : json(nullptr);
  return j;
}

json to_json(const ProbeReport& rep) {
  const SignReport& s = rep.last_sign;
  return {{"heuristic", rep.heuristic},
          {"iterations", rep.iterations},
          {"near_critical", rep.near_critical},
          {"flagged_near_critical", rep.flagged_near_critical},
          {"flag_every_near_critical", rep.flag_every_near_critical},
          {"converged_positive", rep.converged_positive},
          {"stop_reason", rep.stop_reason},
          {"spreading_monotone_tail", rep.spreading_monotone_tail},
          {"residual_history", rep.residual_history},
          {"energy_history", rep.energy_history},
          {"spreading", rep.spreading},
          {"last_sign",
           {{"lambda1", num(s.lambda1)},
            {"lambda2", num(s.lambda2)},
            {"lhs", num(s.lhs)},
            {"rhs", num(s.rhs)},
            {"identity_gap", num(s.identity_gap)},
            {"criticality_residual", num(s.criticality_residual)},
            {"flag", s.flag},
            {"verdict", std::string(to_string(s.verdict))}}}};
}

std::string summary_header() {
  return "label,p,mu1,mu2,beta,alpha1,alpha2,a1,a2,branch,converged,energy,lambda1,lambda2,"
         "pohozaev_residual,tangent_gradient_residual,relative_residual,iterations,boundary_hit,error\n";
}

std::string summary_row(const std::string& label, const ModelParams& p, const SolveResult* r,
                        const std::string& error) {
  std::string row = fmt::format("{},{},{},{},{},{},{},{},{}", label, g17(p.p), g17(p.mu1), g17(p.mu2), g17(p.beta),
                                g17(p.alpha1), g17(p.alpha2), g17(p.a1), g17(p.a2));
  if (r)
    row += fmt::format(",{},{},{},{},{},{},{},{},{},{},", to_string(r->branch), r->converged ? 1 : 0, g17(r->energy),
                       g17(r->lambda1), g17(r->lambda2), g17(r->pohozaev_residual),
                       g17(r->tangent_gradient_residual), g17(r->relative_residual), r->iterations,
                       r->boundary_hit ? 1 : 0);
  else
    row += ",,,,,,,,,,,";
  std::string clean = error;
  for (char& ch : clean)
    if (ch == ',' || ch == '\n') ch = ' ';
  return row + clean + "\n";
}

namespace {

struct Outputs {
  json result;
  std::string csv = summary_header();
  int status = ok;
};

void single(Outputs& o, const RunConfig& cfg, const std::string& label, const SolveResult& r, std::ostream& log) {
  o.result = {{"command", cfg.command}, {"params", to_json(cfg.params)}, {"result", to_json(r)}};
  o.csv += summary_row(label, cfg.params, &r);
  write_profile(cfg.output / fmt::format("profile_{}.tsv", label), r.pair);
  log << fmt::format("{}: {} energy {:.12g} lambda ({:.6g}, {:.6g}) |P| {:.3e}\n", label,
                     r.converged ? "converged" : "NOT converged", r.energy, r.lambda1, r.lambda2, r.pohozaev_residual);
  if (!r.converged) {
    log << r.message << "\n";
    o.status = nonconverged;
  }
}

json constants_json(const RunConfig& cfg) {
  const auto& prm = cfg.params;
  auto grid = build_grid(cfg.grid.r_max, cfg.grid.n, cfg.grid.mapping, cfg.grid.inner_scale);
  const auto cc = coupled_constants(prm);
  const auto w = solve_scalar_profile(prm.p, grid);
  const double C = gn_constant(w);
  const auto gc = geometry_constants(prm, C, cc.S_coupled);
  json table = json::array();
  for (double p : {2.25, 2.5, 2.75, 3.0, 3.25, 3.5, 3.75}) {
    const auto wp = solve_scalar_profile(p, grid);
    table.push_back({{"p", p}, {"gamma_p", gamma_p(p)}, {"C_p", gn_constant(wp)}, {"w_mass", wp.mass}});
  }
  return {{"gamma_p", gc.gamma_p},
          {"C_p", C},
          {"w_mass", w.mass},
          {"S", cc.S},
          {"S_squared", cc.S * cc.S},
          {"k1", cc.k1},
          {"k2", cc.k2},
          {"S_coupled", cc.S_coupled},
          {"bubble_level", cc.S_coupled * cc.S_coupled / 4.0},
          {"D1", gc.D1},
          {"D2", gc.D2},
          {"D3", gc.D3},
          {"T", num(gc.T)},
          {"gamma1", num(gc.gamma1)},
          {"gamma0", num(gc.gamma0)},
          {"rho0", num(gc.rho0)},
          {"R0", gc.R0 ? num(*gc.R0) : json(nullptr)},
          {"R1", gc.R1 ? num(*gc.R1) : json(nullptr)},
          {"geometry_available", gc.geometry_available},
          {"C_p_table", std::move(table)}};
}

std::vector<ModelParams> sweep_path(const RunConfig& cfg) {
  std::vector<ModelParams> path;
  ModelParams base = cfg.params;
  base.a2 = base.a1 / cfg.sweep.ratio;
  if (!cfg.sweep.betas.empty()) {
    for (double b : cfg.sweep.betas) {
      ModelParams q = cfg.params;
      q.beta = b;
      path.push_back(q);
    }
    return path;
  }
  if (!cfg.sweep.doubling) return halving_path(base, cfg.sweep.steps);
  for (std::size_t k = 0; k <= cfg.sweep.steps; ++k) {
    ModelParams q = base;
    q.a1 = std::ldexp(base.a1, static_cast<int>(k));
    q.a2 = std::ldexp(base.a2, static_cast<int>(k));
    path.push_back(q);
  }
  return path;
}

void run_sweep(Outputs& o, const RunConfig& cfg, std::ostream& log) {
  const auto path = sweep_path(cfg);
  const SweepMode mode = cfg.sweep.mode == "mp" ? SweepMode::mountain_pass : SweepMode::ground;
  const auto entries = sweep(path, mode, cfg.solver, cfg.sweep.warm, cfg.threads);
  json list = json::array();
  bool any_failure = false, any_nonconverged = false;
  for (std::size_t i = 0; i < entries.size(); ++i) {
    const auto& e = entries[i];
    const std::string label = fmt::format("{:03}", i);
    json item{{"params", to_json(e.params)}};
    if (e.result) {
      item["result"] = to_json(*e.result);
      o.csv += summary_row(label, e.params, &*e.result);
      write_profile(cfg.output / fmt::format("profile_{}.tsv", label), e.result->pair);
      if (!e.result->converged) any_nonconverged = true;
      log << fmt::format("{} a = ({:.6g}, {:.6g}) beta {:.6g}: energy {:.12g}{}\n", label, e.params.a1, e.params.a2,
                         e.params.beta, e.result->energy, e.result->converged ? "" : " (not converged)");
    } else {
      item["error"] = e.error;
      item["error_kind"] = e.error_kind;
      o.csv += summary_row(label, e.params, nullptr, e.error_kind + ": " + e.error);
      any_failure = true;
      if (e.error_kind != "admissibility" && e.error_kind != "geometry") any_nonconverged = true;
      log << fmt::format("{} a = ({:.6g}, {:.6g}) beta {:.6g}: {} error: {}\n", label, e.params.a1, e.params.a2,
                         e.params.beta, e.error_kind, e.error);
    }
    list.push_back(std::move(item));
  }
  o.result = {{"command", "sweep"},
              {"mode", cfg.sweep.mode},
              {"doubling", cfg.sweep.doubling},
              {"continuation", cfg.solver.continuation},
              {"entries", std::move(list)}};
  o.status = any_nonconverged ? nonconverged : any_failure ? refused : ok;
}

void run_asym(Outputs& o, const RunConfig& cfg, std::ostream& log) {
  const auto input = cfg.input.empty() ? cfg.output / "result.json" : cfg.input;
  std::ifstream in(input);
  if (!in) throw Error(ErrorKind::io, fmt::format("cannot read sweep results from {}", input.string()));
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw Error(ErrorKind::construction, fmt::format("{}: {}", input.string(), e.what()));
  }
  if (j.value("command", "") != "sweep")
    throw Error(ErrorKind::construction, fmt::format("{} does not hold sweep results", input.string()));
  std::vector<SweepEntry> entries;
  for (const auto& item : j.at("entries")) {
    SweepEntry e;
    e.params = params_from_json(item.at("params"));
    if (item.contains("result")) e.result = solve_result_from_json(item.at("result"));
    e.error = item.value("error", "");
    e.error_kind = item.value("error_kind", "");
    entries.push_back(std::move(e));
  }
  Regime regime;
  if (!cfg.regime.empty())
    regime = regime_from_string(cfg.regime);
  else if (j.value("mode", "ground") == "mp")
    regime = j.value("doubling", false) ? Regime::large_mass : Regime::small_mass_mp;
  else
    regime = Regime::small_mass_ground;
  AsymptoticsReport rep;
  switch (regime) {
    case Regime::small_mass_ground: rep = ground_limit_check(entries, LimitMode::small_mass); break;
    case Regime::large_mass: rep = ground_limit_check(entries, LimitMode::large_mass); break;
    case Regime::p3_threshold: rep = ground_limit_check(entries, LimitMode::p3_threshold); break;
    case Regime::small_mass_mp: rep = bubble_limit_check(entries); break;
  }
  o.result = {{"command", "asym"}, {"input", input.string()}, {"report", to_json(rep)}};
  for (std::size_t i = 0; i < rep.sequence.size(); ++i) {
    const auto& s = rep.sequence[i];
    o.csv += summary_row(fmt::format("{:03}", i), s.params, &s.result);
    log << fmt::format("{:03} a = ({:.6g}, {:.6g}) distance {:.6e}\n", i, s.params.a1, s.params.a2, s.distance);
  }
  for (const auto& n : rep.notices) log << n << "\n";
  for (const auto& f : rep.fitted_rates)
    log << fmt::format("rate {}: {:.6g} (expected {:.6g}, 95% [{:.6g}, {:.6g}])\n", f.name, f.slope, f.expected,
                       f.ci_low, f.ci_high);
  log << "verdict: " << rep.verdict << "\n";
}

}  // namespace

int execute(const RunConfig& cfg, std::ostream& log) {
  try {
    validate(cfg);
    std::filesystem::create_directories(cfg.output);
    Outputs o;
    const auto& prm = cfg.params;
    if (cfg.command == "constants") {
      o.result = {{"command", "constants"}, {"params", to_json(prm)}, {"constants", constants_json(cfg)}};
      o.csv += summary_row("constants", prm, nullptr);
      const auto& c = o.result["constants"];
      log << fmt::format("gamma_p {}  T {}  gamma1 {}  k1 {}  k2 {}  S {}  C_p {}\n", c["gamma_p"].dump(),
                         c["T"].dump(), c["gamma1"].dump(), c["k1"].dump(), c["k2"].dump(), c["S"].dump(),
                         c["C_p"].dump());
    } else if (cfg.command == "scalar") {
      const auto b = cfg.branch == "plus" ? ScalarBranch::plus : ScalarBranch::minus;
      single(o, cfg, "scalar", solve_scalar_branch(prm.p, prm.mu1, prm.alpha1, prm.a1, b, cfg.solver), log);
    } else if (cfg.command == "ground") {
      single(o, cfg, "ground", solve_local_min(prm, {}, cfg.solver), log);
    } else if (cfg.command == "mp") {
      single(o, cfg, "mp", solve_mountain_pass(prm, {}, cfg.solver), log);
    } else if (cfg.command == "sweep") {
      run_sweep(o, cfg, log);
    } else if (cfg.command == "asym") {
      run_asym(o, cfg, log);
    } else if (cfg.command == "probe") {
      const auto rep = nonexistence_probe(prm, cfg.solver);
      o.result = {{"command", "probe"}, {"params", to_json(prm)}, {"report", to_json(rep)}};
      o.csv += summary_row("probe", prm, nullptr, rep.stop_reason);
      log << fmt::format("probe (heuristic): {} iterations, {} near-critical, {} flagged, converged positive: {}\n",
                         rep.iterations, rep.near_critical, rep.flagged_near_critical, rep.converged_positive);
      log << "stop: " << rep.stop_reason << "\n";
    } else {
      throw Error(ErrorKind::construction, "no command given");
    }
    o.result["config"] = to_json(cfg);
    write_text(cfg.output / "result.json", o.result.dump(2) + "\n");
    write_text(cfg.output / "summary.csv", o.csv);
    return o.status;
  } catch (const Error& e) {
    log << fmt::format("error ({}): {}\n", to_string(e.kind()), e.what());
    return exit_for(e.kind());
  } catch (const std::filesystem::filesystem_error& e) {
    log << "error (io): " << e.what() << "\n";
    return usage;
  }
}

int cache_admin(const std::string& action, const RunConfig& cfg, std::ostream& out) {
  try {
    if (action == "list") {
      const auto entries = list_cache();
      out << fmt::format("{:<40} {:>6} {:>7} {:>9} {:>10} {:>14}\n", "file", "p", "N", "R", "mapping", "|w_p|");
      for (const auto& e : entries)
        out << fmt::format("{:<40} {:>6} {:>7} {:>9} {:>10} {:>14.10g}\n", e.file.filename().string(), e.p, e.n,
                           e.r_max, e.mapping, e.mass);
      return ok;
    }
    if (action == "clear") {
      out << fmt::format("removed {} files from {}\n", clear_cache(), cache_directory().string());
      return ok;
    }
    if (action == "warm") {
      validate(cfg);
      auto grid = build_grid(cfg.grid.r_max, cfg.grid.n, cfg.grid.mapping, cfg.grid.inner_scale);
      for (double p : cfg.cache_p) {
        const auto w = solve_scalar_profile(p, grid);
        out << fmt::format("p = {}: |w_p| = {:.12g} -> {}\n", p, w.mass, cache_file(p, *grid).string());
      }
      return ok;
    }
    out << fmt::format("unknown cache action '{}' (list, clear, warm)\n", action);
    return usage;
  } catch (const Error& e) {
    out << fmt::format("error ({}): {}\n", to_string(e.kind()), e.what());
    return exit_for(e.kind());
  } catch (const std::filesystem::filesystem_error& e) {
    out << "error (io): " << e.what() << "\n";
    return usage;
  }
}

}  // namespace normcrit::cli
