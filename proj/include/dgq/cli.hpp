// Copyright 2026 The dgq Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef DGQ_CLI_HPP_
#define DGQ_CLI_HPP_

#include <json.hpp>

#include <chrono>
#include <cstdint>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "dgq/config.hpp"
#include "dgq/envs.hpp"
#include "dgq/error.hpp"
#include "dgq/eval.hpp"
#include "dgq/grid.hpp"
#include "dgq/isaacs.hpp"
#include "dgq/qlearn.hpp"

namespace dgq::cli {

namespace fs = std::filesystem;

inline constexpr std::string_view kToolVersion = "0.1.0";
inline constexpr const char* kOutputRootEnv = "DGQ_OUTPUT_ROOT";

inline fs::path output_root() {
  const char* v = std::getenv(kOutputRootEnv);
  return (v != nullptr && *v != '\0') ? fs::path(v) : fs::path("dgq_runs");
}

// Config sources shared by every subcommand. Later sources win: file, then
// --set overrides, then the dedicated flags.
struct ConfigArgs {
  std::string config_path;
  std::vector<std::string> overrides;
  std::optional<std::string> env;
  std::optional<std::string> algorithm;
  std::optional<std::uint64_t> seed;
  std::optional<std::uint64_t> steps;
  std::optional<double> dt;
};

inline ResolvedConfig resolve_args(const ConfigArgs& a) {
  ConfigTree tree = a.config_path.empty() ? ConfigTree::object() : load_config(a.config_path);
  for (const auto& o : a.overrides) apply_override(tree, o);
  if (a.env) tree["environment"] = *a.env;
  if (a.algorithm) tree["algorithm"] = *a.algorithm;
  if (a.seed) tree["seed"] = *a.seed;
  if (a.steps) tree["training.steps"] = *a.steps;
  if (a.dt) tree["dt"] = *a.dt;
  return resolve(tree);
}

inline DiscretizedGame make_game_for(const ResolvedConfig& r) {
  return make_discretized(r.train.environment, r.train.dt, r.train.u_mesh, r.train.v_mesh);
}

inline std::string utc_now() {
  const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  std::ostringstream os;
  os << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return os.str();
}

inline void write_text(const fs::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  if (!out) throw Error("cannot write '" + p.string() + "'");
  out << text;
  if (!out) throw Error("write failed for '" + p.string() + "'");
}

inline nlohmann::json read_json(const fs::path& p) {
  std::ifstream in(p);
  if (!in) throw Error("cannot read '" + p.string() + "'");
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw Error("'" + p.string() + "' is not valid JSON: " + e.what());
  }
}

inline nlohmann::json manifest(const std::string& command, const ResolvedConfig& r,
                               const std::vector<std::uint64_t>& seeds, const nlohmann::json& artifacts,
                               const std::string& started, double seconds) {
  return {{"tool", "dgq"},
          {"version", kToolVersion},
          {"command", command},
          {"config", r.tree},
          {"config_hash", config_hash(r)},
          {"seeds", seeds},
          {"artifacts", artifacts},
          {"started_utc", started},
          {"wall_seconds", seconds}};
}

inline nlohmann::json checkpoint_json(const TrainResult& t) {
  nlohmann::json heads = nlohmann::json::array();
  for (const auto& [name, head] : t.heads) heads.push_back({{"name", name}, {"head", head.to_json()}});
  return {{"format", "dgq-checkpoint"},
          {"version", 1},
          {"algorithm", algorithm_name(t.algorithm)},
          {"heads", heads}};
}

inline std::pair<Algorithm, NamedHeads> load_checkpoint(const fs::path& p) {
  const nlohmann::json j = read_json(p);
  if (j.value("format", "") != "dgq-checkpoint") throw Error("'" + p.string() + "' is not a checkpoint");
  NamedHeads heads;
  for (const auto& h : j.at("heads")) {
    heads.emplace_back(h.at("name").get<std::string>(), QHead::from_json(h.at("head")));
  }
  return {parse_algorithm(j.at("algorithm").get<std::string>()), std::move(heads)};
}

inline std::string run_name(const ResolvedConfig& r) {
  return r.train.environment + "-" + std::string(algorithm_name(r.train.algorithm)) + "-" +
         config_hash(r) + "-seed" + std::to_string(r.train.seed);
}

// Trains one run; writes config.yaml, log.jsonl, checkpoint.json and
// manifest.json into <root>/<env>-<algo>-<hash>-seed<N>. Returns the directory.
inline fs::path train_run(const ResolvedConfig& r, const fs::path& root, std::ostream& progress) {
  const fs::path dir = root / run_name(r);
  fs::create_directories(dir);
  const std::string started = utc_now();
  const auto t0 = std::chrono::steady_clock::now();
  const DiscretizedGame dg = make_game_for(r);
  std::ofstream log(dir / "log.jsonl", std::ios::binary);
  if (!log) throw Error("cannot write '" + (dir / "log.jsonl").string() + "'");
  TrainHooks hooks;
  hooks.on_episode = [&](const EpisodeRecord& rec) {
    log << to_json(rec).dump() << '\n';
    if (rec.episode % 500 == 0) {
      progress << "episode " << rec.episode << " steps " << rec.steps << " J " << rec.value << '\n';
    }
  };
  const TrainResult result = train(dg, r.train, hooks);
  log.close();
  write_text(dir / "checkpoint.json", checkpoint_json(result).dump());
  write_text(dir / "config.yaml", to_yaml(r.tree));
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  write_text(dir / "manifest.json",
             manifest("train", r, {r.train.seed},
                      {{"checkpoint", "checkpoint.json"}, {"log", "log.jsonl"}, {"config", "config.yaml"}},
                      started, secs)
                     .dump(2) +
                 "\n");
  return dir;
}

// Reloads the resolved config of a run directory from its manifest.
inline ResolvedConfig load_run_config(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw UsageError(dir.string(), "no such run directory '" + dir.string() + "'");
  const nlohmann::json m = read_json(dir / "manifest.json");
  ConfigTree tree = ConfigTree::object();
  for (const auto& [k, v] : m.at("config").items()) tree[k] = v;
  return resolve(tree);
}

struct SolveSummary {
  fs::path dir;
  nlohmann::json summary;
};

inline SolveSummary solve_run(const ResolvedConfig& r, const fs::path& root) {
  const DiscretizedGame dg = make_game_for(r);
  if (dg.state_dim() > kMaxGridDims || r.solve_nodes == 0) {
    throw Unsupported("solve: " + r.train.environment + " has state dimension " +
                      std::to_string(dg.state_dim()) + "; the grid solver supports at most " +
                      std::to_string(kMaxGridDims));
  }
  const std::string started = utc_now();
  const auto t0 = std::chrono::steady_clock::now();
  const StateGrid grid = StateGrid::for_game(dg, r.solve_nodes, r.solve_safety);
  const SolveResult s = solve(dg, grid, {r.solve_threads});
  const GapStats gaps = gap_stats(dg, s);
  const auto& x0 = dg.game().initial_state;
  const fs::path dir = root / ("solve-" + r.train.environment + "-" + config_hash(r));
  fs::create_directories(dir);
  export_grid(s.upper, (dir / "upper.dgqv").string());
  export_grid(s.lower, (dir / "lower.dgqv").string());
  nlohmann::json ranges = nlohmann::json::array();
  for (const auto& iv : grid.ranges()) ranges.push_back({iv.lo, iv.hi});
  nlohmann::json summary{{"environment", r.train.environment},
                         {"dt", r.train.dt},
                         {"nodes", grid.nodes()},
                         {"ranges", ranges},
                         {"upper_x0", s.upper.at(0, x0)},
                         {"lower_x0", s.lower.at(0, x0)},
                         {"gap_x0", gaps.at_x0},
                         {"max_gap_in_reach", gaps.max_in_reach},
                         {"clamped", s.clamped}};
  const auto info = find_environment(r.train.environment);
  if (info.known_value) summary["reference_value"] = *info.known_value;
  write_text(dir / "summary.json", summary.dump(2) + "\n");
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  write_text(dir / "manifest.json",
             manifest("solve", r, {}, {{"upper", "upper.dgqv"}, {"lower", "lower.dgqv"}, {"summary", "summary.json"}},
                      started, secs)
                     .dump(2) +
                 "\n");
  return {dir, summary};
}

// Policies extracted greedily from a fresh grid solve.
inline std::pair<Policy, Policy> grid_greedy_policies(const DiscretizedGame& dg, const ResolvedConfig& r) {
  if (dg.state_dim() > kMaxGridDims || r.solve_nodes == 0) {
    throw Unsupported("grid-greedy policies need state dimension <= 3");
  }
  const SolveResult s = solve(dg, StateGrid::for_game(dg, r.solve_nodes, r.solve_safety), {r.solve_threads});
  auto up = std::make_shared<const ValueGrid>(s.upper);
  auto lo = std::make_shared<const ValueGrid>(s.lower);
  return {grid_greedy_policy(dg, up, Side::kU), grid_greedy_policy(dg, lo, Side::kV)};
}

enum class PolicySource { kRuns, kTrain, kGridGreedy };

struct EvaluateArgs {
  ConfigArgs config;
  PolicySource source = PolicySource::kRuns;
  std::vector<std::string> runs;
  std::optional<std::vector<std::string>> methods;
  std::optional<std::size_t> repeats;
};

// Evaluates policies from run directories, from fresh training over the
// configured seeds, or from a grid solve; writes report.json, report.csv and
// manifest.json. Returns the evaluation directory.
inline fs::path evaluate_cmd(const EvaluateArgs& a, const fs::path& root, std::ostream& progress) {
  ResolvedConfig base = a.source == PolicySource::kRuns && !a.runs.empty()
                            ? load_run_config(a.runs.front())
                            : resolve_args(a.config);
  if (a.source == PolicySource::kRuns && !a.runs.empty()) {
    // Evaluation keys may still be overridden from the command line.
    ConfigTree tree = base.tree;
    for (const auto& o : a.config.overrides) apply_override(tree, o);
    base = resolve(tree);
  }
  if (a.methods) {
    if (a.methods->empty()) throw UsageError("methods", "evaluate needs at least one adversary method");
    ConfigTree tree = base.tree;
    tree["evaluation.methods"] = *a.methods;
    base = resolve(tree);
  }
  if (base.eval.methods.empty()) {
    throw UsageError("evaluation.methods", "evaluate needs at least one adversary method");
  }
  std::vector<std::uint64_t> seeds = base.seeds;
  if (a.repeats) {
    if (*a.repeats == 0) throw UsageError("repeats", "--repeats must be positive");
    seeds.resize(*a.repeats);
    for (std::size_t k = 0; k < seeds.size(); ++k) seeds[k] = k;
  }

  EvalReport report;
  report.environment = base.train.environment;
  const std::string started = utc_now();
  const auto t0 = std::chrono::steady_clock::now();
  nlohmann::json sources = nlohmann::json::array();
  auto add_run = [&](const DiscretizedGame& dg, const Policy& pu, const Policy& pv, std::uint64_t seed) {
    EvalOptions opt = base.eval;
    opt.seed = seed;
    report.seeds.push_back(seed);
    report.runs.push_back(evaluate_pair(dg, pu, pv, opt));
    progress << "seed " << seed << ": V_u_approx " << report.runs.back().v_u_approx << ", V_v_approx "
             << report.runs.back().v_v_approx << '\n';
  };

  switch (a.source) {
    case PolicySource::kRuns: {
      if (a.runs.empty()) throw UsageError("run", "evaluate needs --run, --train or --grid-greedy");
      for (const auto& d : a.runs) {
        const ResolvedConfig rc = load_run_config(d);
        if (rc.train.environment != base.train.environment) {
          throw UsageError(d, "run '" + d + "' uses a different environment");
        }
        const auto [algo, heads] = load_checkpoint(fs::path(d) / "checkpoint.json");
        report.algorithm = std::string(algorithm_name(algo));
        const auto [pu, pv] = make_policies(algo, heads);
        add_run(make_game_for(rc), pu, pv, rc.train.seed);
        sources.push_back(fs::absolute(d).lexically_normal().string());
      }
      break;
    }
    case PolicySource::kTrain: {
      report.algorithm = std::string(algorithm_name(base.train.algorithm));
      for (std::uint64_t seed : seeds) {
        ConfigTree tree = base.tree;
        tree["seed"] = seed;
        const ResolvedConfig rc = resolve(tree);
        const fs::path dir = train_run(rc, root, progress);
        const auto [algo, heads] = load_checkpoint(dir / "checkpoint.json");
        const auto [pu, pv] = make_policies(algo, heads);
        add_run(make_game_for(rc), pu, pv, seed);
        sources.push_back(dir.filename().string());
      }
      break;
    }
    case PolicySource::kGridGreedy: {
      report.algorithm = "grid_greedy";
      const DiscretizedGame dg = make_game_for(base);
      const auto [pu, pv] = grid_greedy_policies(dg, base);
      for (std::uint64_t seed : seeds) add_run(dg, pu, pv, seed);
      break;
    }
  }

  nlohmann::json id = base.tree;
  id["sources"] = sources;
  id["source_kind"] = static_cast<int>(a.source);
  id["report_seeds"] = report.seeds;
  const fs::path dir = root / ("eval-" + report.environment + "-" + report.algorithm + "-" +
                               fnv1a_hex(id.dump()).substr(0, 12));
  fs::create_directories(dir);
  nlohmann::json rj = to_json(report);
  rj["sources"] = sources;
  write_text(dir / "report.json", rj.dump(2) + "\n");
  write_text(dir / "report.csv", report_csv_header() + "\n" + report_csv_row(report) + "\n");
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  write_text(dir / "manifest.json",
             manifest("evaluate", base, report.seeds, {{"report", "report.json"}, {"table", "report.csv"}},
                      started, secs)
                     .dump(2) +
                 "\n");
  return dir;
}

inline nlohmann::json check_isaacs_cmd(const ConfigArgs& a, std::size_t samples, std::uint64_t seed) {
  const ResolvedConfig r = resolve_args(a);
  if (samples == 0) throw UsageError("samples", "check-isaacs needs at least one sample");
  const DiscretizedGame dg = make_game_for(r);
  const std::vector<double> scales{0.1, 1.0, 10.0};
  const auto pts = default_hamiltonian_samples(dg.game(), r.train.dt, samples, scales, seed);
  const IsaacsGapResult res = isaacs_gap(dg.game(), dg.u_mesh(), dg.v_mesh(), pts);
  nlohmann::json per_scale = nlohmann::json::object();
  for (std::size_t s = 0; s < scales.size(); ++s) {
    double worst = 0.0;
    for (std::size_t k = s; k < res.gaps.size(); k += scales.size()) worst = std::max(worst, res.gaps[k]);
    per_scale[shortest_double(scales[s])] = worst;
  }
  return {{"environment", r.train.environment},
          {"u_mesh", dg.u_mesh().label()},
          {"v_mesh", dg.v_mesh().label()},
          {"samples", pts.size()},
          {"max_gap", res.max_gap},
          {"max_gap_by_norm", per_scale},
          {"separated", dg.game().separated.has_value()}};
}

// One CSV row per evaluation directory, plus plot-ready series.
struct ReportTable {
  std::string csv;
  nlohmann::json series;
};

inline ReportTable report_cmd(const std::vector<std::string>& dirs) {
  if (dirs.empty()) throw UsageError("dirs", "report needs at least one result directory");
  ReportTable t;
  t.csv = report_csv_header() + "\n";
  t.series = nlohmann::json::array();
  for (const auto& d : dirs) {
    const fs::path p = fs::path(d) / "report.json";
    if (!fs::is_directory(d)) throw Error("no such result directory '" + d + "'");
    if (!fs::exists(p)) throw Error("'" + d + "' has no report.json");
    const nlohmann::json j = read_json(p);
    EvalReport r;
    r.environment = j.at("environment").get<std::string>();
    r.algorithm = j.at("algorithm").get<std::string>();
    r.seeds = j.at("seeds").get<std::vector<std::uint64_t>>();
    const auto maxv = j.at("maximum_values").get<std::vector<double>>();
    const auto minv = j.at("minimum_values").get<std::vector<double>>();
    if (maxv.size() != minv.size() || maxv.empty()) throw Error("'" + p.string() + "' has malformed value arrays");
    for (std::size_t k = 0; k < maxv.size(); ++k) {
      PairEvaluation e;
      e.v_u_approx = maxv[k];
      e.v_v_approx = minv[k];
      r.runs.push_back(e);
    }
    t.csv += report_csv_row(r) + "\n";
    const Aggregate u = r.aggregate_u();
    const Aggregate v = r.aggregate_v();
    t.series.push_back({{"algorithm", r.algorithm},
                        {"environment", r.environment},
                        {"maximum_values", maxv},
                        {"minimum_values", minv},
                        {"u", {u.best, u.mean, u.worst}},
                        {"v", {v.best, v.mean, v.worst}}});
  }
  return t;
}

}  // namespace dgq::cli

#endif  // DGQ_CLI_HPP_
