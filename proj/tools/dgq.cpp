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

// dgq: batch front-end for training, solving, evaluating and reporting.

#include <CLI11.hpp>

#include <iostream>
#include <string>
#include <vector>

#include "dgq/cli.hpp"

namespace {

constexpr int kExitUsage = 2;
constexpr int kExitRuntime = 1;

void add_config_options(CLI::App* cmd, dgq::cli::ConfigArgs& a) {
  cmd->add_option("-c,--config", a.config_path, "YAML config file")->check(CLI::ExistingFile);
  cmd->add_option("-s,--set", a.overrides, "dot.path=value override (repeatable)");
  cmd->add_option("--env", a.env, "environment name");
  cmd->add_option("--seed", a.seed, "random seed");
  cmd->add_option("--steps", a.steps, "training steps");
  cmd->add_option("--dt", a.dt, "uniform time step");
}

std::vector<std::string> split_csv(const std::string& s) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (c == ',') {
      if (!cur.empty()) out.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  if (!cur.empty()) out.push_back(cur);
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Deep Q-learning and grid oracles for zero-sum positional differential games"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(dgq::cli::kToolVersion));

  dgq::cli::ConfigArgs train_args;
  auto* train = app.add_subcommand("train", "train both agents and write a run directory");
  add_config_options(train, train_args);
  train->add_option("--algorithm", train_args.algorithm, "nashdqn|madqn|counterdqn|idqn|didqn|2xddqn");

  dgq::cli::ConfigArgs solve_args;
  std::optional<std::size_t> nodes;
  auto* solve = app.add_subcommand("solve", "grid backward induction for upper and lower values");
  add_config_options(solve, solve_args);
  solve->add_option("--nodes", nodes, "grid nodes per dimension");

  dgq::cli::EvaluateArgs eval_args;
  std::string methods;
  bool from_train = false;
  bool grid_greedy = false;
  auto* evaluate = app.add_subcommand("evaluate", "attack frozen policies with adversaries");
  add_config_options(evaluate, eval_args.config);
  evaluate->add_option("--algorithm", eval_args.config.algorithm, "algorithm for --train");
  evaluate->add_option("--run", eval_args.runs, "run directory with a checkpoint (repeatable)");
  auto* train_flag = evaluate->add_flag("--train", from_train, "train one run per configured seed first");
  auto* greedy_flag = evaluate->add_flag("--grid-greedy", grid_greedy, "evaluate grid-greedy policies");
  train_flag->excludes(greedy_flag);
  evaluate->add_option("--methods", methods, "comma list of grid,dqn,random");
  evaluate->add_option("--repeats", eval_args.repeats, "number of runs (seeds 0..N-1)");

  dgq::cli::ConfigArgs isaacs_args;
  std::size_t samples = 256;
  std::uint64_t sample_seed = 0;
  auto* isaacs = app.add_subcommand("check-isaacs", "saddle-point gap of the small Hamiltonian game");
  add_config_options(isaacs, isaacs_args);
  isaacs->add_option("--samples", samples, "number of (t, x) draws");
  isaacs->add_option("--sample-seed", sample_seed, "seed for the sample draws");
  std::string u_mesh, v_mesh;
  isaacs->add_option("--mesh-u", u_mesh, "first agent's mesh spec");
  isaacs->add_option("--mesh-v", v_mesh, "second agent's mesh spec");

  std::vector<std::string> report_dirs;
  std::string series_path;
  auto* report = app.add_subcommand("report", "aggregate evaluation directories into one table");
  report->add_option("dirs", report_dirs, "evaluation directories")->required();
  report->add_option("--series", series_path, "also write plot-ready JSON series here");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  }

  const auto root = dgq::cli::output_root();
  try {
    if (*train) {
      const auto r = dgq::cli::resolve_args(train_args);
      const auto dir = dgq::cli::train_run(r, root, std::cerr);
      std::cout << dir.string() << '\n';
    } else if (*solve) {
      if (nodes) solve_args.overrides.push_back("solve.grid_nodes=" + std::to_string(*nodes));
      const auto r = dgq::cli::resolve_args(solve_args);
      const auto s = dgq::cli::solve_run(r, root);
      std::cout << s.summary.dump(2) << '\n' << s.dir.string() << '\n';
    } else if (*evaluate) {
      if (!methods.empty() || evaluate->count("--methods") > 0) eval_args.methods = split_csv(methods);
      eval_args.source = from_train      ? dgq::cli::PolicySource::kTrain
                         : grid_greedy ? dgq::cli::PolicySource::kGridGreedy
                                       : dgq::cli::PolicySource::kRuns;
      const auto dir = dgq::cli::evaluate_cmd(eval_args, root, std::cerr);
      std::cout << dir.string() << '\n';
    } else if (*isaacs) {
      if (!u_mesh.empty()) isaacs_args.overrides.push_back("mesh.u=" + u_mesh);
      if (!v_mesh.empty()) isaacs_args.overrides.push_back("mesh.v=" + v_mesh);
      std::cout << dgq::cli::check_isaacs_cmd(isaacs_args, samples, sample_seed).dump(2) << '\n';
    } else if (*report) {
      const auto t = dgq::cli::report_cmd(report_dirs);
      std::cout << t.csv;
      if (!series_path.empty()) dgq::cli::write_text(series_path, t.series.dump(2) + "\n");
    }
  } catch (const dgq::UsageError& e) {
    std::cerr << "dgq: usage error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "dgq: error: " << e.what() << '\n';
    return kExitRuntime;
  }
  return 0;
}
