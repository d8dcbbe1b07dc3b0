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

#ifndef DGQ_EVAL_HPP_
#define DGQ_EVAL_HPP_

#include <json.hpp>

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <limits>
#include <memory>
#include <numeric>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "dgq/envs.hpp"
#include "dgq/error.hpp"
#include "dgq/game.hpp"
#include "dgq/grid.hpp"
#include "dgq/policy.hpp"
#include "dgq/qlearn.hpp"

namespace dgq {

enum class AdversaryMethod { kGridBestResponse, kDqnBestResponse, kRandomSearch };

inline std::string_view method_name(AdversaryMethod m) {
  switch (m) {
    case AdversaryMethod::kGridBestResponse: return "grid";
    case AdversaryMethod::kDqnBestResponse: return "dqn";
    case AdversaryMethod::kRandomSearch: return "random";
  }
  return "?";
}

inline AdversaryMethod parse_method(std::string_view s) {
  if (s == "grid" || s == "grid_best_response") return AdversaryMethod::kGridBestResponse;
  if (s == "dqn" || s == "dqn_best_response") return AdversaryMethod::kDqnBestResponse;
  if (s == "random" || s == "random_search") return AdversaryMethod::kRandomSearch;
  throw InvalidArgument("unknown adversary method '" + std::string(s) + "'");
}

struct HyperDraw {
  double learning_rate = 1e-3;
  std::vector<int> hidden{256, 128};
};

// lr in {1e-3, 1e-4} crossed with two network sizes.
inline std::vector<HyperDraw> default_hyper_draws() {
  return {{1e-3, {256, 128}}, {1e-4, {256, 128}}, {1e-3, {64, 64}}, {1e-4, {64, 64}}};
}

struct EvalOptions {
  std::vector<AdversaryMethod> methods{AdversaryMethod::kGridBestResponse,
                                       AdversaryMethod::kRandomSearch};
  std::size_t grid_nodes = 0;  // 0: catalog default
  std::size_t dqn_draws = 2;
  std::size_t dqn_steps = 50000;
  std::size_t random_sequences = 200;
  // Rollouts averaged per attempt when a policy is mixed.
  std::size_t mixed_rollouts = 20;
  std::uint64_t seed = 0;
};

// Expected J of a policy pair: one rollout when both are pure, otherwise the
// mean of `rollouts` sampled episodes.
inline double play(const DiscretizedGame& dg, const Policy& pu, const Policy& pv, std::uint64_t seed,
                   std::size_t rollouts = 20) {
  Rng rng(seed);
  if (pu.is_pure() && pv.is_pure()) return rollout(dg, pu, pv, rng).value;
  double sum = 0.0;
  for (std::size_t k = 0; k < rollouts; ++k) sum += rollout(dg, pu, pv, rng).value;
  return sum / static_cast<double>(rollouts);
}

inline double play_against(const DiscretizedGame& dg, const Policy& frozen, Side frozen_side,
                           const Policy& adversary, std::uint64_t seed, std::size_t rollouts = 20) {
  return frozen_side == Side::kU ? play(dg, frozen, adversary, seed, rollouts)
                                 : play(dg, adversary, frozen, seed, rollouts);
}

// Adversary side of the frozen agent maximises (frozen u) or minimises
// (frozen v) J.
inline bool adversary_maximises(Side frozen_side) { return frozen_side == Side::kU; }

inline bool improves(Side frozen_side, double candidate, double incumbent) {
  return adversary_maximises(frozen_side) ? candidate > incumbent : candidate < incumbent;
}

inline double worst_start(Side frozen_side) {
  return adversary_maximises(frozen_side) ? -std::numeric_limits<double>::infinity()
                                          : std::numeric_limits<double>::infinity();
}

struct AttemptRecord {
  AdversaryMethod method = AdversaryMethod::kRandomSearch;
  std::string detail;
  double value = 0.0;                // rollout J of the adversary
  std::optional<double> grid_value;  // best-response grid value at x0
};

inline nlohmann::json to_json(const AttemptRecord& a) {
  nlohmann::json j{{"method", method_name(a.method)}, {"detail", a.detail}, {"J", a.value}};
  if (a.grid_value) j["grid_value"] = *a.grid_value;
  return j;
}

struct GridResponse {
  double value = 0.0;       // rollout J against the frozen policy
  double grid_value = 0.0;  // best-response value grid at (0, x0)
  std::size_t clamped = 0;
  Policy adversary;
};

inline GridResponse grid_best_response(const DiscretizedGame& dg, const Policy& frozen, Side frozen_side,
                                       std::size_t nodes, std::uint64_t seed = 0,
                                       std::size_t mixed_rollouts = 20) {
  if (dg.state_dim() > kMaxGridDims) {
    throw Unsupported("grid best response needs state dimension <= 3; " + dg.game().name + " has " +
                      std::to_string(dg.state_dim()));
  }
  const StateGrid grid = StateGrid::for_game(dg, nodes);
  GridResponse out;
  auto values = std::make_shared<const ValueGrid>(
      best_response_value(dg, grid, frozen, frozen_side, &out.clamped));
  out.grid_value = values->at(0, dg.game().initial_state);
  out.adversary = grid_response_policy(dg, values, frozen, frozen_side);
  out.value = play_against(dg, frozen, frozen_side, out.adversary, seed, mixed_rollouts);
  return out;
}

struct DqnResponse {
  double value = 0.0;
  Policy adversary;
  std::vector<double> per_draw;
};

// Single-agent double DQN adversaries, one per hyperparameter draw; returns
// the extreme deterministic-rollout J over draws.
inline DqnResponse dqn_best_response(const DiscretizedGame& dg, const Policy& frozen, Side frozen_side,
                                     const std::vector<HyperDraw>& draws, std::size_t budget,
                                     std::uint64_t seed, std::size_t mixed_rollouts = 20) {
  if (draws.empty()) throw InvalidArgument("dqn_best_response: need at least one hyperparameter draw");
  DqnResponse out;
  out.value = worst_start(frozen_side);
  const Side learner = frozen_side == Side::kU ? Side::kV : Side::kU;
  for (std::size_t k = 0; k < draws.size(); ++k) {
    SingleAgentConfig cfg;
    cfg.learning_rate = draws[k].learning_rate;
    cfg.hidden = draws[k].hidden;
    cfg.total_steps = budget;
    cfg.seed = derive_seed(seed, 1000 + k);
    Policy adversary = greedy_policy(train_against(dg, frozen, learner, cfg));
    const double j = play_against(dg, frozen, frozen_side, adversary, derive_seed(seed, 2000 + k),
                                  mixed_rollouts);
    out.per_draw.push_back(j);
    if (k == 0 || improves(frozen_side, j, out.value)) {
      out.value = j;
      out.adversary = adversary;
    }
  }
  return out;
}

struct RandomSearchResult {
  double value = 0.0;
  std::vector<std::size_t> sequence;
};

// Open-loop adversaries: every constant index sequence plus `samples`
// uniformly drawn sequences.
inline RandomSearchResult random_search(const DiscretizedGame& dg, const Policy& frozen, Side frozen_side,
                                        std::size_t samples, std::uint64_t seed,
                                        std::size_t mixed_rollouts = 20) {
  const std::size_t mesh = frozen_side == Side::kU ? dg.v_mesh().size() : dg.u_mesh().size();
  RandomSearchResult out;
  out.value = worst_start(frozen_side);
  Rng rng(seed);
  std::uniform_int_distribution<std::size_t> pick(0, mesh - 1);
  auto consider = [&](std::vector<std::size_t> seq, std::uint64_t play_seed) {
    const double j = play_against(dg, frozen, frozen_side, open_loop(seq), play_seed, mixed_rollouts);
    if (out.sequence.empty() || improves(frozen_side, j, out.value)) {
      out.value = j;
      out.sequence = std::move(seq);
    }
  };
  for (std::size_t a = 0; a < mesh; ++a) {
    consider(std::vector<std::size_t>(dg.num_steps(), a), derive_seed(seed, a));
  }
  for (std::size_t s = 0; s < samples; ++s) {
    std::vector<std::size_t> seq(dg.num_steps());
    for (auto& a : seq) a = pick(rng);
    consider(std::move(seq), derive_seed(seed, mesh + s));
  }
  return out;
}

struct PairEvaluation {
  double v_u_approx = 0.0;  // max over adversaries of J against the frozen u
  double v_v_approx = 0.0;  // min over adversaries of J against the frozen v
  std::vector<AttemptRecord> attempts_u;
  std::vector<AttemptRecord> attempts_v;
  double exploitability() const { return v_u_approx - v_v_approx; }
};

inline nlohmann::json to_json(const PairEvaluation& e) {
  nlohmann::json j{{"V_u_approx", e.v_u_approx},
                   {"V_v_approx", e.v_v_approx},
                   {"exploitability", e.exploitability()},
                   {"attempts_u", nlohmann::json::array()},
                   {"attempts_v", nlohmann::json::array()}};
  for (const auto& a : e.attempts_u) j["attempts_u"].push_back(to_json(a));
  for (const auto& a : e.attempts_v) j["attempts_v"].push_back(to_json(a));
  return j;
}

namespace detail {

inline std::vector<AttemptRecord> attack(const DiscretizedGame& dg, const Policy& frozen, Side frozen_side,
                                         const EvalOptions& opt, std::uint64_t seed) {
  std::vector<AttemptRecord> out;
  for (AdversaryMethod m : opt.methods) {
    switch (m) {
      case AdversaryMethod::kGridBestResponse: {
        const std::size_t nodes =
            opt.grid_nodes > 0 ? opt.grid_nodes : find_environment(dg.game().name).grid_nodes;
        if (nodes == 0 || dg.state_dim() > kMaxGridDims) {
          throw Unsupported("grid best response needs state dimension <= 3; " + dg.game().name +
                            " has " + std::to_string(dg.state_dim()));
        }
        const GridResponse r =
            grid_best_response(dg, frozen, frozen_side, nodes, derive_seed(seed, 1), opt.mixed_rollouts);
        out.push_back({m, "nodes=" + std::to_string(nodes), r.value, r.grid_value});
        break;
      }
      case AdversaryMethod::kDqnBestResponse: {
        auto draws = default_hyper_draws();
        draws.resize(std::min(draws.size(), std::max<std::size_t>(opt.dqn_draws, 1)));
        const DqnResponse r = dqn_best_response(dg, frozen, frozen_side, draws, opt.dqn_steps,
                                                derive_seed(seed, 2), opt.mixed_rollouts);
        for (std::size_t k = 0; k < r.per_draw.size(); ++k) {
          out.push_back({m, "draw=" + std::to_string(k), r.per_draw[k], std::nullopt});
        }
        break;
      }
      case AdversaryMethod::kRandomSearch: {
        const RandomSearchResult r = random_search(dg, frozen, frozen_side, opt.random_sequences,
                                                   derive_seed(seed, 3), opt.mixed_rollouts);
        out.push_back({m, "sequences=" + std::to_string(opt.random_sequences), r.value, std::nullopt});
        break;
      }
    }
  }
  return out;
}

}  // namespace detail

// Freezes each policy in turn and attacks it with every requested method.
inline PairEvaluation evaluate_pair(const DiscretizedGame& dg, const Policy& pu, const Policy& pv,
                                    const EvalOptions& opt) {
  if (opt.methods.empty()) throw InvalidArgument("evaluate: no adversary methods requested");
  PairEvaluation e;
  e.attempts_u = detail::attack(dg, pu, Side::kU, opt, derive_seed(opt.seed, 11));
  e.attempts_v = detail::attack(dg, pv, Side::kV, opt, derive_seed(opt.seed, 12));
  e.v_u_approx = -std::numeric_limits<double>::infinity();
  e.v_v_approx = std::numeric_limits<double>::infinity();
  for (const auto& a : e.attempts_u) e.v_u_approx = std::max(e.v_u_approx, a.value);
  for (const auto& a : e.attempts_v) e.v_v_approx = std::min(e.v_v_approx, a.value);
  return e;
}

struct Aggregate {
  double best = 0.0;
  double mean = 0.0;
  double worst = 0.0;
};

// Per-run evaluations plus best/mean/worst over runs. For u smaller is
// better, for v larger is better.
struct EvalReport {
  std::string environment;
  std::string algorithm;
  std::vector<std::uint64_t> seeds;
  std::vector<PairEvaluation> runs;

  std::vector<double> max_values() const {
    std::vector<double> out;
    for (const auto& r : runs) out.push_back(r.v_u_approx);
    return out;
  }
  std::vector<double> min_values() const {
    std::vector<double> out;
    for (const auto& r : runs) out.push_back(r.v_v_approx);
    return out;
  }

  Aggregate aggregate_u() const {
    const auto v = max_values();
    if (v.empty()) throw InvalidArgument("EvalReport: no runs");
    return {*std::min_element(v.begin(), v.end()),
            std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size()),
            *std::max_element(v.begin(), v.end())};
  }
  Aggregate aggregate_v() const {
    const auto v = min_values();
    if (v.empty()) throw InvalidArgument("EvalReport: no runs");
    return {*std::max_element(v.begin(), v.end()),
            std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size()),
            *std::min_element(v.begin(), v.end())};
  }
};

inline nlohmann::json to_json(const EvalReport& r) {
  nlohmann::json j;
  j["environment"] = r.environment;
  j["algorithm"] = r.algorithm;
  j["seeds"] = r.seeds;
  j["maximum_values"] = r.max_values();
  j["minimum_values"] = r.min_values();
  j["runs"] = nlohmann::json::array();
  for (const auto& e : r.runs) j["runs"].push_back(to_json(e));
  if (!r.runs.empty()) {
    const Aggregate u = r.aggregate_u();
    const Aggregate v = r.aggregate_v();
    j["u"] = {{"best", u.best}, {"mean", u.mean}, {"worst", u.worst}};
    j["v"] = {{"best", v.best}, {"mean", v.mean}, {"worst", v.worst}};
  }
  return j;
}

// CSV header and row for the flat algorithm x game table.
inline std::string report_csv_header() {
  return "algorithm,environment,runs,u_best,u_mean,u_worst,v_best,v_mean,v_worst";
}

inline std::string report_csv_row(const EvalReport& r) {
  const Aggregate u = r.aggregate_u();
  const Aggregate v = r.aggregate_v();
  auto f = [](double x) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6g", x);
    return std::string(buf);
  };
  return r.algorithm + "," + r.environment + "," + std::to_string(r.runs.size()) + "," + f(u.best) +
         "," + f(u.mean) + "," + f(u.worst) + "," + f(v.best) + "," + f(v.mean) + "," + f(v.worst);
}

}  // namespace dgq

#endif  // DGQ_EVAL_HPP_
