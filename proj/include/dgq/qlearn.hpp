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

#ifndef DGQ_QLEARN_HPP_
#define DGQ_QLEARN_HPP_

#include <Eigen/Dense>
#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "dgq/envs.hpp"
#include "dgq/error.hpp"
#include "dgq/game.hpp"
#include "dgq/matrix_game.hpp"
#include "dgq/nn.hpp"
#include "dgq/policy.hpp"

namespace dgq {

enum class Algorithm { kNashDqn, kMadqn, kCounterDqn, kIdqn, kDidqn, kDecentralizedDdqn };

inline std::string_view algorithm_name(Algorithm a) {
  switch (a) {
    case Algorithm::kNashDqn: return "nashdqn";
    case Algorithm::kMadqn: return "madqn";
    case Algorithm::kCounterDqn: return "counterdqn";
    case Algorithm::kIdqn: return "idqn";
    case Algorithm::kDidqn: return "didqn";
    case Algorithm::kDecentralizedDdqn: return "2xddqn";
  }
  return "?";
}

inline Algorithm parse_algorithm(std::string_view name) {
  for (Algorithm a : {Algorithm::kNashDqn, Algorithm::kMadqn, Algorithm::kCounterDqn,
                      Algorithm::kIdqn, Algorithm::kDidqn, Algorithm::kDecentralizedDdqn}) {
    if (algorithm_name(a) == name) return a;
  }
  throw InvalidArgument("unknown algorithm '" + std::string(name) + "'");
}

// Independent 64-bit seed for a named stream of a run (splitmix64 finaliser).
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

using Batch = std::vector<Transition>;

// Fixed-capacity ring of transitions with a uniform sampler (with
// replacement) that owns its generator.
class ReplayBuffer {
 public:
  ReplayBuffer(std::size_t capacity, std::uint64_t seed) : capacity_(capacity), rng_(seed) {
    if (capacity_ == 0) throw InvalidArgument("ReplayBuffer: capacity must be positive");
    data_.reserve(std::min<std::size_t>(capacity_, 1 << 16));
  }

  void push(Transition t) {
    if (data_.size() < capacity_) {
      data_.push_back(std::move(t));
    } else {
      data_[next_] = std::move(t);
    }
    next_ = (next_ + 1) % capacity_;
  }

  std::size_t size() const { return data_.size(); }
  std::size_t capacity() const { return capacity_; }
  const Transition& operator[](std::size_t i) const { return data_.at(i); }

  std::vector<std::size_t> sample_indices(std::size_t k) {
    if (k > data_.size()) throw InvalidArgument("ReplayBuffer: sample larger than buffer");
    std::uniform_int_distribution<std::size_t> pick(0, data_.size() - 1);
    std::vector<std::size_t> idx(k);
    for (auto& i : idx) i = pick(rng_);
    return idx;
  }

  Batch sample(std::size_t k) {
    Batch out;
    out.reserve(k);
    for (std::size_t i : sample_indices(k)) out.push_back(data_[i]);
    return out;
  }

 private:
  std::size_t capacity_;
  std::size_t next_ = 0;
  std::vector<Transition> data_;
  Rng rng_;
};

struct TrainConfig {
  Algorithm algorithm = Algorithm::kIdqn;
  std::string environment = "get_into_circle";
  double dt = 0.2;
  std::string u_mesh;
  std::string v_mesh;
  std::vector<int> hidden{256, 128};
  double learning_rate = 1e-3;
  double tau = 0.01;
  std::size_t batch_size = 64;
  std::size_t total_steps = 50000;
  std::size_t buffer_capacity = 100000;
  std::uint64_t seed = 0;

  // Catalog defaults for dt, meshes and hidden sizes.
  static TrainConfig for_environment(std::string_view env, Algorithm algo = Algorithm::kIdqn) {
    const EnvironmentInfo& info = find_environment(env);
    TrainConfig c;
    c.algorithm = algo;
    c.environment = info.name;
    c.dt = info.dt;
    c.u_mesh = info.u_mesh;
    c.v_mesh = info.v_mesh;
    c.hidden = info.hidden;
    return c;
  }
};

// zeta(step) = max(0, 1 - step / total).
inline double exploration_rate(std::size_t step, std::size_t total) {
  if (total == 0) return 0.0;
  return std::max(0.0, 1.0 - static_cast<double>(step) / static_cast<double>(total));
}

enum class HeadKind { kSharedMatrix, kDecomposed, kSingleAgent };

inline std::string_view head_kind_name(HeadKind k) {
  switch (k) {
    case HeadKind::kSharedMatrix: return "shared_matrix";
    case HeadKind::kDecomposed: return "decomposed";
    case HeadKind::kSingleAgent: return "single_agent";
  }
  return "?";
}

// Q-function approximator over (t, x), input encoded as (t / T, x).
//  - shared_matrix: one net, |U|*|V| outputs, cell u * |V| + v.
//  - decomposed: nets for Q1(t,x)[u] and Q2(t,x)[v], Q = Q1 + Q2.
//  - single_agent: one net over the owner's mesh only.
// Each online net has a Polyak-averaged target copy.
class QHead {
 public:
  QHead(HeadKind kind, const DiscretizedGame& dg, const std::vector<int>& hidden,
        std::uint64_t seed, Side side = Side::kU)
      : kind_(kind),
        side_(side),
        u_size_(dg.u_mesh().size()),
        v_size_(dg.v_mesh().size()),
        state_dim_(dg.state_dim()),
        times_(dg.partition().times()) {
    const int in = static_cast<int>(state_dim_ + 1);
    auto sizes = [&](std::size_t out) {
      std::vector<int> s{in};
      s.insert(s.end(), hidden.begin(), hidden.end());
      s.push_back(static_cast<int>(out));
      return s;
    };
    switch (kind_) {
      case HeadKind::kSharedMatrix:
        nets_.emplace_back(sizes(u_size_ * v_size_), derive_seed(seed, 0));
        break;
      case HeadKind::kDecomposed:
        nets_.emplace_back(sizes(u_size_), derive_seed(seed, 0));
        nets_.emplace_back(sizes(v_size_), derive_seed(seed, 1));
        break;
      case HeadKind::kSingleAgent:
        nets_.emplace_back(sizes(side_ == Side::kU ? u_size_ : v_size_), derive_seed(seed, 0));
        break;
    }
    targets_ = nets_;
  }

  HeadKind kind() const { return kind_; }
  Side side() const { return side_; }
  std::size_t u_size() const { return u_size_; }
  std::size_t v_size() const { return v_size_; }
  std::size_t own_size() const { return side_ == Side::kU ? u_size_ : v_size_; }
  std::vector<Mlp>& nets() { return nets_; }
  const std::vector<Mlp>& nets() const { return nets_; }
  std::vector<Mlp>& target_nets() { return targets_; }
  const std::vector<Mlp>& target_nets() const { return targets_; }
  const std::vector<double>& times() const { return times_; }

  Eigen::VectorXd encode(std::size_t i, std::span<const double> x) const {
    Eigen::VectorXd in(static_cast<Eigen::Index>(state_dim_ + 1));
    in(0) = times_.at(i) / times_.back();
    for (std::size_t k = 0; k < state_dim_; ++k) in(static_cast<Eigen::Index>(k + 1)) = x[k];
    return in;
  }

  // Columns: current (next = false) or successor (next = true) states of the
  // selected batch rows.
  Eigen::MatrixXd encode_batch(const Batch& batch, const std::vector<std::size_t>& rows,
                               bool next) const {
    Eigen::MatrixXd in(static_cast<Eigen::Index>(state_dim_ + 1),
                       static_cast<Eigen::Index>(rows.size()));
    for (std::size_t c = 0; c < rows.size(); ++c) {
      const Transition& tr = batch[rows[c]];
      const std::size_t ti = next ? tr.next_t_index : tr.t_index;
      const Vector& x = next ? tr.x_next : tr.x;
      in(0, static_cast<Eigen::Index>(c)) = times_.at(ti) / times_.back();
      for (std::size_t k = 0; k < state_dim_; ++k) {
        in(static_cast<Eigen::Index>(k + 1), static_cast<Eigen::Index>(c)) = x[k];
      }
    }
    return in;
  }

  // One payoff matrix per input column.
  std::vector<PayoffMatrix> q_matrices(const Eigen::MatrixXd& inputs, bool use_target = false) const {
    if (kind_ == HeadKind::kSingleAgent) {
      throw InvalidArgument("QHead: single-agent head has no payoff matrix");
    }
    const auto& nets = use_target ? targets_ : nets_;
    const auto nu = static_cast<Eigen::Index>(u_size_);
    const auto nv = static_cast<Eigen::Index>(v_size_);
    std::vector<PayoffMatrix> out;
    out.reserve(static_cast<std::size_t>(inputs.cols()));
    if (kind_ == HeadKind::kSharedMatrix) {
      const Eigen::MatrixXd q = nets[0].forward(inputs);
      for (Eigen::Index c = 0; c < q.cols(); ++c) {
        using RowMajor = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
        out.emplace_back(Eigen::Map<const RowMajor>(q.col(c).data(), nu, nv));
      }
    } else {
      const Eigen::MatrixXd q1 = nets[0].forward(inputs);
      const Eigen::MatrixXd q2 = nets[1].forward(inputs);
      for (Eigen::Index c = 0; c < q1.cols(); ++c) {
        PayoffMatrix m(nu, nv);
        for (Eigen::Index j = 0; j < nv; ++j) {
          for (Eigen::Index i = 0; i < nu; ++i) m(i, j) = q1(i, c) + q2(j, c);
        }
        out.push_back(std::move(m));
      }
    }
    return out;
  }

  // Single-agent head: own-mesh action values, one column per input.
  Eigen::MatrixXd action_values(const Eigen::MatrixXd& inputs, bool use_target = false) const {
    if (kind_ != HeadKind::kSingleAgent) throw InvalidArgument("QHead: not a single-agent head");
    return (use_target ? targets_ : nets_)[0].forward(inputs);
  }

  // One Adam step on the squared error between Q at the stored actions and
  // `targets`. Returns the pre-update loss.
  double fit(const Batch& batch, const Eigen::VectorXd& targets, std::vector<AdamState>& adam) {
    std::vector<std::size_t> rows(batch.size());
    for (std::size_t k = 0; k < rows.size(); ++k) rows[k] = k;
    const Eigen::MatrixXd in = encode_batch(batch, rows, false);
    std::vector<std::size_t> sel(batch.size());
    if (kind_ == HeadKind::kDecomposed) {
      const Eigen::MatrixXd q1 = nets_[0].forward(in);
      const Eigen::MatrixXd q2 = nets_[1].forward(in);
      Eigen::VectorXd y1(targets.size()), y2(targets.size());
      std::vector<std::size_t> sel_v(batch.size());
      double loss = 0.0;
      for (std::size_t k = 0; k < batch.size(); ++k) {
        const auto c = static_cast<Eigen::Index>(k);
        const double a = q1(static_cast<Eigen::Index>(batch[k].u_index), c);
        const double b = q2(static_cast<Eigen::Index>(batch[k].v_index), c);
        y1(c) = targets(c) - b;
        y2(c) = targets(c) - a;
        sel[k] = batch[k].u_index;
        sel_v[k] = batch[k].v_index;
        loss += (a + b - targets(c)) * (a + b - targets(c));
      }
      const MseResult g1 = mse_grad(nets_[0], in, sel, y1);
      const MseResult g2 = mse_grad(nets_[1], in, sel_v, y2);
      adam_step(nets_[0], adam[0], g1.gradient);
      adam_step(nets_[1], adam[1], g2.gradient);
      return loss / static_cast<double>(batch.size());
    }
    for (std::size_t k = 0; k < batch.size(); ++k) {
      if (kind_ == HeadKind::kSharedMatrix) {
        sel[k] = batch[k].u_index * v_size_ + batch[k].v_index;
      } else {
        sel[k] = side_ == Side::kU ? batch[k].u_index : batch[k].v_index;
      }
    }
    const MseResult g = mse_grad(nets_[0], in, sel, targets);
    adam_step(nets_[0], adam[0], g.gradient);
    return g.loss;
  }

  std::vector<AdamState> make_optimizers(double lr) const {
    std::vector<AdamState> out;
    for (const auto& n : nets_) out.emplace_back(n, lr);
    return out;
  }

  void soft_update(double tau) {
    for (std::size_t k = 0; k < nets_.size(); ++k) polyak_update(targets_[k], nets_[k], tau);
  }

  nlohmann::json to_json() const {
    nlohmann::json j;
    j["format"] = "dgq-qhead";
    j["version"] = 1;
    j["kind"] = head_kind_name(kind_);
    j["side"] = side_name(side_);
    j["u_size"] = u_size_;
    j["v_size"] = v_size_;
    j["state_dim"] = state_dim_;
    j["times"] = times_;
    j["nets"] = nlohmann::json::array();
    j["target_nets"] = nlohmann::json::array();
    for (const auto& n : nets_) j["nets"].push_back(n.to_json());
    for (const auto& n : targets_) j["target_nets"].push_back(n.to_json());
    return j;
  }

  static QHead from_json(const nlohmann::json& j) {
    if (j.value("format", "") != "dgq-qhead") throw InvalidArgument("not a dgq-qhead checkpoint");
    QHead h;
    const std::string kind = j.at("kind").get<std::string>();
    if (kind == "shared_matrix") {
      h.kind_ = HeadKind::kSharedMatrix;
    } else if (kind == "decomposed") {
      h.kind_ = HeadKind::kDecomposed;
    } else if (kind == "single_agent") {
      h.kind_ = HeadKind::kSingleAgent;
    } else {
      throw InvalidArgument("unknown head kind '" + kind + "'");
    }
    h.side_ = j.at("side").get<std::string>() == "v" ? Side::kV : Side::kU;
    h.u_size_ = j.at("u_size").get<std::size_t>();
    h.v_size_ = j.at("v_size").get<std::size_t>();
    h.state_dim_ = j.at("state_dim").get<std::size_t>();
    h.times_ = j.at("times").get<std::vector<double>>();
    for (const auto& n : j.at("nets")) h.nets_.push_back(Mlp::from_json(n));
    for (const auto& n : j.at("target_nets")) h.targets_.push_back(Mlp::from_json(n));
    return h;
  }

 private:
  QHead() = default;

  HeadKind kind_ = HeadKind::kSharedMatrix;
  Side side_ = Side::kU;
  std::size_t u_size_ = 0;
  std::size_t v_size_ = 0;
  std::size_t state_dim_ = 0;
  std::vector<double> times_;
  std::vector<Mlp> nets_;
  std::vector<Mlp> targets_;
};

// |U| x |V| matrix of online Q-values at (t_i, x).
inline PayoffMatrix q_matrix(const QHead& head, std::size_t i, std::span<const double> x) {
  return head.q_matrices(head.encode(i, x))[0];
}

struct GreedyPair {
  std::size_t u = 0;
  std::size_t v = 0;
};

// u = argmin_u max_v M, v = argmax_v min_u M, lowest index on ties.
inline GreedyPair greedy_pair(const PayoffMatrix& m) {
  return {pure_minimax(m).index, pure_maximin(m).index};
}

inline std::size_t epsilon_greedy(std::size_t greedy, double zeta, std::size_t mesh_size, Rng& rng) {
  if (zeta < 0.0 || zeta > 1.0) throw InvalidArgument("epsilon_greedy: zeta outside [0, 1]");
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  if (unit(rng) < zeta) {
    std::uniform_int_distribution<std::size_t> pick(0, mesh_size - 1);
    return pick(rng);
  }
  return greedy;
}

// max |M - row means - column means + grand mean|; zero for additive matrices.
inline double additivity_residual(const PayoffMatrix& m) {
  const Eigen::VectorXd rows = m.rowwise().mean();
  const Eigen::RowVectorXd cols = m.colwise().mean();
  const double grand = m.mean();
  double worst = 0.0;
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      worst = std::max(worst, std::abs(m(i, j) - rows(i) - cols(j) + grand));
    }
  }
  return worst;
}

namespace detail {

// y_j = r_j for terminal rows, r_j + gamma * value(target Q at the successor)
// otherwise. Terminal rows never reach the network.
template <typename ValueOfMatrix>
Eigen::VectorXd bootstrap_targets(const QHead& head, const Batch& batch, ValueOfMatrix&& value) {
  Eigen::VectorXd y(static_cast<Eigen::Index>(batch.size()));
  std::vector<std::size_t> live;
  for (std::size_t k = 0; k < batch.size(); ++k) {
    y(static_cast<Eigen::Index>(k)) = batch[k].reward;
    if (!batch[k].terminal) live.push_back(k);
  }
  if (live.empty()) return y;
  const auto mats = head.q_matrices(head.encode_batch(batch, live, true), true);
  for (std::size_t c = 0; c < live.size(); ++c) {
    y(static_cast<Eigen::Index>(live[c])) += DiscretizedGame::kDiscount * value(mats[c]);
  }
  return y;
}

}  // namespace detail

// y = r + (gamma / 2) (minmax + maxmin) of the target Q at the next state.
inline Eigen::VectorXd idqn_targets(const QHead& head, const Batch& batch) {
  return detail::bootstrap_targets(head, batch, [](const PayoffMatrix& m) {
    return 0.5 * (pure_minimax(m).value + pure_maximin(m).value);
  });
}

// y = r + gamma minmax (upper = true) or r + gamma maxmin (upper = false).
inline Eigen::VectorXd minimax_targets(const QHead& head, const Batch& batch, bool upper) {
  return detail::bootstrap_targets(head, batch, [upper](const PayoffMatrix& m) {
    return upper ? pure_minimax(m).value : pure_maximin(m).value;
  });
}

inline std::pair<Eigen::VectorXd, Eigen::VectorXd> madqn_targets(const QHead& head_u,
                                                                 const QHead& head_v,
                                                                 const Batch& batch) {
  return {minimax_targets(head_u, batch, true), minimax_targets(head_v, batch, false)};
}

// y = r + gamma value of the mixed equilibrium of the target Q.
inline Eigen::VectorXd nashdqn_targets(const QHead& head, const Batch& batch) {
  return detail::bootstrap_targets(head, batch,
                                   [](const PayoffMatrix& m) { return nash_mixed(m).value; });
}

// Double DQN for a single-agent head: the online net picks the next action
// (argmin for u, argmax for v), the target net evaluates it.
inline Eigen::VectorXd double_dqn_targets(const QHead& head, const Batch& batch) {
  Eigen::VectorXd y(static_cast<Eigen::Index>(batch.size()));
  std::vector<std::size_t> live;
  for (std::size_t k = 0; k < batch.size(); ++k) {
    y(static_cast<Eigen::Index>(k)) = batch[k].reward;
    if (!batch[k].terminal) live.push_back(k);
  }
  if (live.empty()) return y;
  const Eigen::MatrixXd in = head.encode_batch(batch, live, true);
  const Eigen::MatrixXd online = head.action_values(in, false);
  const Eigen::MatrixXd target = head.action_values(in, true);
  for (std::size_t c = 0; c < live.size(); ++c) {
    const auto col = static_cast<Eigen::Index>(c);
    Eigen::Index best = 0;
    if (head.side() == Side::kU) {
      online.col(col).minCoeff(&best);
    } else {
      online.col(col).maxCoeff(&best);
    }
    y(static_cast<Eigen::Index>(live[c])) += DiscretizedGame::kDiscount * target(best, col);
  }
  return y;
}

// Second agent's reply knowing the first agent's action: argmax of row u_idx.
inline std::size_t counter_response(const QHead& head_u, std::size_t i, std::span<const double> x,
                                    std::size_t u_idx) {
  const PayoffMatrix m = q_matrix(head_u, i, x);
  Eigen::Index best = 0;
  m.row(static_cast<Eigen::Index>(u_idx)).maxCoeff(&best);
  return static_cast<std::size_t>(best);
}

// First agent's reply knowing the second agent's action: argmin of column v_idx.
inline std::size_t counter_response_u(const QHead& head_v, std::size_t i, std::span<const double> x,
                                      std::size_t v_idx) {
  const PayoffMatrix m = q_matrix(head_v, i, x);
  Eigen::Index best = 0;
  m.col(static_cast<Eigen::Index>(v_idx)).minCoeff(&best);
  return static_cast<std::size_t>(best);
}

// (1 - zeta) equilibrium + zeta uniform.
inline Eigen::VectorXd exploratory_mixture(const Eigen::VectorXd& equilibrium, double zeta) {
  const auto n = static_cast<double>(equilibrium.size());
  return (1.0 - zeta) * equilibrium + Eigen::VectorXd::Constant(equilibrium.size(), zeta / n);
}

inline std::size_t sample_index(const Eigen::VectorXd& p, Rng& rng) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  double draw = unit(rng);
  for (Eigen::Index k = 0; k < p.size(); ++k) {
    draw -= p(k);
    if (draw < 0.0) return static_cast<std::size_t>(k);
  }
  return static_cast<std::size_t>(p.size() - 1);
}

struct NashStep {
  Eigen::VectorXd targets;
  Eigen::VectorXd behavior_u;
  Eigen::VectorXd behavior_v;
};

// NashDQN: bootstrap targets for `batch` plus the exploratory mixed behaviour
// at (t_i, x).
inline NashStep nashdqn_step(const QHead& head, const Batch& batch, std::size_t i,
                             std::span<const double> x, double zeta) {
  const MixedSolution eq = nash_mixed(q_matrix(head, i, x));
  return {nashdqn_targets(head, batch), exploratory_mixture(eq.row_strategy, zeta),
          exploratory_mixture(eq.col_strategy, zeta)};
}

struct EpisodeRecord {
  std::size_t episode = 0;
  std::size_t steps = 0;  // cumulative environment steps at episode end
  double value = 0.0;     // J of the behaviour episode
  double zeta = 0.0;      // exploration rate at episode start
  double mean_loss = 0.0;
  std::string phase;
  bool truncated = false;
  std::optional<double> additivity_residual;
};

inline nlohmann::json to_json(const EpisodeRecord& r) {
  nlohmann::json j;
  j["episode"] = r.episode;
  j["steps"] = r.steps;
  j["J"] = r.value;
  j["zeta"] = r.zeta;
  j["mean_loss"] = r.mean_loss;
  if (!r.phase.empty()) j["phase"] = r.phase;
  if (r.truncated) j["truncated"] = true;
  if (r.additivity_residual) j["additivity_residual"] = *r.additivity_residual;
  return j;
}

using NamedHeads = std::vector<std::pair<std::string, QHead>>;

inline const QHead& find_head(const NamedHeads& heads, std::string_view name) {
  for (const auto& [n, h] : heads) {
    if (n == name) return h;
  }
  throw InvalidArgument("missing Q head '" + std::string(name) + "'");
}

namespace detail {

inline Policy matrix_policy(std::shared_ptr<const QHead> head, bool minimiser) {
  auto pick = [minimiser](const PayoffMatrix& m) {
    return minimiser ? pure_minimax(m).index : pure_maximin(m).index;
  };
  return Policy::pure(
      [head, pick](std::size_t i, std::span<const double> x) { return pick(q_matrix(*head, i, x)); },
      [head, pick](std::size_t i, const Eigen::MatrixXd& states) {
        Eigen::MatrixXd in(states.rows() + 1, states.cols());
        in.row(0).setConstant(head->times().at(i) / head->times().back());
        in.bottomRows(states.rows()) = states;
        std::vector<std::size_t> out;
        for (const auto& m : head->q_matrices(in)) out.push_back(pick(m));
        return out;
      });
}

inline Policy single_agent_policy(std::shared_ptr<const QHead> head) {
  auto pick = [side = head->side()](const Eigen::VectorXd& q) {
    Eigen::Index best = 0;
    if (side == Side::kU) {
      q.minCoeff(&best);
    } else {
      q.maxCoeff(&best);
    }
    return static_cast<std::size_t>(best);
  };
  return Policy::pure(
      [head, pick](std::size_t i, std::span<const double> x) {
        return pick(head->action_values(head->encode(i, x)).col(0));
      },
      [head, pick](std::size_t i, const Eigen::MatrixXd& states) {
        Eigen::MatrixXd in(states.rows() + 1, states.cols());
        in.row(0).setConstant(head->times().at(i) / head->times().back());
        in.bottomRows(states.rows()) = states;
        const Eigen::MatrixXd q = head->action_values(in);
        std::vector<std::size_t> out;
        for (Eigen::Index c = 0; c < q.cols(); ++c) out.push_back(pick(q.col(c)));
        return out;
      });
}

inline Policy nash_policy(std::shared_ptr<const QHead> head, bool row_player) {
  return Policy::mixed([head, row_player](std::size_t i, std::span<const double> x) {
    const MixedSolution eq = nash_mixed(q_matrix(*head, i, x));
    return row_player ? eq.row_strategy : eq.col_strategy;
  });
}

}  // namespace detail

// Final (post-training) policies of each algorithm from its heads: pure for
// all but NashDQN, whose policies are the mixed equilibrium strategies.
inline std::pair<Policy, Policy> make_policies(Algorithm algo, const NamedHeads& heads) {
  switch (algo) {
    case Algorithm::kIdqn:
    case Algorithm::kDidqn: {
      auto q = std::make_shared<const QHead>(find_head(heads, "q"));
      return {detail::matrix_policy(q, true), detail::matrix_policy(q, false)};
    }
    case Algorithm::kNashDqn: {
      auto q = std::make_shared<const QHead>(find_head(heads, "q"));
      return {detail::nash_policy(q, true), detail::nash_policy(q, false)};
    }
    case Algorithm::kMadqn:
    case Algorithm::kCounterDqn:
      return {detail::matrix_policy(std::make_shared<const QHead>(find_head(heads, "q_u")), true),
              detail::matrix_policy(std::make_shared<const QHead>(find_head(heads, "q_v")), false)};
    case Algorithm::kDecentralizedDdqn:
      return {detail::single_agent_policy(std::make_shared<const QHead>(find_head(heads, "q_u"))),
              detail::single_agent_policy(std::make_shared<const QHead>(find_head(heads, "q_v")))};
  }
  throw InvalidArgument("make_policies: unknown algorithm");
}

struct TrainResult {
  Algorithm algorithm = Algorithm::kIdqn;
  NamedHeads heads;
  Policy policy_u;
  Policy policy_v;
  std::vector<EpisodeRecord> log;
};

struct TrainHooks {
  std::function<void(const EpisodeRecord&)> on_episode;
};

namespace detail {

inline nlohmann::json batch_dump(const Batch& batch) {
  nlohmann::json out = nlohmann::json::array();
  for (const auto& t : batch) {
    out.push_back({{"t_index", t.t_index},
                   {"x", t.x},
                   {"u_index", t.u_index},
                   {"v_index", t.v_index},
                   {"reward", t.reward},
                   {"x_next", t.x_next},
                   {"terminal", t.terminal}});
  }
  return out;
}

// Episodic interaction loop shared by all learners: linear zeta decay over
// `steps`, one gradient update per environment step once the buffer holds a
// batch, reset to x0 at the horizon.
class Session {
 public:
  using Selector = std::function<GreedyPair(std::size_t i, const Vector& x, double zeta)>;
  using Updater = std::function<double(const Batch& batch)>;
  using Probe = std::function<double(std::size_t i, const Vector& x)>;

  Session(const DiscretizedGame& dg, const TrainConfig& cfg, const TrainHooks& hooks,
          std::vector<EpisodeRecord>& log)
      : dg_(dg), cfg_(cfg), hooks_(hooks), log_(log) {}

  void run(std::size_t steps, std::uint64_t buffer_seed, const std::string& phase,
           const Selector& select, const Updater& update, const Probe& probe = {}) {
    ReplayBuffer buffer(cfg_.buffer_capacity, buffer_seed);
    std::size_t step = 0;
    while (step < steps) {
      EpisodeRecord rec;
      rec.episode = log_.size();
      rec.phase = phase;
      rec.zeta = exploration_rate(step, steps);
      Vector x = dg_.game().initial_state;
      double loss_sum = 0.0;
      std::size_t updates = 0;
      double residual = 0.0;
      std::size_t i = 0;
      for (; i < dg_.num_steps() && step < steps; ++i, ++step) {
        if (probe) residual = std::max(residual, probe(i, x));
        const GreedyPair a = select(i, x, exploration_rate(step, steps));
        StepResult s = dg_.step(i, x, a.u, a.v);
        rec.value += s.reward;
        buffer.push(Transition{i, x, a.u, a.v, s.reward, i + 1, s.x_next, s.terminal});
        if (buffer.size() >= cfg_.batch_size) {
          const Batch batch = buffer.sample(cfg_.batch_size);
          const double loss = update(batch);
          if (!std::isfinite(loss)) {
            throw NumericalError("training diverged at step " + std::to_string(total_ + step) +
                                 " (non-finite loss); last batch: " + batch_dump(batch).dump());
          }
          loss_sum += loss;
          ++updates;
        }
        x = std::move(s.x_next);
      }
      rec.truncated = i < dg_.num_steps();
      rec.steps = total_ + step;
      rec.mean_loss = updates > 0 ? loss_sum / static_cast<double>(updates) : 0.0;
      if (probe) rec.additivity_residual = residual;
      log_.push_back(rec);
      if (hooks_.on_episode) hooks_.on_episode(rec);
    }
    total_ += steps;
  }

 private:
  const DiscretizedGame& dg_;
  const TrainConfig& cfg_;
  const TrainHooks& hooks_;
  std::vector<EpisodeRecord>& log_;
  std::size_t total_ = 0;
};

}  // namespace detail

// Trains both agents with the configured algorithm on `dg`.
inline TrainResult train(const DiscretizedGame& dg, const TrainConfig& cfg, const TrainHooks& hooks = {}) {
  if (cfg.batch_size == 0 || cfg.total_steps == 0) {
    throw InvalidArgument("train: batch size and total steps must be positive");
  }
  TrainResult result;
  result.algorithm = cfg.algorithm;
  Rng rng(derive_seed(cfg.seed, 100));
  detail::Session session(dg, cfg, hooks, result.log);
  const std::size_t nu = dg.u_mesh().size();
  const std::size_t nv = dg.v_mesh().size();

  switch (cfg.algorithm) {
    case Algorithm::kIdqn:
    case Algorithm::kDidqn: {
      const bool decomposed = cfg.algorithm == Algorithm::kDidqn;
      QHead head(decomposed ? HeadKind::kDecomposed : HeadKind::kSharedMatrix, dg, cfg.hidden,
                 derive_seed(cfg.seed, 1));
      auto adam = head.make_optimizers(cfg.learning_rate);
      auto select = [&](std::size_t i, const Vector& x, double zeta) {
        const GreedyPair g = greedy_pair(q_matrix(head, i, x));
        const std::size_t u = epsilon_greedy(g.u, zeta, nu, rng);
        return GreedyPair{u, epsilon_greedy(g.v, zeta, nv, rng)};
      };
      auto update = [&](const Batch& b) {
        const double loss = head.fit(b, idqn_targets(head, b), adam);
        head.soft_update(cfg.tau);
        return loss;
      };
      detail::Session::Probe probe;
      if (decomposed) {
        probe = [&](std::size_t i, const Vector& x) { return additivity_residual(q_matrix(head, i, x)); };
      }
      session.run(cfg.total_steps, derive_seed(cfg.seed, 2), "", select, update, probe);
      result.heads.emplace_back("q", std::move(head));
      break;
    }
    case Algorithm::kMadqn: {
      QHead hu(HeadKind::kSharedMatrix, dg, cfg.hidden, derive_seed(cfg.seed, 1));
      QHead hv(HeadKind::kSharedMatrix, dg, cfg.hidden, derive_seed(cfg.seed, 3));
      auto adam_u = hu.make_optimizers(cfg.learning_rate);
      auto adam_v = hv.make_optimizers(cfg.learning_rate);
      auto select = [&](std::size_t i, const Vector& x, double zeta) {
        const std::size_t gu = pure_minimax(q_matrix(hu, i, x)).index;
        const std::size_t gv = pure_maximin(q_matrix(hv, i, x)).index;
        const std::size_t u = epsilon_greedy(gu, zeta, nu, rng);
        return GreedyPair{u, epsilon_greedy(gv, zeta, nv, rng)};
      };
      auto update = [&](const Batch& b) {
        const auto [yu, yv] = madqn_targets(hu, hv, b);
        const double loss = 0.5 * (hu.fit(b, yu, adam_u) + hv.fit(b, yv, adam_v));
        hu.soft_update(cfg.tau);
        hv.soft_update(cfg.tau);
        return loss;
      };
      session.run(cfg.total_steps, derive_seed(cfg.seed, 2), "", select, update);
      result.heads.emplace_back("q_u", std::move(hu));
      result.heads.emplace_back("q_v", std::move(hv));
      break;
    }
    case Algorithm::kCounterDqn: {
      // Two runs with half the budget each: first agent's Q against a
      // counter-playing second agent, then the symmetric run.
      const std::size_t first = cfg.total_steps / 2;
      const std::size_t second = cfg.total_steps - first;
      QHead hu(HeadKind::kSharedMatrix, dg, cfg.hidden, derive_seed(cfg.seed, 1));
      auto adam_u = hu.make_optimizers(cfg.learning_rate);
      session.run(
          first, derive_seed(cfg.seed, 2), "u",
          [&](std::size_t i, const Vector& x, double zeta) {
            const std::size_t u = epsilon_greedy(pure_minimax(q_matrix(hu, i, x)).index, zeta, nu, rng);
            return GreedyPair{u, epsilon_greedy(counter_response(hu, i, x, u), zeta, nv, rng)};
          },
          [&](const Batch& b) {
            const double loss = hu.fit(b, minimax_targets(hu, b, true), adam_u);
            hu.soft_update(cfg.tau);
            return loss;
          });
      QHead hv(HeadKind::kSharedMatrix, dg, cfg.hidden, derive_seed(cfg.seed, 3));
      auto adam_v = hv.make_optimizers(cfg.learning_rate);
      session.run(
          second, derive_seed(cfg.seed, 4), "v",
          [&](std::size_t i, const Vector& x, double zeta) {
            const std::size_t v = epsilon_greedy(pure_maximin(q_matrix(hv, i, x)).index, zeta, nv, rng);
            return GreedyPair{epsilon_greedy(counter_response_u(hv, i, x, v), zeta, nu, rng), v};
          },
          [&](const Batch& b) {
            const double loss = hv.fit(b, minimax_targets(hv, b, false), adam_v);
            hv.soft_update(cfg.tau);
            return loss;
          });
      result.heads.emplace_back("q_u", std::move(hu));
      result.heads.emplace_back("q_v", std::move(hv));
      break;
    }
    case Algorithm::kNashDqn: {
      QHead head(HeadKind::kSharedMatrix, dg, cfg.hidden, derive_seed(cfg.seed, 1));
      auto adam = head.make_optimizers(cfg.learning_rate);
      // Behaviour strategies are re-solved at every step.
      auto select = [&](std::size_t i, const Vector& x, double zeta) {
        const MixedSolution eq = nash_mixed(q_matrix(head, i, x));
        const std::size_t u = sample_index(exploratory_mixture(eq.row_strategy, zeta), rng);
        return GreedyPair{u, sample_index(exploratory_mixture(eq.col_strategy, zeta), rng)};
      };
      auto update = [&](const Batch& b) {
        const double loss = head.fit(b, nashdqn_targets(head, b), adam);
        head.soft_update(cfg.tau);
        return loss;
      };
      session.run(cfg.total_steps, derive_seed(cfg.seed, 2), "", select, update);
      result.heads.emplace_back("q", std::move(head));
      break;
    }
    case Algorithm::kDecentralizedDdqn: {
      QHead hu(HeadKind::kSingleAgent, dg, cfg.hidden, derive_seed(cfg.seed, 1), Side::kU);
      QHead hv(HeadKind::kSingleAgent, dg, cfg.hidden, derive_seed(cfg.seed, 3), Side::kV);
      auto adam_u = hu.make_optimizers(cfg.learning_rate);
      auto adam_v = hv.make_optimizers(cfg.learning_rate);
      auto select = [&](std::size_t i, const Vector& x, double zeta) {
        Eigen::Index gu = 0, gv = 0;
        hu.action_values(hu.encode(i, x)).col(0).minCoeff(&gu);
        hv.action_values(hv.encode(i, x)).col(0).maxCoeff(&gv);
        const std::size_t u = epsilon_greedy(static_cast<std::size_t>(gu), zeta, nu, rng);
        return GreedyPair{u, epsilon_greedy(static_cast<std::size_t>(gv), zeta, nv, rng)};
      };
      auto update = [&](const Batch& b) {
        const double loss =
            0.5 * (hu.fit(b, double_dqn_targets(hu, b), adam_u) + hv.fit(b, double_dqn_targets(hv, b), adam_v));
        hu.soft_update(cfg.tau);
        hv.soft_update(cfg.tau);
        return loss;
      };
      session.run(cfg.total_steps, derive_seed(cfg.seed, 2), "", select, update);
      result.heads.emplace_back("q_u", std::move(hu));
      result.heads.emplace_back("q_v", std::move(hv));
      break;
    }
  }
  std::tie(result.policy_u, result.policy_v) = make_policies(cfg.algorithm, result.heads);
  return result;
}

// Decentralised learning: each agent runs double DQN over its own mesh and
// treats the opponent as part of the environment.
inline TrainResult train_decentralized(const DiscretizedGame& dg, TrainConfig cfg,
                                       const TrainHooks& hooks = {}) {
  cfg.algorithm = Algorithm::kDecentralizedDdqn;
  return train(dg, cfg, hooks);
}

struct SingleAgentConfig {
  double learning_rate = 1e-3;
  std::vector<int> hidden{256, 128};
  double tau = 0.01;
  std::size_t batch_size = 64;
  std::size_t total_steps = 50000;
  std::size_t buffer_capacity = 100000;
  std::uint64_t seed = 0;
};

// Double DQN for the free agent `learner` against a frozen opponent policy.
// Returns the learner's single-agent head.
inline QHead train_against(const DiscretizedGame& dg, const Policy& frozen, Side learner,
                           const SingleAgentConfig& cfg) {
  TrainConfig tc;
  tc.batch_size = cfg.batch_size;
  tc.buffer_capacity = cfg.buffer_capacity;
  tc.total_steps = cfg.total_steps;
  std::vector<EpisodeRecord> log;
  TrainHooks hooks;
  detail::Session session(dg, tc, hooks, log);
  QHead head(HeadKind::kSingleAgent, dg, cfg.hidden, derive_seed(cfg.seed, 1), learner);
  auto adam = head.make_optimizers(cfg.learning_rate);
  Rng rng(derive_seed(cfg.seed, 100));
  Rng opponent_rng(derive_seed(cfg.seed, 101));
  const std::size_t own = head.own_size();
  session.run(
      cfg.total_steps, derive_seed(cfg.seed, 2), "",
      [&](std::size_t i, const Vector& x, double zeta) {
        Eigen::Index g = 0;
        const Eigen::VectorXd q = head.action_values(head.encode(i, x)).col(0);
        if (learner == Side::kU) {
          q.minCoeff(&g);
        } else {
          q.maxCoeff(&g);
        }
        const std::size_t mine = epsilon_greedy(static_cast<std::size_t>(g), zeta, own, rng);
        const std::size_t theirs = frozen.act(i, x, &opponent_rng);
        return learner == Side::kU ? GreedyPair{mine, theirs} : GreedyPair{theirs, mine};
      },
      [&](const Batch& b) {
        const double loss = head.fit(b, double_dqn_targets(head, b), adam);
        head.soft_update(cfg.tau);
        return loss;
      });
  return head;
}

inline Policy greedy_policy(const QHead& head) {
  return detail::single_agent_policy(std::make_shared<const QHead>(head));
}

}  // namespace dgq

#endif  // DGQ_QLEARN_HPP_
