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

#ifndef DGQ_GAME_HPP_
#define DGQ_GAME_HPP_

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "dgq/action_set.hpp"
#include "dgq/error.hpp"
#include "dgq/mesh.hpp"

namespace dgq {

using Rng = std::mt19937_64;

// Time grid t_0 < t_1 < ... < t_{m+1}. Public construction goes through
// `uniform`; `from_times` exists for non-uniform partitions in tests.
class Partition {
 public:
  static Partition uniform(double t0, double horizon, double dt) {
    if (!(dt > 0.0) || !(horizon > t0)) {
      throw InvalidArgument("Partition::uniform: need dt > 0 and horizon > t0");
    }
    const double span = horizon - t0;
    const double steps = std::round(span / dt);
    if (steps < 1 || std::abs(steps * dt - span) > 1e-9 * std::max(1.0, span)) {
      throw InvalidArgument("Partition::uniform: dt must divide the horizon");
    }
    const auto n = static_cast<std::size_t>(steps);
    std::vector<double> t(n + 1);
    for (std::size_t i = 0; i < n; ++i) t[i] = t0 + static_cast<double>(i) * dt;
    t[n] = horizon;
    return Partition(std::move(t));
  }

  static Partition from_times(std::vector<double> times) { return Partition(std::move(times)); }

  const std::vector<double>& times() const { return times_; }
  double time(std::size_t i) const { return times_.at(i); }
  double delta(std::size_t i) const { return times_.at(i + 1) - times_.at(i); }
  // m + 1: number of decision steps.
  std::size_t num_steps() const { return times_.size() - 1; }
  double start() const { return times_.front(); }
  double end() const { return times_.back(); }
  double diameter() const {
    double d = 0.0;
    for (std::size_t i = 0; i + 1 < times_.size(); ++i) d = std::max(d, delta(i));
    return d;
  }

 private:
  explicit Partition(std::vector<double> times) : times_(std::move(times)) {
    if (times_.size() < 2) throw InvalidArgument("Partition: need at least two times");
    for (std::size_t i = 0; i + 1 < times_.size(); ++i) {
      if (!(times_[i + 1] > times_[i])) {
        throw InvalidArgument("Partition: times must be strictly increasing");
      }
    }
  }

  std::vector<double> times_;
};

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
};

using DynamicsFn = std::function<void(double t, std::span<const double> x, std::span<const double> u,
                                      std::span<const double> v, std::span<double> dx)>;
using RunningCostFn = std::function<double(double t, std::span<const double> x,
                                           std::span<const double> u, std::span<const double> v)>;
using TerminalCostFn = std::function<double(std::span<const double> x)>;
// Per-dimension box containing every Euler state reachable from x0 at t_i.
using ReachBoxFn = std::function<std::vector<Interval>(const Partition&, std::size_t i)>;

// Control-separated form f = f_u(t,x,u) + f_v(t,x,v), f0 = f0_u + f0_v.
// Optional; when present it must agree with `dynamics` / `running_cost`.
struct SeparatedParts {
  std::function<void(double, std::span<const double>, std::span<const double>, std::span<double>)>
      dynamics_u, dynamics_v;
  // Empty means identically zero.
  std::function<double(double, std::span<const double>, std::span<const double>)> cost_u, cost_v;
};

// dx/dt = f(t, x, u, v) on [0, T], J = sigma(x(T)) + int f0 dt. The first agent
// (u) minimises J, the second (v) maximises it.
struct ContinuousGame {
  std::string name;
  std::size_t state_dim = 0;
  double horizon = 0.0;
  Vector initial_state;
  ActionSet u_set;
  ActionSet v_set;
  DynamicsFn dynamics;
  RunningCostFn running_cost;  // empty means f0 == 0
  TerminalCostFn terminal_cost;
  // c_f with ||f|| + |f0| <= c_f (1 + ||x||).
  double growth_constant = 1.0;
  std::optional<SeparatedParts> separated;
  ReachBoxFn reach_box;  // empty: fall back to the growth-bound ball

  double running(double t, std::span<const double> x, std::span<const double> u,
                 std::span<const double> v) const {
    return running_cost ? running_cost(t, x, u, v) : 0.0;
  }
};

inline double norm(std::span<const double> x) {
  double s = 0.0;
  for (double c : x) s += c * c;
  return std::sqrt(s);
}

// (||x0|| + 1) e^{c_f t} - 1: bounds ||x(t)|| for exact and Euler motions.
inline double growth_reach_radius(const ContinuousGame& g, double t) {
  return (norm(g.initial_state) + 1.0) * std::exp(g.growth_constant * t) - 1.0;
}

// Reach box at partition index i: the game's own bound when it has one,
// otherwise the growth-bound ball around the origin.
inline std::vector<Interval> reach_box(const ContinuousGame& g, const Partition& p, std::size_t i) {
  if (g.reach_box) return g.reach_box(p, i);
  const double r = growth_reach_radius(g, p.time(i));
  return std::vector<Interval>(g.state_dim, Interval{-r, r});
}

inline Vector sample_action(const ActionSet& set, Rng& rng) {
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  if (const auto* box = std::get_if<BoxSet>(&set)) {
    Vector p(box->lower.size());
    for (std::size_t i = 0; i < p.size(); ++i) {
      std::uniform_real_distribution<double> d(box->lower[i], box->upper[i]);
      p[i] = d(rng);
    }
    return p;
  }
  const auto& axes = std::get<EllipseSet>(set).semi_axes;
  Vector z(axes.size());
  for (;;) {
    for (double& c : z) c = unit(rng);
    if (norm(z) <= 1.0) break;
  }
  for (std::size_t i = 0; i < z.size(); ++i) z[i] *= axes[i];
  return z;
}

// Largest observed (||f|| + |f0|) / (1 + ||x||) over random samples with
// ||x|| <= radius. Used to spot-check the growth constant.
inline double sampled_growth_ratio(const ContinuousGame& g, std::size_t samples, double radius,
                                   std::uint64_t seed) {
  Rng rng(seed);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  std::uniform_real_distribution<double> time(0.0, g.horizon);
  Vector x(g.state_dim), dx(g.state_dim);
  double worst = 0.0;
  for (std::size_t s = 0; s < samples; ++s) {
    for (double& c : x) c = radius * unit(rng);
    const Vector u = sample_action(g.u_set, rng);
    const Vector v = sample_action(g.v_set, rng);
    const double t = time(rng);
    g.dynamics(t, x, u, v, dx);
    const double lhs = norm(dx) + std::abs(g.running(t, x, u, v));
    if (!std::isfinite(lhs)) throw NumericalError(g.name + ": non-finite dynamics");
    worst = std::max(worst, lhs / (1.0 + norm(x)));
  }
  return worst;
}

// Structural checks plus a sampled growth-bound check.
inline void validate(const ContinuousGame& g) {
  if (g.state_dim == 0) throw InvalidArgument(g.name + ": state_dim must be positive");
  if (!(g.horizon > 0.0)) throw InvalidArgument(g.name + ": horizon must be positive");
  if (g.initial_state.size() != g.state_dim) {
    throw InvalidArgument(g.name + ": initial state has wrong dimension");
  }
  if (!g.dynamics || !g.terminal_cost) {
    throw InvalidArgument(g.name + ": dynamics and terminal cost are required");
  }
  if (!(g.growth_constant > 0.0)) throw InvalidArgument(g.name + ": c_f must be positive");
  const double ratio = sampled_growth_ratio(g, 256, 10.0, 0x5eed);
  if (ratio > g.growth_constant * (1.0 + 1e-12)) {
    throw InvalidArgument(g.name + ": sampled growth ratio exceeds c_f");
  }
}

// One replay record.
struct Transition {
  std::size_t t_index = 0;
  Vector x;
  std::size_t u_index = 0;
  std::size_t v_index = 0;
  double reward = 0.0;
  std::size_t next_t_index = 0;
  Vector x_next;
  bool terminal = false;
};

struct StepResult {
  Vector x_next;
  double reward = 0.0;
  bool terminal = false;
};

// A pure feedback policy returning a mesh index at (t_i, x).
using PurePolicy = std::function<std::size_t(std::size_t i, std::span<const double> x)>;

struct Rollout {
  std::vector<Transition> transitions;
  double value = 0.0;  // J^Delta
};

// ContinuousGame + partition + finite action meshes. Discount is fixed to 1.
// The terminal cost is folded into the reward of the last transition.
class DiscretizedGame {
 public:
  static constexpr double kDiscount = 1.0;

  DiscretizedGame(std::shared_ptr<const ContinuousGame> game, Partition partition,
                  ActionMesh u_mesh, ActionMesh v_mesh)
      : game_(std::move(game)),
        partition_(std::move(partition)),
        u_mesh_(std::move(u_mesh)),
        v_mesh_(std::move(v_mesh)) {
    if (!game_) throw InvalidArgument("DiscretizedGame: null game");
    if (std::abs(partition_.start()) > 1e-12 ||
        std::abs(partition_.end() - game_->horizon) > 1e-12) {
      throw InvalidArgument("DiscretizedGame: partition must span [0, T]");
    }
    check_mesh(u_mesh_, game_->u_set, "u");
    check_mesh(v_mesh_, game_->v_set, "v");
  }

  const ContinuousGame& game() const { return *game_; }
  std::shared_ptr<const ContinuousGame> game_ptr() const { return game_; }
  const Partition& partition() const { return partition_; }
  const ActionMesh& u_mesh() const { return u_mesh_; }
  const ActionMesh& v_mesh() const { return v_mesh_; }
  std::size_t num_steps() const { return partition_.num_steps(); }
  std::size_t state_dim() const { return game_->state_dim; }

  // x_next = x + dt_i f(t_i, x, u, v); returns dt_i f0 without terminal cost.
  // No validation; hot path for solvers.
  double advance(std::size_t i, std::span<const double> x, std::span<const double> u,
                 std::span<const double> v, std::span<double> x_next) const {
    const double t = partition_.time(i);
    const double dt = partition_.delta(i);
    game_->dynamics(t, x, u, v, x_next);
    for (std::size_t k = 0; k < x.size(); ++k) x_next[k] = x[k] + dt * x_next[k];
    return dt * game_->running(t, x, u, v);
  }

  StepResult step(std::size_t i, std::span<const double> x, std::size_t u_idx,
                  std::size_t v_idx) const {
    if (i >= num_steps()) throw InvalidArgument("step: time index out of range");
    if (x.size() != state_dim()) throw InvalidArgument("step: state has wrong dimension");
    if (u_idx >= u_mesh_.size() || v_idx >= v_mesh_.size()) {
      throw InvalidArgument("step: action index out of range");
    }
    StepResult out;
    out.x_next.resize(x.size());
    out.reward = advance(i, x, u_mesh_[u_idx], v_mesh_[v_idx], out.x_next);
    out.terminal = (i + 1 == num_steps());
    if (out.terminal) out.reward += game_->terminal_cost(out.x_next);
    for (double c : out.x_next) {
      if (!std::isfinite(c)) throw NumericalError(game_->name + ": non-finite dynamics output");
    }
    if (!std::isfinite(out.reward)) throw NumericalError(game_->name + ": non-finite reward");
    return out;
  }

 private:
  static void check_mesh(const ActionMesh& mesh, const ActionSet& set, const char* who) {
    if (mesh.dimension() != dimension(set)) {
      throw InvalidArgument(std::string("DiscretizedGame: ") + who + " mesh dimension mismatch");
    }
    for (const auto& p : mesh.points()) {
      if (!contains(set, p)) {
        throw InvalidArgument(std::string("DiscretizedGame: ") + who +
                              " mesh point outside the action set");
      }
    }
  }

  std::shared_ptr<const ContinuousGame> game_;
  Partition partition_;
  ActionMesh u_mesh_;
  ActionMesh v_mesh_;
};

// Plays both policies from (t_0, x0) to the horizon.
inline Rollout rollout(const DiscretizedGame& dg, const PurePolicy& policy_u,
                       const PurePolicy& policy_v) {
  Rollout out;
  out.transitions.reserve(dg.num_steps());
  Vector x = dg.game().initial_state;
  for (std::size_t i = 0; i < dg.num_steps(); ++i) {
    Transition tr;
    tr.t_index = i;
    tr.x = x;
    tr.u_index = policy_u(i, x);
    tr.v_index = policy_v(i, x);
    StepResult s = dg.step(i, x, tr.u_index, tr.v_index);
    tr.reward = s.reward;
    tr.next_t_index = i + 1;
    tr.x_next = s.x_next;
    tr.terminal = s.terminal;
    out.value += s.reward;
    x = std::move(s.x_next);
    out.transitions.push_back(std::move(tr));
  }
  return out;
}

}  // namespace dgq

#endif  // DGQ_GAME_HPP_
