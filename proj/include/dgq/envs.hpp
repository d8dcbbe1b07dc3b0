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

#ifndef DGQ_ENVS_HPP_
#define DGQ_ENVS_HPP_

#include <algorithm>
#include <cmath>
#include <functional>
#include <memory>
#include <numbers>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "dgq/game.hpp"
#include "dgq/mesh.hpp"

// Analytic benchmark games. Each constructor returns an immutable game with
// its control sets, growth constant, and (when known) a tight Euler reach box.

namespace dgq {

inline ContinuousGame make_escape_from_zero() {
  ContinuousGame g;
  g.name = "escape_from_zero";
  g.state_dim = 2;
  g.horizon = 2.0;
  g.initial_state = {0.0, 0.0};
  g.u_set = make_ball(2, 1.0);
  g.v_set = make_ball(2, 1.0);
  g.dynamics = [](double t, std::span<const double>, std::span<const double> u,
                  std::span<const double> v, std::span<double> dx) {
    dx[0] = u[0] + (2.0 - t) * v[0];
    dx[1] = u[1] + (2.0 - t) * v[1];
  };
  g.terminal_cost = [](std::span<const double> x) { return -std::hypot(x[0], x[1]); };
  g.growth_constant = 3.0;
  g.separated = SeparatedParts{
      [](double, std::span<const double>, std::span<const double> u, std::span<double> dx) {
        dx[0] = u[0];
        dx[1] = u[1];
      },
      [](double t, std::span<const double>, std::span<const double> v, std::span<double> dx) {
        dx[0] = (2.0 - t) * v[0];
        dx[1] = (2.0 - t) * v[1];
      },
      {},
      {}};
  g.reach_box = [](const Partition& p, std::size_t i) {
    double r = 0.0;
    for (std::size_t j = 0; j < i; ++j) r += p.delta(j) * (1.0 + std::abs(2.0 - p.time(j)));
    return std::vector<Interval>(2, Interval{-r, r});
  };
  return g;
}

inline ContinuousGame make_get_into_circle() {
  ContinuousGame g;
  g.name = "get_into_circle";
  g.state_dim = 2;
  g.horizon = 4.0;
  g.initial_state = {0.0, 0.5};
  g.u_set = make_interval(-0.5, 0.5);
  g.v_set = make_interval(-1.0, 1.0);
  g.dynamics = [](double, std::span<const double>, std::span<const double> u,
                  std::span<const double> v, std::span<double> dx) {
    dx[0] = v[0];
    dx[1] = u[0];
  };
  g.terminal_cost = [](std::span<const double> x) { return std::hypot(x[0], x[1]) - 4.0; };
  g.growth_constant = 1.2;
  g.separated = SeparatedParts{
      [](double, std::span<const double>, std::span<const double> u, std::span<double> dx) {
        dx[0] = 0.0;
        dx[1] = u[0];
      },
      [](double, std::span<const double>, std::span<const double> v, std::span<double> dx) {
        dx[0] = v[0];
        dx[1] = 0.0;
      },
      {},
      {}};
  g.reach_box = [](const Partition& p, std::size_t i) {
    const double t = p.time(i);
    return std::vector<Interval>{{-t, t}, {0.5 - 0.5 * t, 0.5 + 0.5 * t}};
  };
  return g;
}

inline ContinuousGame make_get_into_square() {
  ContinuousGame g;
  g.name = "get_into_square";
  g.state_dim = 2;
  g.horizon = 4.0;
  g.initial_state = {0.2, 0.0};
  g.u_set = make_interval(-1.0, 1.0);
  g.v_set = make_interval(-1.0, 1.0);
  g.dynamics = [](double, std::span<const double> x, std::span<const double> u,
                  std::span<const double> v, std::span<double> dx) {
    dx[0] = x[1] + v[0];
    dx[1] = -x[0] + u[0];
  };
  g.terminal_cost = [](std::span<const double> x) {
    return std::max(std::abs(x[0]), std::abs(x[1]));
  };
  g.growth_constant = 1.5;
  g.separated = SeparatedParts{
      [](double, std::span<const double> x, std::span<const double> u, std::span<double> dx) {
        dx[0] = x[1];
        dx[1] = -x[0] + u[0];
      },
      [](double, std::span<const double>, std::span<const double> v, std::span<double> dx) {
        dx[0] = v[0];
        dx[1] = 0.0;
      },
      {},
      {}};
  // Euler on the rotation field scales the norm by sqrt(1 + dt^2) per step.
  g.reach_box = [x0 = g.initial_state](const Partition& p, std::size_t i) {
    double r = std::hypot(x0[0], x0[1]);
    for (std::size_t j = 0; j < i; ++j) {
      const double dt = p.delta(j);
      r = std::sqrt(1.0 + dt * dt) * r + dt * std::numbers::sqrt2;
    }
    return std::vector<Interval>(2, Interval{-r, r});
  };
  return g;
}

inline ContinuousGame make_homicidal_chauffeur() {
  ContinuousGame g;
  g.name = "homicidal_chauffeur";
  g.state_dim = 5;
  g.horizon = 3.0;
  g.initial_state = {0.0, 0.0, 0.0, 2.5, 7.5};
  g.u_set = make_interval(-1.0, 1.0);
  g.v_set = make_ball(2, 1.0);
  g.dynamics = [](double, std::span<const double> x, std::span<const double> u,
                  std::span<const double> v, std::span<double> dx) {
    dx[0] = 3.0 * std::cos(x[2]);
    dx[1] = 3.0 * std::sin(x[2]);
    dx[2] = u[0];
    dx[3] = v[0];
    dx[4] = v[1];
  };
  g.terminal_cost = [](std::span<const double> x) {
    return std::hypot(x[0] - x[3], x[1] - x[4]);
  };
  g.growth_constant = 3.4;
  g.separated = SeparatedParts{
      [](double, std::span<const double> x, std::span<const double> u, std::span<double> dx) {
        dx[0] = 3.0 * std::cos(x[2]);
        dx[1] = 3.0 * std::sin(x[2]);
        dx[2] = u[0];
        dx[3] = 0.0;
        dx[4] = 0.0;
      },
      [](double, std::span<const double>, std::span<const double> v, std::span<double> dx) {
        dx[0] = dx[1] = dx[2] = 0.0;
        dx[3] = v[0];
        dx[4] = v[1];
      },
      {},
      {}};
  g.reach_box = [x0 = g.initial_state](const Partition& p, std::size_t i) {
    const double t = p.time(i);
    return std::vector<Interval>{{-3.0 * t, 3.0 * t},
                                 {-3.0 * t, 3.0 * t},
                                 {-t, t},
                                 {x0[3] - t, x0[3] + t},
                                 {x0[4] - t, x0[4] + t}};
  };
  return g;
}

// State order (y1, y2, y1', y2', F1, F2, z1, z2, z1', z2').
inline ContinuousGame make_interception() {
  ContinuousGame g;
  g.name = "interception";
  g.state_dim = 10;
  g.horizon = 3.0;
  g.initial_state = {1.0, 1.1, 0.0, 1.0, 1.0, -2.0, 0.0, 0.0, 1.0, 0.0};
  g.u_set = EllipseSet{{0.67 * 1.3, 1.3}};
  g.v_set = EllipseSet{{0.71, 1.0}};
  g.dynamics = [](double, std::span<const double> x, std::span<const double> u,
                  std::span<const double> v, std::span<double> dx) {
    dx[0] = x[2];
    dx[1] = x[3];
    dx[2] = x[4];
    dx[3] = x[5];
    dx[4] = -x[4] + u[0];
    dx[5] = -x[5] + u[1];
    dx[6] = x[8];
    dx[7] = x[9];
    dx[8] = v[0];
    dx[9] = v[1];
  };
  g.terminal_cost = [](std::span<const double> x) { return std::hypot(x[0] - x[6], x[1] - x[7]); };
  g.growth_constant = 2.1;
  g.separated = SeparatedParts{
      [](double, std::span<const double> x, std::span<const double> u, std::span<double> dx) {
        dx[0] = x[2];
        dx[1] = x[3];
        dx[2] = x[4];
        dx[3] = x[5];
        dx[4] = -x[4] + u[0];
        dx[5] = -x[5] + u[1];
        dx[6] = x[8];
        dx[7] = x[9];
        dx[8] = 0.0;
        dx[9] = 0.0;
      },
      [](double, std::span<const double>, std::span<const double> v, std::span<double> dx) {
        std::fill(dx.begin(), dx.end(), 0.0);
        dx[8] = v[0];
        dx[9] = v[1];
      },
      {},
      {}};
  return g;
}

// dx/dt = cos(u + v), J = x(1): Isaacs's condition fails.
inline ContinuousGame make_counterexample() {
  ContinuousGame g;
  g.name = "counterexample";
  g.state_dim = 1;
  g.horizon = 1.0;
  g.initial_state = {0.0};
  g.u_set = make_interval(-std::numbers::pi, std::numbers::pi);
  g.v_set = make_interval(-std::numbers::pi, std::numbers::pi);
  g.dynamics = [](double, std::span<const double>, std::span<const double> u,
                  std::span<const double> v, std::span<double> dx) { dx[0] = std::cos(u[0] + v[0]); };
  g.terminal_cost = [](std::span<const double> x) { return x[0]; };
  g.growth_constant = 1.0;
  g.reach_box = [](const Partition& p, std::size_t i) {
    const double t = p.time(i);
    return std::vector<Interval>{{-t, t}};
  };
  return g;
}

inline constexpr std::string_view kFullTurnBallMesh = "BM(0,6.283185307179586,10)";
inline constexpr std::string_view kHalfTurnLinearMesh =
    "LM(-3.141592653589793,3.141592653589793,10)";

// Default discretisation and reference data for a catalog game.
struct EnvironmentInfo {
  std::string name;
  std::function<ContinuousGame()> make;
  std::string u_mesh;
  std::string v_mesh;
  double dt = 0.2;
  std::vector<int> hidden;
  std::optional<double> known_value;
  bool known_is_lower_bound = false;
  // Nodes per dimension for the grid solver; 0 when the game is too large.
  std::size_t grid_nodes = 0;
};

inline const std::vector<EnvironmentInfo>& environment_catalog() {
  static const std::vector<EnvironmentInfo> catalog = {
      {"escape_from_zero", make_escape_from_zero, std::string(kFullTurnBallMesh),
       std::string(kFullTurnBallMesh), 0.2, {256, 128}, -0.5, false, 161},
      {"get_into_circle", make_get_into_circle, "LM(-0.5,0.5,10)", "LM(-1,1,10)", 0.2,
       {256, 128}, 0.0, false, 121},
      {"get_into_square", make_get_into_square, "LM(-1,1,10)", "LM(-1,1,10)", 0.2, {256, 128},
       1.0, false, 321},
      {"homicidal_chauffeur", make_homicidal_chauffeur, "LM(-1,1,10)",
       std::string(kFullTurnBallMesh), 0.2, {256, 128}, std::nullopt, false, 0},
      {"interception", make_interception, std::string(kFullTurnBallMesh),
       std::string(kFullTurnBallMesh), 0.2, {512, 256, 128}, 1.5, true, 0},
      {"counterexample", make_counterexample, std::string(kHalfTurnLinearMesh),
       std::string(kHalfTurnLinearMesh), 0.2, {256, 128}, std::nullopt, false, 61},
  };
  return catalog;
}

inline const EnvironmentInfo& find_environment(std::string_view name) {
  for (const auto& e : environment_catalog()) {
    if (e.name == name) return e;
  }
  throw InvalidArgument("unknown environment '" + std::string(name) + "'");
}

inline std::shared_ptr<const ContinuousGame> make_game(std::string_view name) {
  auto g = std::make_shared<ContinuousGame>(find_environment(name).make());
  validate(*g);
  return g;
}

// Builds the discretised game; empty specs / non-positive dt fall back to the
// catalog defaults.
inline DiscretizedGame make_discretized(std::string_view name, double dt = 0.0,
                                        std::string_view u_mesh = {},
                                        std::string_view v_mesh = {}) {
  const EnvironmentInfo& info = find_environment(name);
  auto game = make_game(name);
  const double step = dt > 0.0 ? dt : info.dt;
  return DiscretizedGame(game, Partition::uniform(0.0, game->horizon, step),
                         make_mesh_for(u_mesh.empty() ? info.u_mesh : u_mesh, game->u_set),
                         make_mesh_for(v_mesh.empty() ? info.v_mesh : v_mesh, game->v_set));
}

}  // namespace dgq

#endif  // DGQ_ENVS_HPP_
