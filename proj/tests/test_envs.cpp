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

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "dgq/envs.hpp"
#include "dgq/game.hpp"

namespace dgq {
namespace {

Vector eval_f(const ContinuousGame& g, double t, const Vector& x, const Vector& u, const Vector& v) {
  Vector dx(g.state_dim);
  g.dynamics(t, x, u, v, dx);
  return dx;
}

TEST(EscapeFromZero, Definition) {
  const ContinuousGame g = make_escape_from_zero();
  EXPECT_EQ(g.state_dim, 2u);
  EXPECT_EQ(g.horizon, 2.0);
  EXPECT_EQ(eval_f(g, 0.0, {0, 0}, {1, 0}, {0, 0}), (Vector{1, 0}));
  const Vector f = eval_f(g, 2.0, {0.3, -1}, {0.6, 0.8}, {-1, 0});
  EXPECT_DOUBLE_EQ(f[0], 0.6);
  EXPECT_DOUBLE_EQ(f[1], 0.8);
  EXPECT_DOUBLE_EQ(g.terminal_cost(Vector{3, 4}), -5.0);
  EXPECT_EQ(*find_environment("escape_from_zero").known_value, -0.5);
}

TEST(GetIntoCircle, Definition) {
  const ContinuousGame g = make_get_into_circle();
  EXPECT_DOUBLE_EQ(g.terminal_cost(Vector{4, 0}), 0.0);
  EXPECT_EQ(eval_f(g, 1.3, {5, -2}, {0.5}, {-1}), (Vector{-1, 0.5}));
  EXPECT_EQ(g.initial_state, (Vector{0, 0.5}));
  EXPECT_EQ(*find_environment("get_into_circle").known_value, 0.0);
}

TEST(GetIntoSquare, Definition) {
  const ContinuousGame g = make_get_into_square();
  EXPECT_EQ(eval_f(g, 0.7, {0, 0}, {0}, {0}), (Vector{0, 0}));
  EXPECT_EQ(eval_f(g, 0.7, {1, 2}, {0.5}, {-0.5}), (Vector{1.5, -0.5}));
  EXPECT_DOUBLE_EQ(g.terminal_cost(Vector{-0.3, 0.2}), 0.3);
  EXPECT_EQ(*find_environment("get_into_square").known_value, 1.0);
}

TEST(HomicidalChauffeur, Definition) {
  const ContinuousGame g = make_homicidal_chauffeur();
  EXPECT_EQ(g.state_dim, 5u);
  EXPECT_EQ(eval_f(g, 0.0, g.initial_state, {0}, {0, 0}), (Vector{3, 0, 0, 0, 0}));
  EXPECT_NEAR(g.terminal_cost(g.initial_state), 7.905694150420948, 1e-12);
  EXPECT_FALSE(find_environment("homicidal_chauffeur").known_value.has_value());
}

TEST(HomicidalChauffeur, TerminalCostNonNegativeOnRollouts) {
  const auto dg = make_discretized("homicidal_chauffeur");
  Rng rng(2);
  for (int k = 0; k < 100; ++k) {
    const Rollout r = rollout(dg, [&](std::size_t, std::span<const double>) { return rng() % 11; },
                              [&](std::size_t, std::span<const double>) { return rng() % 11; });
    EXPECT_GE(r.value, 0.0);
  }
}

TEST(Interception, Definition) {
  const ContinuousGame g = make_interception();
  EXPECT_EQ(g.state_dim, 10u);
  EXPECT_EQ(g.horizon, 3.0);
  EXPECT_EQ(g.initial_state, (Vector{1, 1.1, 0, 1, 1, -2, 0, 0, 1, 0}));
  const auto& info = find_environment("interception");
  EXPECT_EQ(*info.known_value, 1.5);
  EXPECT_TRUE(info.known_is_lower_bound);
  EXPECT_EQ(info.hidden, (std::vector<int>{512, 256, 128}));
}

TEST(Interception, ForceDecaysExponentially) {
  const ContinuousGame g = make_interception();
  Vector x = g.initial_state, dx(10);
  const double dt = 0.001;
  for (int k = 0; k < 3000; ++k) {
    g.dynamics(k * dt, x, Vector{0, 0}, Vector{0, 0}, dx);
    for (std::size_t d = 0; d < 10; ++d) x[d] += dt * dx[d];
  }
  EXPECT_NEAR(std::hypot(x[4], x[5]), std::exp(-3.0) * std::hypot(1.0, -2.0), 1e-2);
}

TEST(Interception, MeshesLieOnEllipseBoundary) {
  const auto dg = make_discretized("interception");
  EXPECT_EQ(dg.u_mesh().size(), 11u);
  for (const auto& p : dg.u_mesh().points()) {
    EXPECT_NEAR(std::pow(p[0] / (0.67 * 1.3), 2) + std::pow(p[1] / 1.3, 2), 1.0, 1e-12);
  }
  for (const auto& p : dg.v_mesh().points()) {
    EXPECT_NEAR(std::pow(p[0] / 0.71, 2) + std::pow(p[1] / 1.0, 2), 1.0, 1e-12);
  }
}

TEST(Counterexample, Definition) {
  const ContinuousGame g = make_counterexample();
  EXPECT_EQ(g.state_dim, 1u);
  EXPECT_DOUBLE_EQ(eval_f(g, 0.4, {2.0}, {0}, {0})[0], 1.0);
  EXPECT_FALSE(g.separated.has_value());
  // Continuous extrema: min_u max_v cos(u + v) = 1, max_v min_u = -1.
  double minmax = 1e9, maxmin = -1e9;
  const int n = 400;
  for (int a = 0; a <= n; ++a) {
    const double u = -std::numbers::pi + 2 * std::numbers::pi * a / n;
    double best = -1e9, worst = 1e9;
    for (int b = 0; b <= n; ++b) {
      const double v = -std::numbers::pi + 2 * std::numbers::pi * b / n;
      best = std::max(best, std::cos(u + v));
      worst = std::min(worst, std::cos(v + u));
    }
    minmax = std::min(minmax, best);
    maxmin = std::max(maxmin, worst);
  }
  EXPECT_NEAR(minmax, 1.0, 1e-9);
  EXPECT_NEAR(maxmin, -1.0, 1e-9);
}

TEST(Catalog, EveryEntryValidatesAndDiscretises) {
  const std::vector<std::string> names{"escape_from_zero", "get_into_circle", "get_into_square",
                                       "homicidal_chauffeur", "interception", "counterexample"};
  ASSERT_EQ(environment_catalog().size(), names.size());
  for (const auto& n : names) {
    const auto dg = make_discretized(n);
    EXPECT_EQ(dg.game().name, n);
    EXPECT_NEAR(dg.partition().diameter(), 0.2, 1e-12);
  }
  EXPECT_THROW(find_environment("swimmer"), InvalidArgument);
}

TEST(Catalog, TableMeshSizes) {
  EXPECT_EQ(make_discretized("get_into_circle").u_mesh().size(), 11u);
  EXPECT_NEAR(make_discretized("get_into_circle").u_mesh()[1][0] - make_discretized("get_into_circle").u_mesh()[0][0],
              0.1, 1e-12);
  EXPECT_EQ(make_discretized("escape_from_zero").v_mesh().size(), 11u);
}

TEST(Catalog, ProjectionFixesMeshPoints) {
  for (const auto& e : environment_catalog()) {
    const auto dg = make_discretized(e.name);
    for (const auto& p : dg.u_mesh().points()) {
      const Vector q = project(dg.game().u_set, p);
      for (std::size_t k = 0; k < p.size(); ++k) EXPECT_NEAR(q[k], p[k], 1e-12) << e.name;
    }
    for (const auto& p : dg.v_mesh().points()) {
      const Vector q = project(dg.game().v_set, p);
      for (std::size_t k = 0; k < p.size(); ++k) EXPECT_NEAR(q[k], p[k], 1e-12) << e.name;
    }
  }
}

// Random rollouts stay inside both the growth ball and the per-game reach box.
TEST(Catalog, RolloutsStayInReachSet) {
  for (const auto& e : environment_catalog()) {
    const auto dg = make_discretized(e.name);
    const auto& g = dg.game();
    Rng rng(17);
    const std::size_t nu = dg.u_mesh().size(), nv = dg.v_mesh().size();
    for (int k = 0; k < 1000; ++k) {
      const Rollout r = rollout(dg, [&](std::size_t, std::span<const double>) { return rng() % nu; },
                                [&](std::size_t, std::span<const double>) { return rng() % nv; });
      for (const auto& t : r.transitions) {
        const std::size_t i = t.next_t_index;
        EXPECT_LE(norm(t.x_next), growth_reach_radius(g, dg.partition().time(i)) + 1e-9) << e.name;
        const auto box = reach_box(g, dg.partition(), i);
        for (std::size_t d = 0; d < g.state_dim; ++d) {
          ASSERT_GE(t.x_next[d], box[d].lo - 1e-9) << e.name;
          ASSERT_LE(t.x_next[d], box[d].hi + 1e-9) << e.name;
        }
      }
    }
  }
}

}  // namespace
}  // namespace dgq
