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
#include <filesystem>
#include <random>

#include "dgq/envs.hpp"
#include "dgq/grid.hpp"
#include "toy_games.hpp"

namespace dgq {
namespace {

SolveResult solve_catalog(const DiscretizedGame& dg, std::size_t nodes = 0) {
  const auto& info = find_environment(dg.game().name);
  return solve(dg, StateGrid::for_game(dg, nodes > 0 ? nodes : info.grid_nodes));
}

Vector random_in(const std::vector<Interval>& box, std::mt19937_64& rng) {
  Vector x;
  for (const auto& b : box) x.push_back(std::uniform_real_distribution<double>(b.lo, b.hi)(rng));
  return x;
}

TEST(StateGrid, Construction) {
  const StateGrid g({{0, 1}, {-2, 2}}, {3, 5});
  EXPECT_EQ(g.dims(), 2u);
  EXPECT_EQ(g.size(), 15u);
  EXPECT_DOUBLE_EQ(g.spacing(1), 1.0);
  // Last coordinate runs fastest.
  EXPECT_EQ(g.node(1), (Vector{0.0, -1.0}));
  EXPECT_EQ(g.node(5), (Vector{0.5, -2.0}));
  EXPECT_THROW(StateGrid({{0, 1}}, {1}), InvalidArgument);
  EXPECT_THROW(StateGrid({{1, 1}}, {3}), InvalidArgument);
  EXPECT_THROW(StateGrid({{0, 1}}, {3, 3}), InvalidArgument);
  EXPECT_THROW(StateGrid(std::vector<Interval>(4, {0, 1}), std::vector<std::size_t>(4, 2)), Unsupported);
}

TEST(StateGrid, ForGameCoversReachSet) {
  for (const char* name : {"escape_from_zero", "get_into_circle", "get_into_square", "counterexample"}) {
    const auto dg = make_discretized(name);
    const StateGrid g = StateGrid::for_game(dg, 11);
    for (std::size_t i = 0; i <= dg.num_steps(); ++i) {
      const auto box = reach_box(dg.game(), dg.partition(), i);
      for (std::size_t d = 0; d < g.dims(); ++d) {
        EXPECT_LE(g.ranges()[d].lo, box[d].lo) << name;
        EXPECT_GE(g.ranges()[d].hi, box[d].hi) << name;
      }
    }
    const StateGrid wide = StateGrid::for_game(dg, 11, 1.2, StateGrid::RangeMode::kGrowthBound);
    const double r = 1.2 * growth_reach_radius(dg.game(), dg.game().horizon);
    EXPECT_NEAR(wide.ranges()[0].hi, r, 1e-9);
  }
  EXPECT_THROW(StateGrid::for_game(make_discretized("homicidal_chauffeur"), 5), Unsupported);
}

TEST(StateGrid, InterpolationReproducesNodes) {
  const StateGrid g({{-1, 1}, {0, 2}, {3, 4}}, {4, 3, 5});
  std::vector<double> values(g.size());
  std::mt19937_64 rng(1);
  std::normal_distribution<double> e(0, 1);
  for (auto& v : values) v = e(rng);
  for (std::size_t n = 0; n < g.size(); ++n) {
    bool clamped = true;
    EXPECT_NEAR(g.interpolate(values, g.node(n), &clamped), values[n], 1e-12);
    EXPECT_FALSE(clamped);
  }
}

TEST(StateGrid, InterpolationIsConvexAndExactOnAffine) {
  const StateGrid g({{-1, 1}, {0, 2}}, {5, 7});
  std::vector<double> affine(g.size()), rough(g.size());
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> e(-5, 5);
  for (std::size_t n = 0; n < g.size(); ++n) {
    const Vector x = g.node(n);
    affine[n] = 2.0 * x[0] - 3.0 * x[1] + 0.5;
    rough[n] = e(rng);
  }
  const double lo = *std::min_element(rough.begin(), rough.end());
  const double hi = *std::max_element(rough.begin(), rough.end());
  for (int k = 0; k < 500; ++k) {
    const Vector x = random_in(g.ranges(), rng);
    EXPECT_NEAR(g.interpolate(affine, x), 2.0 * x[0] - 3.0 * x[1] + 0.5, 1e-12);
    const double v = g.interpolate(rough, x);
    EXPECT_GE(v, lo);
    EXPECT_LE(v, hi);
  }
}

TEST(StateGrid, ClampsOutside) {
  const StateGrid g({{0, 1}}, {2});
  const std::vector<double> values{0.0, 1.0};
  bool clamped = false;
  EXPECT_EQ(g.interpolate(values, std::vector<double>{3.0}, &clamped), 1.0);
  EXPECT_TRUE(clamped);
  clamped = false;
  EXPECT_EQ(g.interpolate(values, std::vector<double>{-3.0}, &clamped), 0.0);
  EXPECT_TRUE(clamped);
  EXPECT_FALSE(g.inside(std::vector<double>{1.5}));
}

TEST(Solve, StaticGameKeepsTerminalCost) {
  const auto dg = testing::discretize(testing::norm_static_game(), 0.25, "LM(-1,1,2)", "LM(-1,1,2)");
  const StateGrid grid({{2, 4}, {3, 5}}, {9, 9});
  const SolveResult s = solve(dg, grid);
  EXPECT_EQ(s.clamped, 0u);
  for (std::size_t i = 0; i <= dg.num_steps(); ++i) {
    for (std::size_t n = 0; n < grid.size(); ++n) {
      const Vector x = grid.node(n);
      EXPECT_NEAR(s.upper.table(i)[n], std::hypot(x[0], x[1]), 1e-12);
      EXPECT_NEAR(s.lower.table(i)[n], std::hypot(x[0], x[1]), 1e-12);
    }
    if (i < dg.num_steps()) {
      const PayoffMatrix q = q_values(dg, s.upper, i, std::vector<double>{3.0, 4.0});
      EXPECT_NEAR((q.array() - 5.0).abs().maxCoeff(), 0.0, 1e-12);
    }
  }
}

TEST(Solve, CounterexampleGapIsTwo) {
  const auto dg = make_discretized("counterexample");
  const SolveResult s = solve_catalog(dg);
  const Vector x0{0.0};
  EXPECT_NEAR(s.upper.at(0, x0), 1.0, 1e-9);
  EXPECT_NEAR(s.lower.at(0, x0), -1.0, 1e-9);
  EXPECT_EQ(s.clamped, 0u);
}

TEST(QValues, CounterexampleGapProfile) {
  const auto dg = make_discretized("counterexample");
  const SolveResult s = solve_catalog(dg);
  std::mt19937_64 rng(3);
  for (int k = 0; k < 50; ++k) {
    const std::size_t i = static_cast<std::size_t>(k) % dg.num_steps();
    const Vector x = random_in(reach_box(dg.game(), dg.partition(), i), rng);
    const PayoffMatrix gap = q_values(dg, s.upper, i, x) - q_values(dg, s.lower, i, x);
    const double want = 2.0 * (1.0 - dg.partition().time(i + 1));
    EXPECT_LE((gap.array() - want).abs().maxCoeff(), 1e-9);
  }
  EXPECT_THROW(q_values(dg, s.upper, dg.num_steps(), Vector{0.0}), InvalidArgument);
}

TEST(Solve, GetIntoCircleHasSharedValue) {
  const auto dg = make_discretized("get_into_circle");
  const SolveResult s = solve_catalog(dg);
  const Vector& x0 = dg.game().initial_state;
  EXPECT_NEAR(s.upper.at(0, x0), 0.0, 0.15);
  EXPECT_LE(s.upper.at(0, x0) - s.lower.at(0, x0), 0.1);
  EXPECT_EQ(s.clamped, 0u);
  std::mt19937_64 rng(4);
  for (int k = 0; k < 100; ++k) {
    const std::size_t i = static_cast<std::size_t>(k) % dg.num_steps();
    const Vector x = random_in(reach_box(dg.game(), dg.partition(), i), rng);
    const PayoffMatrix gap = q_values(dg, s.upper, i, x) - q_values(dg, s.lower, i, x);
    EXPECT_LE(gap.cwiseAbs().maxCoeff(), 0.1);
  }
}

TEST(Solve, WeakDualityAndTerminalExactness) {
  for (const char* name : {"escape_from_zero", "counterexample", "get_into_square"}) {
    const auto dg = make_discretized(name, 0.5);
    const SolveResult s = solve_catalog(dg, 41);
    Vector x(dg.state_dim());
    const auto m = dg.num_steps();
    for (std::size_t n = 0; n < s.upper.grid().size(); ++n) {
      s.upper.grid().node(n, x);
      EXPECT_EQ(s.upper.table(m)[n], dg.game().terminal_cost(x));
      EXPECT_EQ(s.lower.table(m)[n], dg.game().terminal_cost(x));
      for (std::size_t i = 0; i < m; ++i) EXPECT_GE(s.upper.table(i)[n], s.lower.table(i)[n]) << name;
    }
  }
}

TEST(Solve, ThreadsDoNotChangeResult) {
  const auto dg = make_discretized("escape_from_zero", 0.4);
  const StateGrid grid = StateGrid::for_game(dg, 31);
  const SolveResult a = solve(dg, grid, {1});
  const SolveResult b = solve(dg, grid, {3});
  for (std::size_t i = 0; i < a.upper.times().size(); ++i) {
    EXPECT_TRUE(std::equal(a.upper.table(i).begin(), a.upper.table(i).end(), b.upper.table(i).begin()));
    EXPECT_TRUE(std::equal(a.lower.table(i).begin(), a.lower.table(i).end(), b.lower.table(i).begin()));
  }
  EXPECT_EQ(a.clamped, b.clamped);
}

TEST(Solve, RejectsMismatchedGrid) {
  const auto dg = make_discretized("counterexample");
  EXPECT_THROW(solve(dg, StateGrid({{0, 1}, {0, 1}}, {3, 3})), InvalidArgument);
}

TEST(BestResponse, StaticGameAnyPolicy) {
  const auto dg = testing::discretize(testing::norm_static_game(), 0.25, "LM(-1,1,2)", "LM(-1,1,2)");
  const StateGrid grid({{2, 4}, {3, 5}}, {5, 5});
  for (Side side : {Side::kU, Side::kV}) {
    const ValueGrid br = best_response_value(dg, grid, Policy::constant(1), side);
    EXPECT_NEAR(br.at(0, dg.game().initial_state), 5.0, 1e-12);
  }
}

TEST(BestResponse, GreedyPoliciesAreNearTheValue) {
  const auto dg = make_discretized("get_into_circle");
  const auto& info = find_environment("get_into_circle");
  const StateGrid grid = StateGrid::for_game(dg, info.grid_nodes);
  const SolveResult s = solve(dg, grid);
  auto upper = std::make_shared<const ValueGrid>(s.upper);
  auto lower = std::make_shared<const ValueGrid>(s.lower);
  const Vector& x0 = dg.game().initial_state;
  std::size_t clamps = 0;
  const double vu = best_response_value(dg, grid, grid_greedy_policy(dg, upper, Side::kU), Side::kU, &clamps).at(0, x0);
  const double vv = best_response_value(dg, grid, grid_greedy_policy(dg, lower, Side::kV), Side::kV).at(0, x0);
  EXPECT_LE(vu, s.upper.at(0, x0) + 0.1);
  EXPECT_GE(vv, s.lower.at(0, x0) - 0.1);
  EXPECT_GE(vu, s.lower.at(0, x0) - 0.1);
  EXPECT_EQ(clamps, 0u);
}

TEST(BestResponse, ArbitraryPolicyBoundedByLowerValue) {
  const auto dg = make_discretized("counterexample");
  const StateGrid grid = StateGrid::for_game(dg, 61);
  const SolveResult s = solve(dg, grid);
  const Vector x0{0.0};
  for (std::size_t a : {0u, 3u, 7u}) {
    const double vu = best_response_value(dg, grid, Policy::constant(a), Side::kU).at(0, x0);
    const double vv = best_response_value(dg, grid, Policy::constant(a), Side::kV).at(0, x0);
    EXPECT_GE(vu, s.lower.at(0, x0) - 1e-9);
    EXPECT_GE(vu, s.upper.at(0, x0) - 1e-9);  // v sees u's action: it attains cos = 1 each step
    EXPECT_LE(vv, s.lower.at(0, x0) + 1e-9);
  }
}

TEST(BestResponse, MixedPolicyIsAveraged) {
  // Linear game: J = sum dt (u + v). A uniform u over {-1, 1} averages 0.
  const auto dg = testing::discretize(testing::linear_game(), 0.25, "LM(-1,1,1)", "LM(-1,1,1)");
  const StateGrid grid({{-2.4, 2.4}}, {49});
  const Policy coin = Policy::mixed([](std::size_t, std::span<const double>) { return Eigen::VectorXd::Constant(2, 0.5); });
  EXPECT_NEAR(best_response_value(dg, grid, coin, Side::kU).at(0, Vector{0.0}), 1.0, 1e-12);
  EXPECT_NEAR(best_response_value(dg, grid, coin, Side::kV).at(0, Vector{0.0}), -1.0, 1e-12);
}

TEST(ResponsePolicy, RealisesTheGridValue) {
  const auto dg = make_discretized("counterexample");
  const StateGrid grid = StateGrid::for_game(dg, 61);
  const Policy frozen = Policy::constant(2);
  auto br = std::make_shared<const ValueGrid>(best_response_value(dg, grid, frozen, Side::kU));
  const Policy reply = grid_response_policy(dg, br, frozen, Side::kU);
  const Rollout r = rollout(dg, frozen.as_pure(), reply.as_pure());
  EXPECT_NEAR(r.value, br->at(0, Vector{0.0}), 1e-9);
  EXPECT_NEAR(r.value, 1.0, 1e-9);
}

TEST(GapStats, Reported) {
  const auto dg = make_discretized("counterexample");
  const GapStats g = gap_stats(dg, solve_catalog(dg));
  EXPECT_NEAR(g.at_x0, 2.0, 1e-9);
  EXPECT_NEAR(g.max_in_reach, 2.0, 1e-9);
}

TEST(ExportImport, RoundTrip) {
  const auto dg = make_discretized("escape_from_zero", 0.5);
  const SolveResult s = solve_catalog(dg, 21);
  const auto path = (std::filesystem::temp_directory_path() / "dgq_test_grid.dgqv").string();
  export_grid(s.lower, path);
  const ValueGrid back = import_grid(path);
  std::filesystem::remove(path);
  EXPECT_EQ(back.kind(), ValueKind::kLower);
  EXPECT_EQ(back.times(), s.lower.times());
  EXPECT_EQ(back.grid().nodes(), s.lower.grid().nodes());
  for (std::size_t i = 0; i < back.times().size(); ++i) {
    EXPECT_TRUE(std::equal(back.table(i).begin(), back.table(i).end(), s.lower.table(i).begin()));
  }
  EXPECT_THROW(import_grid(path), Error);
}

}  // namespace
}  // namespace dgq
