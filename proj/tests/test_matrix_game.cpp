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

#include <random>

#include "dgq/matrix_game.hpp"
#include "fictitious_play.hpp"

namespace dgq {
namespace {

PayoffMatrix make(std::initializer_list<std::initializer_list<double>> rows) {
  PayoffMatrix m(static_cast<Eigen::Index>(rows.size()),
                 static_cast<Eigen::Index>(rows.begin()->size()));
  Eigen::Index i = 0;
  for (const auto& r : rows) {
    Eigen::Index j = 0;
    for (double v : r) m(i, j++) = v;
    ++i;
  }
  return m;
}

const PayoffMatrix kRps = make({{0, 1, -1}, {-1, 0, 1}, {1, -1, 0}});

PayoffMatrix random_matrix(std::mt19937_64& rng) {
  std::uniform_int_distribution<int> dim(2, 8);
  std::uniform_real_distribution<double> entry(-1.0, 1.0);
  PayoffMatrix m(dim(rng), dim(rng));
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) m(i, j) = entry(rng);
  }
  return m;
}

TEST(PureMinimax, Examples) {
  auto s = pure_minimax(make({{1, 2}, {3, 4}}));
  EXPECT_EQ(s.value, 2.0);
  EXPECT_EQ(s.index, 0u);
  s = pure_minimax(make({{7.5}}));
  EXPECT_EQ(s.value, 7.5);
  EXPECT_EQ(s.index, 0u);
  s = pure_minimax(kRps);
  EXPECT_EQ(s.value, 1.0);
  EXPECT_EQ(s.index, 0u);
  EXPECT_EQ(pure_maximin(kRps).value, -1.0);
}

TEST(PureMaximin, Examples) {
  auto s = pure_maximin(make({{1, 2}, {3, 4}}));
  EXPECT_EQ(s.value, 2.0);
  EXPECT_EQ(s.index, 1u);
  s = pure_maximin(make({{0, 0}, {0, 0}}));
  EXPECT_EQ(s.value, 0.0);
  EXPECT_EQ(s.index, 0u);
}

TEST(PureSolutions, RejectInvalid) {
  EXPECT_THROW(pure_minimax(PayoffMatrix(0, 2)), InvalidArgument);
  PayoffMatrix m = make({{1, std::numeric_limits<double>::quiet_NaN()}});
  EXPECT_THROW(pure_maximin(m), InvalidArgument);
  EXPECT_THROW(nash_mixed(m), InvalidArgument);
}

TEST(PureSolutions, WeakDualityAndShiftInvariance) {
  std::mt19937_64 rng(11);
  for (int k = 0; k < 500; ++k) {
    const PayoffMatrix m = random_matrix(rng);
    EXPECT_LE(pure_maximin(m).value, pure_minimax(m).value);
    const PayoffMatrix shifted = m.array() + 3.25;
    EXPECT_EQ(pure_minimax(shifted).index, pure_minimax(m).index);
    EXPECT_EQ(pure_maximin(shifted).index, pure_maximin(m).index);
  }
}

TEST(NashMixed, RockPaperScissors) {
  const MixedSolution s = nash_mixed(kRps);
  EXPECT_NEAR(s.value, 0.0, 1e-9);
  for (int k = 0; k < 3; ++k) {
    EXPECT_NEAR(s.row_strategy[k], 1.0 / 3, 1e-9);
    EXPECT_NEAR(s.col_strategy[k], 1.0 / 3, 1e-9);
  }
}

TEST(NashMixed, PureSaddle) {
  const MixedSolution s = nash_mixed(make({{1, 2}, {3, 4}}));
  EXPECT_NEAR(s.value, 2.0, 1e-9);
  EXPECT_NEAR(s.row_strategy[0], 1.0, 1e-9);
  EXPECT_NEAR(s.col_strategy[1], 1.0, 1e-9);
}

TEST(NashMixed, MatchingPennies) {
  const MixedSolution s = nash_mixed(make({{1, -1}, {-1, 1}}));
  EXPECT_NEAR(s.value, 0.0, 1e-9);
  EXPECT_NEAR(s.row_strategy[0], 0.5, 1e-9);
  EXPECT_NEAR(s.col_strategy[0], 0.5, 1e-9);
}

TEST(NashMixed, EquilibriumConditionsOnRandomMatrices) {
  std::mt19937_64 rng(3);
  for (int k = 0; k < 1000; ++k) {
    const PayoffMatrix m = random_matrix(rng);
    const MixedSolution s = nash_mixed(m);
    EXPECT_NEAR(s.row_strategy.sum(), 1.0, 1e-9);
    EXPECT_NEAR(s.col_strategy.sum(), 1.0, 1e-9);
    EXPECT_GE(s.row_strategy.minCoeff(), 0.0);
    EXPECT_GE(s.col_strategy.minCoeff(), 0.0);
    EXPECT_LE((s.row_strategy.transpose() * m).maxCoeff(), s.value + 1e-6);
    EXPECT_GE((m * s.col_strategy).minCoeff(), s.value - 1e-6);
    EXPECT_LE(s.epsilon, 1e-6);
    EXPECT_LE(pure_maximin(m).value, s.value + 1e-9);
    EXPECT_GE(pure_minimax(m).value, s.value - 1e-9);
  }
}

TEST(NashMixed, ShiftEquivariance) {
  std::mt19937_64 rng(5);
  for (int k = 0; k < 200; ++k) {
    const PayoffMatrix m = random_matrix(rng);
    const MixedSolution a = nash_mixed(m);
    const MixedSolution b = nash_mixed(m.array() - 4.5);
    EXPECT_NEAR(b.value, a.value - 4.5, 1e-9);
    EXPECT_LE((b.row_strategy.transpose() * m).maxCoeff(), a.value + 1e-6);
    EXPECT_GE((m * b.col_strategy).minCoeff(), a.value - 1e-6);
  }
}

TEST(NashMixed, AgreesWithFictitiousPlay) {
  std::mt19937_64 rng(17);
  for (int k = 0; k < 100; ++k) {
    const PayoffMatrix m = random_matrix(rng);
    const auto fp = testing::fictitious_play(m, 1e-3, 200000);
    const double v = nash_mixed(m).value;
    EXPECT_GE(v, fp.lower - 1e-3);
    EXPECT_LE(v, fp.upper + 1e-3);
  }
}

TEST(NashMixed, Deterministic) {
  std::mt19937_64 rng(23);
  const PayoffMatrix m = random_matrix(rng);
  const MixedSolution a = nash_mixed(m);
  const MixedSolution b = nash_mixed(m);
  EXPECT_EQ(a.value, b.value);
  EXPECT_EQ(a.row_strategy, b.row_strategy);
  EXPECT_EQ(a.col_strategy, b.col_strategy);
}

TEST(NashMixed, DegenerateShapes) {
  const MixedSolution row = nash_mixed(make({{3, 1, 2}}));
  EXPECT_NEAR(row.value, 3.0, 1e-9);
  EXPECT_NEAR(row.col_strategy[0], 1.0, 1e-9);
  const MixedSolution col = nash_mixed(make({{3}, {1}, {2}}));
  EXPECT_NEAR(col.value, 1.0, 1e-9);
  EXPECT_NEAR(col.row_strategy[1], 1.0, 1e-9);
  EXPECT_NEAR(nash_mixed(make({{0, 0}, {0, 0}})).value, 0.0, 1e-12);
}

}  // namespace
}  // namespace dgq
