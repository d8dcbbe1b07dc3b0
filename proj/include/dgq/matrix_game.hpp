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

#ifndef DGQ_MATRIX_GAME_HPP_
#define DGQ_MATRIX_GAME_HPP_

#include <Eigen/Dense>

#include <cmath>
#include <cstddef>
#include <limits>
#include <string>
#include <vector>

#include "dgq/error.hpp"

namespace dgq {

// Zero-sum payoff matrix: rows are the first agent's actions (minimiser),
// columns the second agent's (maximiser).
using PayoffMatrix = Eigen::MatrixXd;

struct PureSolution {
  double value = 0.0;
  std::size_t index = 0;
};

struct MixedSolution {
  double value = 0.0;
  Eigen::VectorXd row_strategy;
  Eigen::VectorXd col_strategy;
  // max deviation gain of either player against the returned pair.
  double epsilon = 0.0;
};

namespace detail {

inline void check_payoff(const PayoffMatrix& m) {
  if (m.rows() == 0 || m.cols() == 0) throw InvalidArgument("payoff matrix is empty");
  if (!m.allFinite()) throw InvalidArgument("payoff matrix has non-finite entries");
}

}  // namespace detail

// min over rows of the row maximum; lowest row index on ties.
inline PureSolution pure_minimax(const PayoffMatrix& m) {
  detail::check_payoff(m);
  PureSolution best{std::numeric_limits<double>::infinity(), 0};
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    const double row_max = m.row(r).maxCoeff();
    if (row_max < best.value) best = {row_max, static_cast<std::size_t>(r)};
  }
  return best;
}

// max over columns of the column minimum; lowest column index on ties.
inline PureSolution pure_maximin(const PayoffMatrix& m) {
  detail::check_payoff(m);
  PureSolution best{-std::numeric_limits<double>::infinity(), 0};
  for (Eigen::Index c = 0; c < m.cols(); ++c) {
    const double col_min = m.col(c).minCoeff();
    if (col_min > best.value) best = {col_min, static_cast<std::size_t>(c)};
  }
  return best;
}

// Mixed equilibrium of the zero-sum matrix game.
//
// Entries are shifted to A = M - min(M) + 1 > 0 and the row player's program
//   maximise 1'x  s.t.  A'x <= 1, x >= 0
// is solved by a dense tableau simplex with Bland's rule. Then
// value(A) = 1 / 1'x, the row strategy is x value(A), and the column strategy
// comes from the duals (slack reduced costs) scaled the same way.
inline MixedSolution nash_mixed(const PayoffMatrix& m, double max_epsilon = 1e-6) {
  detail::check_payoff(m);
  const Eigen::Index rows = m.rows();
  const Eigen::Index cols = m.cols();
  const double shift = m.minCoeff() - 1.0;
  const PayoffMatrix a = m.array() - shift;

  // Tableau: `cols` constraint rows, variables [x (rows) | slacks (cols)], rhs.
  const Eigen::Index nvar = rows + cols;
  Eigen::MatrixXd tab = Eigen::MatrixXd::Zero(cols, nvar + 1);
  tab.leftCols(rows) = a.transpose();
  tab.block(0, rows, cols, cols).setIdentity();
  tab.col(nvar).setOnes();
  Eigen::VectorXd cost = Eigen::VectorXd::Zero(nvar + 1);  // reduced costs, last = -objective
  cost.head(rows).setConstant(-1.0);
  std::vector<Eigen::Index> basis(static_cast<std::size_t>(cols));
  for (Eigen::Index j = 0; j < cols; ++j) basis[static_cast<std::size_t>(j)] = rows + j;

  constexpr double kTol = 1e-12;
  const int max_iter = 50 * static_cast<int>(nvar + 10);
  int iter = 0;
  for (; iter < max_iter; ++iter) {
    Eigen::Index enter = -1;
    for (Eigen::Index k = 0; k < nvar; ++k) {
      if (cost(k) < -kTol) {
        enter = k;
        break;
      }
    }
    if (enter < 0) break;
    Eigen::Index leave = -1;
    double best_ratio = std::numeric_limits<double>::infinity();
    for (Eigen::Index j = 0; j < cols; ++j) {
      const double coef = tab(j, enter);
      if (coef <= kTol) continue;
      const double ratio = tab(j, nvar) / coef;
      if (ratio < best_ratio - kTol ||
          (ratio <= best_ratio + kTol && leave >= 0 &&
           basis[static_cast<std::size_t>(j)] < basis[static_cast<std::size_t>(leave)])) {
        best_ratio = std::min(best_ratio, ratio);
        leave = j;
      }
    }
    if (leave < 0) throw NumericalError("nash_mixed: unbounded program (unexpected)");
    tab.row(leave) /= tab(leave, enter);
    for (Eigen::Index j = 0; j < cols; ++j) {
      if (j != leave && tab(j, enter) != 0.0) tab.row(j) -= tab(j, enter) * tab.row(leave);
    }
    cost -= cost(enter) * tab.row(leave).transpose();
    basis[static_cast<std::size_t>(leave)] = enter;
  }
  if (iter == max_iter) throw NumericalError("nash_mixed: simplex iteration limit reached");

  Eigen::VectorXd x = Eigen::VectorXd::Zero(rows);
  for (Eigen::Index j = 0; j < cols; ++j) {
    const Eigen::Index b = basis[static_cast<std::size_t>(j)];
    if (b < rows) x(b) = tab(j, nvar);
  }
  Eigen::VectorXd y = cost.segment(rows, cols);
  const double total = x.sum();
  if (!(total > 0.0)) throw NumericalError("nash_mixed: degenerate solution");
  const double value_a = 1.0 / total;

  MixedSolution sol;
  sol.row_strategy = (x * value_a).cwiseMax(0.0);
  sol.col_strategy = (y * value_a).cwiseMax(0.0);
  sol.row_strategy /= sol.row_strategy.sum();
  sol.col_strategy /= sol.col_strategy.sum();
  sol.value = value_a + shift;

  const double col_best = (sol.row_strategy.transpose() * m).maxCoeff();
  const double row_best = (m * sol.col_strategy).minCoeff();
  sol.epsilon = std::max(col_best - sol.value, sol.value - row_best);
  sol.epsilon = std::max(sol.epsilon, 0.0);
  if (!(sol.epsilon <= max_epsilon)) {
    throw NumericalError("nash_mixed: equilibrium check failed, achieved epsilon " +
                         std::to_string(sol.epsilon));
  }
  return sol;
}

}  // namespace dgq

#endif  // DGQ_MATRIX_GAME_HPP_
