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

#ifndef DGQ_TESTS_GRADIENT_CHECK_HPP_
#define DGQ_TESTS_GRADIENT_CHECK_HPP_

#include <Eigen/Dense>

#include <algorithm>
#include <cstdint>
#include <random>
#include <vector>

#include "dgq/nn.hpp"

namespace dgq::testing {

// Relative error ||g - g_fd|| / max(||g||, ||g_fd||) between the analytic
// MSE gradient and central differences with step h, on a random net and batch.
inline double gradient_relative_error(std::uint64_t seed, double h = 1e-5) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> width(1, 6);
  const int in = width(rng), hidden = width(rng) + 2, out = width(rng);
  Mlp net({in, hidden, out}, seed * 7919 + 1);
  std::normal_distribution<double> gauss(0.0, 1.0);
  for (auto& layer : net.layers()) {
    for (Eigen::Index i = 0; i < layer.bias.size(); ++i) layer.bias(i) = 0.3 * gauss(rng);
  }
  const int k = 1 + width(rng);
  Eigen::MatrixXd x(in, k);
  Eigen::VectorXd y(k);
  std::vector<std::size_t> sel(static_cast<std::size_t>(k));
  std::uniform_int_distribution<int> pick(0, out - 1);
  for (int j = 0; j < k; ++j) {
    for (int i = 0; i < in; ++i) x(i, j) = gauss(rng);
    y(j) = gauss(rng);
    sel[static_cast<std::size_t>(j)] = static_cast<std::size_t>(pick(rng));
  }
  const MseResult r = mse_grad(net, x, sel, y);
  double diff2 = 0.0, a2 = 0.0, n2 = 0.0;
  auto probe = [&](double& param, double analytic) {
    const double keep = param;
    param = keep + h;
    const double up = mse_grad(net, x, sel, y).loss;
    param = keep - h;
    const double down = mse_grad(net, x, sel, y).loss;
    param = keep;
    const double numeric = (up - down) / (2.0 * h);
    diff2 += (numeric - analytic) * (numeric - analytic);
    a2 += analytic * analytic;
    n2 += numeric * numeric;
  };
  for (std::size_t l = 0; l < net.layers().size(); ++l) {
    auto& layer = net.layers()[l];
    for (Eigen::Index i = 0; i < layer.weight.rows(); ++i) {
      for (Eigen::Index c = 0; c < layer.weight.cols(); ++c) probe(layer.weight(i, c), r.gradient[l].weight(i, c));
    }
    for (Eigen::Index i = 0; i < layer.bias.size(); ++i) probe(layer.bias(i), r.gradient[l].bias(i));
  }
  const double scale = std::sqrt(std::max(a2, n2));
  return scale == 0.0 ? 0.0 : std::sqrt(diff2) / scale;
}

}  // namespace dgq::testing

#endif  // DGQ_TESTS_GRADIENT_CHECK_HPP_
