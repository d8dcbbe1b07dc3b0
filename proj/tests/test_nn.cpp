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
#include <cstdio>
#include <filesystem>

#include "dgq/nn.hpp"
#include "gradient_check.hpp"

namespace dgq {
namespace {

Eigen::MatrixXd random_inputs(int rows, int cols, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, 1.0);
  Eigen::MatrixXd x(rows, cols);
  for (Eigen::Index j = 0; j < cols; ++j) {
    for (Eigen::Index i = 0; i < rows; ++i) x(i, j) = g(rng);
  }
  return x;
}

double max_abs_diff(const LayerStack& a, const LayerStack& b) {
  double d = 0.0;
  for (std::size_t l = 0; l < a.size(); ++l) {
    d = std::max(d, (a[l].weight - b[l].weight).cwiseAbs().maxCoeff());
    d = std::max(d, (a[l].bias - b[l].bias).cwiseAbs().maxCoeff());
  }
  return d;
}

TEST(Mlp, ParameterCount) {
  EXPECT_EQ(Mlp({3, 256, 128, 4}, 0).parameter_count(), 4u * 256 + 257u * 128 + 129u * 4);
  EXPECT_THROW(Mlp({3}, 0), InvalidArgument);
  EXPECT_THROW(Mlp({3, 0, 2}, 0), InvalidArgument);
}

TEST(Mlp, ZeroWeightsGiveOutputBias) {
  Mlp net = Mlp::zeros({4, 8, 3});
  net.layers().back().bias << 1.0, -2.0, 0.5;
  const Eigen::MatrixXd out = net.forward(random_inputs(4, 5, 1));
  for (Eigen::Index j = 0; j < 5; ++j) {
    EXPECT_EQ(out(0, j), 1.0);
    EXPECT_EQ(out(1, j), -2.0);
    EXPECT_EQ(out(2, j), 0.5);
  }
}

TEST(Mlp, SingleLayerIsAffine) {
  Mlp net({3, 2}, 4);
  net.layers()[0].bias << 0.25, -1.0;
  const Eigen::MatrixXd x = random_inputs(3, 6, 2);
  Eigen::MatrixXd want = net.layers()[0].weight * x;
  want.colwise() += net.layers()[0].bias;
  EXPECT_LT((net.forward(x) - want).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(Mlp, BatchColumnsIndependent) {
  Mlp net({3, 16, 16, 5}, 9);
  const Eigen::MatrixXd x = random_inputs(3, 7, 3);
  const Eigen::MatrixXd out = net.forward(x);
  Eigen::MatrixXd perm(3, 7);
  for (int j = 0; j < 7; ++j) perm.col(j) = x.col(6 - j);
  const Eigen::MatrixXd pout = net.forward(perm);
  for (int j = 0; j < 7; ++j) {
    EXPECT_LT((pout.col(j) - out.col(6 - j)).cwiseAbs().maxCoeff(), 1e-12);
  }
  EXPECT_THROW(net.forward(random_inputs(2, 1, 0)), InvalidArgument);
}

TEST(Mlp, InitRange) {
  Mlp net({5, 40, 3}, 77);
  EXPECT_LE(net.layers()[0].weight.cwiseAbs().maxCoeff(), std::sqrt(6.0 / 5));
  EXPECT_LE(net.layers()[1].weight.cwiseAbs().maxCoeff(), std::sqrt(6.0 / 40));
  EXPECT_EQ(net.layers()[0].bias.cwiseAbs().maxCoeff(), 0.0);
  EXPECT_EQ(net.init_seed(), 77u);
}

TEST(MseGrad, ZeroAtTargets) {
  Mlp net({3, 8, 4}, 1);
  const Eigen::MatrixXd x = random_inputs(3, 5, 8);
  const Eigen::MatrixXd out = net.forward(x);
  std::vector<std::size_t> sel{0, 1, 2, 3, 0};
  Eigen::VectorXd y(5);
  for (int j = 0; j < 5; ++j) y(j) = out(static_cast<Eigen::Index>(sel[static_cast<std::size_t>(j)]), j);
  const MseResult r = mse_grad(net, x, sel, y);
  EXPECT_EQ(r.loss, 0.0);
  for (const auto& g : r.gradient) {
    EXPECT_EQ(g.weight.cwiseAbs().maxCoeff(), 0.0);
    EXPECT_EQ(g.bias.cwiseAbs().maxCoeff(), 0.0);
  }
}

TEST(MseGrad, LinearInResidual) {
  Mlp net({3, 8, 4}, 2);
  const Eigen::MatrixXd x = random_inputs(3, 6, 4);
  const Eigen::MatrixXd out = net.forward(x);
  std::vector<std::size_t> sel{3, 1, 2, 0, 0, 1};
  Eigen::VectorXd at(6), y1(6), y2(6);
  for (int j = 0; j < 6; ++j) at(j) = out(static_cast<Eigen::Index>(sel[static_cast<std::size_t>(j)]), j);
  const Eigen::VectorXd residual = random_inputs(6, 1, 5).col(0);
  y1 = at - residual;
  y2 = at - 2.0 * residual;
  const MseResult a = mse_grad(net, x, sel, y1);
  const MseResult b = mse_grad(net, x, sel, y2);
  LayerStack doubled = a.gradient;
  for (auto& g : doubled) {
    g.weight *= 2.0;
    g.bias *= 2.0;
  }
  EXPECT_LT(max_abs_diff(doubled, b.gradient), 1e-12);
}

TEST(MseGrad, MatchesCentralDifferences) {
  for (std::uint64_t s = 0; s < 100; ++s) {
    EXPECT_LE(testing::gradient_relative_error(s), 1e-4) << "seed " << s;
  }
}

TEST(MseGrad, RejectsBadShapes) {
  Mlp net({2, 3}, 0);
  EXPECT_THROW(mse_grad(net, random_inputs(2, 2, 0), {0}, Eigen::VectorXd::Zero(2)), InvalidArgument);
  EXPECT_THROW(mse_grad(net, random_inputs(2, 1, 0), {3}, Eigen::VectorXd::Zero(1)), InvalidArgument);
}

TEST(Adam, ZeroGradientLeavesParameters) {
  Mlp net({2, 4, 1}, 3);
  const Mlp before = net;
  AdamState st(net, 1e-3);
  st.first_moment[0].weight.setConstant(1.0);
  LayerStack zero = st.second_moment;
  for (auto& z : zero) {
    z.weight.setZero();
    z.bias.setZero();
  }
  st.second_moment = zero;
  // m = 1, v = 0: the first step still moves, so reset m to compare pure decay.
  st.first_moment = zero;
  adam_step(net, st, zero);
  EXPECT_EQ(max_abs_diff(net.layers(), before.layers()), 0.0);
  EXPECT_EQ(st.step, 1u);
}

TEST(Adam, MomentsDecay) {
  Mlp net = Mlp::zeros({1, 1});
  AdamState st(net, 1e-3);
  LayerStack g = st.first_moment;
  g[0].weight(0, 0) = 1.0;
  adam_step(net, st, g);
  g[0].weight(0, 0) = 0.0;
  const double m1 = st.first_moment[0].weight(0, 0);
  adam_step(net, st, g);
  EXPECT_NEAR(st.first_moment[0].weight(0, 0), 0.9 * m1, 1e-15);
}

TEST(Adam, FirstStepIsLearningRate) {
  Mlp net = Mlp::zeros({1, 1});
  AdamState st(net, 1e-3);
  LayerStack g = st.first_moment;
  g[0].weight(0, 0) = 0.37;
  g[0].bias(0) = -5.0;
  adam_step(net, st, g);
  EXPECT_NEAR(net.layers()[0].weight(0, 0), -1e-3, 1e-10);
  EXPECT_NEAR(net.layers()[0].bias(0), 1e-3, 1e-10);
}

TEST(Adam, ConstantGradientStepApproachesLearningRate) {
  Mlp net = Mlp::zeros({1, 1});
  AdamState st(net, 1e-3);
  LayerStack g = st.first_moment;
  g[0].weight(0, 0) = 2.5;
  double prev = 0.0;
  for (int k = 0; k < 5000; ++k) {
    prev = net.layers()[0].weight(0, 0);
    adam_step(net, st, g);
  }
  EXPECT_NEAR(net.layers()[0].weight(0, 0) - prev, -1e-3, 1e-9);
}

TEST(Adam, RejectsNonFiniteGradient) {
  Mlp net({1, 2}, 0);
  AdamState st(net, 1e-3);
  LayerStack g = st.first_moment;
  g[0].bias(1) = std::numeric_limits<double>::infinity();
  EXPECT_THROW(adam_step(net, st, g), NumericalError);
}

TEST(Polyak, Extremes) {
  Mlp target({3, 5, 2}, 1), online({3, 5, 2}, 2);
  const Mlp keep = target;
  polyak_update(target, online, 0.0);
  EXPECT_EQ(max_abs_diff(target.layers(), keep.layers()), 0.0);
  polyak_update(target, online, 1.0);
  EXPECT_EQ(max_abs_diff(target.layers(), online.layers()), 0.0);
  Mlp other({3, 4, 2}, 0);
  EXPECT_THROW(polyak_update(target, other, 0.5), InvalidArgument);
}

TEST(Polyak, Composition) {
  Mlp a({3, 5, 2}, 1), b({3, 5, 2}, 1);
  const Mlp online({3, 5, 2}, 2);
  const double tau = 0.01;
  polyak_update(a, online, tau);
  polyak_update(a, online, tau);
  polyak_update(b, online, 1.0 - (1.0 - tau) * (1.0 - tau));
  EXPECT_LT(max_abs_diff(a.layers(), b.layers()), 1e-14);
}

TEST(Mlp, SaveLoadRoundTrip) {
  const Mlp net({4, 16, 8, 3}, 42);
  const auto path = std::filesystem::temp_directory_path() / "dgq_test_mlp.json";
  save_mlp(net, path.string());
  const Mlp back = load_mlp(path.string());
  std::filesystem::remove(path);
  const Eigen::MatrixXd x = random_inputs(4, 9, 6);
  EXPECT_EQ(net.forward(x), back.forward(x));
  EXPECT_EQ(back.init_seed(), 42u);
  EXPECT_EQ(back.layer_sizes(), net.layer_sizes());
  nlohmann::json bad = net.to_json();
  bad["version"] = 99;
  EXPECT_THROW(Mlp::from_json(bad), InvalidArgument);
}

TEST(Mlp, TrainingIsDeterministic) {
  auto run = [] {
    Mlp net({2, 16, 3}, 5);
    AdamState st(net, 1e-3);
    for (int k = 0; k < 50; ++k) {
      const Eigen::MatrixXd x = random_inputs(2, 8, static_cast<std::uint64_t>(k));
      const Eigen::VectorXd y = random_inputs(8, 1, 1000 + static_cast<std::uint64_t>(k)).col(0);
      std::vector<std::size_t> sel(8, static_cast<std::size_t>(k % 3));
      adam_step(net, st, mse_grad(net, x, sel, y).gradient);
    }
    return net;
  };
  const Mlp a = run(), b = run();
  EXPECT_EQ(max_abs_diff(a.layers(), b.layers()), 0.0);
}

TEST(Mlp, AdamFitsRegression) {
  Mlp net({1, 32, 1}, 8);
  AdamState st(net, 1e-2);
  Eigen::MatrixXd x(1, 21);
  Eigen::VectorXd y(21);
  for (int j = 0; j < 21; ++j) {
    x(0, j) = -1.0 + 0.1 * j;
    y(j) = x(0, j) * x(0, j);
  }
  const std::vector<std::size_t> sel(21, 0);
  for (int k = 0; k < 3000; ++k) adam_step(net, st, mse_grad(net, x, sel, y).gradient);
  EXPECT_LT(mse_grad(net, x, sel, y).loss, 1e-3);
}

}  // namespace
}  // namespace dgq
