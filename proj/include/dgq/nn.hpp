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

#ifndef DGQ_NN_HPP_
#define DGQ_NN_HPP_

#include <Eigen/Dense>
#include <json.hpp>

#include <cmath>
#include <cstdint>
#include <fstream>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "dgq/error.hpp"

namespace dgq {

struct DenseLayer {
  Eigen::MatrixXd weight;  // fan_out x fan_in
  Eigen::VectorXd bias;
};

// Parameter-shaped storage for gradients and optimiser moments.
using LayerStack = std::vector<DenseLayer>;

// Fully connected network, rectifier on hidden layers and identity on the
// output. Batches are column-major: one sample per column.
class Mlp {
 public:
  static constexpr int kFormatVersion = 1;

  Mlp() = default;

  // Weights uniform in +-sqrt(6 / fan_in), zero biases.
  Mlp(std::vector<int> layer_sizes, std::uint64_t seed) : sizes_(std::move(layer_sizes)), seed_(seed) {
    check_sizes();
    std::mt19937_64 rng(seed);
    for (std::size_t l = 0; l + 1 < sizes_.size(); ++l) {
      const double bound = std::sqrt(6.0 / sizes_[l]);
      std::uniform_real_distribution<double> dist(-bound, bound);
      DenseLayer layer{Eigen::MatrixXd(sizes_[l + 1], sizes_[l]), Eigen::VectorXd::Zero(sizes_[l + 1])};
      for (Eigen::Index j = 0; j < layer.weight.cols(); ++j) {
        for (Eigen::Index i = 0; i < layer.weight.rows(); ++i) layer.weight(i, j) = dist(rng);
      }
      layers_.push_back(std::move(layer));
    }
  }

  static Mlp zeros(std::vector<int> layer_sizes) {
    Mlp net;
    net.sizes_ = std::move(layer_sizes);
    net.check_sizes();
    for (std::size_t l = 0; l + 1 < net.sizes_.size(); ++l) {
      net.layers_.push_back({Eigen::MatrixXd::Zero(net.sizes_[l + 1], net.sizes_[l]),
                             Eigen::VectorXd::Zero(net.sizes_[l + 1])});
    }
    return net;
  }

  const std::vector<int>& layer_sizes() const { return sizes_; }
  int input_size() const { return sizes_.front(); }
  int output_size() const { return sizes_.back(); }
  std::uint64_t init_seed() const { return seed_; }
  LayerStack& layers() { return layers_; }
  const LayerStack& layers() const { return layers_; }

  std::size_t parameter_count() const {
    std::size_t n = 0;
    for (std::size_t l = 0; l + 1 < sizes_.size(); ++l) {
      n += static_cast<std::size_t>(sizes_[l] + 1) * static_cast<std::size_t>(sizes_[l + 1]);
    }
    return n;
  }

  Eigen::MatrixXd forward(const Eigen::MatrixXd& inputs) const {
    if (inputs.rows() != input_size()) throw InvalidArgument("Mlp::forward: input width mismatch");
    Eigen::MatrixXd a = inputs;
    for (std::size_t l = 0; l < layers_.size(); ++l) {
      Eigen::MatrixXd z = layers_[l].weight * a;
      z.colwise() += layers_[l].bias;
      if (l + 1 < layers_.size()) {
        a = z.cwiseMax(0.0);
      } else {
        a = std::move(z);
      }
    }
    return a;
  }

  // Gradient of sum_ij output_grad(i,j) * output(i,j) w.r.t. all parameters.
  LayerStack backward(const Eigen::MatrixXd& inputs, const Eigen::MatrixXd& output_grad) const {
    std::vector<Eigen::MatrixXd> acts;
    acts.reserve(layers_.size());
    acts.push_back(inputs);
    for (std::size_t l = 0; l + 1 < layers_.size(); ++l) {
      Eigen::MatrixXd z = layers_[l].weight * acts.back();
      z.colwise() += layers_[l].bias;
      acts.push_back(z.cwiseMax(0.0));
    }
    LayerStack grad(layers_.size());
    Eigen::MatrixXd delta = output_grad;
    for (std::size_t l = layers_.size(); l-- > 0;) {
      grad[l].weight = delta * acts[l].transpose();
      grad[l].bias = delta.rowwise().sum();
      if (l > 0) {
        Eigen::MatrixXd back = layers_[l].weight.transpose() * delta;
        delta = (acts[l].array() > 0.0).select(back, 0.0);
      }
    }
    return grad;
  }

  nlohmann::json to_json() const {
    nlohmann::json j;
    j["format"] = "dgq-mlp";
    j["version"] = kFormatVersion;
    j["layer_sizes"] = sizes_;
    j["init_seed"] = seed_;
    j["layers"] = nlohmann::json::array();
    for (const auto& layer : layers_) {
      nlohmann::json lj;
      std::vector<std::vector<double>> w(static_cast<std::size_t>(layer.weight.rows()));
      for (Eigen::Index i = 0; i < layer.weight.rows(); ++i) {
        w[static_cast<std::size_t>(i)].assign(layer.weight.row(i).begin(), layer.weight.row(i).end());
      }
      lj["weight"] = w;
      lj["bias"] = std::vector<double>(layer.bias.begin(), layer.bias.end());
      j["layers"].push_back(std::move(lj));
    }
    return j;
  }

  static Mlp from_json(const nlohmann::json& j) {
    if (j.value("format", "") != "dgq-mlp") throw InvalidArgument("not a dgq-mlp checkpoint");
    if (j.at("version").get<int>() != kFormatVersion) {
      throw InvalidArgument("unsupported dgq-mlp checkpoint version");
    }
    Mlp net = zeros(j.at("layer_sizes").get<std::vector<int>>());
    net.seed_ = j.at("init_seed").get<std::uint64_t>();
    const auto& lj = j.at("layers");
    if (lj.size() != net.layers_.size()) throw InvalidArgument("checkpoint layer count mismatch");
    for (std::size_t l = 0; l < net.layers_.size(); ++l) {
      auto w = lj[l].at("weight").get<std::vector<std::vector<double>>>();
      auto b = lj[l].at("bias").get<std::vector<double>>();
      auto& layer = net.layers_[l];
      if (static_cast<Eigen::Index>(w.size()) != layer.weight.rows() ||
          static_cast<Eigen::Index>(b.size()) != layer.bias.size()) {
        throw InvalidArgument("checkpoint layer shape mismatch");
      }
      for (Eigen::Index i = 0; i < layer.weight.rows(); ++i) {
        const auto& row = w[static_cast<std::size_t>(i)];
        if (static_cast<Eigen::Index>(row.size()) != layer.weight.cols()) {
          throw InvalidArgument("checkpoint layer shape mismatch");
        }
        for (Eigen::Index c = 0; c < layer.weight.cols(); ++c) {
          layer.weight(i, c) = row[static_cast<std::size_t>(c)];
        }
      }
      for (Eigen::Index i = 0; i < layer.bias.size(); ++i) layer.bias(i) = b[static_cast<std::size_t>(i)];
    }
    return net;
  }

 private:
  void check_sizes() const {
    if (sizes_.size() < 2) throw InvalidArgument("Mlp: need input and output sizes");
    for (int s : sizes_) {
      if (s <= 0) throw InvalidArgument("Mlp: layer sizes must be positive");
    }
  }

  std::vector<int> sizes_;
  std::uint64_t seed_ = 0;
  LayerStack layers_;
};

inline void save_mlp(const Mlp& net, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path);
  out << net.to_json().dump(1) << '\n';
}

inline Mlp load_mlp(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot read " + path);
  return Mlp::from_json(nlohmann::json::parse(in));
}

struct MseResult {
  double loss = 0.0;
  LayerStack gradient;
};

// Loss (1/k) sum_j (out(selected_j, j) - target_j)^2 and its gradient; one
// selected output entry per batch column.
inline MseResult mse_grad(const Mlp& net, const Eigen::MatrixXd& inputs,
                          const std::vector<std::size_t>& selected, const Eigen::VectorXd& targets) {
  const Eigen::Index k = inputs.cols();
  if (static_cast<Eigen::Index>(selected.size()) != k || targets.size() != k) {
    throw InvalidArgument("mse_grad: batch size mismatch");
  }
  const Eigen::MatrixXd out = net.forward(inputs);
  Eigen::MatrixXd dout = Eigen::MatrixXd::Zero(out.rows(), out.cols());
  MseResult r;
  for (Eigen::Index j = 0; j < k; ++j) {
    const auto row = static_cast<Eigen::Index>(selected[static_cast<std::size_t>(j)]);
    if (row >= out.rows()) throw InvalidArgument("mse_grad: selected index out of range");
    const double e = out(row, j) - targets(j);
    r.loss += e * e;
    dout(row, j) = 2.0 * e / static_cast<double>(k);
  }
  r.loss /= static_cast<double>(k);
  r.gradient = net.backward(inputs, dout);
  return r;
}

struct AdamState {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  std::uint64_t step = 0;
  LayerStack first_moment;
  LayerStack second_moment;

  AdamState() = default;
  AdamState(const Mlp& net, double lr) : learning_rate(lr) {
    for (const auto& layer : net.layers()) {
      first_moment.push_back({Eigen::MatrixXd::Zero(layer.weight.rows(), layer.weight.cols()),
                              Eigen::VectorXd::Zero(layer.bias.size())});
    }
    second_moment = first_moment;
  }
};

// Bias-corrected Adam update of `net` in place.
inline void adam_step(Mlp& net, AdamState& state, const LayerStack& grad) {
  auto& layers = net.layers();
  if (grad.size() != layers.size() || state.first_moment.size() != layers.size()) {
    throw InvalidArgument("adam_step: shape mismatch");
  }
  for (const auto& g : grad) {
    if (!g.weight.allFinite() || !g.bias.allFinite()) {
      throw NumericalError("adam_step: non-finite gradient");
    }
  }
  ++state.step;
  const double b1 = state.beta1, b2 = state.beta2;
  const double c1 = 1.0 - std::pow(b1, static_cast<double>(state.step));
  const double c2 = 1.0 - std::pow(b2, static_cast<double>(state.step));
  const double lr = state.learning_rate, eps = state.epsilon;
  auto update = [&](auto& param, auto& m, auto& v, const auto& g) {
    m = b1 * m + (1.0 - b1) * g;
    v = b2 * v + (1.0 - b2) * g.cwiseProduct(g);
    param.array() -= lr * (m.array() / c1) / ((v.array() / c2).sqrt() + eps);
  };
  for (std::size_t l = 0; l < layers.size(); ++l) {
    update(layers[l].weight, state.first_moment[l].weight, state.second_moment[l].weight, grad[l].weight);
    update(layers[l].bias, state.first_moment[l].bias, state.second_moment[l].bias, grad[l].bias);
  }
}

// target <- tau online + (1 - tau) target.
inline void polyak_update(Mlp& target, const Mlp& online, double tau) {
  if (target.layer_sizes() != online.layer_sizes()) {
    throw InvalidArgument("polyak_update: architecture mismatch");
  }
  for (std::size_t l = 0; l < target.layers().size(); ++l) {
    auto& t = target.layers()[l];
    const auto& o = online.layers()[l];
    t.weight = tau * o.weight + (1.0 - tau) * t.weight;
    t.bias = tau * o.bias + (1.0 - tau) * t.bias;
  }
}

}  // namespace dgq

#endif  // DGQ_NN_HPP_
