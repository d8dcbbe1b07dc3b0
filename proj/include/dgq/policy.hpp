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

#ifndef DGQ_POLICY_HPP_
#define DGQ_POLICY_HPP_

#include <Eigen/Dense>

#include <cstddef>
#include <functional>
#include <memory>
#include <random>
#include <span>
#include <string_view>
#include <utility>
#include <vector>

#include "dgq/error.hpp"
#include "dgq/game.hpp"

namespace dgq {

// Feedback policy over mesh indices: pure (deterministic) or mixed (a
// distribution per state, sampled with a caller-owned generator).
// Which agent: u minimises, v maximises.
enum class Side { kU, kV };

inline std::string_view side_name(Side s) { return s == Side::kU ? "u" : "v"; }

class Policy {
 public:
  using PureFn = std::function<std::size_t(std::size_t i, std::span<const double> x)>;
  // States are the columns of `states`; returns one index per column.
  using BatchFn = std::function<std::vector<std::size_t>(std::size_t i, const Eigen::MatrixXd& states)>;
  using MixedFn = std::function<Eigen::VectorXd(std::size_t i, std::span<const double> x)>;

  Policy() = default;

  static Policy pure(PureFn fn, BatchFn batch = {}) {
    Policy p;
    p.pure_ = std::move(fn);
    p.batch_ = std::move(batch);
    return p;
  }

  static Policy mixed(MixedFn fn) {
    Policy p;
    p.mixed_ = std::move(fn);
    return p;
  }

  static Policy constant(std::size_t index) {
    return pure([index](std::size_t, std::span<const double>) { return index; });
  }

  bool is_pure() const { return static_cast<bool>(pure_); }
  bool valid() const { return pure_ || mixed_; }

  std::size_t act(std::size_t i, std::span<const double> x, Rng* rng = nullptr) const {
    if (pure_) return pure_(i, x);
    if (!mixed_) throw InvalidArgument("Policy: empty policy");
    if (rng == nullptr) throw InvalidArgument("Policy: mixed policy needs a generator");
    const Eigen::VectorXd p = mixed_(i, x);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    double draw = unit(*rng);
    for (Eigen::Index k = 0; k < p.size(); ++k) {
      draw -= p(k);
      if (draw < 0.0) return static_cast<std::size_t>(k);
    }
    return static_cast<std::size_t>(p.size() - 1);
  }

  Eigen::VectorXd distribution(std::size_t i, std::span<const double> x, std::size_t mesh_size) const {
    if (mixed_) return mixed_(i, x);
    Eigen::VectorXd p = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(mesh_size));
    p(static_cast<Eigen::Index>(act(i, x))) = 1.0;
    return p;
  }

  std::vector<std::size_t> act_batch(std::size_t i, const Eigen::MatrixXd& states) const {
    if (!pure_) throw InvalidArgument("Policy::act_batch: policy is not pure");
    if (batch_) return batch_(i, states);
    std::vector<std::size_t> out(static_cast<std::size_t>(states.cols()));
    std::vector<double> x(static_cast<std::size_t>(states.rows()));
    for (Eigen::Index c = 0; c < states.cols(); ++c) {
      for (Eigen::Index r = 0; r < states.rows(); ++r) x[static_cast<std::size_t>(r)] = states(r, c);
      out[static_cast<std::size_t>(c)] = pure_(i, x);
    }
    return out;
  }

  PurePolicy as_pure() const {
    if (!pure_) throw InvalidArgument("Policy::as_pure: policy is mixed");
    return pure_;
  }

 private:
  PureFn pure_;
  BatchFn batch_;
  MixedFn mixed_;
};

// Rollout for possibly mixed policies; pure-only pairs never touch `rng`.
inline Rollout rollout(const DiscretizedGame& dg, const Policy& pu, const Policy& pv, Rng& rng) {
  return rollout(
      dg, [&](std::size_t i, std::span<const double> x) { return pu.act(i, x, &rng); },
      [&](std::size_t i, std::span<const double> x) { return pv.act(i, x, &rng); });
}

// Plays a fixed index sequence (open loop).
inline Policy open_loop(std::vector<std::size_t> sequence) {
  auto seq = std::make_shared<const std::vector<std::size_t>>(std::move(sequence));
  return Policy::pure([seq](std::size_t i, std::span<const double>) { return seq->at(i); });
}

}  // namespace dgq

#endif  // DGQ_POLICY_HPP_
