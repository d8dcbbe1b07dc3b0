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

#ifndef DGQ_ISAACS_HPP_
#define DGQ_ISAACS_HPP_

#include <cmath>
#include <cstdint>
#include <vector>

#include "dgq/game.hpp"
#include "dgq/matrix_game.hpp"
#include "dgq/mesh.hpp"

namespace dgq {

// A point (t, x, s) at which the small game of the Hamiltonian is examined.
struct HamiltonianSample {
  double t = 0.0;
  Vector x;
  Vector s;
};

// chi(u_i, v_j) = <f(t,x,u_i,v_j), s> + f0(t,x,u_i,v_j) over the meshes. Games
// with separated controls are evaluated as alpha(u) + beta(v) so that the
// min/max orders agree bit for bit.
inline PayoffMatrix hamiltonian_matrix(const ContinuousGame& g, const ActionMesh& u_mesh,
                                       const ActionMesh& v_mesh, const HamiltonianSample& p) {
  const auto nu = static_cast<Eigen::Index>(u_mesh.size());
  const auto nv = static_cast<Eigen::Index>(v_mesh.size());
  PayoffMatrix chi(nu, nv);
  Vector dx(g.state_dim);
  auto dot = [&](const Vector& a) {
    double acc = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) acc += a[k] * p.s[k];
    return acc;
  };
  if (g.separated) {
    const SeparatedParts& parts = *g.separated;
    Vector alpha(u_mesh.size()), beta(v_mesh.size());
    for (std::size_t i = 0; i < u_mesh.size(); ++i) {
      parts.dynamics_u(p.t, p.x, u_mesh[i], dx);
      alpha[i] = dot(dx) + (parts.cost_u ? parts.cost_u(p.t, p.x, u_mesh[i]) : 0.0);
    }
    for (std::size_t j = 0; j < v_mesh.size(); ++j) {
      parts.dynamics_v(p.t, p.x, v_mesh[j], dx);
      beta[j] = dot(dx) + (parts.cost_v ? parts.cost_v(p.t, p.x, v_mesh[j]) : 0.0);
    }
    for (Eigen::Index i = 0; i < nu; ++i) {
      for (Eigen::Index j = 0; j < nv; ++j) {
        chi(i, j) = alpha[static_cast<std::size_t>(i)] + beta[static_cast<std::size_t>(j)];
      }
    }
    return chi;
  }
  for (Eigen::Index i = 0; i < nu; ++i) {
    for (Eigen::Index j = 0; j < nv; ++j) {
      const auto u = u_mesh[static_cast<std::size_t>(i)];
      const auto v = v_mesh[static_cast<std::size_t>(j)];
      g.dynamics(p.t, p.x, u, v, dx);
      chi(i, j) = dot(dx) + g.running(p.t, p.x, u, v);
    }
  }
  return chi;
}

struct IsaacsGapResult {
  double max_gap = 0.0;
  std::size_t argmax = 0;
  std::vector<double> gaps;  // one per sample, each >= 0
};

// max over samples of [min_u max_v chi - max_v min_u chi] on the meshes.
inline IsaacsGapResult isaacs_gap(const ContinuousGame& g, const ActionMesh& u_mesh,
                                  const ActionMesh& v_mesh,
                                  const std::vector<HamiltonianSample>& samples) {
  if (samples.empty()) throw InvalidArgument("isaacs_gap: empty sample list");
  IsaacsGapResult out;
  out.gaps.reserve(samples.size());
  for (std::size_t k = 0; k < samples.size(); ++k) {
    const PayoffMatrix chi = hamiltonian_matrix(g, u_mesh, v_mesh, samples[k]);
    const double upper = pure_minimax(chi).value;
    const double lower = pure_maximin(chi).value;
    if (upper < lower) throw NumericalError("isaacs_gap: weak duality violated");
    const double gap = upper - lower;
    out.gaps.push_back(gap);
    if (gap > out.max_gap || k == 0) {
      out.max_gap = gap;
      out.argmax = k;
    }
  }
  return out;
}

struct MeshAdequacy {
  double max_minmax_deviation = 0.0;
  double max_maximin_deviation = 0.0;
  std::vector<double> minmax_deviation;
  std::vector<double> maximin_deviation;
};

// Per-sample |minmax(mesh) - minmax(refined)| and the maximin analogue.
inline MeshAdequacy mesh_adequacy(const ContinuousGame& g, const ActionMesh& u_mesh,
                                  const ActionMesh& v_mesh, const ActionMesh& refined_u,
                                  const ActionMesh& refined_v,
                                  const std::vector<HamiltonianSample>& samples) {
  MeshAdequacy out;
  for (const auto& p : samples) {
    const PayoffMatrix coarse = hamiltonian_matrix(g, u_mesh, v_mesh, p);
    const PayoffMatrix fine = hamiltonian_matrix(g, refined_u, refined_v, p);
    const double d_up = std::abs(pure_minimax(coarse).value - pure_minimax(fine).value);
    const double d_lo = std::abs(pure_maximin(coarse).value - pure_maximin(fine).value);
    out.minmax_deviation.push_back(d_up);
    out.maximin_deviation.push_back(d_lo);
    out.max_minmax_deviation = std::max(out.max_minmax_deviation, d_up);
    out.max_maximin_deviation = std::max(out.max_maximin_deviation, d_lo);
  }
  return out;
}

// `count` (t, x) draws uniform over [0, T] x the reach box at T (built on a
// partition with step dt); each is paired with a random unit direction s scaled
// by every entry of `scales`.
inline std::vector<HamiltonianSample> default_hamiltonian_samples(
    const ContinuousGame& g, double dt, std::size_t count = 256,
    const std::vector<double>& scales = {0.1, 1.0, 10.0}, std::uint64_t seed = 0) {
  const Partition p = Partition::uniform(0.0, g.horizon, dt);
  const std::vector<Interval> box = reach_box(g, p, p.num_steps());
  Rng rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::vector<HamiltonianSample> out;
  out.reserve(count * scales.size());
  for (std::size_t k = 0; k < count; ++k) {
    HamiltonianSample base;
    base.t = g.horizon * unit(rng);
    base.x.resize(g.state_dim);
    for (std::size_t d = 0; d < g.state_dim; ++d) {
      base.x[d] = box[d].lo + (box[d].hi - box[d].lo) * unit(rng);
    }
    Vector dir(g.state_dim);
    double n = 0.0;
    while (n < 1e-12) {
      for (double& c : dir) c = gauss(rng);
      n = norm(dir);
    }
    for (double scale : scales) {
      HamiltonianSample smp = base;
      smp.s.resize(g.state_dim);
      for (std::size_t d = 0; d < g.state_dim; ++d) smp.s[d] = scale * dir[d] / n;
      out.push_back(std::move(smp));
    }
  }
  return out;
}

}  // namespace dgq

#endif  // DGQ_ISAACS_HPP_
