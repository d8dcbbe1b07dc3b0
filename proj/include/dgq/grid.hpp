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

#ifndef DGQ_GRID_HPP_
#define DGQ_GRID_HPP_

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <limits>
#include <memory>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include "dgq/error.hpp"
#include "dgq/game.hpp"
#include "dgq/matrix_game.hpp"
#include "dgq/policy.hpp"

namespace dgq {

inline constexpr std::size_t kMaxGridDims = 3;

// Regular tensor grid with multilinear interpolation. Queries outside the
// ranges are clamped to the boundary. Nodes are stored with the last
// coordinate varying fastest.
class StateGrid {
 public:
  StateGrid(std::vector<Interval> ranges, std::vector<std::size_t> nodes)
      : ranges_(std::move(ranges)), nodes_(std::move(nodes)) {
    if (ranges_.empty() || ranges_.size() != nodes_.size()) {
      throw InvalidArgument("StateGrid: need one node count per range");
    }
    if (ranges_.size() > kMaxGridDims) {
      throw Unsupported("StateGrid: " + std::to_string(ranges_.size()) +
                        "-dimensional state exceeds the grid limit of " +
                        std::to_string(kMaxGridDims));
    }
    total_ = 1;
    for (std::size_t d = 0; d < ranges_.size(); ++d) {
      if (nodes_[d] < 2) throw InvalidArgument("StateGrid: need at least 2 nodes per dimension");
      if (!(ranges_[d].hi > ranges_[d].lo)) throw InvalidArgument("StateGrid: empty range");
      step_[d] = (ranges_[d].hi - ranges_[d].lo) / static_cast<double>(nodes_[d] - 1);
      total_ *= nodes_[d];
    }
    stride_[ranges_.size() - 1] = 1;
    for (std::size_t d = ranges_.size() - 1; d > 0; --d) stride_[d - 1] = stride_[d] * nodes_[d];
  }

  enum class RangeMode { kReachBox, kGrowthBound };

  // Box around every state reachable on the partition, widened about its
  // centre by `safety`. kGrowthBound uses [-R(T), R(T)] per dimension.
  static StateGrid for_game(const DiscretizedGame& dg, std::size_t nodes_per_dim,
                            double safety = 1.2, RangeMode mode = RangeMode::kReachBox) {
    const ContinuousGame& g = dg.game();
    if (g.state_dim > kMaxGridDims) {
      throw Unsupported(g.name + ": grid solver supports state dimension <= 3, got " +
                        std::to_string(g.state_dim));
    }
    std::vector<Interval> box(g.state_dim, Interval{0.0, 0.0});
    if (mode == RangeMode::kGrowthBound) {
      const double r = growth_reach_radius(g, g.horizon);
      box.assign(g.state_dim, Interval{-r, r});
    } else {
      for (std::size_t d = 0; d < g.state_dim; ++d) box[d] = {g.initial_state[d], g.initial_state[d]};
      for (std::size_t i = 0; i <= dg.num_steps(); ++i) {
        const auto b = reach_box(g, dg.partition(), i);
        for (std::size_t d = 0; d < g.state_dim; ++d) {
          box[d].lo = std::min(box[d].lo, b[d].lo);
          box[d].hi = std::max(box[d].hi, b[d].hi);
        }
      }
    }
    for (auto& b : box) {
      const double mid = 0.5 * (b.lo + b.hi);
      const double half = std::max(0.5 * (b.hi - b.lo), 1e-3) * safety;
      b = {mid - half, mid + half};
    }
    return StateGrid(std::move(box), std::vector<std::size_t>(g.state_dim, nodes_per_dim));
  }

  std::size_t dims() const { return ranges_.size(); }
  std::size_t size() const { return total_; }
  const std::vector<Interval>& ranges() const { return ranges_; }
  const std::vector<std::size_t>& nodes() const { return nodes_; }
  double spacing(std::size_t d) const { return step_.at(d); }

  void node(std::size_t flat, std::span<double> out) const {
    for (std::size_t d = 0; d < dims(); ++d) {
      const std::size_t k = (flat / stride_[d]) % nodes_[d];
      out[d] = ranges_[d].lo + static_cast<double>(k) * step_[d];
    }
  }

  Vector node(std::size_t flat) const {
    Vector x(dims());
    node(flat, x);
    return x;
  }

  bool inside(std::span<const double> x, double tol = 1e-9) const {
    for (std::size_t d = 0; d < dims(); ++d) {
      if (x[d] < ranges_[d].lo - tol || x[d] > ranges_[d].hi + tol) return false;
    }
    return true;
  }

  // Multilinear interpolation of node values at x; sets *clamped when x lies
  // outside the grid (beyond a 1e-9 tolerance).
  double interpolate(std::span<const double> values, std::span<const double> x,
                     bool* clamped = nullptr) const {
    std::array<std::size_t, kMaxGridDims> base{};
    std::array<double, kMaxGridDims> w{};
    bool out = false;
    for (std::size_t d = 0; d < dims(); ++d) {
      double s = (x[d] - ranges_[d].lo) / step_[d];
      const double last = static_cast<double>(nodes_[d] - 1);
      if (s < 0.0 || s > last) {
        if (s < -1e-9 / step_[d] || s > last + 1e-9 / step_[d]) out = true;
        s = std::clamp(s, 0.0, last);
      }
      auto k = static_cast<std::size_t>(s);
      if (k >= nodes_[d] - 1) k = nodes_[d] - 2;
      base[d] = k;
      w[d] = s - static_cast<double>(k);
    }
    if (clamped != nullptr) *clamped = out;
    double acc = 0.0;
    const std::size_t corners = std::size_t{1} << dims();
    for (std::size_t c = 0; c < corners; ++c) {
      double weight = 1.0;
      std::size_t flat = 0;
      for (std::size_t d = 0; d < dims(); ++d) {
        const bool hi = (c >> d) & 1U;
        weight *= hi ? w[d] : 1.0 - w[d];
        flat += (base[d] + (hi ? 1 : 0)) * stride_[d];
      }
      if (weight != 0.0) acc += weight * values[flat];
    }
    return acc;
  }

 private:
  std::vector<Interval> ranges_;
  std::vector<std::size_t> nodes_;
  std::array<double, kMaxGridDims> step_{};
  std::array<std::size_t, kMaxGridDims> stride_{};
  std::size_t total_ = 0;
};

enum class ValueKind { kUpper, kLower, kResponseToU, kResponseToV };

inline std::string_view value_kind_name(ValueKind k) {
  switch (k) {
    case ValueKind::kUpper: return "upper";
    case ValueKind::kLower: return "lower";
    case ValueKind::kResponseToU: return "response_to_u";
    case ValueKind::kResponseToV: return "response_to_v";
  }
  return "?";
}

// One node table per partition time.
class ValueGrid {
 public:
  ValueGrid(ValueKind kind, StateGrid grid, std::vector<double> times)
      : kind_(kind),
        grid_(std::move(grid)),
        times_(std::move(times)),
        tables_(times_.size(), std::vector<double>(grid_.size(), 0.0)) {}

  ValueKind kind() const { return kind_; }
  const StateGrid& grid() const { return grid_; }
  const std::vector<double>& times() const { return times_; }
  std::span<const double> table(std::size_t i) const { return tables_.at(i); }
  std::span<double> table(std::size_t i) { return tables_.at(i); }

  double at(std::size_t i, std::span<const double> x, bool* clamped = nullptr) const {
    return grid_.interpolate(tables_.at(i), x, clamped);
  }

 private:
  ValueKind kind_;
  StateGrid grid_;
  std::vector<double> times_;
  std::vector<std::vector<double>> tables_;
};

struct SolveOptions {
  unsigned threads = 1;
};

struct SolveResult {
  ValueGrid upper;
  ValueGrid lower;
  // Successor states that left the grid, counted only from nodes inside the
  // reach box at their time.
  std::size_t clamped = 0;
};

namespace detail {

// Runs body(worker, begin, end) over [0, n) split across `threads` workers.
template <typename Body>
void parallel_for(std::size_t n, unsigned threads, Body&& body) {
  if (threads <= 1) {
    body(0U, std::size_t{0}, n);
    return;
  }
  std::vector<std::thread> pool;
  const std::size_t chunk = (n + threads - 1) / threads;
  for (unsigned t = 0; t < threads; ++t) {
    const std::size_t b = t * chunk;
    const std::size_t e = std::min(n, b + chunk);
    if (b < e) pool.emplace_back([&body, t, b, e] { body(t, b, e); });
  }
  for (auto& th : pool) th.join();
}

inline bool in_box(const std::vector<Interval>& box, std::span<const double> x) {
  for (std::size_t d = 0; d < box.size(); ++d) {
    if (x[d] < box[d].lo - 1e-9 || x[d] > box[d].hi + 1e-9) return false;
  }
  return true;
}

inline void terminal_fill(const DiscretizedGame& dg, ValueGrid& vg) {
  const auto m = dg.num_steps();
  auto tab = vg.table(m);
  Vector x(vg.grid().dims());
  for (std::size_t n = 0; n < vg.grid().size(); ++n) {
    vg.grid().node(n, x);
    tab[n] = dg.game().terminal_cost(x);
  }
}

inline void check_grid(const DiscretizedGame& dg, const StateGrid& grid) {
  if (dg.state_dim() > kMaxGridDims) {
    throw Unsupported(dg.game().name + ": grid solver supports state dimension <= 3");
  }
  if (grid.dims() != dg.state_dim()) throw InvalidArgument("grid dimension differs from the state");
}

// Fills m(u, v) = dt f0 + values(x + dt f) at (t_i, x).
inline bool fill_q(const DiscretizedGame& dg, const ValueGrid& next, std::size_t i,
                   std::span<const double> x, PayoffMatrix& m, std::span<double> buf) {
  bool any_clamped = false;
  const auto nu = dg.u_mesh().size();
  const auto nv = dg.v_mesh().size();
  for (std::size_t a = 0; a < nu; ++a) {
    for (std::size_t b = 0; b < nv; ++b) {
      const double r = dg.advance(i, x, dg.u_mesh()[a], dg.v_mesh()[b], buf);
      bool c = false;
      m(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) = r + next.at(i + 1, buf, &c);
      any_clamped = any_clamped || c;
    }
  }
  return any_clamped;
}

}  // namespace detail

// Backward induction for the upper (minmax) and lower (maxmin) values.
inline SolveResult solve(const DiscretizedGame& dg, const StateGrid& grid,
                         const SolveOptions& opt = {}) {
  detail::check_grid(dg, grid);
  const auto& times = dg.partition().times();
  SolveResult res{ValueGrid(ValueKind::kUpper, grid, times), ValueGrid(ValueKind::kLower, grid, times), 0};
  detail::terminal_fill(dg, res.upper);
  detail::terminal_fill(dg, res.lower);
  const auto nu = static_cast<Eigen::Index>(dg.u_mesh().size());
  const auto nv = static_cast<Eigen::Index>(dg.v_mesh().size());
  for (std::size_t i = dg.num_steps(); i-- > 0;) {
    const auto box = reach_box(dg.game(), dg.partition(), i);
    std::vector<std::size_t> clamps(std::max(1U, opt.threads), 0);
    detail::parallel_for(grid.size(), opt.threads, [&](unsigned worker, std::size_t b, std::size_t e) {
      PayoffMatrix mu(nu, nv), ml(nu, nv);
      Vector x(grid.dims()), buf(grid.dims());
      auto up = res.upper.table(i);
      auto lo = res.lower.table(i);
      std::size_t local = 0;
      for (std::size_t n = b; n < e; ++n) {
        grid.node(n, x);
        const bool cu = detail::fill_q(dg, res.upper, i, x, mu, buf);
        const bool cl = detail::fill_q(dg, res.lower, i, x, ml, buf);
        up[n] = mu.rowwise().maxCoeff().minCoeff();
        lo[n] = ml.colwise().minCoeff().maxCoeff();
        if ((cu || cl) && detail::in_box(box, x)) ++local;
      }
      clamps[worker] += local;
    });
    for (auto c : clamps) res.clamped += c;
  }
  return res;
}

// Matrix of dt f0 + values(t_{i+1}, x + dt f): Q_u from upper values, Q_v
// from lower values.
inline PayoffMatrix q_values(const DiscretizedGame& dg, const ValueGrid& values, std::size_t i,
                             std::span<const double> x) {
  if (i >= dg.num_steps()) throw InvalidArgument("q_values: time index out of range");
  PayoffMatrix m(static_cast<Eigen::Index>(dg.u_mesh().size()),
                 static_cast<Eigen::Index>(dg.v_mesh().size()));
  Vector buf(dg.state_dim());
  detail::fill_q(dg, values, i, x, m, buf);
  return m;
}

// Value of the free agent's best response to `frozen`, which plays for
// `frozen_side`. A frozen u is answered by a maximising v (kResponseToU) and
// vice versa. Mixed frozen policies are averaged over their distribution.
inline ValueGrid best_response_value(const DiscretizedGame& dg, const StateGrid& grid,
                                     const Policy& frozen, Side frozen_side,
                                     std::size_t* clamped = nullptr) {
  detail::check_grid(dg, grid);
  ValueGrid vg(frozen_side == Side::kU ? ValueKind::kResponseToU : ValueKind::kResponseToV, grid,
               dg.partition().times());
  detail::terminal_fill(dg, vg);
  const std::size_t nu = dg.u_mesh().size();
  const std::size_t nv = dg.v_mesh().size();
  const std::size_t own = frozen_side == Side::kU ? nu : nv;
  const std::size_t free = frozen_side == Side::kU ? nv : nu;
  std::size_t clamps = 0;
  Eigen::MatrixXd states(static_cast<Eigen::Index>(grid.dims()), static_cast<Eigen::Index>(grid.size()));
  Vector x(grid.dims()), buf(grid.dims());
  for (std::size_t n = 0; n < grid.size(); ++n) {
    grid.node(n, x);
    for (std::size_t d = 0; d < grid.dims(); ++d) {
      states(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(n)) = x[d];
    }
  }
  for (std::size_t i = dg.num_steps(); i-- > 0;) {
    const auto box = reach_box(dg.game(), dg.partition(), i);
    std::vector<std::size_t> pure_actions;
    if (frozen.is_pure()) pure_actions = frozen.act_batch(i, states);
    auto tab = vg.table(i);
    for (std::size_t n = 0; n < grid.size(); ++n) {
      grid.node(n, x);
      Eigen::VectorXd p;
      if (frozen.is_pure()) {
        p = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(own));
        p(static_cast<Eigen::Index>(pure_actions[n])) = 1.0;
      } else {
        p = frozen.distribution(i, x, own);
      }
      double best = frozen_side == Side::kU ? -std::numeric_limits<double>::infinity()
                                            : std::numeric_limits<double>::infinity();
      bool any_clamped = false;
      for (std::size_t f = 0; f < free; ++f) {
        double value = 0.0;
        for (std::size_t a = 0; a < own; ++a) {
          const double pa = p(static_cast<Eigen::Index>(a));
          if (pa == 0.0) continue;
          const std::size_t u = frozen_side == Side::kU ? a : f;
          const std::size_t v = frozen_side == Side::kU ? f : a;
          const double r = dg.advance(i, x, dg.u_mesh()[u], dg.v_mesh()[v], buf);
          bool c = false;
          value += pa * (r + vg.at(i + 1, buf, &c));
          any_clamped = any_clamped || c;
        }
        best = frozen_side == Side::kU ? std::max(best, value) : std::min(best, value);
      }
      tab[n] = best;
      if (any_clamped && detail::in_box(box, x)) ++clamps;
    }
  }
  if (clamped != nullptr) *clamped = clamps;
  return vg;
}

// Greedy policy from solved values: u plays argmin_u max_v of Q_u (upper
// values), v plays argmax_v min_u of Q_v (lower values).
inline Policy grid_greedy_policy(const DiscretizedGame& dg, std::shared_ptr<const ValueGrid> values,
                                 Side side) {
  auto game = std::make_shared<const DiscretizedGame>(dg);
  return Policy::pure([game, values, side](std::size_t i, std::span<const double> x) {
    const PayoffMatrix m = q_values(*game, *values, i, x);
    return side == Side::kU ? pure_minimax(m).index : pure_maximin(m).index;
  });
}

// The free agent's feedback policy realising a best-response value grid
// against `frozen` (which plays `frozen_side`).
inline Policy grid_response_policy(const DiscretizedGame& dg, std::shared_ptr<const ValueGrid> response,
                                   Policy frozen, Side frozen_side) {
  auto game = std::make_shared<const DiscretizedGame>(dg);
  return Policy::pure([game, response, frozen, frozen_side](std::size_t i, std::span<const double> x) {
    const PayoffMatrix m = q_values(*game, *response, i, x);
    const std::size_t own = frozen_side == Side::kU ? game->u_mesh().size() : game->v_mesh().size();
    const Eigen::VectorXd p = frozen.distribution(i, x, own);
    Eigen::VectorXd expected =
        frozen_side == Side::kU ? Eigen::VectorXd(m.transpose() * p) : Eigen::VectorXd(m * p);
    Eigen::Index best = 0;
    if (frozen_side == Side::kU) {
      expected.maxCoeff(&best);
    } else {
      expected.minCoeff(&best);
    }
    return static_cast<std::size_t>(best);
  });
}

struct GapStats {
  double at_x0 = 0.0;
  double max_in_reach = 0.0;  // over nodes inside the reach box, all times
};

inline GapStats gap_stats(const DiscretizedGame& dg, const SolveResult& s) {
  GapStats out;
  const auto& x0 = dg.game().initial_state;
  out.at_x0 = s.upper.at(0, x0) - s.lower.at(0, x0);
  Vector x(s.upper.grid().dims());
  for (std::size_t i = 0; i <= dg.num_steps(); ++i) {
    const auto box = reach_box(dg.game(), dg.partition(), i);
    for (std::size_t n = 0; n < s.upper.grid().size(); ++n) {
      s.upper.grid().node(n, x);
      if (!detail::in_box(box, x)) continue;
      out.max_in_reach = std::max(out.max_in_reach, s.upper.table(i)[n] - s.lower.table(i)[n]);
    }
  }
  return out;
}

// Binary table: "DGQV", u32 version, u32 kind, u32 dims, per dimension
// (f64 lo, f64 hi, u64 nodes), u64 times, f64 times[], then one f64 table per
// time. Native little-endian.
inline void export_grid(const ValueGrid& vg, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write '" + path + "'");
  auto put = [&out](const auto& v) { out.write(reinterpret_cast<const char*>(&v), sizeof(v)); };
  out.write("DGQV", 4);
  put(std::uint32_t{1});
  put(static_cast<std::uint32_t>(vg.kind()));
  put(static_cast<std::uint32_t>(vg.grid().dims()));
  for (std::size_t d = 0; d < vg.grid().dims(); ++d) {
    put(vg.grid().ranges()[d].lo);
    put(vg.grid().ranges()[d].hi);
    put(static_cast<std::uint64_t>(vg.grid().nodes()[d]));
  }
  put(static_cast<std::uint64_t>(vg.times().size()));
  for (double t : vg.times()) put(t);
  for (std::size_t i = 0; i < vg.times().size(); ++i) {
    const auto tab = vg.table(i);
    out.write(reinterpret_cast<const char*>(tab.data()), static_cast<std::streamsize>(tab.size() * sizeof(double)));
  }
  if (!out) throw Error("write failed for '" + path + "'");
}

inline ValueGrid import_grid(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot read '" + path + "'");
  auto get = [&in, &path](auto& v) {
    in.read(reinterpret_cast<char*>(&v), sizeof(v));
    if (!in) throw Error("truncated grid file '" + path + "'");
  };
  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, "DGQV", 4) != 0) throw Error("'" + path + "' is not a value grid");
  std::uint32_t version = 0, kind = 0, dims = 0;
  get(version);
  get(kind);
  get(dims);
  if (version != 1 || kind > 3 || dims == 0 || dims > kMaxGridDims) {
    throw Error("unsupported grid file '" + path + "'");
  }
  std::vector<Interval> ranges(dims);
  std::vector<std::size_t> nodes(dims);
  for (std::uint32_t d = 0; d < dims; ++d) {
    std::uint64_t n = 0;
    get(ranges[d].lo);
    get(ranges[d].hi);
    get(n);
    nodes[d] = n;
  }
  std::uint64_t nt = 0;
  get(nt);
  std::vector<double> times(nt);
  for (auto& t : times) get(t);
  ValueGrid vg(static_cast<ValueKind>(kind), StateGrid(ranges, nodes), times);
  for (std::size_t i = 0; i < nt; ++i) {
    auto tab = vg.table(i);
    in.read(reinterpret_cast<char*>(tab.data()), static_cast<std::streamsize>(tab.size() * sizeof(double)));
    if (!in) throw Error("truncated grid file '" + path + "'");
  }
  return vg;
}

}  // namespace dgq

#endif  // DGQ_GRID_HPP_
