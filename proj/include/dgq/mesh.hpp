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

#ifndef DGQ_MESH_HPP_
#define DGQ_MESH_HPP_

#include <cctype>
#include <charconv>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "dgq/action_set.hpp"
#include "dgq/error.hpp"

namespace dgq {

// Finite set of action vectors discretising a compact control set. Point
// order is construction order, so indices are stable and usable as network
// output slots.
class ActionMesh {
 public:
  ActionMesh(std::vector<Vector> points, ActionSet source, std::string label = {})
      : points_(std::move(points)), source_(std::move(source)), label_(std::move(label)) {
    if (points_.empty()) throw InvalidArgument("ActionMesh: empty point list");
    const std::size_t d = dgq::dimension(source_);
    for (const auto& p : points_) {
      if (p.size() != d) throw InvalidArgument("ActionMesh: point dimension mismatch");
      if (!contains(source_, p)) {
        throw InvalidArgument("ActionMesh: point outside its action set" +
                              (label_.empty() ? std::string() : " (" + label_ + ")"));
      }
    }
  }

  std::size_t size() const { return points_.size(); }
  std::size_t dimension() const { return dgq::dimension(source_); }
  std::span<const double> operator[](std::size_t i) const { return points_.at(i); }
  const std::vector<Vector>& points() const { return points_; }
  const ActionSet& source() const { return source_; }
  const std::string& label() const { return label_; }

 private:
  std::vector<Vector> points_;
  ActionSet source_;
  std::string label_;
};

namespace detail {

inline std::string format_number(double x) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), x);
  return std::string(buf, end);
}

}  // namespace detail

// LM(a, b, k) = { a + i (b - a) / k : i = 0..k }.
inline ActionMesh linear_mesh(double a, double b, int k) {
  if (k <= 0) throw InvalidArgument("linear_mesh: k must be positive");
  if (!(a < b)) throw InvalidArgument("linear_mesh: requires a < b");
  std::vector<Vector> pts;
  pts.reserve(static_cast<std::size_t>(k) + 1);
  for (int i = 0; i <= k; ++i) pts.push_back({a + i * (b - a) / k});
  return ActionMesh(std::move(pts), BoxSet{{a}, {b}},
                    "LM(" + detail::format_number(a) + "," + detail::format_number(b) + "," +
                        std::to_string(k) + ")");
}

inline constexpr std::size_t kMaxMeshSize = 1'000'000;

// SM(a, b, k, n) = LM(a, b, k)^n in lexicographic order (last coordinate
// varies fastest).
inline ActionMesh square_mesh(double a, double b, int k, int n) {
  if (n < 1) throw InvalidArgument("square_mesh: n must be >= 1");
  const ActionMesh line = linear_mesh(a, b, k);
  double total = std::pow(static_cast<double>(line.size()), n);
  if (total > static_cast<double>(kMaxMeshSize)) {
    throw InvalidArgument("square_mesh: (k+1)^n exceeds 1e6 points");
  }
  const std::size_t count = static_cast<std::size_t>(total);
  const std::size_t dim = static_cast<std::size_t>(n);
  std::vector<Vector> pts;
  pts.reserve(count);
  std::vector<std::size_t> digit(dim, 0);
  for (std::size_t c = 0; c < count; ++c) {
    Vector p(dim);
    for (std::size_t j = 0; j < dim; ++j) p[j] = line[digit[j]][0];
    pts.push_back(std::move(p));
    for (std::size_t j = dim; j-- > 0;) {
      if (++digit[j] < line.size()) break;
      digit[j] = 0;
    }
  }
  return ActionMesh(std::move(pts), BoxSet{Vector(dim, a), Vector(dim, b)},
                    "SM(" + detail::format_number(a) + "," + detail::format_number(b) + "," +
                        std::to_string(k) + "," + std::to_string(n) + ")");
}

// BM(a, b, k) = { (sin(alpha), cos(alpha)) : alpha in LM(a, b, k) } on the unit
// circle. With a full turn the first and last points coincide; they are kept
// unless `dedup` is set.
inline ActionMesh ball_mesh(double a, double b, int k, bool dedup = false) {
  const ActionMesh angles = linear_mesh(a, b, k);
  std::vector<Vector> pts;
  for (const auto& alpha : angles.points()) {
    Vector p{std::sin(alpha[0]), std::cos(alpha[0])};
    bool duplicate = false;
    if (dedup) {
      for (const auto& q : pts) {
        if (std::hypot(p[0] - q[0], p[1] - q[1]) < 1e-12) duplicate = true;
      }
    }
    if (!duplicate) pts.push_back(std::move(p));
  }
  return ActionMesh(std::move(pts), EllipseSet{{1.0, 1.0}},
                    "BM(" + detail::format_number(a) + "," + detail::format_number(b) + "," +
                        std::to_string(k) + ")");
}

// Parsed form of a textual mesh spec such as "LM(-1,1,10)".
struct MeshSpec {
  std::string kind;
  std::vector<double> args;
};

inline MeshSpec parse_mesh_spec(std::string_view text) {
  auto fail = [&](const std::string& why) -> MeshSpec {
    throw InvalidArgument("bad mesh spec '" + std::string(text) + "': " + why);
  };
  auto skip_ws = [&](std::size_t& i) {
    while (i < text.size() && std::isspace(static_cast<unsigned char>(text[i]))) ++i;
  };
  MeshSpec spec;
  std::size_t i = 0;
  skip_ws(i);
  while (i < text.size() && std::isalpha(static_cast<unsigned char>(text[i]))) {
    spec.kind.push_back(text[i++]);
  }
  if (spec.kind.empty()) return fail("missing identifier");
  skip_ws(i);
  if (i >= text.size() || text[i] != '(') return fail("expected '('");
  ++i;
  for (;;) {
    skip_ws(i);
    double value = 0.0;
    auto [ptr, ec] = std::from_chars(text.data() + i, text.data() + text.size(), value);
    if (ec != std::errc()) return fail("expected a number");
    spec.args.push_back(value);
    i = static_cast<std::size_t>(ptr - text.data());
    skip_ws(i);
    if (i < text.size() && text[i] == ',') {
      ++i;
      continue;
    }
    if (i < text.size() && text[i] == ')') {
      ++i;
      break;
    }
    return fail("expected ',' or ')'");
  }
  skip_ws(i);
  if (i != text.size()) return fail("trailing characters");
  return spec;
}

namespace detail {

inline int as_count(double v, std::string_view what) {
  if (v != std::floor(v) || v < 0 || v > 1e7) {
    throw InvalidArgument(std::string(what) + " must be a non-negative integer");
  }
  return static_cast<int>(v);
}

}  // namespace detail

// Builds the mesh described by `text` (LM, SM or BM).
inline ActionMesh make_mesh(std::string_view text) {
  const MeshSpec s = parse_mesh_spec(text);
  if (s.kind == "LM" && s.args.size() == 3) {
    return linear_mesh(s.args[0], s.args[1], detail::as_count(s.args[2], "LM k"));
  }
  if (s.kind == "SM" && s.args.size() == 4) {
    return square_mesh(s.args[0], s.args[1], detail::as_count(s.args[2], "SM k"),
                       detail::as_count(s.args[3], "SM n"));
  }
  if (s.kind == "BM" && s.args.size() == 3) {
    return ball_mesh(s.args[0], s.args[1], detail::as_count(s.args[2], "BM k"));
  }
  throw InvalidArgument("unknown mesh spec '" + std::string(text) +
                        "' (expected LM(a,b,k), SM(a,b,k,n) or BM(a,b,k))");
}

// Builds the mesh for `text` and places it in `set`. Ball meshes on the unit
// circle are stretched per axis onto an ellipse boundary; every other mesh must
// already lie inside the set.
inline ActionMesh make_mesh_for(std::string_view text, const ActionSet& set) {
  ActionMesh raw = make_mesh(text);
  if (raw.dimension() != dgq::dimension(set)) {
    throw InvalidArgument("mesh '" + std::string(text) + "' has dimension " +
                          std::to_string(raw.dimension()) + ", action set has " +
                          std::to_string(dgq::dimension(set)));
  }
  std::vector<Vector> pts = raw.points();
  const auto* ellipse = std::get_if<EllipseSet>(&set);
  if (ellipse != nullptr && std::holds_alternative<EllipseSet>(raw.source())) {
    for (auto& p : pts) {
      for (std::size_t j = 0; j < p.size(); ++j) p[j] *= ellipse->semi_axes[j];
    }
  }
  return ActionMesh(std::move(pts), set, raw.label());
}

}  // namespace dgq

#endif  // DGQ_MESH_HPP_
