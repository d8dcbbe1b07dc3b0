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

#ifndef DGQ_ACTION_SET_HPP_
#define DGQ_ACTION_SET_HPP_

#include <algorithm>
#include <cmath>
#include <span>
#include <variant>
#include <vector>

#include "dgq/error.hpp"

namespace dgq {

using Vector = std::vector<double>;

// Membership slack for mesh points produced by floating point constructors.
inline constexpr double kMembershipTolerance = 1e-9;

// Axis-aligned box [lower, upper] in R^k.
struct BoxSet {
  Vector lower;
  Vector upper;
};

// Origin-centred ellipse sum_i (p_i / a_i)^2 <= 1. A ball of radius r has all
// semi-axes equal to r.
struct EllipseSet {
  Vector semi_axes;
};

using ActionSet = std::variant<BoxSet, EllipseSet>;

inline ActionSet make_interval(double lo, double hi) { return BoxSet{{lo}, {hi}}; }
inline ActionSet make_ball(std::size_t dim, double radius) {
  return EllipseSet{Vector(dim, radius)};
}

inline std::size_t dimension(const ActionSet& set) {
  return std::visit(
      [](const auto& s) -> std::size_t {
        if constexpr (std::is_same_v<std::decay_t<decltype(s)>, BoxSet>) {
          return s.lower.size();
        } else {
          return s.semi_axes.size();
        }
      },
      set);
}

inline bool contains(const ActionSet& set, std::span<const double> p,
                     double tol = kMembershipTolerance) {
  if (p.size() != dimension(set)) return false;
  if (const auto* box = std::get_if<BoxSet>(&set)) {
    for (std::size_t i = 0; i < p.size(); ++i) {
      if (p[i] < box->lower[i] - tol || p[i] > box->upper[i] + tol) return false;
    }
    return true;
  }
  const auto& e = std::get<EllipseSet>(set);
  double q = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double z = p[i] / e.semi_axes[i];
    q += z * z;
  }
  return q <= 1.0 + tol;
}

// Maps p into the set: coordinate clamping for boxes, radial retraction in
// normalised coordinates for ellipses. Points already inside are returned
// unchanged.
inline Vector project(const ActionSet& set, std::span<const double> p) {
  if (p.size() != dimension(set)) {
    throw InvalidArgument("project: point dimension does not match action set");
  }
  Vector out(p.begin(), p.end());
  if (const auto* box = std::get_if<BoxSet>(&set)) {
    for (std::size_t i = 0; i < out.size(); ++i) {
      out[i] = std::clamp(out[i], box->lower[i], box->upper[i]);
    }
    return out;
  }
  const auto& e = std::get<EllipseSet>(set);
  double q = 0.0;
  for (std::size_t i = 0; i < out.size(); ++i) {
    const double z = out[i] / e.semi_axes[i];
    q += z * z;
  }
  if (q > 1.0) {
    const double scale = 1.0 / std::sqrt(q);
    for (double& c : out) c *= scale;
  }
  return out;
}

// Largest Euclidean norm of any point of the set.
inline double max_norm(const ActionSet& set) {
  if (const auto* box = std::get_if<BoxSet>(&set)) {
    double s = 0.0;
    for (std::size_t i = 0; i < box->lower.size(); ++i) {
      const double m = std::max(std::abs(box->lower[i]), std::abs(box->upper[i]));
      s += m * m;
    }
    return std::sqrt(s);
  }
  const auto& a = std::get<EllipseSet>(set).semi_axes;
  return *std::max_element(a.begin(), a.end());
}

}  // namespace dgq

#endif  // DGQ_ACTION_SET_HPP_
