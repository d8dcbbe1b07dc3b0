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

#ifndef DGQ_CONFIG_HPP_
#define DGQ_CONFIG_HPP_

#include <yaml-cpp/yaml.h>
#include <json.hpp>

#include <charconv>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "dgq/envs.hpp"
#include "dgq/error.hpp"
#include "dgq/eval.hpp"
#include "dgq/mesh.hpp"
#include "dgq/qlearn.hpp"

namespace dgq {

// Bad configuration or command line; `key` names the offending entry.
class UsageError : public InvalidArgument {
 public:
  UsageError(std::string key, const std::string& what)
      : InvalidArgument(what), key_(std::move(key)) {}
  const std::string& key() const { return key_; }

 private:
  std::string key_;
};

enum class KeyType { kString, kNumber, kCount, kCountList, kStringList };

struct KeySpec {
  std::string path;
  KeyType type;
  nlohmann::json fallback;  // null: resolved from the environment catalog
};

inline const std::vector<KeySpec>& config_schema() {
  using J = nlohmann::json;
  static const std::vector<KeySpec> schema = {
      {"algorithm", KeyType::kString, "idqn"},
      {"environment", KeyType::kString, "get_into_circle"},
      {"seed", KeyType::kCount, 0},
      {"dt", KeyType::kNumber, nullptr},
      {"mesh.u", KeyType::kString, nullptr},
      {"mesh.v", KeyType::kString, nullptr},
      {"network.hidden", KeyType::kCountList, nullptr},
      {"network.learning_rate", KeyType::kNumber, 1e-3},
      {"network.tau", KeyType::kNumber, 0.01},
      {"training.batch_size", KeyType::kCount, 64},
      {"training.steps", KeyType::kCount, 50000},
      {"training.buffer_capacity", KeyType::kCount, 100000},
      {"evaluation.methods", KeyType::kStringList, J::array({"grid", "random"})},
      {"evaluation.seeds", KeyType::kCountList, J::array({0, 1, 2, 3, 4})},
      {"evaluation.grid_nodes", KeyType::kCount, nullptr},
      {"evaluation.dqn_draws", KeyType::kCount, 2},
      {"evaluation.dqn_steps", KeyType::kCount, 50000},
      {"evaluation.random_sequences", KeyType::kCount, 200},
      {"evaluation.mixed_rollouts", KeyType::kCount, 20},
      {"solve.grid_nodes", KeyType::kCount, nullptr},
      {"solve.safety", KeyType::kNumber, 1.2},
      {"solve.threads", KeyType::kCount, 1},
  };
  return schema;
}

inline const KeySpec* find_key(std::string_view path) {
  for (const auto& k : config_schema()) {
    if (k.path == path) return &k;
  }
  return nullptr;
}

inline bool is_section(std::string_view path) {
  for (const auto& k : config_schema()) {
    if (k.path.size() > path.size() && k.path.compare(0, path.size(), path) == 0 &&
        k.path[path.size()] == '.') {
      return true;
    }
  }
  return false;
}

namespace detail {

inline nlohmann::json convert_scalar(const YAML::Node& n, KeyType type, const std::string& path) {
  try {
    switch (type) {
      case KeyType::kString:
        return n.as<std::string>();
      case KeyType::kNumber:
        return n.as<double>();
      case KeyType::kCount: {
        const auto v = n.as<long long>();
        if (v < 0) throw UsageError(path, "config key '" + path + "' must be non-negative");
        return static_cast<std::uint64_t>(v);
      }
      default:
        break;
    }
  } catch (const YAML::Exception&) {
    throw UsageError(path, "config key '" + path + "' has the wrong type");
  }
  throw UsageError(path, "config key '" + path + "' has the wrong type");
}

inline nlohmann::json convert(const YAML::Node& n, const KeySpec& spec) {
  if (n.IsNull()) return nullptr;
  if (spec.type == KeyType::kCountList || spec.type == KeyType::kStringList) {
    if (!n.IsSequence()) throw UsageError(spec.path, "config key '" + spec.path + "' must be a list");
    nlohmann::json out = nlohmann::json::array();
    const KeyType item = spec.type == KeyType::kCountList ? KeyType::kCount : KeyType::kString;
    for (const auto& e : n) out.push_back(convert_scalar(e, item, spec.path));
    return out;
  }
  if (!n.IsScalar()) throw UsageError(spec.path, "config key '" + spec.path + "' must be a scalar");
  return convert_scalar(n, spec.type, spec.path);
}

inline void walk(const YAML::Node& node, const std::string& prefix, nlohmann::json& flat) {
  if (!node.IsMap()) throw UsageError(prefix, "config section '" + prefix + "' must be a mapping");
  for (const auto& kv : node) {
    const std::string key = kv.first.as<std::string>();
    const std::string path = prefix.empty() ? key : prefix + "." + key;
    if (const KeySpec* spec = find_key(path)) {
      flat[path] = convert(kv.second, *spec);
    } else if (is_section(path)) {
      if (!kv.second.IsNull()) walk(kv.second, path, flat);
    } else {
      throw UsageError(path, "unknown config key '" + path + "'");
    }
  }
}

}  // namespace detail

// Flat map of dot paths to values as written by the user (no defaults).
using ConfigTree = nlohmann::json;

inline ConfigTree parse_config_text(const std::string& text) {
  YAML::Node root;
  try {
    root = YAML::Load(text);
  } catch (const YAML::Exception& e) {
    throw UsageError("", std::string("config does not parse: ") + e.what());
  }
  ConfigTree flat = ConfigTree::object();
  if (root.IsNull()) return flat;
  detail::walk(root, "", flat);
  return flat;
}

inline ConfigTree load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("config", "cannot read config file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str());
}

// Applies "dot.path=value"; the value is parsed as YAML.
inline void apply_override(ConfigTree& tree, std::string_view assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string_view::npos || eq == 0) {
    throw UsageError(std::string(assignment), "override must look like key=value");
  }
  const std::string path(assignment.substr(0, eq));
  const KeySpec* spec = find_key(path);
  if (spec == nullptr) throw UsageError(path, "unknown config key '" + path + "'");
  YAML::Node value;
  try {
    value = YAML::Load(std::string(assignment.substr(eq + 1)));
  } catch (const YAML::Exception&) {
    throw UsageError(path, "override value for '" + path + "' does not parse");
  }
  tree[path] = detail::convert(value, *spec);
}

// Config with every key present: unset keys take schema or catalog defaults.
struct ResolvedConfig {
  nlohmann::json tree;  // flat, every schema key
  TrainConfig train;
  EvalOptions eval;
  std::vector<std::uint64_t> seeds;
  std::size_t solve_nodes = 0;
  double solve_safety = 1.2;
  unsigned solve_threads = 1;
};

inline ResolvedConfig resolve(const ConfigTree& user) {
  nlohmann::json t = nlohmann::json::object();
  for (const auto& k : config_schema()) {
    t[k.path] = user.contains(k.path) && !user[k.path].is_null() ? user[k.path] : k.fallback;
  }
  const std::string env = t["environment"].get<std::string>();
  const EnvironmentInfo* info = nullptr;
  try {
    info = &find_environment(env);
  } catch (const InvalidArgument&) {
    throw UsageError("environment", "unknown environment '" + env + "' (key 'environment')");
  }
  Algorithm algo{};
  try {
    algo = parse_algorithm(t["algorithm"].get<std::string>());
  } catch (const InvalidArgument&) {
    throw UsageError("algorithm", "unknown algorithm '" + t["algorithm"].get<std::string>() +
                                      "' (key 'algorithm')");
  }
  if (t["dt"].is_null()) t["dt"] = info->dt;
  if (t["mesh.u"].is_null()) t["mesh.u"] = info->u_mesh;
  if (t["mesh.v"].is_null()) t["mesh.v"] = info->v_mesh;
  if (t["network.hidden"].is_null()) t["network.hidden"] = info->hidden;
  if (t["evaluation.grid_nodes"].is_null()) t["evaluation.grid_nodes"] = info->grid_nodes;
  if (t["solve.grid_nodes"].is_null()) t["solve.grid_nodes"] = info->grid_nodes;

  const auto game = info->make();
  for (const char* key : {"mesh.u", "mesh.v"}) {
    try {
      make_mesh_for(t[key].get<std::string>(), key[5] == 'u' ? game.u_set : game.v_set);
    } catch (const InvalidArgument& e) {
      throw UsageError(key, std::string("bad mesh spec for '") + key + "': " + e.what());
    }
  }
  if (!(t["dt"].get<double>() > 0.0)) throw UsageError("dt", "'dt' must be positive");
  try {
    Partition::uniform(0.0, game.horizon, t["dt"].get<double>());
  } catch (const InvalidArgument& e) {
    throw UsageError("dt", std::string("'dt': ") + e.what());
  }
  for (const char* key : {"training.batch_size", "training.steps", "training.buffer_capacity"}) {
    if (t[key].get<std::uint64_t>() == 0) throw UsageError(key, std::string("'") + key + "' must be positive");
  }
  for (const auto& h : t["network.hidden"]) {
    if (h.get<std::uint64_t>() == 0) throw UsageError("network.hidden", "hidden sizes must be positive");
  }

  ResolvedConfig r;
  r.tree = t;
  TrainConfig& c = r.train;
  c.algorithm = algo;
  c.environment = env;
  c.dt = t["dt"].get<double>();
  c.u_mesh = t["mesh.u"].get<std::string>();
  c.v_mesh = t["mesh.v"].get<std::string>();
  c.hidden.clear();
  for (const auto& h : t["network.hidden"]) c.hidden.push_back(h.get<int>());
  c.learning_rate = t["network.learning_rate"].get<double>();
  c.tau = t["network.tau"].get<double>();
  c.batch_size = t["training.batch_size"].get<std::size_t>();
  c.total_steps = t["training.steps"].get<std::size_t>();
  c.buffer_capacity = t["training.buffer_capacity"].get<std::size_t>();
  c.seed = t["seed"].get<std::uint64_t>();

  r.eval.methods.clear();
  for (const auto& m : t["evaluation.methods"]) {
    try {
      r.eval.methods.push_back(parse_method(m.get<std::string>()));
    } catch (const InvalidArgument& e) {
      throw UsageError("evaluation.methods", e.what());
    }
  }
  r.eval.grid_nodes = t["evaluation.grid_nodes"].get<std::size_t>();
  r.eval.dqn_draws = t["evaluation.dqn_draws"].get<std::size_t>();
  r.eval.dqn_steps = t["evaluation.dqn_steps"].get<std::size_t>();
  r.eval.random_sequences = t["evaluation.random_sequences"].get<std::size_t>();
  r.eval.mixed_rollouts = std::max<std::size_t>(1, t["evaluation.mixed_rollouts"].get<std::size_t>());
  r.eval.seed = c.seed;
  r.seeds = t["evaluation.seeds"].get<std::vector<std::uint64_t>>();
  r.solve_nodes = t["solve.grid_nodes"].get<std::size_t>();
  r.solve_safety = t["solve.safety"].get<double>();
  r.solve_threads = std::max(1U, t["solve.threads"].get<unsigned>());
  return r;
}

// Shortest decimal text that parses back to exactly `x`.
inline std::string shortest_double(double x) {
  char buf[40];
  const auto r = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, r.ptr);
}

// Nested YAML rendering of a flat tree; keys in schema order.
inline std::string to_yaml(const nlohmann::json& flat) {
  YAML::Node root;
  for (const auto& k : config_schema()) {
    if (!flat.contains(k.path)) continue;
    const nlohmann::json& v = flat[k.path];
    YAML::Node leaf;
    if (v.is_null()) {
      leaf = YAML::Node(YAML::NodeType::Null);
    } else if (v.is_array()) {
      leaf = YAML::Node(YAML::NodeType::Sequence);
      for (const auto& e : v) {
        if (e.is_string()) {
          leaf.push_back(e.get<std::string>());
        } else {
          leaf.push_back(e.get<std::uint64_t>());
        }
      }
      leaf.SetStyle(YAML::EmitterStyle::Flow);
    } else if (v.is_string()) {
      leaf = v.get<std::string>();
    } else if (v.is_number_integer()) {
      leaf = v.get<long long>();
    } else {
      leaf = shortest_double(v.get<double>());
    }
    const auto dot = k.path.find('.');
    if (dot == std::string::npos) {
      root[k.path] = leaf;
    } else {
      root[k.path.substr(0, dot)][k.path.substr(dot + 1)] = leaf;
    }
  }
  YAML::Emitter out;
  out << root;
  return std::string(out.c_str()) + "\n";
}

// 64-bit FNV-1a, hex encoded.
inline std::string fnv1a_hex(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

// Hash of the resolved config without the seed, so seeds of one experiment
// share a prefix.
inline std::string config_hash(const ResolvedConfig& r) {
  nlohmann::json t = r.tree;
  t.erase("seed");
  return fnv1a_hex(t.dump()).substr(0, 12);
}

}  // namespace dgq

#endif  // DGQ_CONFIG_HPP_
