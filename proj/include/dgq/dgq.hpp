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

// Everything except the config/CLI layer, which needs yaml-cpp.

#ifndef DGQ_DGQ_HPP_
#define DGQ_DGQ_HPP_

#include "dgq/action_set.hpp"
#include "dgq/envs.hpp"
#include "dgq/error.hpp"
#include "dgq/eval.hpp"
#include "dgq/game.hpp"
#include "dgq/grid.hpp"
#include "dgq/isaacs.hpp"
#include "dgq/matrix_game.hpp"
#include "dgq/mesh.hpp"
#include "dgq/nn.hpp"
#include "dgq/policy.hpp"
#include "dgq/qlearn.hpp"

#endif  // DGQ_DGQ_HPP_
