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

#ifndef DGQ_ERROR_HPP_
#define DGQ_ERROR_HPP_

#include <stdexcept>
#include <string>

namespace dgq {

// Base of every exception thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Bad user input: malformed specs, out-of-range indices, unknown names.
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

// Requested operation is not available for this input (e.g. grid solve of a
// 5-D game).
class Unsupported : public Error {
 public:
  using Error::Error;
};

// Non-finite values, solver non-convergence.
class NumericalError : public Error {
 public:
  using Error::Error;
};

}  // namespace dgq

#endif  // DGQ_ERROR_HPP_
