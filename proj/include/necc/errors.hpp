/*
 Copyright 2026 The necc Authors

 Licensed under the Apache License, Version 2.0 (the "License");
 you may not use this file except in compliance with the License.
 You may obtain a copy of the License at

      https://www.apache.org/licenses/LICENSE-2.0

 Unless required by applicable law or agreed to in writing, software
 distributed under the License is distributed on an "AS IS" BASIS,
 WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 See the License for the specific language governing permissions and
 limitations under the License.
*/

#ifndef NECC_ERRORS_HPP
#define NECC_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace necc {

/// Shape, dimension or structure violations detected before any arithmetic.
class StructuralError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Non-finite values, failed convergence and similar run-time numeric failures.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A primitive produced or received a non-finite value.
class NumericDomainError : public NumericError {
 public:
  NumericDomainError(std::string primitive, const std::string& detail)
      : NumericError(primitive + ": " + detail), primitive_(std::move(primitive)) {}

  const std::string& primitive() const { return primitive_; }

 private:
  std::string primitive_;
};

/// Malformed or out-of-range experiment configuration.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace necc

#endif  // NECC_ERRORS_HPP
