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

#ifndef NECC_AD_PARAM_VECTOR_HPP
#define NECC_AD_PARAM_VECTOR_HPP

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace necc {

/// Contiguous range of a ParamVector owned by one network (or by xi*).
struct ParamSegment {
  std::string name;
  std::size_t offset = 0;
  std::size_t length = 0;

  template <class P>
  std::span<const P> of(std::span<const P> all) const {
    return all.subspan(offset, length);
  }
};

/// Flat vector of every trainable value plus the layout naming its segments.
class ParamVector {
 public:
  ParamSegment add(std::string name, std::span<const double> values);

  bool has(std::string_view name) const;
  const ParamSegment& segment(std::string_view name) const;
  const std::vector<ParamSegment>& segments() const { return segments_; }

  std::span<const double> values() const { return values_; }
  std::span<double> values() { return values_; }
  std::span<const double> values(std::string_view name) const;
  std::size_t size() const { return values_.size(); }

  /// Replace all values; the length must match.
  void assign(std::span<const double> values);

 private:
  std::vector<double> values_;
  std::vector<ParamSegment> segments_;
};

}  // namespace necc

#endif  // NECC_AD_PARAM_VECTOR_HPP
