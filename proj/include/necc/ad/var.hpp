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

#ifndef NECC_AD_VAR_HPP
#define NECC_AD_VAR_HPP

#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Core>

namespace necc::ad {

class Var;

/**
 * @brief Reverse-mode recording of elementary partial derivatives.
 *
 * Every non-constant Var refers to a node on the tape that is active on the
 * current thread. A node stores the indices of its arguments and the local
 * partial derivative with respect to each of them; values are not stored.
 * One tape per thread, installed with ActiveTapeScope.
 */
class Tape {
 public:
  Tape();

  /// New independent variable (a leaf).
  Var variable(double value);

  std::int32_t push(std::int32_t a, double da);
  std::int32_t push(std::int32_t a, double da, std::int32_t b, double db);
  std::int32_t push(std::span<const std::int32_t> args, std::span<const double> partials);

  /// Adjoints d(output)/d(v) for each v in `wrt` (zero for constants).
  Eigen::VectorXd gradient(const Var& output, std::span<const Var> wrt) const;

  std::size_t size() const { return begin_.size() - 1; }
  void clear();

  void note_degenerate_eigenvalue() { ++degenerate_eigenvalues_; }
  int degenerate_eigenvalue_count() const { return degenerate_eigenvalues_; }

  /// Tape installed on this thread, or nullptr.
  static Tape* active();

 private:
  friend class ActiveTapeScope;

  std::vector<std::uint32_t> begin_;
  std::vector<std::int32_t> args_;
  std::vector<double> partials_;
  int degenerate_eigenvalues_ = 0;
};

/// Installs a tape as the active one for the current thread (restores on exit).
class ActiveTapeScope {
 public:
  explicit ActiveTapeScope(Tape& tape);
  ~ActiveTapeScope();
  ActiveTapeScope(const ActiveTapeScope&) = delete;
  ActiveTapeScope& operator=(const ActiveTapeScope&) = delete;

 private:
  Tape* previous_;
};

Tape& active_tape();

/// Scalar recorded on the active tape. Constants (index < 0) never touch the tape.
class Var {
 public:
  Var() = default;
  Var(double value) : value_(value) {}  // NOLINT(google-explicit-constructor)

  static Var node(double value, std::int32_t index) {
    Var v(value);
    v.index_ = index;
    return v;
  }

  double value() const { return value_; }
  std::int32_t index() const { return index_; }
  bool is_constant() const { return index_ < 0; }

  Var& operator+=(const Var& o);
  Var& operator-=(const Var& o);
  Var& operator*=(const Var& o);
  Var& operator/=(const Var& o);

 private:
  double value_ = 0.0;
  std::int32_t index_ = -1;
};

namespace detail {

inline Var unary(double value, const Var& a, double da) {
  if (a.is_constant()) return Var(value);
  return Var::node(value, active_tape().push(a.index(), da));
}

inline Var binary(double value, const Var& a, double da, const Var& b, double db) {
  if (a.is_constant()) return unary(value, b, db);
  if (b.is_constant()) return unary(value, a, da);
  return Var::node(value, active_tape().push(a.index(), da, b.index(), db));
}

}  // namespace detail

// x + c and x - c keep the node of x: the partial is exactly one.
inline Var operator+(const Var& a, double c) { return Var::node(a.value() + c, a.index()); }
inline Var operator+(double c, const Var& a) { return a + c; }
inline Var operator-(const Var& a, double c) { return Var::node(a.value() - c, a.index()); }
inline Var operator-(const Var& a) { return detail::unary(-a.value(), a, -1.0); }
inline Var operator-(double c, const Var& a) { return detail::unary(c - a.value(), a, -1.0); }

inline Var operator*(const Var& a, double c) {
  if (c == 0.0) return Var(0.0);
  if (c == 1.0) return a;
  return detail::unary(a.value() * c, a, c);
}
inline Var operator*(double c, const Var& a) { return a * c; }

Var operator/(const Var& a, const Var& b);
inline Var operator/(const Var& a, double c) { return a / Var(c); }
inline Var operator/(double c, const Var& a) { return Var(c) / a; }

inline Var operator+(const Var& a, const Var& b) {
  if (a.is_constant()) return b + a.value();
  if (b.is_constant()) return a + b.value();
  return detail::binary(a.value() + b.value(), a, 1.0, b, 1.0);
}

inline Var operator-(const Var& a, const Var& b) {
  if (b.is_constant()) return a - b.value();
  if (a.is_constant()) return a.value() - b;
  return detail::binary(a.value() - b.value(), a, 1.0, b, -1.0);
}

inline Var operator*(const Var& a, const Var& b) {
  if (a.is_constant()) return b * a.value();
  if (b.is_constant()) return a * b.value();
  return detail::binary(a.value() * b.value(), a, b.value(), b, a.value());
}

inline Var& Var::operator+=(const Var& o) { return *this = *this + o; }
inline Var& Var::operator-=(const Var& o) { return *this = *this - o; }
inline Var& Var::operator*=(const Var& o) { return *this = *this * o; }
inline Var& Var::operator/=(const Var& o) { return *this = *this / o; }

inline bool operator<(const Var& a, const Var& b) { return a.value() < b.value(); }
inline bool operator>(const Var& a, const Var& b) { return a.value() > b.value(); }
inline bool operator<=(const Var& a, const Var& b) { return a.value() <= b.value(); }
inline bool operator>=(const Var& a, const Var& b) { return a.value() >= b.value(); }

}  // namespace necc::ad

namespace Eigen {

template <>
struct NumTraits<necc::ad::Var> : GenericNumTraits<double> {
  using Real = necc::ad::Var;
  using NonInteger = necc::ad::Var;
  using Nested = necc::ad::Var;
  using Literal = necc::ad::Var;
  enum {
    IsComplex = 0,
    IsInteger = 0,
    IsSigned = 1,
    RequireInitialization = 1,
    ReadCost = 1,
    AddCost = 3,
    MulCost = 3
  };
};

}  // namespace Eigen

#endif  // NECC_AD_VAR_HPP
