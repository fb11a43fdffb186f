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

#ifndef NECC_AD_DUAL_HPP
#define NECC_AD_DUAL_HPP

#include <concepts>
#include <type_traits>

#include <Eigen/Core>

#include "necc/ad/var.hpp"

namespace necc::ad {

/**
 * @brief Forward-mode dual number with a single tangent.
 *
 * Nesting Dual<Dual<T>> gives second derivatives, Dual<Dual<Dual<T>>> third
 * derivatives. The base T is double or Var; with Var the forward derivatives
 * are themselves recorded on the tape so they can be differentiated again in
 * reverse mode.
 */
template <class T>
struct Dual {
  T v{};  ///< value
  T d{};  ///< tangent

  Dual() = default;
  Dual(const T& value, const T& tangent) : v(value), d(tangent) {}

  // Lifts a lower-level scalar (double, Var, or a shallower Dual) as a constant.
  template <class U>
    requires(!std::same_as<std::remove_cvref_t<U>, Dual> && std::is_convertible_v<U, T>)
  Dual(const U& value) : v(value), d(0.0) {}  // NOLINT(google-explicit-constructor)

  Dual& operator+=(const Dual& o) {
    v += o.v;
    d += o.d;
    return *this;
  }
  Dual& operator-=(const Dual& o) {
    v -= o.v;
    d -= o.d;
    return *this;
  }
  Dual& operator*=(const Dual& o) { return *this = *this * o; }
  Dual& operator/=(const Dual& o) { return *this = *this / o; }
};

template <class T>
struct is_dual : std::false_type {};
template <class T>
struct is_dual<Dual<T>> : std::true_type {};

/// U can stand in for the base T of Dual<T> (it is a strictly lower scalar).
template <class U, class T>
concept ScalarOf = !std::same_as<std::remove_cvref_t<U>, Dual<T>> && std::is_convertible_v<U, T>;

inline double value_of(double x) { return x; }
inline double value_of(const Var& x) { return x.value(); }
template <class T>
double value_of(const Dual<T>& x) {
  return value_of(x.v);
}

template <class T>
Dual<T> operator-(const Dual<T>& a) {
  return {-a.v, -a.d};
}

template <class T>
Dual<T> operator+(const Dual<T>& a, const Dual<T>& b) {
  return {a.v + b.v, a.d + b.d};
}
template <class T>
Dual<T> operator-(const Dual<T>& a, const Dual<T>& b) {
  return {a.v - b.v, a.d - b.d};
}
template <class T>
Dual<T> operator*(const Dual<T>& a, const Dual<T>& b) {
  return {a.v * b.v, a.v * b.d + a.d * b.v};
}
template <class T>
Dual<T> operator/(const Dual<T>& a, const Dual<T>& b) {
  T q = a.v / b.v;
  return {q, (a.d - q * b.d) / b.v};
}

template <class T, class U>
  requires ScalarOf<U, T>
Dual<T> operator+(const Dual<T>& a, const U& c) {
  return {a.v + c, a.d};
}
template <class T, class U>
  requires ScalarOf<U, T>
Dual<T> operator+(const U& c, const Dual<T>& a) {
  return {c + a.v, a.d};
}
template <class T, class U>
  requires ScalarOf<U, T>
Dual<T> operator-(const Dual<T>& a, const U& c) {
  return {a.v - c, a.d};
}
template <class T, class U>
  requires ScalarOf<U, T>
Dual<T> operator-(const U& c, const Dual<T>& a) {
  return {c - a.v, -a.d};
}
template <class T, class U>
  requires ScalarOf<U, T>
Dual<T> operator*(const Dual<T>& a, const U& c) {
  return {a.v * c, a.d * c};
}
template <class T, class U>
  requires ScalarOf<U, T>
Dual<T> operator*(const U& c, const Dual<T>& a) {
  return {c * a.v, c * a.d};
}
template <class T, class U>
  requires ScalarOf<U, T>
Dual<T> operator/(const Dual<T>& a, const U& c) {
  return {a.v / c, a.d / c};
}
template <class T, class U>
  requires ScalarOf<U, T>
Dual<T> operator/(const U& c, const Dual<T>& a) {
  return Dual<T>(c) / a;
}

template <class T>
bool operator<(const Dual<T>& a, const Dual<T>& b) {
  return value_of(a) < value_of(b);
}
template <class T>
bool operator>(const Dual<T>& a, const Dual<T>& b) {
  return value_of(a) > value_of(b);
}

using Dual1 = Dual<double>;
using Dual2 = Dual<Dual1>;
using Dual3 = Dual<Dual2>;
using VarDual1 = Dual<Var>;
using VarDual2 = Dual<VarDual1>;

}  // namespace necc::ad

namespace Eigen {

template <class T>
struct NumTraits<necc::ad::Dual<T>> : GenericNumTraits<double> {
  using Real = necc::ad::Dual<T>;
  using NonInteger = necc::ad::Dual<T>;
  using Nested = necc::ad::Dual<T>;
  using Literal = necc::ad::Dual<T>;
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

#endif  // NECC_AD_DUAL_HPP
