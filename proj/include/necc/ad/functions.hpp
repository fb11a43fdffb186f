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

#ifndef NECC_AD_FUNCTIONS_HPP
#define NECC_AD_FUNCTIONS_HPP

#include <cmath>

#include "necc/ad/dual.hpp"
#include "necc/ad/var.hpp"
#include "necc/errors.hpp"

// Supported primitives: + - * / tanh exp sin cos sqrt relu norm min_eigenvalue.
// Each is overloaded for double, Var and Dual<T>; generic code calls them
// qualified (ad::tanh) so the double overloads with domain checks are picked.

namespace necc::ad {

namespace detail {
[[noreturn]] void domain_failure(const char* primitive, double argument);

inline double checked(const char* primitive, double argument, double result) {
  if (!std::isfinite(result)) domain_failure(primitive, argument);
  return result;
}
}  // namespace detail

// double ----------------------------------------------------------------------

inline double tanh(double x) { return detail::checked("tanh", x, std::tanh(x)); }
inline double exp(double x) { return detail::checked("exp", x, std::exp(x)); }
inline double sin(double x) { return detail::checked("sin", x, std::sin(x)); }
inline double cos(double x) { return detail::checked("cos", x, std::cos(x)); }
inline double sqrt(double x) {
  if (x < 0.0) detail::domain_failure("sqrt", x);
  return detail::checked("sqrt", x, std::sqrt(x));
}
/// max(0, x); the derivative at exactly 0 is taken as 0.
inline double relu(double x) { return x > 0.0 ? x : 0.0; }

// Var -------------------------------------------------------------------------

inline Var tanh(const Var& x) {
  double t = tanh(x.value());
  return detail::unary(t, x, 1.0 - t * t);
}
inline Var exp(const Var& x) {
  double e = exp(x.value());
  return detail::unary(e, x, e);
}
inline Var sin(const Var& x) { return detail::unary(sin(x.value()), x, std::cos(x.value())); }
inline Var cos(const Var& x) { return detail::unary(cos(x.value()), x, -std::sin(x.value())); }
inline Var sqrt(const Var& x) {
  double s = sqrt(x.value());
  if (s == 0.0 && !x.is_constant()) detail::domain_failure("sqrt", x.value());
  return detail::unary(s, x, x.is_constant() ? 0.0 : 0.5 / s);
}
inline Var relu(const Var& x) { return x.value() > 0.0 ? x : Var(0.0); }

// Dual ------------------------------------------------------------------------

template <class T>
Dual<T> tanh(const Dual<T>& x) {
  T t = tanh(x.v);
  return {t, x.d * (1.0 - t * t)};
}
template <class T>
Dual<T> exp(const Dual<T>& x) {
  T e = exp(x.v);
  return {e, x.d * e};
}
template <class T>
Dual<T> sin(const Dual<T>& x) {
  return {sin(x.v), x.d * cos(x.v)};
}
template <class T>
Dual<T> cos(const Dual<T>& x) {
  return {cos(x.v), -(x.d * sin(x.v))};
}
template <class T>
Dual<T> sqrt(const Dual<T>& x) {
  T s = sqrt(x.v);
  if (value_of(s) == 0.0) detail::domain_failure("sqrt", 0.0);
  return {s, x.d / (2.0 * s)};
}
template <class T>
Dual<T> relu(const Dual<T>& x) {
  return value_of(x) > 0.0 ? x : Dual<T>(0.0);
}

template <class S>
S square(const S& x) {
  return x * x;
}

}  // namespace necc::ad

#endif  // NECC_AD_FUNCTIONS_HPP
