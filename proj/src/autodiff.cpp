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

#include <cmath>
#include <sstream>
#include <stdexcept>
#include <string>

#include "necc/ad/param_vector.hpp"
#include "necc/ad/reductions.hpp"
#include "necc/ad/var.hpp"
#include "necc/errors.hpp"
#include "necc/linalg.hpp"

namespace necc::ad {

namespace {
thread_local Tape* g_active_tape = nullptr;
}  // namespace

Tape::Tape() { begin_.push_back(0); }

Tape* Tape::active() { return g_active_tape; }

Tape& active_tape() {
  if (g_active_tape == nullptr) {
    throw std::logic_error("necc::ad: operation on a tape variable with no active tape");
  }
  return *g_active_tape;
}

ActiveTapeScope::ActiveTapeScope(Tape& tape) : previous_(g_active_tape) { g_active_tape = &tape; }
ActiveTapeScope::~ActiveTapeScope() { g_active_tape = previous_; }

Var Tape::variable(double value) {
  begin_.push_back(static_cast<std::uint32_t>(args_.size()));
  return Var::node(value, static_cast<std::int32_t>(begin_.size() - 2));
}

std::int32_t Tape::push(std::int32_t a, double da) {
  args_.push_back(a);
  partials_.push_back(da);
  begin_.push_back(static_cast<std::uint32_t>(args_.size()));
  return static_cast<std::int32_t>(begin_.size() - 2);
}

std::int32_t Tape::push(std::int32_t a, double da, std::int32_t b, double db) {
  args_.push_back(a);
  args_.push_back(b);
  partials_.push_back(da);
  partials_.push_back(db);
  begin_.push_back(static_cast<std::uint32_t>(args_.size()));
  return static_cast<std::int32_t>(begin_.size() - 2);
}

std::int32_t Tape::push(std::span<const std::int32_t> args, std::span<const double> partials) {
  args_.insert(args_.end(), args.begin(), args.end());
  partials_.insert(partials_.end(), partials.begin(), partials.end());
  begin_.push_back(static_cast<std::uint32_t>(args_.size()));
  return static_cast<std::int32_t>(begin_.size() - 2);
}

void Tape::clear() {
  begin_.assign(1, 0);
  args_.clear();
  partials_.clear();
  degenerate_eigenvalues_ = 0;
}

Eigen::VectorXd Tape::gradient(const Var& output, std::span<const Var> wrt) const {
  Eigen::VectorXd out = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(wrt.size()));
  if (output.is_constant()) return out;
  std::vector<double> adjoint(size(), 0.0);
  adjoint[static_cast<std::size_t>(output.index())] = 1.0;
  for (std::size_t node = static_cast<std::size_t>(output.index()) + 1; node-- > 0;) {
    const double a = adjoint[node];
    if (a == 0.0) continue;
    for (std::uint32_t k = begin_[node]; k < begin_[node + 1]; ++k) {
      adjoint[static_cast<std::size_t>(args_[k])] += a * partials_[k];
    }
  }
  for (std::size_t i = 0; i < wrt.size(); ++i) {
    if (!wrt[i].is_constant()) out(static_cast<Eigen::Index>(i)) = adjoint[static_cast<std::size_t>(wrt[i].index())];
  }
  return out;
}

Var operator/(const Var& a, const Var& b) {
  if (b.value() == 0.0) detail::domain_failure("division", a.value());
  const double q = a.value() / b.value();
  return detail::binary(q, a, 1.0 / b.value(), b, -q / b.value());
}

namespace detail {
void domain_failure(const char* primitive, double argument) {
  std::ostringstream msg;
  msg << "non-finite or undefined result at argument " << argument;
  throw NumericDomainError(primitive, msg.str());
}
}  // namespace detail

double norm(const VecX<double>& x) { return x.norm(); }

Var norm(const VecX<Var>& x) {
  double sq = 0.0;
  for (Eigen::Index i = 0; i < x.size(); ++i) sq += x(i).value() * x(i).value();
  const double r = std::sqrt(sq);
  std::vector<std::int32_t> args;
  std::vector<double> partials;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    if (x(i).is_constant() || r == 0.0) continue;
    args.push_back(x(i).index());
    partials.push_back(x(i).value() / r);
  }
  if (args.empty()) return Var(r);
  return Var::node(r, active_tape().push(args, partials));
}

double min_eigenvalue(const MatX<double>& S) { return linalg::min_eigenvalue(S); }

Var min_eigenvalue(const MatX<Var>& S) {
  const auto spectrum = linalg::symmetric_eig(values_of(S));
  const double lambda = spectrum.eigenvalues(0);
  const Eigen::VectorXd v = spectrum.eigenvectors.col(0);
  std::vector<std::int32_t> args;
  std::vector<double> partials;
  for (Eigen::Index i = 0; i < S.rows(); ++i) {
    for (Eigen::Index j = 0; j < S.cols(); ++j) {
      if (S(i, j).is_constant()) continue;
      args.push_back(S(i, j).index());
      partials.push_back(v(i) * v(j));
    }
  }
  if (args.empty()) return Var(lambda);
  Tape& tape = active_tape();
  if (spectrum.eigenvalues.size() > 1 &&
      spectrum.eigenvalues(1) - spectrum.eigenvalues(0) <= kDegenerateEigenGap) {
    tape.note_degenerate_eigenvalue();
  }
  return Var::node(lambda, tape.push(args, partials));
}

}  // namespace necc::ad

namespace necc {

ParamSegment ParamVector::add(std::string name, std::span<const double> values) {
  if (has(name)) throw StructuralError("ParamVector: duplicate segment '" + name + "'");
  segments_.push_back({std::move(name), values_.size(), values.size()});
  values_.insert(values_.end(), values.begin(), values.end());
  return segments_.back();
}

bool ParamVector::has(std::string_view name) const {
  for (const auto& s : segments_)
    if (s.name == name) return true;
  return false;
}

const ParamSegment& ParamVector::segment(std::string_view name) const {
  for (const auto& s : segments_)
    if (s.name == name) return s;
  throw StructuralError("ParamVector: no segment named '" + std::string(name) + "'");
}

std::span<const double> ParamVector::values(std::string_view name) const {
  return segment(name).of(values());
}

void ParamVector::assign(std::span<const double> values) {
  if (values.size() != values_.size()) {
    throw StructuralError("ParamVector::assign: expected " + std::to_string(values_.size()) +
                          " values, got " + std::to_string(values.size()));
  }
  values_.assign(values.begin(), values.end());
}

}  // namespace necc
