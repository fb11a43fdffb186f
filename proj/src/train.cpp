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

#include "necc/train.hpp"

#include <chrono>
#include <cmath>
#include <ctime>
#include <fstream>
#include <sstream>

#include <Eigen/Cholesky>

#include "necc/linalg.hpp"

namespace necc {

double lyapunov_value(const LyapunovComposition& L, std::span<const double> theta, const Eigen::VectorXd& z) {
  return L.value<double, double>(theta, z);
}

Eigen::VectorXd lyapunov_grad(const LyapunovComposition& L, std::span<const double> theta, const Eigen::VectorXd& z) {
  return ad::grad([&](const auto& s) { return L.value(theta, s); }, z);
}

Eigen::MatrixXd lyapunov_hessian(const LyapunovComposition& L, std::span<const double> theta,
                                 const Eigen::VectorXd& z) {
  return ad::hessian([&](const auto& s) { return L.value(theta, s); }, z);
}

double closed_loop_energy(const LyapunovComposition& L, std::span<const double> theta, const Eigen::VectorXd& z) {
  return L.energy<double, double>(theta, z);
}

Eigen::VectorXd closed_loop_energy_grad(const LyapunovComposition& L, std::span<const double> theta,
                                        const Eigen::VectorXd& z) {
  return ad::grad([&](const auto& s) { return L.energy(theta, s); }, z);
}

std::string to_string(LossKind k) { return k == LossKind::Parameterized ? "parameterized" : "grid"; }

LossKind loss_kind_from_string(const std::string& s) {
  if (s == "parameterized") return LossKind::Parameterized;
  if (s == "grid") return LossKind::Grid;
  throw ConfigError("unknown loss kind '" + s + "' (expected parameterized or grid)");
}

void TrainProblem::validate() const {
  if (lyapunov.state_dim() != closed_loop.state_dim()) {
    throw StructuralError("train: Lyapunov function and closed loop have different state dimensions");
  }
  if (x_star.size() != closed_loop.plant_dim()) throw StructuralError("train: x* has the wrong dimension");
  if (static_cast<int>(xi_star.length) != closed_loop.controller_dim()) {
    throw StructuralError("train: xi* segment has the wrong dimension");
  }
  if (kind == LossKind::Parameterized && !(margin > 0.0)) throw ConfigError("train: margin a must be positive");
  if (kind == LossKind::Grid && !(margin >= 0.0)) throw ConfigError("train: grid margin must be nonnegative");
  if (kind == LossKind::Grid && grid.empty()) throw ConfigError("train: grid mode needs a nonempty grid");
  if (roa) {
    if (!(roa->gamma > 0.0)) throw ConfigError("train: ROA gamma must be positive");
    if (roa->samples.empty()) throw ConfigError("train: ROA needs at least one sample");
  }
  if (!(adam.step > 0.0) || adam.epochs < 1) throw ConfigError("train: step must be positive and epochs >= 1");
}

template <class P>
ad::VecX<P> desired_state(const TrainProblem& pb, std::span<const P> theta) {
  const auto xi = pb.xi_star.of(theta);
  ad::VecX<P> z(pb.x_star.size() + static_cast<Eigen::Index>(xi.size()));
  for (Eigen::Index i = 0; i < pb.x_star.size(); ++i) z(i) = P(pb.x_star(i));
  for (std::size_t i = 0; i < xi.size(); ++i) z(pb.x_star.size() + static_cast<Eigen::Index>(i)) = xi[i];
  return z;
}

template <class P>
P grid_residual(const TrainProblem& pb, std::span<const P> theta, bool mean) {
  P sum(0.0);
  if (!pb.lyapunov.has_casimir()) return sum;
  for (const auto& zi : pb.grid) {
    const ad::VecX<P> at = zi.template cast<P>();
    const ad::VecX<P> g = ad::grad([&](const auto& s) { return pb.lyapunov.casimir_value(theta, s); }, at);
    sum += casimir_residual<P>(g, pb.closed_loop.J()(zi) - pb.closed_loop.R()(zi));
  }
  if (mean) sum = sum * (1.0 / static_cast<double>(pb.grid.size()));
  return sum;
}

template <class P>
P roa_regularizer(const LyapunovComposition& L, std::span<const P> theta, const std::vector<Eigen::VectorXd>& samples,
                  double gamma) {
  if (!(gamma > 0.0) || samples.empty()) throw ConfigError("roa_regularizer: need gamma > 0 and N >= 1");
  P acc(0.0);
  for (const auto& z : samples) {
    const ad::VecX<P> s = z.template cast<P>();
    acc += z.squaredNorm() - gamma * L.value(theta, s);
  }
  return ad::relu(acc * (1.0 / static_cast<double>(samples.size())));
}

template <class P>
LossTerms<P> evaluate_loss(const TrainProblem& pb, std::span<const P> theta) {
  LossTerms<P> t;
  const ad::VecX<P> z_star = desired_state(pb, theta);
  const auto so = ad::second_order([&](const auto& s) { return pb.lyapunov.value(theta, s); }, z_star);
  t.grad_term = ad::norm(so.gradient);
  ad::MatX<P> shifted = so.hessian;
  for (Eigen::Index i = 0; i < shifted.rows(); ++i) shifted(i, i) = shifted(i, i) - pb.margin;
  t.hessian_term = ad::relu(-ad::min_eigenvalue(shifted));
  if (pb.kind == LossKind::Grid) t.grid_term = grid_residual(pb, theta, pb.grid_mean);
  if (pb.roa) t.roa_term = roa_regularizer(pb.lyapunov, theta, pb.roa->samples, pb.roa->gamma);
  t.total = t.grad_term + t.hessian_term + t.grid_term + t.roa_term;
  return t;
}

template ad::VecX<double> desired_state(const TrainProblem&, std::span<const double>);
template ad::VecX<ad::Var> desired_state(const TrainProblem&, std::span<const ad::Var>);
template double grid_residual(const TrainProblem&, std::span<const double>, bool);
template ad::Var grid_residual(const TrainProblem&, std::span<const ad::Var>, bool);
template double roa_regularizer(const LyapunovComposition&, std::span<const double>,
                                const std::vector<Eigen::VectorXd>&, double);
template ad::Var roa_regularizer(const LyapunovComposition&, std::span<const ad::Var>,
                                 const std::vector<Eigen::VectorXd>&, double);
template LossTerms<double> evaluate_loss(const TrainProblem&, std::span<const double>);
template LossTerms<ad::Var> evaluate_loss(const TrainProblem&, std::span<const ad::Var>);

double loss_parameterized(const TrainProblem& pb, std::span<const double> theta) {
  if (pb.kind != LossKind::Parameterized) throw StructuralError("loss_parameterized: problem is in grid mode");
  return evaluate_loss(pb, theta).total;
}

double loss_grid(const TrainProblem& pb, std::span<const double> theta) {
  if (pb.kind != LossKind::Grid) throw StructuralError("loss_grid: problem is in parameterized mode");
  return evaluate_loss(pb, theta).total;
}

namespace {

EpochRecord to_record(int epoch, const LossTerms<ad::Var>& t) {
  return {epoch, t.total.value(), t.grad_term.value(), t.hessian_term.value(), t.grid_term.value(),
          t.roa_term.value()};
}

EpochRecord to_record(int epoch, const LossTerms<double>& t) {
  return {epoch, t.total, t.grad_term, t.hessian_term, t.grid_term, t.roa_term};
}

std::string utc_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

bool finite(const Evaluation& e) { return std::isfinite(e.value.value) && e.value.gradient.allFinite(); }

}  // namespace

Evaluation evaluate_with_gradient(const TrainProblem& pb, std::span<const double> theta, ad::Tape& tape) {
  LossTerms<ad::Var> terms;
  auto pg = ad::param_grad(
      [&](std::span<const ad::Var> p) {
        terms = evaluate_loss(pb, p);
        return terms.total;
      },
      theta, tape);
  return {std::move(pg), to_record(0, terms)};
}

TrainingDiverged::TrainingDiverged(int epoch, std::vector<double> last_good, const std::string& detail)
    : NumericError("training diverged at epoch " + std::to_string(epoch) + ": " + detail),
      epoch_(epoch),
      last_good_(std::move(last_good)) {}

TrainReport adam_minimize(const Objective& objective, ParamVector& params, const AdamSettings& s) {
  TrainReport report;
  const std::size_t n = params.size();
  std::vector<double> m(n, 0.0), v(n, 0.0);
  std::vector<double> theta(params.values().begin(), params.values().end());
  std::vector<double> last_good = theta;
  double b1t = 1.0, b2t = 1.0;
  report.history.reserve(static_cast<std::size_t>(s.epochs));

  for (int epoch = 0; epoch < s.epochs; ++epoch) {
    Evaluation e;
    try {
      e = objective(theta);
    } catch (const NumericError& err) {
      params.assign(last_good);
      throw TrainingDiverged(epoch, last_good, err.what());
    }
    if (!finite(e)) {
      params.assign(last_good);
      throw TrainingDiverged(epoch, last_good, "non-finite loss or gradient");
    }
    last_good = theta;
    e.terms.epoch = epoch;
    report.history.push_back(e.terms);
    if (e.value.degenerate) ++report.degenerate_epochs;
    report.epochs_run = epoch + 1;
    if (s.early_stop && e.value.value <= *s.early_stop) break;

    b1t *= s.beta1;
    b2t *= s.beta2;
    for (std::size_t i = 0; i < n; ++i) {
      const double g = e.value.gradient(static_cast<Eigen::Index>(i));
      m[i] = s.beta1 * m[i] + (1.0 - s.beta1) * g;
      v[i] = s.beta2 * v[i] + (1.0 - s.beta2) * g * g;
      const double m_hat = m[i] / (1.0 - b1t);
      const double v_hat = v[i] / (1.0 - b2t);
      theta[i] -= s.step * m_hat / (std::sqrt(v_hat) + s.eps_hat);
    }
  }
  params.assign(theta);
  if (report.degenerate_epochs > 0) {
    report.warnings.push_back("lambda_min was nearly repeated at " + std::to_string(report.degenerate_epochs) +
                              " epoch(s); the eigenvector-outer-product derivative was used");
  }
  return report;
}

TrainReport adam_train(const TrainProblem& pb, ParamVector& params) {
  pb.validate();
  const LossTerms<double> start = evaluate_loss<double>(pb, params.values());
  if (!std::isfinite(start.total)) throw NumericError("adam_train: initial loss is not finite");

  ad::Tape tape;
  TrainReport report =
      adam_minimize([&](std::span<const double> theta) { return evaluate_with_gradient(pb, theta, tape); }, params,
                    pb.adam);
  const LossTerms<double> fin = evaluate_loss<double>(pb, params.values());
  report.loss_kind = to_string(pb.kind);
  report.margin = pb.margin;
  report.final_terms = to_record(report.epochs_run, fin);
  report.epsilon = fin.grad_term + fin.hessian_term;
  report.z_star = desired_state<double>(pb, params.values());
  report.xi_star = report.z_star.tail(pb.closed_loop.controller_dim());
  if (pb.margin > report.epsilon) report.bound = error_bound(report.epsilon, pb.margin);
  report.metadata["timestamp"] = utc_timestamp();
  return report;
}

double error_bound(double epsilon, double a) {
  if (!(epsilon >= 0.0) || !(a > epsilon)) {
    std::ostringstream msg;
    msg << "error bound undefined: need a > epsilon >= 0, got a = " << a << ", epsilon = " << epsilon;
    throw BoundUndefinedError(msg.str());
  }
  return epsilon / (a - epsilon);
}

Eigen::VectorXd find_minimum(const LyapunovComposition& L, std::span<const double> theta, const Eigen::VectorXd& start,
                             const MinimumSearchOptions& opt) {
  auto V = [&](const Eigen::VectorXd& z) { return lyapunov_value(L, theta, z); };
  Eigen::VectorXd z = start;
  for (int it = 0; it < opt.max_iterations; ++it) {
    const auto so = ad::second_order([&](const auto& s) { return L.value(theta, s); }, z);
    const Eigen::VectorXd& g = so.gradient;
    Eigen::LLT<Eigen::MatrixXd> llt(so.hessian);
    const bool pd = llt.info() == Eigen::Success && linalg::min_eigenvalue(so.hessian) > 0.0;
    if (g.norm() <= opt.gradient_tol && pd) return z;

    const Eigen::VectorXd dir = pd ? Eigen::VectorXd(-llt.solve(g)) : Eigen::VectorXd(-g);
    const double v0 = V(z);
    const double slope = g.dot(dir);
    double alpha = 1.0;
    Eigen::VectorXd next = z + dir;
    bool accepted = false;
    for (int k = 0; k < 60; ++k) {
      next = z + alpha * dir;
      const double v1 = V(next);
      // Close to the minimum V is flat to rounding; a full Newton step that
      // shrinks the gradient is accepted there.
      if (v1 <= v0 + 1e-4 * alpha * slope ||
          (pd && alpha == 1.0 && lyapunov_grad(L, theta, next).norm() < g.norm())) {
        accepted = true;
        break;
      }
      alpha *= 0.5;
    }
    if (!accepted) {
      if (pd && g.norm() <= 1e3 * opt.gradient_tol) return z;
      throw NumericError("find_minimum: line search failed at |grad| = " + std::to_string(g.norm()));
    }
    z = next;
    if ((z - start).norm() > opt.radius) {
      std::ostringstream msg;
      msg << "find_minimum: iterate left the trust radius " << opt.radius << " around the start (distance "
          << (z - start).norm() << ")";
      throw MinimumEscapedError(msg.str());
    }
  }
  throw NumericError("find_minimum: no convergence within " + std::to_string(opt.max_iterations) + " iterations");
}

namespace {

nlohmann::json vector_json(const Eigen::VectorXd& v) {
  nlohmann::json a = nlohmann::json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v(i));
  return a;
}

Eigen::VectorXd vector_from_json(const nlohmann::json& a) {
  Eigen::VectorXd v(static_cast<Eigen::Index>(a.size()));
  for (std::size_t i = 0; i < a.size(); ++i) v(static_cast<Eigen::Index>(i)) = a[i].get<double>();
  return v;
}

nlohmann::json record_json(const EpochRecord& r) {
  return {{"epoch", r.epoch},         {"total", r.total},         {"grad_term", r.grad_term},
          {"hessian_term", r.hessian_term}, {"grid_term", r.grid_term}, {"roa_term", r.roa_term}};
}

EpochRecord record_from_json(const nlohmann::json& j) {
  return {j.at("epoch").get<int>(),        j.at("total").get<double>(),     j.at("grad_term").get<double>(),
          j.at("hessian_term").get<double>(), j.at("grid_term").get<double>(), j.at("roa_term").get<double>()};
}

}  // namespace

nlohmann::json report_to_json(const TrainReport& r) {
  nlohmann::json history = nlohmann::json::array();
  for (const auto& h : r.history) history.push_back(record_json(h));
  return {{"loss_kind", r.loss_kind},
          {"margin", r.margin},
          {"epsilon", r.epsilon},
          {"bound", r.bound ? nlohmann::json(*r.bound) : nlohmann::json(nullptr)},
          {"xi_star", vector_json(r.xi_star)},
          {"z_star", vector_json(r.z_star)},
          {"final_terms", record_json(r.final_terms)},
          {"epochs_run", r.epochs_run},
          {"degenerate_epochs", r.degenerate_epochs},
          {"warnings", r.warnings},
          {"history", history},
          {"metadata", r.metadata}};
}

TrainReport report_from_json(const nlohmann::json& j) {
  TrainReport r;
  r.loss_kind = j.at("loss_kind").get<std::string>();
  r.margin = j.at("margin").get<double>();
  r.epsilon = j.at("epsilon").get<double>();
  if (!j.at("bound").is_null()) r.bound = j.at("bound").get<double>();
  r.xi_star = vector_from_json(j.at("xi_star"));
  r.z_star = vector_from_json(j.at("z_star"));
  r.final_terms = record_from_json(j.at("final_terms"));
  r.epochs_run = j.at("epochs_run").get<int>();
  r.degenerate_epochs = j.at("degenerate_epochs").get<int>();
  r.warnings = j.at("warnings").get<std::vector<std::string>>();
  for (const auto& h : j.at("history")) r.history.push_back(record_from_json(h));
  if (j.contains("metadata")) r.metadata = j.at("metadata");
  return r;
}

void write_loss_csv(const std::filesystem::path& path, const TrainReport& r) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << "epoch,total,grad_term,hessian_term,grid_term,roa_term\n";
  for (const auto& h : r.history) {
    out << h.epoch << ',' << format_double(h.total) << ',' << format_double(h.grad_term) << ','
        << format_double(h.hessian_term) << ',' << format_double(h.grid_term) << ',' << format_double(h.roa_term)
        << '\n';
  }
}

}  // namespace necc
