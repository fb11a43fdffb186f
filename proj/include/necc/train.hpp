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

#ifndef NECC_TRAIN_HPP
#define NECC_TRAIN_HPP

#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Core>
#include <json.hpp>

#include "necc/casimir.hpp"
#include "necc/neural.hpp"
#include "necc/phs.hpp"

namespace necc {

enum class CompositionMode { FixedSum, NeuralPhi };

/**
 * @brief V(z) = H(x) + H_c(xi) + C(z), or Phi(H + H_c, C) with a two-input network.
 *
 * The controller energy is a network over xi, a fixed function, or absent
 * (zero). The Casimir term is absent, the kernel parameterization, a free
 * network over z (grid mode), or a fixed function of z.
 */
struct LyapunovComposition {
  using ControllerTerm = std::variant<std::monostate, NetworkSlot, std::shared_ptr<const Hamiltonian>>;
  using CasimirTerm =
      std::variant<std::monostate, CasimirParameterization, NetworkSlot, std::shared_ptr<const Hamiltonian>>;

  int plant_dim = 0;
  int controller_dim = 0;
  std::shared_ptr<const Hamiltonian> plant;  ///< null means H = 0
  ControllerTerm controller;
  CasimirTerm casimir;
  std::optional<NetworkSlot> phi;  ///< present iff mode() == NeuralPhi

  CompositionMode mode() const { return phi ? CompositionMode::NeuralPhi : CompositionMode::FixedSum; }
  int state_dim() const { return plant_dim + controller_dim; }
  bool has_casimir() const { return !std::holds_alternative<std::monostate>(casimir); }

  template <class P, class S>
  S energy(std::span<const P> theta, const ad::VecX<S>& z) const;  ///< H + H_c
  template <class P, class S>
  S casimir_value(std::span<const P> theta, const ad::VecX<S>& z) const;
  template <class P, class S>
  S value(std::span<const P> theta, const ad::VecX<S>& z) const;
};

double lyapunov_value(const LyapunovComposition& L, std::span<const double> theta, const Eigen::VectorXd& z);
Eigen::VectorXd lyapunov_grad(const LyapunovComposition& L, std::span<const double> theta, const Eigen::VectorXd& z);
Eigen::MatrixXd lyapunov_hessian(const LyapunovComposition& L, std::span<const double> theta,
                                 const Eigen::VectorXd& z);
/// (H + H_c)(z), the closed-loop Hamiltonian.
double closed_loop_energy(const LyapunovComposition& L, std::span<const double> theta, const Eigen::VectorXd& z);
Eigen::VectorXd closed_loop_energy_grad(const LyapunovComposition& L, std::span<const double> theta,
                                        const Eigen::VectorXd& z);

enum class LossKind { Parameterized, Grid };
std::string to_string(LossKind k);
LossKind loss_kind_from_string(const std::string& s);

struct AdamSettings {
  double step = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps_hat = 1e-8;
  int epochs = 2000;
  std::optional<double> early_stop;  ///< stop once the total loss is at most this
};

struct RoaSettings {
  double gamma = 1.0;
  std::vector<Eigen::VectorXd> samples;
};

struct TrainProblem {
  TrainProblem(ClosedLoopSystem cl, LyapunovComposition L, Eigen::VectorXd x, ParamSegment xi)
      : closed_loop(std::move(cl)), lyapunov(std::move(L)), x_star(std::move(x)), xi_star(std::move(xi)) {}

  ClosedLoopSystem closed_loop;
  LyapunovComposition lyapunov;
  Eigen::VectorXd x_star;
  ParamSegment xi_star;  ///< trainable controller equilibrium inside the ParamVector
  double margin = 0.5;
  LossKind kind = LossKind::Parameterized;
  std::vector<Eigen::VectorXd> grid;
  bool grid_mean = false;  ///< average the grid term instead of summing it
  std::optional<RoaSettings> roa;
  AdamSettings adam;

  /// Throws ConfigError/StructuralError on violated invariants.
  void validate() const;
};

template <class P>
struct LossTerms {
  P total{0.0};
  P grad_term{0.0};     ///< |dV/dz| at z*
  P hessian_term{0.0};  ///< ReLU(-lambda_min(d2V/dz2 at z* - a I))
  P grid_term{0.0};
  P roa_term{0.0};
};

/// z* = (x*, xi*) with xi* read from the parameters.
template <class P>
ad::VecX<P> desired_state(const TrainProblem& pb, std::span<const P> theta);

/// Terms of the configured loss (parameterized or grid, plus the ROA term when enabled).
template <class P>
LossTerms<P> evaluate_loss(const TrainProblem& pb, std::span<const P> theta);
extern template LossTerms<double> evaluate_loss(const TrainProblem&, std::span<const double>);
extern template LossTerms<ad::Var> evaluate_loss(const TrainProblem&, std::span<const ad::Var>);

double loss_parameterized(const TrainProblem& pb, std::span<const double> theta);
double loss_grid(const TrainProblem& pb, std::span<const double> theta);

/// Grid term only: sum (or mean) over the grid of the Casimir residual.
template <class P>
P grid_residual(const TrainProblem& pb, std::span<const P> theta, bool mean);

/// ReLU(mean_i(|z_i|^2 - gamma V(z_i))).
template <class P>
P roa_regularizer(const LyapunovComposition& L, std::span<const P> theta, const std::vector<Eigen::VectorXd>& samples,
                  double gamma);

struct EpochRecord {
  int epoch = 0;
  double total = 0.0;
  double grad_term = 0.0;
  double hessian_term = 0.0;
  double grid_term = 0.0;
  double roa_term = 0.0;
};

struct TrainReport {
  std::string loss_kind;
  double margin = 0.0;
  std::vector<EpochRecord> history;  ///< terms at the parameters each update started from
  int epochs_run = 0;
  EpochRecord final_terms;  ///< recomputed at the final parameters
  double epsilon = 0.0;     ///< grad_term + hessian_term at the final parameters
  Eigen::VectorXd xi_star;
  Eigen::VectorXd z_star;
  std::optional<double> bound;  ///< epsilon / (margin - epsilon) when margin > epsilon
  int degenerate_epochs = 0;
  std::vector<std::string> warnings;
  nlohmann::json metadata = nlohmann::json::object();  ///< run-specific data such as timestamps
};

nlohmann::json report_to_json(const TrainReport& r);
TrainReport report_from_json(const nlohmann::json& j);
/// Columns epoch,total,grad_term,hessian_term,grid_term,roa_term.
void write_loss_csv(const std::filesystem::path& path, const TrainReport& r);

/// Thrown when the loss turns non-finite; carries the last parameters with a finite loss.
class TrainingDiverged : public NumericError {
 public:
  TrainingDiverged(int epoch, std::vector<double> last_good, const std::string& detail);
  int epoch() const { return epoch_; }
  const std::vector<double>& last_good() const { return last_good_; }

 private:
  int epoch_;
  std::vector<double> last_good_;
};

/// Loss value, gradient and terms at one parameter vector.
struct Evaluation {
  ad::ParamGradient value;
  EpochRecord terms;
};
using Objective = std::function<Evaluation(std::span<const double>)>;

/// Adam with bias correction. One epoch is one objective evaluation and one update.
TrainReport adam_minimize(const Objective& objective, ParamVector& params, const AdamSettings& settings);

/// Trains the problem's networks and xi* in place.
TrainReport adam_train(const TrainProblem& pb, ParamVector& params);

/// The gradient of the configured loss at `theta` (reverse mode).
Evaluation evaluate_with_gradient(const TrainProblem& pb, std::span<const double> theta, ad::Tape& tape);

class BoundUndefinedError : public NumericError {
 public:
  using NumericError::NumericError;
};

/// epsilon / (a - epsilon); throws BoundUndefinedError unless a > epsilon >= 0.
double error_bound(double epsilon, double a);

class MinimumEscapedError : public NumericError {
 public:
  using NumericError::NumericError;
};

struct MinimumSearchOptions {
  double radius = 1.0;
  double gradient_tol = 1e-10;
  int max_iterations = 500;
};

/// Newton iteration with backtracking from `start`; gradient steps where the
/// Hessian is not positive definite. Throws MinimumEscapedError when the
/// iterate leaves the ball of `radius` around `start`.
Eigen::VectorXd find_minimum(const LyapunovComposition& L, std::span<const double> theta, const Eigen::VectorXd& start,
                             const MinimumSearchOptions& options = {});

// ---------------------------------------------------------------------------

template <class P, class S>
S LyapunovComposition::energy(std::span<const P> theta, const ad::VecX<S>& z) const {
  if (z.size() != state_dim()) throw StructuralError("Lyapunov function: state dimension mismatch");
  S e(0.0);
  if (plant) e += (*plant)(ad::VecX<S>(z.head(plant_dim)));
  const ad::VecX<S> xi = z.tail(controller_dim);
  if (const auto* net = std::get_if<NetworkSlot>(&controller)) {
    e += (*net)(theta, xi);
  } else if (const auto* fixed = std::get_if<std::shared_ptr<const Hamiltonian>>(&controller)) {
    e += (**fixed)(xi);
  }
  return e;
}

template <class P, class S>
S LyapunovComposition::casimir_value(std::span<const P> theta, const ad::VecX<S>& z) const {
  if (const auto* param = std::get_if<CasimirParameterization>(&casimir)) return (*param)(theta, z);
  if (const auto* net = std::get_if<NetworkSlot>(&casimir)) return (*net)(theta, z);
  if (const auto* fixed = std::get_if<std::shared_ptr<const Hamiltonian>>(&casimir)) return (**fixed)(z);
  return S(0.0);
}

template <class P, class S>
S LyapunovComposition::value(std::span<const P> theta, const ad::VecX<S>& z) const {
  if (phi) {
    ad::VecX<S> in(2);
    in(0) = energy(theta, z);
    in(1) = casimir_value(theta, z);
    return (*phi)(theta, in);
  }
  return energy(theta, z) + casimir_value(theta, z);
}

}  // namespace necc

#endif  // NECC_TRAIN_HPP
