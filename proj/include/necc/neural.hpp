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

#ifndef NECC_NEURAL_HPP
#define NECC_NEURAL_HPP

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <json.hpp>

#include "necc/ad/derivatives.hpp"
#include "necc/ad/functions.hpp"
#include "necc/ad/param_vector.hpp"
#include "necc/errors.hpp"

namespace necc {

enum class Activation { Tanh, Linear };

std::string to_string(Activation a);
Activation activation_from_string(const std::string& name);

/// Initialization schemes. GlorotUniform: weights U(-sqrt(6/(fan_in+fan_out)), +...),
/// zero biases. TorchUniform: weights and biases U(-1/sqrt(fan_in), +1/sqrt(fan_in)),
/// the default of torch.nn.Linear.
enum class Init { GlorotUniform, TorchUniform };

std::string to_string(Init i);
Init init_from_string(const std::string& name);

/**
 * @brief Scalar-valued multilayer perceptron.
 *
 * Layers are affine maps with the activation applied after every layer but
 * the last. The parameters are not owned: they are read from a span laid out
 * layer by layer as the row-major weight matrix (out x in) followed by the
 * bias vector (out).
 */
class Mlp {
 public:
  /// Throws StructuralError unless there are at least two widths, all >= 1,
  /// and the last width is 1.
  explicit Mlp(std::vector<int> widths, Activation activation = Activation::Tanh,
               std::uint64_t seed = 0);

  const std::vector<int>& widths() const { return widths_; }
  int input_dim() const { return widths_.front(); }
  Activation activation() const { return activation_; }
  std::uint64_t seed() const { return seed_; }
  std::size_t parameter_count() const { return parameter_count_; }

  /// Drawn layer by layer in storage order from Xoshiro256(seed).
  std::vector<double> initial_parameters(Init scheme = Init::GlorotUniform) const;

  template <class P, class S>
  S forward(std::span<const P> theta, std::span<const S> input) const;

  template <class P, class S>
  S forward(std::span<const P> theta, const ad::VecX<S>& input) const {
    return forward<P, S>(theta, std::span<const S>(input.data(), static_cast<std::size_t>(input.size())));
  }

  /// Convenience for one-input networks.
  template <class P, class S>
  S forward_scalar(std::span<const P> theta, const S& x) const {
    return forward<P, S>(theta, std::span<const S>(&x, 1));
  }

 private:
  template <class S>
  S activate(const S& x) const {
    return activation_ == Activation::Tanh ? ad::tanh(x) : x;
  }

  void check(std::size_t theta_size, std::size_t input_size) const;

  std::vector<int> widths_;
  Activation activation_;
  std::uint64_t seed_;
  std::size_t parameter_count_ = 0;
};

template <class P, class S>
S Mlp::forward(std::span<const P> theta, std::span<const S> input) const {
  check(theta.size(), input.size());
  std::vector<S> act(input.begin(), input.end());
  std::vector<S> next;
  std::size_t offset = 0;
  const std::size_t layers = widths_.size() - 1;
  for (std::size_t l = 0; l < layers; ++l) {
    const auto in = static_cast<std::size_t>(widths_[l]);
    const auto out = static_cast<std::size_t>(widths_[l + 1]);
    const std::size_t bias = offset + in * out;
    next.resize(out);
    for (std::size_t o = 0; o < out; ++o) {
      S acc(theta[bias + o]);
      for (std::size_t i = 0; i < in; ++i) acc += act[i] * theta[offset + o * in + i];
      next[o] = (l + 1 == layers) ? acc : activate(acc);
    }
    offset = bias + out;
    act.swap(next);
  }
  return act.front();
}

/// An Mlp bound to its segment of a ParamVector.
struct NetworkSlot {
  Mlp net;
  ParamSegment segment;

  template <class P, class S>
  S operator()(std::span<const P> all, const ad::VecX<S>& input) const {
    return net.forward<P, S>(segment.of(all), input);
  }
  template <class P, class S>
  S scalar(std::span<const P> all, const S& x) const {
    return net.forward_scalar<P, S>(segment.of(all), x);
  }
};

/// Creates a network and registers its initial parameters under `name`.
NetworkSlot mlp_new(ParamVector& params, std::string name, std::vector<int> widths,
                    Activation activation, std::uint64_t seed, Init init = Init::GlorotUniform);

Eigen::VectorXd mlp_input_grad(const Mlp& net, std::span<const double> theta,
                               const Eigen::VectorXd& input);
Eigen::MatrixXd mlp_input_hessian(const Mlp& net, std::span<const double> theta,
                                  const Eigen::VectorXd& input);

/// A network together with concrete parameter values (the model file unit).
struct NetworkModel {
  Mlp net;
  std::vector<double> params;
};

/// {"widths": [...], "activation": "tanh", "seed": N, "params": ["<decimal>", ...]}
/// Parameters are shortest round-trip decimal strings, so a reload is bit-exact.
nlohmann::json network_to_json(const Mlp& net, std::span<const double> params);
NetworkModel network_from_json(const nlohmann::json& j);
void save_network(const std::filesystem::path& path, const Mlp& net, std::span<const double> params);
NetworkModel load_network(const std::filesystem::path& path);

std::string format_double(double x);
double parse_double(const std::string& s);

}  // namespace necc

#endif  // NECC_NEURAL_HPP
