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

#include "necc/neural.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <system_error>

#include "necc/random.hpp"

namespace necc {

std::string to_string(Activation a) { return a == Activation::Tanh ? "tanh" : "linear"; }

Activation activation_from_string(const std::string& name) {
  if (name == "tanh") return Activation::Tanh;
  if (name == "linear") return Activation::Linear;
  throw StructuralError("unknown activation '" + name + "'");
}

Mlp::Mlp(std::vector<int> widths, Activation activation, std::uint64_t seed)
    : widths_(std::move(widths)), activation_(activation), seed_(seed) {
  if (widths_.size() < 2) throw StructuralError("Mlp: need at least input and output widths");
  for (int w : widths_)
    if (w < 1) throw StructuralError("Mlp: every width must be >= 1");
  if (widths_.back() != 1) {
    throw StructuralError("Mlp: networks are scalar-valued, final width must be 1 (got " +
                          std::to_string(widths_.back()) + ")");
  }
  for (std::size_t l = 0; l + 1 < widths_.size(); ++l)
    parameter_count_ += static_cast<std::size_t>(widths_[l] + 1) * static_cast<std::size_t>(widths_[l + 1]);
}

std::string to_string(Init i) { return i == Init::GlorotUniform ? "glorot_uniform" : "torch_uniform"; }

Init init_from_string(const std::string& name) {
  if (name == "glorot_uniform") return Init::GlorotUniform;
  if (name == "torch_uniform") return Init::TorchUniform;
  throw StructuralError("unknown initialization '" + name + "' (expected glorot_uniform or torch_uniform)");
}

std::vector<double> Mlp::initial_parameters(Init scheme) const {
  Xoshiro256 rng(seed_);
  std::vector<double> theta;
  theta.reserve(parameter_count_);
  for (std::size_t l = 0; l + 1 < widths_.size(); ++l) {
    const int in = widths_[l];
    const int out = widths_[l + 1];
    if (scheme == Init::GlorotUniform) {
      const double limit = std::sqrt(6.0 / static_cast<double>(in + out));
      for (int k = 0; k < in * out; ++k) theta.push_back(rng.uniform(-limit, limit));
      for (int k = 0; k < out; ++k) theta.push_back(0.0);
    } else {
      const double limit = 1.0 / std::sqrt(static_cast<double>(in));
      for (int k = 0; k < in * out + out; ++k) theta.push_back(rng.uniform(-limit, limit));
    }
  }
  return theta;
}

void Mlp::check(std::size_t theta_size, std::size_t input_size) const {
  if (theta_size != parameter_count_) {
    throw StructuralError("Mlp: expected " + std::to_string(parameter_count_) + " parameters, got " +
                          std::to_string(theta_size));
  }
  if (input_size != static_cast<std::size_t>(widths_.front())) {
    throw StructuralError("Mlp: expected input of size " + std::to_string(widths_.front()) +
                          ", got " + std::to_string(input_size));
  }
}

NetworkSlot mlp_new(ParamVector& params, std::string name, std::vector<int> widths,
                    Activation activation, std::uint64_t seed, Init init) {
  Mlp net(std::move(widths), activation, seed);
  ParamSegment seg = params.add(std::move(name), net.initial_parameters(init));
  return {std::move(net), std::move(seg)};
}

Eigen::VectorXd mlp_input_grad(const Mlp& net, std::span<const double> theta,
                               const Eigen::VectorXd& input) {
  return ad::grad([&](const auto& x) { return net.forward(theta, x); }, input);
}

Eigen::MatrixXd mlp_input_hessian(const Mlp& net, std::span<const double> theta,
                                  const Eigen::VectorXd& input) {
  return ad::hessian([&](const auto& x) { return net.forward(theta, x); }, input);
}

std::string format_double(double x) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), x);
  if (ec != std::errc()) throw NumericError("format_double failed");
  return std::string(buf, end);
}

double parse_double(const std::string& s) {
  double x = 0.0;
  auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), x);
  if (ec != std::errc() || end != s.data() + s.size()) {
    throw StructuralError("not a decimal number: '" + s + "'");
  }
  return x;
}

nlohmann::json network_to_json(const Mlp& net, std::span<const double> params) {
  if (params.size() != net.parameter_count()) throw StructuralError("network_to_json: parameter count mismatch");
  nlohmann::json j;
  j["widths"] = net.widths();
  j["activation"] = to_string(net.activation());
  j["seed"] = net.seed();
  auto& arr = j["params"] = nlohmann::json::array();
  for (double p : params) arr.push_back(format_double(p));
  return j;
}

NetworkModel network_from_json(const nlohmann::json& j) {
  try {
    Mlp net(j.at("widths").get<std::vector<int>>(),
            activation_from_string(j.at("activation").get<std::string>()),
            j.at("seed").get<std::uint64_t>());
    std::vector<double> params;
    for (const auto& p : j.at("params")) params.push_back(parse_double(p.get<std::string>()));
    if (params.size() != net.parameter_count()) {
      throw StructuralError("model file: expected " + std::to_string(net.parameter_count()) +
                            " params, found " + std::to_string(params.size()));
    }
    return {std::move(net), std::move(params)};
  } catch (const nlohmann::json::exception& e) {
    throw StructuralError(std::string("model file: ") + e.what());
  }
}

void save_network(const std::filesystem::path& path, const Mlp& net, std::span<const double> params) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << network_to_json(net, params).dump(2) << '\n';
}

NetworkModel load_network(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw StructuralError("cannot read " + path.string());
  try {
    return network_from_json(nlohmann::json::parse(in));
  } catch (const nlohmann::json::parse_error& e) {
    throw StructuralError(path.string() + ": " + e.what());
  }
}

}  // namespace necc
