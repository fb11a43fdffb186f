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

#include "necc/bench.hpp"

#include <cmath>
#include <fstream>
#include <numbers>
#include <set>
#include <sstream>

#include "necc/linalg.hpp"

namespace necc {

PortHamiltonianSystem pendulum_system() {
  Eigen::MatrixXd J(2, 2);
  J << 0, 1, -1, 0;
  Eigen::MatrixXd G(2, 1);
  G << 0, 1;
  return {J, Eigen::MatrixXd(Eigen::MatrixXd::Zero(2, 2)), G, std::make_shared<PendulumHamiltonian>(), Box::uniform(2, -2.0, 2.0)};
}

PortHamiltonianSystem mass_spring_damper_system() {
  Eigen::MatrixXd J(2, 2);
  J << 0, 1, -1, 0;
  Eigen::MatrixXd R = Eigen::MatrixXd::Zero(2, 2);
  R(1, 1) = 0.5;
  Eigen::MatrixXd G(2, 1);
  G << 0, 1;
  return {J, R, G, std::make_shared<QuadraticHamiltonian>(Eigen::MatrixXd::Identity(2, 2)),
          Box::uniform(2, -2.0, 2.0)};
}

PortHamiltonianSystem integrator_controller(std::shared_ptr<const Hamiltonian> hamiltonian, int ports) {
  if (ports < 1) throw StructuralError("integrator_controller: need at least one port");
  const Eigen::MatrixXd zero = Eigen::MatrixXd::Zero(ports, ports);
  return {zero, zero, Eigen::MatrixXd(Eigen::MatrixXd::Identity(ports, ports)), std::move(hamiltonian), Box::uniform(ports, -2.0, 2.0)};
}

StationarityResidual stationarity_residual(double dK, double d2K, double dHc, double d2Hc, double q_star) {
  StationarityResidual s;
  s.r1 = std::sin(q_star) + dK;
  s.r2 = -dK + dHc;
  s.M << std::cos(q_star) + d2K, 0.0, -d2K, 0.0, 1.0, 0.0, -d2K, 0.0, d2K + d2Hc;
  s.min_eig = linalg::min_eigenvalue(s.M);
  return s;
}

StationarityResidual stationarity_residual(const LyapunovComposition& L, std::span<const double> theta,
                                           double xi_star, double q_star) {
  if (L.plant_dim != 2 || L.controller_dim != 1) {
    throw StructuralError("stationarity_residual: needs the pendulum closed loop (n = 2, n_c = 1)");
  }
  // C(s, 0, 0) = K_tilde(s) when C depends on z only through q - xi.
  const auto casimir_along = [&](const ad::Dual2& s) {
    ad::VecX<ad::Dual2> z(3);
    z << s, ad::Dual2(0.0), ad::Dual2(0.0);
    return L.casimir_value(theta, z);
  };
  const auto controller_along = [&](const ad::Dual2& xi) {
    ad::VecX<ad::Dual2> z(3);
    z << ad::Dual2(0.0), ad::Dual2(0.0), xi;
    return L.energy(theta, z);
  };
  const auto seed = [](double x) { return ad::Dual2(ad::Dual1(x, 1.0), ad::Dual1(1.0, 0.0)); };
  const ad::Dual2 k = casimir_along(seed(q_star - xi_star));
  const ad::Dual2 h = controller_along(seed(xi_star));
  return stationarity_residual(k.v.d, k.d.d, h.v.d, h.d.d, q_star);
}

// Configuration --------------------------------------------------------------

namespace {

/// Reads an object while tracking which keys were consumed.
class Fields {
 public:
  Fields(const nlohmann::json& j, std::string where) : j_(j), where_(std::move(where)) {
    if (!j_.is_object()) throw ConfigError(where_ + ": expected an object");
  }

  bool has(const std::string& key) {
    used_.insert(key);
    return j_.contains(key) && !j_.at(key).is_null();
  }

  const nlohmann::json& at(const std::string& key) {
    used_.insert(key);
    if (!j_.contains(key)) throw ConfigError(where_ + ": missing field '" + key + "'");
    return j_.at(key);
  }

  template <class T>
  void read(const std::string& key, T& out) {
    if (!has(key)) return;
    try {
      out = j_.at(key).get<T>();
    } catch (const nlohmann::json::exception& e) {
      throw ConfigError(where_ + "." + key + ": " + e.what());
    }
  }

  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it) {
      if (!used_.count(it.key())) throw ConfigError(where_ + ": unknown field '" + it.key() + "'");
    }
  }

 private:
  const nlohmann::json& j_;
  std::string where_;
  std::set<std::string> used_;
};

nlohmann::json matrix_json(const Eigen::MatrixXd& M) {
  nlohmann::json rows = nlohmann::json::array();
  for (Eigen::Index i = 0; i < M.rows(); ++i) {
    nlohmann::json row = nlohmann::json::array();
    for (Eigen::Index j = 0; j < M.cols(); ++j) row.push_back(M(i, j));
    rows.push_back(row);
  }
  return rows;
}

Eigen::MatrixXd matrix_from_json(const nlohmann::json& j, const std::string& where) {
  if (j.is_number()) return Eigen::MatrixXd::Constant(1, 1, j.get<double>());
  if (!j.is_array() || j.empty()) throw ConfigError(where + ": expected a nonempty matrix (array of rows)");
  const std::size_t cols = j.front().is_array() ? j.front().size() : 0;
  Eigen::MatrixXd M(static_cast<Eigen::Index>(j.size()), static_cast<Eigen::Index>(cols));
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (!j[i].is_array() || j[i].size() != cols) throw ConfigError(where + ": rows must have equal length");
    for (std::size_t k = 0; k < cols; ++k) {
      if (!j[i][k].is_number()) throw ConfigError(where + ": entries must be numbers");
      M(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = j[i][k].get<double>();
    }
  }
  return M;
}

Eigen::VectorXd vector_from(const nlohmann::json& j, const std::string& where) {
  if (!j.is_array()) throw ConfigError(where + ": expected an array of numbers");
  Eigen::VectorXd v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (!j[i].is_number()) throw ConfigError(where + ": entries must be numbers");
    v(static_cast<Eigen::Index>(i)) = j[i].get<double>();
  }
  return v;
}

nlohmann::json vector_json(const Eigen::VectorXd& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

void check_widths(const std::vector<int>& w, const std::string& name, bool allow_empty) {
  if (w.empty() && allow_empty) return;
  if (w.size() < 2) throw ConfigError(name + ": need at least input and output widths");
  for (int x : w) {
    if (x < 1) throw ConfigError(name + ": widths must be >= 1");
  }
  if (w.back() != 1) throw ConfigError(name + ": output width must be 1");
}

}  // namespace

void ExperimentConfig::validate() const {
  if (schema_version != kConfigSchemaVersion) {
    throw ConfigError("schema_version " + std::to_string(schema_version) + " is not supported (expected " +
                      std::to_string(kConfigSchemaVersion) + ")");
  }
  if (!(margin > 0.0)) throw ConfigError("loss.margin must be > 0");
  if (!(grid_margin >= 0.0)) throw ConfigError("loss.grid_margin must be >= 0");
  if (grid_points < 1) throw ConfigError("loss.grid_points must be >= 1");
  if (!(grid_lower < grid_upper)) throw ConfigError("loss.grid_box must have lower < upper");
  check_widths(controller_widths, "networks.controller", false);
  check_widths(casimir_widths, "networks.casimir_outer", false);
  check_widths(casimir_inner_widths, "networks.casimir_inner", true);
  check_widths(phi_widths, "networks.phi", true);
  check_widths(grid_casimir_widths, "networks.grid_casimir", false);
  if (casimir_widths.front() != 1) throw ConfigError("networks.casimir_outer: input width must be 1");
  if (!casimir_inner_widths.empty() && casimir_inner_widths.front() != 1) {
    throw ConfigError("networks.casimir_inner: input width must be 1");
  }
  if (!phi_widths.empty() && phi_widths.front() != 2) throw ConfigError("networks.phi: input width must be 2");
  if (!(optimizer.step > 0.0)) throw ConfigError("optimizer.step must be > 0");
  if (!(optimizer.beta1 >= 0.0 && optimizer.beta1 < 1.0) || !(optimizer.beta2 >= 0.0 && optimizer.beta2 < 1.0)) {
    throw ConfigError("optimizer.beta1 and optimizer.beta2 must lie in [0, 1)");
  }
  if (!(optimizer.eps_hat > 0.0)) throw ConfigError("optimizer.eps_hat must be > 0");
  if (optimizer.epochs < 1) throw ConfigError("optimizer.epochs must be >= 1");
  if (roa) {
    if (!(roa->gamma > 0.0)) throw ConfigError("roa.gamma must be > 0");
    if (roa->samples < 1) throw ConfigError("roa.samples must be >= 1");
    if (!(roa->lower < roa->upper)) throw ConfigError("roa box must have lower < upper");
  }
  if (!(simulation.dt > 0.0)) throw ConfigError("simulation.dt must be > 0");
  if (!(simulation.T >= simulation.dt)) throw ConfigError("simulation.T must be >= dt");
  if (simulation.trajectories < 0) throw ConfigError("simulation.trajectories must be >= 0");
  if (!(simulation.lower < simulation.upper)) throw ConfigError("simulation box must have lower < upper");
  if (!(simulation.tol > 0.0)) throw ConfigError("simulation.tol must be > 0");
  if (!(simulation.tail_fraction > 0.0 && simulation.tail_fraction <= 1.0)) {
    throw ConfigError("simulation.tail_fraction must lie in (0, 1]");
  }
  for (double a : sweep) {
    if (!(a > 0.0)) throw ConfigError("sweep values must be > 0");
  }
  if (surface.width < 2 || surface.height < 2) throw ConfigError("surface grid must be at least 2x2");
  if (!(surface.lower < surface.upper)) throw ConfigError("surface box must have lower < upper");
  try {
    DampingGains(D, D_c);
  } catch (const StructuralError& e) {
    throw ConfigError(std::string("gains: ") + e.what());
  }
}

nlohmann::json config_to_json(const ExperimentConfig& c) {
  nlohmann::json j;
  j["schema_version"] = c.schema_version;
  j["system"] = c.system;
  j["target"] = vector_json(c.target);
  j["seed"] = c.seed;
  j["loss"] = {{"kind", to_string(c.loss)},
               {"margin", c.margin},
               {"grid_margin", c.grid_margin},
               {"grid_points", c.grid_points},
               {"grid_box", {c.grid_lower, c.grid_upper}},
               {"grid_mean", c.grid_mean}};
  j["networks"] = {{"controller", c.controller_widths},
                   {"casimir_outer", c.casimir_widths},
                   {"casimir_inner", c.casimir_inner_widths},
                   {"phi", c.phi_widths},
                   {"grid_casimir", c.grid_casimir_widths},
                   {"activation", to_string(c.activation)},
                   {"init", to_string(c.init)}};
  j["xi_init"] = c.xi_init;
  j["optimizer"] = {{"step", c.optimizer.step},       {"beta1", c.optimizer.beta1},
                    {"beta2", c.optimizer.beta2},     {"eps_hat", c.optimizer.eps_hat},
                    {"epochs", c.optimizer.epochs},
                    {"early_stop", c.optimizer.early_stop ? nlohmann::json(*c.optimizer.early_stop) : nullptr}};
  j["roa"] = c.roa ? nlohmann::json{{"gamma", c.roa->gamma},
                                    {"samples", c.roa->samples},
                                    {"box", {c.roa->lower, c.roa->upper}}}
                   : nlohmann::json(nullptr);
  j["gains"] = {{"D", matrix_json(c.D)}, {"D_c", matrix_json(c.D_c)}};
  j["simulation"] = {{"dt", c.simulation.dt},
                     {"T", c.simulation.T},
                     {"trajectories", c.simulation.trajectories},
                     {"box", {c.simulation.lower, c.simulation.upper}},
                     {"tol", c.simulation.tol},
                     {"tail_fraction", c.simulation.tail_fraction}};
  j["sweep"] = c.sweep;
  j["surface"] = {{"grid", {c.surface.width, c.surface.height}}, {"box", {c.surface.lower, c.surface.upper}}};
  j["output_dir"] = c.output_dir;
  return j;
}

namespace {

void read_box(Fields& f, const std::string& key, double& lo, double& hi, const std::string& where) {
  if (!f.has(key)) return;
  const auto& b = f.at(key);
  if (!b.is_array() || b.size() != 2 || !b[0].is_number() || !b[1].is_number()) {
    throw ConfigError(where + "." + key + ": expected [lower, upper]");
  }
  lo = b[0].get<double>();
  hi = b[1].get<double>();
}

}  // namespace

ExperimentConfig config_from_json(const nlohmann::json& j) {
  ExperimentConfig c;
  Fields top(j, "config");
  top.read("schema_version", c.schema_version);
  if (top.has("system")) c.system = top.at("system");
  if (top.has("target")) c.target = vector_from(top.at("target"), "target");
  top.read("seed", c.seed);
  if (top.has("loss")) {
    Fields f(top.at("loss"), "loss");
    std::string kind = to_string(c.loss);
    f.read("kind", kind);
    c.loss = loss_kind_from_string(kind);
    f.read("margin", c.margin);
    f.read("grid_margin", c.grid_margin);
    f.read("grid_points", c.grid_points);
    read_box(f, "grid_box", c.grid_lower, c.grid_upper, "loss");
    f.read("grid_mean", c.grid_mean);
    f.finish();
  }
  if (top.has("networks")) {
    Fields f(top.at("networks"), "networks");
    f.read("controller", c.controller_widths);
    f.read("casimir_outer", c.casimir_widths);
    f.read("casimir_inner", c.casimir_inner_widths);
    f.read("phi", c.phi_widths);
    f.read("grid_casimir", c.grid_casimir_widths);
    std::string act = to_string(c.activation);
    f.read("activation", act);
    std::string init = to_string(c.init);
    f.read("init", init);
    try {
      c.activation = activation_from_string(act);
      c.init = init_from_string(init);
    } catch (const std::exception& e) {
      throw ConfigError(std::string("networks: ") + e.what());
    }
    f.finish();
  }
  top.read("xi_init", c.xi_init);
  if (top.has("optimizer")) {
    Fields f(top.at("optimizer"), "optimizer");
    f.read("step", c.optimizer.step);
    f.read("beta1", c.optimizer.beta1);
    f.read("beta2", c.optimizer.beta2);
    f.read("eps_hat", c.optimizer.eps_hat);
    f.read("epochs", c.optimizer.epochs);
    if (f.has("early_stop")) {
      double v = 0.0;
      f.read("early_stop", v);
      c.optimizer.early_stop = v;
    }
    f.finish();
  }
  if (top.has("roa")) {
    Fields f(top.at("roa"), "roa");
    RoaConfig r;
    f.read("gamma", r.gamma);
    f.read("samples", r.samples);
    read_box(f, "box", r.lower, r.upper, "roa");
    f.finish();
    c.roa = r;
  }
  if (top.has("gains")) {
    Fields f(top.at("gains"), "gains");
    if (f.has("D")) c.D = matrix_from_json(f.at("D"), "gains.D");
    if (f.has("D_c")) c.D_c = matrix_from_json(f.at("D_c"), "gains.D_c");
    f.finish();
  }
  if (top.has("simulation")) {
    Fields f(top.at("simulation"), "simulation");
    f.read("dt", c.simulation.dt);
    f.read("T", c.simulation.T);
    f.read("trajectories", c.simulation.trajectories);
    read_box(f, "box", c.simulation.lower, c.simulation.upper, "simulation");
    f.read("tol", c.simulation.tol);
    f.read("tail_fraction", c.simulation.tail_fraction);
    f.finish();
  }
  top.read("sweep", c.sweep);
  if (top.has("surface")) {
    Fields f(top.at("surface"), "surface");
    if (f.has("grid")) {
      const auto& g = f.at("grid");
      if (!g.is_array() || g.size() != 2) throw ConfigError("surface.grid: expected [width, height]");
      c.surface.width = g[0].get<int>();
      c.surface.height = g[1].get<int>();
    }
    read_box(f, "box", c.surface.lower, c.surface.upper, "surface");
    f.finish();
  }
  top.read("output_dir", c.output_dir);
  top.finish();
  c.validate();
  return c;
}

nlohmann::json parse_json_text(const std::string& text, const std::string& source) {
  try {
    return nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    // Translate the byte offset into line and column.
    std::size_t line = 1, col = 1;
    const std::size_t end = std::min<std::size_t>(e.byte == 0 ? 0 : e.byte - 1, text.size());
    for (std::size_t i = 0; i < end; ++i) {
      if (text[i] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
    }
    std::ostringstream msg;
    msg << source << ":" << line << ":" << col << ": malformed JSON: " << e.what();
    throw ConfigError(msg.str());
  }
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return config_from_json(parse_json_text(buf.str(), path.string()));
}

PortHamiltonianSystem system_from_json(const nlohmann::json& j) {
  if (j.is_string()) {
    const auto name = j.get<std::string>();
    if (name == "pendulum") return pendulum_system();
    if (name == "mass_spring_damper") return mass_spring_damper_system();
    throw ConfigError("unknown builtin system '" + name + "' (expected pendulum or mass_spring_damper)");
  }
  Fields f(j, "system");
  const Eigen::MatrixXd J = matrix_from_json(f.at("J"), "system.J");
  const Eigen::MatrixXd R = f.has("R") ? matrix_from_json(f.at("R"), "system.R")
                                       : Eigen::MatrixXd::Zero(J.rows(), J.cols()).eval();
  const Eigen::MatrixXd G = matrix_from_json(f.at("G"), "system.G");
  std::shared_ptr<const Hamiltonian> H;
  {
    Fields h(f.at("hamiltonian"), "system.hamiltonian");
    const auto type = h.at("type").get<std::string>();
    if (type == "quadratic") {
      H = std::make_shared<QuadraticHamiltonian>(matrix_from_json(h.at("Q"), "system.hamiltonian.Q"));
    } else if (type == "pendulum") {
      H = std::make_shared<PendulumHamiltonian>();
    } else {
      throw ConfigError("system.hamiltonian.type must be quadratic or pendulum");
    }
    h.finish();
  }
  Box region = Box::uniform(J.rows(), -2.0, 2.0);
  if (f.has("region")) {
    Fields r(f.at("region"), "system.region");
    region.lower = vector_from(r.at("lower"), "system.region.lower");
    region.upper = vector_from(r.at("upper"), "system.region.upper");
    r.finish();
  }
  f.finish();
  try {
    PortHamiltonianSystem sys(J, R, G, H, region);
    const auto rep = validate_structure(sys, {Eigen::VectorXd::Zero(J.rows())});
    if (!rep.passed) throw ConfigError("system: structure invalid: " + rep.findings.front());
    return sys;
  } catch (const StructuralError& e) {
    throw ConfigError(std::string("system: ") + e.what());
  }
}

// Experiment -----------------------------------------------------------------

namespace {

Eigen::VectorXd default_target(const nlohmann::json& system, int n) {
  if (system.is_string() && system.get<std::string>() == "pendulum") {
    return Eigen::Vector2d(std::numbers::pi / 4.0, 0.0);
  }
  if (system.is_string() && system.get<std::string>() == "mass_spring_damper") return Eigen::Vector2d(0.5, 0.0);
  (void)n;
  throw ConfigError("target: required for inline systems");
}

}  // namespace

Experiment build_experiment(const ExperimentConfig& config) {
  config.validate();
  const PortHamiltonianSystem plant = system_from_json(config.system);
  const int m = plant.input_dim();
  const ClosedLoopSystem cl = interconnect(plant, integrator_controller(nullptr, m));
  const int N = cl.state_dim();
  const std::uint64_t seed = config.seed;

  ParamVector params;
  LyapunovComposition L;
  L.plant_dim = cl.plant_dim();
  L.controller_dim = cl.controller_dim();
  L.plant = plant.hamiltonian_ptr();
  if (config.controller_widths.front() != m) {
    throw ConfigError("networks.controller: input width must equal the controller dimension " + std::to_string(m));
  }
  L.controller = mlp_new(params, "H_c", config.controller_widths, config.activation, derive_seed(seed, 1),
                           config.init);
  if (config.loss == LossKind::Parameterized) {
    L.casimir = build_parameterization(cl, params, config.casimir_widths, config.casimir_inner_widths,
                                       derive_seed(seed, 2), config.activation, config.init);
  } else {
    if (config.grid_casimir_widths.front() != N) {
      throw ConfigError("networks.grid_casimir: input width must equal the closed-loop dimension " +
                        std::to_string(N));
    }
    L.casimir = mlp_new(params, "C", config.grid_casimir_widths, config.activation, derive_seed(seed, 4),
                       config.init);
  }
  if (!config.phi_widths.empty()) {
    L.phi = mlp_new(params, "Phi", config.phi_widths, config.activation, derive_seed(seed, 3), config.init);
  }

  std::vector<double> xi0 = config.xi_init;
  if (xi0.empty()) xi0.assign(static_cast<std::size_t>(cl.controller_dim()), 0.0);
  if (static_cast<int>(xi0.size()) != cl.controller_dim()) throw ConfigError("xi_init: wrong dimension");
  const ParamSegment xi_seg = params.add("xi_star", xi0);

  const Eigen::VectorXd x_star = config.target.size() ? config.target : default_target(config.system, cl.plant_dim());
  if (x_star.size() != cl.plant_dim()) throw ConfigError("target: wrong dimension");

  TrainProblem pb{cl, std::move(L), x_star, xi_seg};
  pb.kind = config.loss;
  pb.margin = config.loss == LossKind::Parameterized ? config.margin : config.grid_margin;
  if (config.loss == LossKind::Grid) {
    pb.grid = Box::uniform(N, config.grid_lower, config.grid_upper).grid(config.grid_points);
    pb.grid_mean = config.grid_mean;
  }
  if (config.roa) {
    Xoshiro256 rng(derive_seed(seed, 5));
    const Box box = Box::uniform(N, config.roa->lower, config.roa->upper);
    RoaSettings r{config.roa->gamma, {}};
    for (int i = 0; i < config.roa->samples; ++i) r.samples.push_back(box.sample(rng));
    pb.roa = std::move(r);
  }
  pb.adam = config.optimizer;
  pb.validate();
  return {config, std::move(params), std::move(pb)};
}

Eigen::VectorXd locate_minimum(const Experiment& ex) {
  const Eigen::VectorXd z_star = desired_state<double>(ex.problem, ex.params.values());
  return find_minimum(ex.lyapunov(), ex.params.values(), z_star);
}

std::vector<Eigen::VectorXd> initial_states(const ExperimentConfig& config, int dimension) {
  Xoshiro256 rng(derive_seed(config.seed, 6));
  const Box box = Box::uniform(dimension, config.simulation.lower, config.simulation.upper);
  std::vector<Eigen::VectorXd> out;
  for (int i = 0; i < config.simulation.trajectories; ++i) out.push_back(box.sample(rng));
  return out;
}

namespace {

const Mlp* network_of(const LyapunovComposition& L, const std::string& name) {
  if (name == "H_c") {
    if (const auto* s = std::get_if<NetworkSlot>(&L.controller)) return &s->net;
  }
  if (name == "Phi" && L.phi) return &L.phi->net;
  if (const auto* C = std::get_if<CasimirParameterization>(&L.casimir)) {
    if (name == "K") return &C->outer.net;
    for (const auto& b : C->inner) {
      if (b && b->segment.name == name) return &b->net;
    }
  }
  if (name == "C") {
    if (const auto* s = std::get_if<NetworkSlot>(&L.casimir)) return &s->net;
  }
  return nullptr;
}

}  // namespace

void save_model(const std::filesystem::path& dir, const Experiment& ex) {
  std::filesystem::create_directories(dir);
  nlohmann::json bundle;
  bundle["schema_version"] = kConfigSchemaVersion;
  bundle["config"] = config_to_json(ex.config);
  nlohmann::json nets = nlohmann::json::object();
  for (const auto& seg : ex.params.segments()) {
    const auto values = ex.params.values(seg.name);
    if (seg.name == "xi_star") {
      std::vector<std::string> xs;
      for (double x : values) xs.push_back(format_double(x));
      bundle["xi_star"] = xs;
      continue;
    }
    const Mlp* net = network_of(ex.lyapunov(), seg.name);
    if (!net) throw StructuralError("save_model: no network for segment " + seg.name);
    const std::string file = seg.name + ".json";
    save_network(dir / file, *net, values);
    nets[seg.name] = file;
  }
  bundle["networks"] = nets;
  std::ofstream out(dir / "model.json");
  if (!out) throw std::runtime_error("cannot write " + (dir / "model.json").string());
  out << bundle.dump(2) << '\n';
}

Experiment load_model(const std::filesystem::path& bundle_path) {
  std::ifstream in(bundle_path);
  if (!in) throw ConfigError("cannot open model " + bundle_path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  const nlohmann::json bundle = parse_json_text(buf.str(), bundle_path.string());
  Experiment ex = build_experiment(config_from_json(bundle.at("config")));
  const auto dir = bundle_path.parent_path();
  std::vector<double> values(ex.params.values().begin(), ex.params.values().end());
  for (const auto& seg : ex.params.segments()) {
    std::vector<double> loaded;
    if (seg.name == "xi_star") {
      for (const auto& s : bundle.at("xi_star")) loaded.push_back(parse_double(s.get<std::string>()));
    } else {
      const NetworkModel m = load_network(dir / bundle.at("networks").at(seg.name).get<std::string>());
      const Mlp* net = network_of(ex.lyapunov(), seg.name);
      if (!net || m.net.widths() != net->widths()) {
        throw ConfigError("model: network " + seg.name + " does not match the embedded config");
      }
      loaded = m.params;
    }
    if (loaded.size() != seg.length) throw ConfigError("model: segment " + seg.name + " has the wrong length");
    std::copy(loaded.begin(), loaded.end(), values.begin() + static_cast<std::ptrdiff_t>(seg.offset));
  }
  ex.params.assign(values);
  return ex;
}

void write_sweep_csv(const std::filesystem::path& path, const std::vector<SweepRow>& rows) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << "a,epsilon,bound,error,pass\n";
  for (const auto& r : rows) {
    out << format_double(r.a) << ',' << format_double(r.epsilon) << ',' << (r.bound ? format_double(*r.bound) : "")
        << ',' << (r.error ? format_double(*r.error) : "") << ',' << (r.passed ? "true" : "false") << '\n';
  }
}

nlohmann::json sweep_to_json(const std::vector<SweepRow>& rows) {
  nlohmann::json out = nlohmann::json::array();
  for (const auto& r : rows) {
    out.push_back({{"a", r.a},
                   {"epsilon", r.epsilon},
                   {"bound", r.bound ? nlohmann::json(*r.bound) : nlohmann::json(nullptr)},
                   {"error", r.error ? nlohmann::json(*r.error) : nlohmann::json(nullptr)},
                   {"pass", r.passed},
                   {"note", r.note}});
  }
  return out;
}

SurfaceGrid sample_surface(const Experiment& ex, int width, int height, double lower, double upper) {
  if (width < 2 || height < 2) throw StructuralError("surface: grid must be at least 2x2");
  if (!(lower < upper)) throw StructuralError("surface: need lower < upper");
  if (ex.closed_loop().plant_dim() != 2) throw StructuralError("surface: needs a two-dimensional plant");
  SurfaceGrid s{width, height, lower, upper, {}, {}, {}};
  Eigen::VectorXd z = desired_state<double>(ex.problem, ex.params.values());
  for (int j = 0; j < height; ++j) {
    const double p = lower + (upper - lower) * j / (height - 1);
    for (int i = 0; i < width; ++i) {
      const double q = lower + (upper - lower) * i / (width - 1);
      z(0) = q;
      z(1) = p;
      s.q.push_back(q);
      s.p.push_back(p);
      s.V.push_back(lyapunov_value(ex.lyapunov(), ex.params.values(), z));
    }
  }
  return s;
}

void write_surface_csv(const std::filesystem::path& path, const SurfaceGrid& s) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << "q,p,V\n";
  for (std::size_t k = 0; k < s.V.size(); ++k) {
    out << format_double(s.q[k]) << ',' << format_double(s.p[k]) << ',' << format_double(s.V[k]) << '\n';
  }
}

nlohmann::json surface_to_json(const SurfaceGrid& s) {
  return {{"width", s.width}, {"height", s.height}, {"lower", s.lower}, {"upper", s.upper},
          {"q", s.q},         {"p", s.p},           {"V", s.V}};
}

SweepRow run_sweep_point(const ExperimentConfig& base, double a) {
  ExperimentConfig c = base;
  c.margin = a;
  SweepRow row;
  row.a = a;
  Experiment ex = build_experiment(c);
  const TrainReport rep = adam_train(ex.problem, ex.params);
  row.epsilon = rep.epsilon;
  if (!rep.bound) {
    row.note = "a <= epsilon";
    return row;
  }
  row.bound = rep.bound;
  try {
    const Eigen::VectorXd z_bar = locate_minimum(ex);
    const BoundCheck check = verify_bound(rep, z_bar);
    row.error = check.error;
    row.passed = check.passed;
  } catch (const NumericError& e) {
    row.note = e.what();
  }
  return row;
}

ExperimentResult run_paper_experiment(const ExperimentConfig& config, const ExperimentOptions& options) {
  namespace fs = std::filesystem;
  const fs::path out = config.output_dir;
  fs::create_directories(out);

  Experiment ex = build_experiment(config);
  ExperimentResult res;
  res.report = adam_train(ex.problem, ex.params);
  {
    std::ofstream f(out / "train_report.json");
    f << report_to_json(res.report).dump(2) << '\n';
  }
  write_loss_csv(out / "loss.csv", res.report);
  save_model(out / "model", ex);

  res.z_bar = locate_minimum(ex);
  res.bound = verify_bound(res.report, res.z_bar);
  res.passed = res.bound.passed;

  if (options.simulate) {
    fs::create_directories(out / "trajectories");
    const ControlledLoop loop{&ex.closed_loop(), &ex.lyapunov(), ex.params.values(), ex.gains()};
    const auto starts = initial_states(config, ex.closed_loop().state_dim());
    for (std::size_t i = 0; i < starts.size(); ++i) {
      const Trajectory tr = rk4_integrate([&](const Eigen::VectorXd& z) { return loop.field(z); }, starts[i],
                                          config.simulation.dt, config.simulation.T, Observers::of(loop));
      std::ostringstream name;
      name << "trajectory_" << (i < 10 ? "0" : "") << i << ".csv";
      write_trajectory_csv(out / "trajectories" / name.str(), tr);
      res.stabilization.push_back(
          verify_stabilization(tr, res.z_bar, config.simulation.tol, config.simulation.tail_fraction));
      res.decrease.push_back(verify_lyapunov_decrease(tr));
      res.passed = res.passed && res.stabilization.back().passed && res.decrease.back().passed;
    }
  }
  if (options.surface) {
    write_surface_csv(out / "surface.csv", sample_surface(ex, config.surface.width, config.surface.height,
                                                          config.surface.lower, config.surface.upper));
  }
  if (options.sweep && !config.sweep.empty()) {
    for (double a : config.sweep) res.sweep.push_back(run_sweep_point(config, a));
    write_sweep_csv(out / "sweep.csv", res.sweep);
    for (const auto& r : res.sweep) res.passed = res.passed && r.passed;
  }

  nlohmann::json summary;
  summary["z_bar"] = vector_json(res.z_bar);
  summary["bound"] = {{"error", res.bound.error}, {"bound", res.bound.bound}, {"passed", res.bound.passed}};
  nlohmann::json traj = nlohmann::json::array();
  for (std::size_t i = 0; i < res.stabilization.size(); ++i) {
    traj.push_back({{"max_tail_distance", res.stabilization[i].max_distance},
                    {"stabilized", res.stabilization[i].passed},
                    {"lyapunov_nonincreasing", res.decrease[i].passed}});
  }
  summary["trajectories"] = traj;
  summary["passed"] = res.passed;
  std::ofstream f(out / "summary.json");
  f << summary.dump(2) << '\n';
  return res;
}

}  // namespace necc
