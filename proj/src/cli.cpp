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

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <regex>
#include <sstream>

#include <CLI11.hpp>

#include "necc/bench.hpp"

namespace necc {

namespace {

namespace fs = std::filesystem;

struct GlobalOptions {
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out_dir;
  std::string format = "csv";

  bool json() const { return format == "json"; }

  void apply(ExperimentConfig& c) const {
    if (seed) c.seed = *seed;
    if (out_dir) c.output_dir = *out_dir;
  }

  fs::path output(const ExperimentConfig& c) const { return out_dir ? fs::path(*out_dir) : fs::path(c.output_dir); }
};

ExperimentConfig load(const GlobalOptions& g, const std::string& path) {
  ExperimentConfig c = load_config(path);
  g.apply(c);
  c.validate();
  return c;
}

void write_json(const fs::path& path, const nlohmann::json& j) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << j.dump(2) << '\n';
}

std::string csv_row(std::initializer_list<std::string> cells) {
  std::string s;
  for (const auto& c : cells) {
    if (!s.empty()) s += ',';
    s += c;
  }
  return s;
}

int cmd_train(const GlobalOptions& g, const std::string& config_path) {
  const ExperimentConfig c = load(g, config_path);
  const fs::path out = g.output(c);
  fs::create_directories(out);
  Experiment ex = build_experiment(c);
  const TrainReport rep = adam_train(ex.problem, ex.params);
  write_json(out / "train_report.json", report_to_json(rep));
  write_loss_csv(out / "loss.csv", rep);
  save_model(out / "model", ex);
  if (g.json()) {
    std::cout << nlohmann::json{{"epsilon", rep.epsilon},
                                {"bound", rep.bound ? nlohmann::json(*rep.bound) : nlohmann::json(nullptr)},
                                {"xi_star", std::vector<double>(rep.xi_star.data(), rep.xi_star.data() + rep.xi_star.size())},
                                {"report", (out / "train_report.json").string()},
                                {"model", (out / "model" / "model.json").string()}}
                     .dump(2)
              << '\n';
  } else {
    std::cout << "epsilon,bound,report,model\n"
              << csv_row({format_double(rep.epsilon), rep.bound ? format_double(*rep.bound) : "",
                          (out / "train_report.json").string(), (out / "model" / "model.json").string()})
              << '\n';
  }
  for (const auto& w : rep.warnings) std::cerr << "warning: " << w << '\n';
  return kExitOk;
}

int cmd_simulate(const GlobalOptions& g, const std::string& config_path, const std::string& model_path) {
  const ExperimentConfig c = load(g, config_path);
  const Experiment ex = load_model(model_path);
  const fs::path out = g.output(c) / "trajectories";
  fs::create_directories(out);
  const Eigen::VectorXd z_bar = locate_minimum(ex);
  const ControlledLoop loop{&ex.closed_loop(), &ex.lyapunov(), ex.params.values(), DampingGains(c.D, c.D_c)};
  const auto starts = initial_states(c, ex.closed_loop().state_dim());
  bool passed = true;
  nlohmann::json rows = nlohmann::json::array();
  if (!g.json()) std::cout << "trajectory,max_tail_distance,stabilized,lyapunov_nonincreasing\n";
  for (std::size_t i = 0; i < starts.size(); ++i) {
    const Trajectory tr = rk4_integrate([&](const Eigen::VectorXd& z) { return loop.field(z); }, starts[i],
                                        c.simulation.dt, c.simulation.T, Observers::of(loop));
    std::ostringstream name;
    name << "trajectory_" << (i < 10 ? "0" : "") << i << ".csv";
    write_trajectory_csv(out / name.str(), tr);
    const auto stab = verify_stabilization(tr, z_bar, c.simulation.tol, c.simulation.tail_fraction);
    const auto dec = verify_lyapunov_decrease(tr);
    passed = passed && stab.passed && dec.passed;
    if (g.json()) {
      rows.push_back({{"trajectory", name.str()},
                      {"max_tail_distance", stab.max_distance},
                      {"stabilized", stab.passed},
                      {"lyapunov_nonincreasing", dec.passed}});
    } else {
      std::cout << csv_row({name.str(), format_double(stab.max_distance), stab.passed ? "true" : "false",
                            dec.passed ? "true" : "false"})
                << '\n';
    }
  }
  if (g.json()) std::cout << nlohmann::json{{"trajectories", rows}, {"passed", passed}}.dump(2) << '\n';
  return passed ? kExitOk : kExitVerification;
}

int cmd_verify_bound(const GlobalOptions& g, const std::string& report_path, const std::string& model_path) {
  std::ifstream in(report_path);
  if (!in) throw ConfigError("cannot open report " + report_path);
  std::stringstream buf;
  buf << in.rdbuf();
  const TrainReport rep = report_from_json(parse_json_text(buf.str(), report_path));
  const Experiment ex = load_model(model_path);
  const Eigen::VectorXd z_bar = locate_minimum(ex);
  BoundCheck check;
  try {
    check = verify_bound(rep, z_bar);
  } catch (const BoundUndefinedError& e) {
    std::cerr << "verify-bound: " << e.what() << '\n';
    return kExitVerification;
  }
  if (g.json()) {
    std::cout << nlohmann::json{{"epsilon", rep.epsilon},
                                {"a", rep.margin},
                                {"bound", check.bound},
                                {"error", check.error},
                                {"z_bar", std::vector<double>(z_bar.data(), z_bar.data() + z_bar.size())},
                                {"pass", check.passed}}
                     .dump(2)
              << '\n';
  } else {
    std::cout << "epsilon,a,bound,error,pass\n"
              << csv_row({format_double(rep.epsilon), format_double(rep.margin), format_double(check.bound),
                          format_double(check.error), check.passed ? "true" : "false"})
              << '\n';
  }
  return check.passed ? kExitOk : kExitVerification;
}

int cmd_sweep(const GlobalOptions& g, const std::string& config_path, std::vector<double> values) {
  const ExperimentConfig c = load(g, config_path);
  if (values.empty()) values = c.sweep;
  for (double a : values) {
    if (!(a > 0.0)) throw ConfigError("--values: every a must be > 0");
  }
  const fs::path out = g.output(c);
  fs::create_directories(out);
  std::vector<SweepRow> rows;
  for (double a : values) rows.push_back(run_sweep_point(c, a));
  bool passed = true;
  for (const auto& r : rows) passed = passed && r.passed;
  if (g.json()) {
    write_json(out / "sweep.json", sweep_to_json(rows));
    std::cout << sweep_to_json(rows).dump(2) << '\n';
  } else {
    write_sweep_csv(out / "sweep.csv", rows);
    std::ifstream f(out / "sweep.csv");
    std::cout << f.rdbuf();
  }
  return passed ? kExitOk : kExitVerification;
}

int cmd_surface(const GlobalOptions& g, const std::string& model_path, const std::string& grid) {
  static const std::regex shape(R"((\d+)x(\d+))");
  std::smatch m;
  if (!std::regex_match(grid, m, shape)) throw ConfigError("--grid: expected WxH, got '" + grid + "'");
  const int w = std::stoi(m[1]);
  const int h = std::stoi(m[2]);
  if (w < 2 || h < 2) throw ConfigError("--grid: width and height must be at least 2");
  const Experiment ex = load_model(model_path);
  const fs::path out = g.out_dir ? fs::path(*g.out_dir) : fs::path(ex.config.output_dir);
  fs::create_directories(out);
  const SurfaceGrid s = sample_surface(ex, w, h, ex.config.surface.lower, ex.config.surface.upper);
  const fs::path file = out / (g.json() ? "surface.json" : "surface.csv");
  if (g.json()) {
    write_json(file, surface_to_json(s));
  } else {
    write_surface_csv(file, s);
  }
  std::cout << file.string() << '\n';
  return kExitOk;
}

int cmd_validate(const GlobalOptions& g, const std::string& config_path) {
  const ExperimentConfig c = load(g, config_path);
  const Experiment ex = build_experiment(c);
  const auto composite = ex.closed_loop().as_port_hamiltonian();
  const auto rep = validate_structure(composite, composite.region().grid(3));
  for (const auto& f : rep.findings) std::cerr << "finding: " << f << '\n';
  if (!rep.passed) return kExitConfig;
  if (g.json()) {
    std::cout << nlohmann::json{{"valid", true}, {"parameters", ex.params.size()}}.dump(2) << '\n';
  } else {
    std::cout << "valid,parameters\ntrue," << ex.params.size() << '\n';
  }
  return kExitOk;
}

int cmd_experiment(const GlobalOptions& g, const std::string& config_path) {
  const ExperimentConfig c = load(g, config_path);
  const ExperimentResult r = run_paper_experiment(c);
  std::cout << "epsilon,bound,error,pass\n"
            << csv_row({format_double(r.report.epsilon), format_double(r.bound.bound), format_double(r.bound.error),
                        r.passed ? "true" : "false"})
            << '\n';
  return r.passed ? kExitOk : kExitVerification;
}

}  // namespace

int cli_main(int argc, char** argv) {
  CLI::App app{"Neural energy Casimir controller synthesis for port-Hamiltonian systems"};
  app.require_subcommand(1);
  app.fallthrough();
  GlobalOptions g;
  app.add_option("--seed", g.seed, "Override the config seed");
  app.add_option("--out-dir", g.out_dir, "Override the output directory");
  app.add_option("--format", g.format, "Format of printed results")->check(CLI::IsMember({"csv", "json"}));

  std::string config, model, report, grid = "101x101";
  std::vector<double> values;

  auto* train = app.add_subcommand("train", "Train the controller networks and xi*");
  train->add_option("config", config, "Experiment config (JSON)")->required();
  auto* simulate = app.add_subcommand("simulate", "Simulate the damped closed loop from seeded initial states");
  simulate->add_option("config", config, "Experiment config (JSON)")->required();
  simulate->add_option("--model", model, "Model bundle (model.json)")->required();
  auto* verify = app.add_subcommand("verify-bound", "Check |z_bar - z*| <= 1.1 epsilon / (a - epsilon)");
  verify->add_option("report", report, "Train report (JSON)")->required();
  verify->add_option("model", model, "Model bundle (model.json)")->required();
  auto* sweep = app.add_subcommand("sweep-a", "Train and check the bound for several margins a");
  sweep->add_option("config", config, "Experiment config (JSON)")->required();
  sweep->add_option("--values", values, "Margins a (default: the config's sweep list)")->delimiter(',');
  auto* surface = app.add_subcommand("export-surface", "Sample V(q, p, xi*) on a grid");
  surface->add_option("model", model, "Model bundle (model.json)")->required();
  surface->add_option("--grid", grid, "Grid shape WxH")->capture_default_str();
  auto* validate = app.add_subcommand("validate", "Parse a config and check the system structure");
  validate->add_option("config", config, "Experiment config (JSON)")->required();
  auto* experiment = app.add_subcommand("experiment", "Run the full pipeline: train, verify, simulate, sweep, export");
  experiment->add_option("config", config, "Experiment config (JSON)")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (*train) return cmd_train(g, config);
    if (*simulate) return cmd_simulate(g, config, model);
    if (*verify) return cmd_verify_bound(g, report, model);
    if (*sweep) return cmd_sweep(g, config, values);
    if (*surface) return cmd_surface(g, model, grid);
    if (*validate) return cmd_validate(g, config);
    if (*experiment) return cmd_experiment(g, config);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const StructuralError& e) {
    std::cerr << "invalid input: " << e.what() << '\n';
    return kExitConfig;
  } catch (const NumericError& e) {
    std::cerr << "numeric failure: " << e.what() << '\n';
    return kExitNumeric;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitNumeric;
  }
  return kExitConfig;
}

}  // namespace necc
