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

#include <sys/wait.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <gtest/gtest.h>

#include <json.hpp>

namespace {

namespace fs = std::filesystem;

struct Outcome {
  int code = -1;
  std::string out;
};

// Runs the CLI with stderr folded into stdout.
Outcome necc(const std::string& args) {
  const std::string cmd = std::string("\"") + NECC_CLI_PATH + "\" " + args + " 2>&1";
  Outcome r;
  FILE* pipe = popen(cmd.c_str(), "r");
  if (pipe == nullptr) return r;
  char buf[4096];
  while (std::fgets(buf, sizeof buf, pipe) != nullptr) r.out += buf;
  const int status = pclose(pipe);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("necc_cli_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string shipped(const char* name) { return (fs::path(NECC_SOURCE_DIR) / "configs" / name).string(); }

void write(const fs::path& p, const std::string& text) { std::ofstream(p) << text; }

TEST(Cli, ValidatesShippedConfigs) {
  for (const char* name : {"pendulum.json", "pendulum_grid.json", "mass_spring_damper.json"}) {
    const Outcome r = necc("validate " + shipped(name));
    EXPECT_EQ(r.code, 0) << name << '\n' << r.out;
    EXPECT_NE(r.out.find("true"), std::string::npos) << r.out;
  }
}

TEST(Cli, MalformedConfigExitsTwoWithPosition) {
  const auto dir = scratch("malformed");
  write(dir / "bad.json", "{\n  \"seed\": 1,\n  oops\n}\n");
  const Outcome r = necc("validate " + (dir / "bad.json").string());
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.out.find("bad.json:3:"), std::string::npos) << r.out;
}

TEST(Cli, UnknownKeyAndMissingFileExitTwo) {
  const auto dir = scratch("unknown");
  write(dir / "c.json", R"({"epochs": 10})");
  EXPECT_EQ(necc("validate " + (dir / "c.json").string()).code, 2);
  EXPECT_EQ(necc("validate " + (dir / "absent.json").string()).code, 2);
  EXPECT_EQ(necc("no-such-command").code, 2);
  EXPECT_EQ(necc("").code, 2);
  EXPECT_EQ(necc("--help").code, 0);
}

TEST(Cli, TrainVerifySurfaceRoundTrip) {
  const auto dir = scratch("train");
  const Outcome t = necc("--out-dir " + dir.string() + " train " + shipped("pendulum.json"));
  ASSERT_EQ(t.code, 0) << t.out;
  for (const char* f : {"train_report.json", "loss.csv", "model/model.json"}) {
    EXPECT_TRUE(fs::exists(dir / f)) << f;
  }
  const Outcome v = necc("--format json verify-bound " + (dir / "train_report.json").string() + " " +
                     (dir / "model" / "model.json").string());
  ASSERT_EQ(v.code, 0) << v.out;
  const auto j = nlohmann::json::parse(v.out);
  EXPECT_TRUE(j.at("pass").get<bool>());
  EXPECT_LE(j.at("error").get<double>(), 1.1 * j.at("bound").get<double>());

  const Outcome s = necc("--out-dir " + dir.string() + " export-surface " + (dir / "model" / "model.json").string() +
                     " --grid 11x7");
  ASSERT_EQ(s.code, 0) << s.out;
  std::ifstream in(dir / "surface.csv");
  std::string line;
  int rows = -1;
  while (std::getline(in, line)) ++rows;
  EXPECT_EQ(rows, 77);

  const Outcome js = necc("--out-dir " + dir.string() + " --format json export-surface " +
                      (dir / "model" / "model.json").string() + " --grid 3x4");
  ASSERT_EQ(js.code, 0) << js.out;
  std::ifstream jin(dir / "surface.json");
  const auto surf = nlohmann::json::parse(jin);
  EXPECT_EQ(surf.at("width"), 3);
  EXPECT_EQ(surf.at("height"), 4);

  for (const char* bad : {"11", "1x5", "axb", "5x"}) {
    EXPECT_EQ(necc("export-surface " + (dir / "model" / "model.json").string() + " --grid " + bad).code, 2) << bad;
  }
}

TEST(Cli, VerifyBoundRejectsUndefinedBound) {
  const auto dir = scratch("undefined");
  ASSERT_EQ(necc("--out-dir " + dir.string() + " train " + shipped("pendulum.json")).code, 0);
  std::ifstream in(dir / "train_report.json");
  auto rep = nlohmann::json::parse(in);
  rep["margin"] = rep.at("epsilon").get<double>() * 0.5;
  rep["bound"] = nullptr;
  write(dir / "tampered.json", rep.dump());
  const Outcome r = necc("verify-bound " + (dir / "tampered.json").string() + " " + (dir / "model" / "model.json").string());
  EXPECT_EQ(r.code, 1) << r.out;
}

TEST(Cli, SeedOverrideChangesTheRun) {
  const auto a = scratch("seed_a");
  const auto b = scratch("seed_b");
  ASSERT_EQ(necc("--seed 1 --out-dir " + a.string() + " train " + shipped("pendulum.json")).code, 0);
  ASSERT_EQ(necc("--seed 2 --out-dir " + b.string() + " train " + shipped("pendulum.json")).code, 0);
  std::ifstream ia(a / "loss.csv"), ib(b / "loss.csv");
  std::stringstream sa, sb;
  sa << ia.rdbuf();
  sb << ib.rdbuf();
  EXPECT_NE(sa.str(), sb.str());
}

}  // namespace
