/*
 *            Copyright 2026 The mlr Development Team
 *
 *      Licensed under the Apache License, Version 2.0 (the "License")
 *
 * You may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *              http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 *
 */

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "runner/recipes.hpp"
#include "runner/run.hpp"

using namespace mlr;
using namespace mlr::runner;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  fs::path p = fs::temp_directory_path() / ("mlr_config_test_" + name);
  fs::remove_all(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

int run_text(const std::string& text, const fs::path& out, std::string* log = nullptr) {
  std::ostringstream s;
  Overrides ov;
  ov.out = out.string();
  int rc = run_config_text(text, ov, s);
  if (log) *log = s.str();
  return rc;
}

// CSV with the trailing seconds column removed.
std::string without_seconds(const std::string& csv) {
  std::istringstream in(csv);
  std::string line, out;
  while (std::getline(in, line)) out += line.substr(0, line.rfind(',')) + "\n";
  return out;
}

const char* kernel_config = R"([model]
potential = zero
[probe]
kind = free-kernel
radius = 128
[criteria]
max_error = 0.01
)";

}  // namespace

TEST(Schema, UnknownKeysAndSectionsAreRejected) {
  EXPECT_THROW(Config::parse_text("[probe]\nkind = wf\nx = 1\nxi = 1\ny = 1\neta = 1\nbogus = 3\n"), ConfigError);
  EXPECT_THROW(Config::parse_text("[probe]\nkind = free-kernel\n[extra]\na = 1\n"), ConfigError);
  EXPECT_THROW(Config::parse_text("top = 1\n[probe]\nkind = free-kernel\n"), ConfigError);
  // a key of another probe kind
  EXPECT_THROW(Config::parse_text("[probe]\nkind = free-kernel\nnu = 3\n"), ConfigError);
  EXPECT_THROW(Config::parse_text("[probe]\nkind = free-kernel\n[criteria]\nmin_kappa = 1\n"), ConfigError);
}

TEST(Schema, BadValuesAreRejected) {
  EXPECT_THROW(Config::parse_text("[probe]\nkind = free-kernel\nradius = big\n"), ConfigError);
  EXPECT_THROW(Config::parse_text("[probe]\nkind = free-kernel\nradius = 12.5\n"), ConfigError);
  EXPECT_THROW(Config::parse_text("[model]\npotential = coulomb\n[probe]\nkind = free-kernel\n"), ConfigError);
  EXPECT_THROW(Config::parse_text("[probe]\nkind = ik\ngamma_minus = 0.5\ngamma_plus = 0.3\n"), ConfigError);
  EXPECT_THROW(Config::parse_text("[probe]\nkind = ik\nradii =\n"), ConfigError);
  EXPECT_THROW(Config::parse_text("[probe]\nkind = wf\nx = 4\nxi = 1\ny = 3\n"), ConfigError);
  EXPECT_THROW(Config::parse_text("[probe]\nkind = escape\ndepth = 2\nconstants = 1\n"), ConfigError);
  EXPECT_THROW(Config::parse_text("[probe]\nkind = teleport\n"), ConfigError);
  EXPECT_THROW(Config::parse_text("[probe]\nkind = free-kernel\n[output]\nformats = csv,xml\n"), ConfigError);
}

TEST(Schema, OneSidedOrderAtLeastNuMinusOneExitsWithTwo) {
  auto dir = scratch("s_order");
  std::string log;
  EXPECT_EQ(run_text("[probe]\nkind = one-sided\nnu = 3\ns = 2\n", dir, &log), exit_config);
  EXPECT_NE(log.find("0 < s < nu - 1"), std::string::npos) << log;
  EXPECT_EQ(run_text("[probe]\nkind = one-sided\nnu = 3\ns = 2.5\n", dir), exit_config);
  EXPECT_FALSE(fs::exists(dir / "results.csv"));
}

TEST(Schema, EmptyProbeBlockExitsWithTwo) {
  auto dir = scratch("empty");
  std::string log;
  EXPECT_EQ(run_text("[model]\ndim = 1\n[probe]\n", dir, &log), exit_config);
  EXPECT_NE(log.find("kind"), std::string::npos);
  EXPECT_EQ(run_text("", dir), exit_config);
  EXPECT_EQ(run_text("[probe\nkind = wf\n", dir), exit_config);
}

TEST(Schema, DefaultsAreFilledPerProbeKind) {
  auto c = Config::parse_text("[probe]\nkind = ik\n");
  EXPECT_EQ(c.real("probe", "gamma_minus"), -0.3);
  EXPECT_EQ(c.list("probe", "radii"), (std::vector<double>{128, 256, 512}));
  EXPECT_EQ(c.text("numerics", "resolution"), "warn_only");
  EXPECT_FALSE(c.has("probe", "h_list"));
  EXPECT_FALSE(c.has("criteria", "max_ratio"));
  auto w = Config::parse_text("[probe]\nkind = wf\nx = 4\nxi = 1\ny = 3\neta = -1\n");
  EXPECT_EQ(w.text("numerics", "resolution"), "enforce");
  EXPECT_EQ(w.list("probe", "h_list").size(), 4u);
}

TEST(Manifest, EchoesEveryApplicableSetting) {
  const std::map<std::string, std::string> minimal{
      {"wf", "x = 4\nxi = 1\ny = 3\neta = -1\n"}, {"prop31", "x = 4\nxi = 1\ny = 3\neta = -1\n"}};
  for (const auto& kind : probe_kinds()) {
    std::string text = "[probe]\nkind = " + kind + "\n" + (minimal.count(kind) ? minimal.at(kind) : "");
    auto c = Config::parse_text(text);
    auto j = manifest(c, Outcome{}, 0, "");
    std::size_t expected = 0;
    for (const auto& k : schema()) {
      if (!accepts(k, kind) || k.section == "criteria") continue;
      ++expected;
      ASSERT_TRUE(j["config"].contains(k.section)) << kind << " " << k.section;
      EXPECT_TRUE(j["config"][k.section].contains(k.key)) << kind << " " << k.section << "." << k.key;
    }
    std::size_t echoed = 0;
    for (const auto& [section, keys] : j["config"].items()) echoed += keys.size();
    EXPECT_EQ(echoed, expected) << kind;
    // re-parsing the echoed settings gives the same config
    std::string again;
    for (const auto& [section, keys] : j["config"].items()) {
      again += "[" + section + "]\n";
      for (const auto& [k, v] : keys.items()) again += k + " = " + v.get<std::string>() + "\n";
    }
    EXPECT_EQ(Config::parse_text(again).resolved(), c.resolved()) << kind;
  }
}

TEST(Run, WritesResultsAndManifest) {
  auto dir = scratch("kernel");
  std::string log;
  ASSERT_EQ(run_text(kernel_config, dir, &log), exit_ok) << log;
  EXPECT_NE(log.find("PASS max_error"), std::string::npos);
  auto csv = slurp(dir / "results.csv");
  EXPECT_EQ(csv.substr(0, csv.find('\n')), csv_header());
  auto j = nlohmann::json::parse(slurp(dir / "manifest.json"));
  EXPECT_EQ(j["probe"], "free-kernel");
  EXPECT_EQ(j["exit_code"], 0);
  EXPECT_EQ(j["criteria"][0]["name"], "max_error");
  EXPECT_TRUE(j["criteria"][0]["pass"].get<bool>());
  EXPECT_EQ(j["config"]["output"]["dir"], dir.string());
}

TEST(Run, FailedCriterionExitsWithOne) {
  auto dir = scratch("strict");
  std::string text = kernel_config;
  text.replace(text.find("0.01"), 4, "1e-12");
  std::string log;
  EXPECT_EQ(run_text(text, dir, &log), exit_criterion);
  EXPECT_NE(log.find("FAIL max_error"), std::string::npos);
  auto j = nlohmann::json::parse(slurp(dir / "manifest.json"));
  EXPECT_EQ(j["exit_code"], 1);
}

TEST(Run, NumericalFailureExitsWithThree) {
  // two epsilons and an unreachable convergence tolerance
  auto dir = scratch("numerical");
  std::string log;
  EXPECT_EQ(run_text("[probe]\nkind = free-kernel\nradius = 64\n[numerics]\neps_first = 3\neps_last = 4\nlap_tol = 1e-14\n",
                     dir, &log),
            exit_numerical);
  EXPECT_NE(log.find("error"), std::string::npos);
  auto j = nlohmann::json::parse(slurp(dir / "manifest.json"));
  EXPECT_EQ(j["exit_code"], 3);
  EXPECT_TRUE(j.contains("error"));
}

TEST(Run, RepeatedRunsGiveIdenticalTables) {
  const std::string cone = "[model]\npotential = zero\n[probe]\nkind = ik\nradii = 48,64\n";
  for (const std::string& text : {std::string(kernel_config), cone}) {
    auto a = scratch("det_a"), b = scratch("det_b");
    ASSERT_NE(run_text(text, a), exit_config);
    ASSERT_NE(run_text(text, b), exit_config);
    auto ca = slurp(a / "results.csv"), cb = slurp(b / "results.csv");
    EXPECT_GT(ca.size(), std::string(csv_header()).size() + 1);
    EXPECT_EQ(without_seconds(ca), without_seconds(cb));
  }
}

TEST(Run, OverridesReplaceConfigValues) {
  auto c = Config::parse_text(kernel_config);
  apply(c, Overrides{4, "elsewhere", 7});
  EXPECT_EQ(c.integer("numerics", "jobs"), 4);
  EXPECT_EQ(c.text("output", "dir"), "elsewhere");
  EXPECT_EQ(c.integer("numerics", "seed"), 7);
}

TEST(Recipes, IndexCoversEveryClaim) {
  EXPECT_GE(recipes().size(), 8u);
  std::set<std::string> names, kinds;
  for (const auto& r : recipes()) {
    EXPECT_TRUE(names.insert(r.name).second) << r.name;
    EXPECT_FALSE(r.claim.empty());
    auto c = Config::parse_text(r.config);
    kinds.insert(c.kind());
    auto resolved = c.resolved();
    EXPECT_FALSE(resolved.empty());
    // every recipe declares at least one criterion
    EXPECT_TRUE(std::any_of(resolved.begin(), resolved.end(),
                            [](const auto& s) { return s.first == "criteria"; }))
        << r.name;
  }
  for (const auto& k : probe_kinds()) EXPECT_TRUE(kinds.count(k)) << k;
  EXPECT_THROW(find_recipe("no-such-recipe"), ConfigError);
}
