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

// mlr-lab: runs probe configs and the canned recipes.
//
//   mlr-lab run <config.ini> [--jobs N] [--out DIR] [--seed S]
//   mlr-lab run-recipe <name> [--jobs N] [--out DIR] [--seed S]
//   mlr-lab list-recipes
//   mlr-lab show-recipe <name>
//
// Exit codes: 0 all criteria pass, 1 a criterion failed, 2 bad config or
// input, 3 numerical failure.

#include <CLI11.hpp>

#include <iostream>

#include "runner/recipes.hpp"
#include "runner/run.hpp"

using namespace mlr::runner;

int main(int argc, char** argv) {
  CLI::App app{"lattice resolvent and propagation experiments"};
  app.require_subcommand(1);
  Overrides ov;
  auto add_overrides = [&](CLI::App* sub) {
    sub->add_option_function<int>("--jobs", [&](int j) { ov.jobs = j; }, "worker threads")
        ->check(CLI::PositiveNumber);
    sub->add_option_function<std::string>("--out", [&](const std::string& d) { ov.out = d; }, "output directory");
    sub->add_option_function<long>("--seed", [&](long s) { ov.seed = s; }, "seed for every random start")
        ->check(CLI::NonNegativeNumber);
  };

  std::string path, name;
  auto* run = app.add_subcommand("run", "run a config file");
  run->add_option("config", path, "INI config")->required();
  add_overrides(run);
  auto* recipe = app.add_subcommand("run-recipe", "run a canned recipe");
  recipe->add_option("name", name, "recipe name")->required();
  add_overrides(recipe);
  auto* list = app.add_subcommand("list-recipes", "list the canned recipes");
  auto* show = app.add_subcommand("show-recipe", "print a recipe's config");
  show->add_option("name", name, "recipe name")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return rc == 0 ? 0 : exit_config;
  }

  try {
    if (*list) {
      for (const auto& r : recipes()) std::cout << r.name << "\t" << r.claim << "\n";
      return 0;
    }
    if (*show) {
      std::cout << find_recipe(name).config;
      return 0;
    }
    if (*recipe) return run_config_text(find_recipe(name).config, ov, std::cout);
    return run_config_file(path, ov, std::cout);
  } catch (const mlr::ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_config;
  }
}
