// Copyright 2026 The runwaysim Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
// runwaysim command line: generate, train, evaluate, experiment, report.

#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "runwaysim/experiment.hpp"

namespace {

struct Overrides {
  std::string config;
  std::string out = "run";
  std::vector<std::uint64_t> seeds;
  std::string strategies;
  std::optional<std::size_t> iterations;
  std::optional<double> lambda;
};

runwaysim::ExperimentConfig resolve(const Overrides& o) {
  auto c = runwaysim::load_experiment_config(o.config);
  if (!o.seeds.empty()) c.seeds = o.seeds;
  if (!o.strategies.empty()) c.strategies = runwaysim::parse_strategy_list(o.strategies);
  if (o.iterations) c.train.iterations = *o.iterations;
  if (o.lambda) c.care_lambda = *o.lambda;
  runwaysim::validate(c);
  return c;
}

void add_common(CLI::App* cmd, Overrides& o) {
  cmd->add_option("--config", o.config, "experiment config (JSON)")->required()->check(CLI::ExistingFile);
  cmd->add_option("--out", o.out, "run directory")->capture_default_str();
}

void add_training(CLI::App* cmd, Overrides& o) {
  cmd->add_option("--seed", o.seeds, "training seed (repeatable)")->take_all();
  cmd->add_option("--strategies", o.strategies, "comma-separated subset of REAL,SYNTH,MIX,SAMPLER,CARE");
  cmd->add_option("--iterations", o.iterations, "SGD iterations per cell")->check(CLI::PositiveNumber);
  cmd->add_option("--lambda", o.lambda, "alignment weight for CARE")->check(CLI::NonNegativeNumber);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"runwaysim: synthetic runway detection experiments"};
  app.require_subcommand(1);
  Overrides o;
  std::string results_dir;

  auto* gen = app.add_subcommand("generate", "render the training and validation pools");
  add_common(gen, o);
  auto* trn = app.add_subcommand("train", "train one checkpoint per (strategy, seed)");
  add_common(trn, o);
  add_training(trn, o);
  auto* evl = app.add_subcommand("evaluate", "evaluate checkpoints on the day and night validation sets");
  add_common(evl, o);
  add_training(evl, o);
  auto* exp = app.add_subcommand("experiment", "generate, train, evaluate and report");
  add_common(exp, o);
  add_training(exp, o);
  auto* rep = app.add_subcommand("report", "aggregate per-cell CSVs into the median table");
  rep->add_option("results", results_dir, "results directory")->required();

  CLI11_PARSE(app, argc, argv);

  std::ostream* log = &std::cerr;
  try {
    if (rep->parsed()) {
      std::cout << runwaysim::render_report_text(runwaysim::cmd_report(results_dir));
      return 0;
    }
    const auto config = resolve(o);
    if (gen->parsed()) {
      const auto d = runwaysim::cmd_generate(config, o.out, log);
      std::cout << "real_train " << d.real_train.size() << ", synth_train " << d.synth_train.size() << ", val_day "
                << d.val_day.size() << ", val_night " << d.val_night.size() << "\n";
    } else if (trn->parsed()) {
      const auto d = runwaysim::cmd_generate(config, o.out, log);
      for (auto s : config.strategies)
        for (auto seed : config.seeds) {
          runwaysim::cmd_train(config, d, s, seed, o.out, log);
          std::cout << runwaysim::RunPaths{o.out}.checkpoint(s, seed).string() << "\n";
        }
    } else if (evl->parsed()) {
      runwaysim::cmd_evaluate(config, o.out, log);
      std::cout << runwaysim::render_report_text(runwaysim::cmd_report(runwaysim::RunPaths{o.out}.results()));
    } else if (exp->parsed()) {
      std::cout << runwaysim::render_report_text(runwaysim::cmd_experiment(config, o.out, log));
    }
  } catch (const runwaysim::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
