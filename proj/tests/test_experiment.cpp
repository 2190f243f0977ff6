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
#include <gtest/gtest.h>

#include <fstream>
#include <set>
#include <sstream>

#include "runwaysim/experiment.hpp"
#include "testutil.hpp"

namespace runwaysim {
namespace {

using testing::TempDir;
namespace fs = std::filesystem;

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  EXPECT_TRUE(in) << p;
  return {std::istreambuf_iterator<char>(in), {}};
}

nlohmann::json small_config_json() {
  return {{"name", "small"},
          {"runway_db", (testing::source_dir() / "data" / "runways.json").string()},
          {"airports",
           {{"real", {"KALB", "KCSS"}},
            {"synthetic", {"KALB", "KCSS", "KEHI", "KFTQ"}},
            {"validation", {"KAAX", "KCVW"}}}},
          {"counts", {{"real_train", 8}, {"synth_train", 32}, {"val_per_condition", 8}}},
          {"night_fraction", 0.5},
          {"strategies", {"REAL", "MIX"}},
          {"seeds", {7}},
          {"train", {{"iterations", 40}}}};
}

ExperimentConfig small_config() { return experiment_config_from_json(small_config_json()); }

TEST(Strategy, ParsesNamesCaseInsensitively) {
  EXPECT_EQ(parse_strategy("care"), Strategy::Care);
  EXPECT_EQ(parse_strategy("SAMPLER"), Strategy::Sampler);
  EXPECT_THROW(parse_strategy("DANN"), InvalidArgument);
  const auto list = parse_strategy_list(" real, MIX ,real");
  ASSERT_EQ(list.size(), 2u);
  EXPECT_EQ(list[0], Strategy::Real);
  EXPECT_EQ(list[1], Strategy::Mix);
  EXPECT_THROW(parse_strategy_list(" , "), InvalidArgument);
}

TEST(Strategy, CareIsBalancedWithLambda) {
  ExperimentConfig c = small_config();
  EXPECT_EQ(sampling_for(Strategy::Care).kind, SamplingKind::Balanced);
  EXPECT_EQ(sampling_for(Strategy::Mix).kind, SamplingKind::Mix);
  EXPECT_DOUBLE_EQ(train_config_for(c, Strategy::Care, 3).lambda, 0.1);
  EXPECT_DOUBLE_EQ(train_config_for(c, Strategy::Sampler, 3).lambda, 0.0);
  EXPECT_EQ(train_config_for(c, Strategy::Sampler, 3).seed, 3u);
}

TEST(Config, ShippedConfigsLoad) {
  for (const char* name : {"desk.json", "desk_day.json"}) {
    const auto c = load_experiment_config(testing::source_dir() / "configs" / name);
    EXPECT_EQ(c.real_train, 200u);
    EXPECT_EQ(c.synth_train, 2000u);
    EXPECT_EQ(c.val_per_condition, 200u);
    EXPECT_EQ(c.seeds.size(), 3u);
    EXPECT_TRUE(fs::exists(c.runway_db)) << c.runway_db;
  }
  const auto desk = load_experiment_config(testing::source_dir() / "configs" / "desk.json");
  EXPECT_EQ(desk.synth_day(), 1000u);
  EXPECT_EQ(desk.synth_night(), 1000u);
  EXPECT_EQ(desk.strategies.size(), 5u);
}

TEST(Config, RejectsBadSettings) {
  auto bad = [](auto mutate) {
    nlohmann::json j = small_config_json();
    mutate(j);
    return j;
  };
  EXPECT_THROW(experiment_config_from_json(bad([](auto& j) { j["airports"]["real"].push_back("KAAX"); })),
               InvalidArgument);
  EXPECT_THROW(experiment_config_from_json(bad([](auto& j) { j["counts"]["real_train"] = 9; })), InvalidArgument);
  EXPECT_THROW(experiment_config_from_json(bad([](auto& j) { j["night_fraction"] = 1.5; })), InvalidArgument);
  EXPECT_THROW(experiment_config_from_json(bad([](auto& j) { j["counts"]["val_per_condition"] = 0; })),
               InvalidArgument);
  EXPECT_THROW(experiment_config_from_json(bad([](auto& j) { j.erase("runway_db"); })), SchemaError);
  EXPECT_THROW(experiment_config_from_json(bad([](auto& j) { j["seeds"] = {-1}; })), SchemaError);
  EXPECT_THROW(experiment_config_from_json(bad([](auto& j) { j["strategies"] = {"FOO"}; })), InvalidArgument);
}

TEST(Report, MedianOddEvenSingle) {
  EXPECT_DOUBLE_EQ(median({0.3, 0.1, 0.2}), 0.2);
  EXPECT_DOUBLE_EQ(median({0.4, 0.1, 0.3, 0.2}), 0.25);
  EXPECT_DOUBLE_EQ(median({0.7}), 0.7);
  EXPECT_THROW(median({}), InvalidArgument);
}

EvalReport fake_report(Condition c, const std::string& s, double ap) {
  EvalReport r;
  r.condition = c;
  r.strategy = s;
  r.coco_ap = ap;
  r.per_threshold_ap.fill(ap);
  return r;
}

void write_cell(const fs::path& dir, const std::string& s, std::uint64_t seed, double day, double night) {
  std::ofstream out(dir / ("cell_" + s + "_seed" + std::to_string(seed) + ".csv"));
  out << csv_header() << "\n"
      << csv_row(fake_report(Condition::Day, s, day), seed) << "\n"
      << csv_row(fake_report(Condition::Night, s, night), seed) << "\n";
}

TEST(Report, EmptyDirectoryThrowsNoResults) {
  TempDir tmp;
  EXPECT_THROW(cmd_report(tmp.path()), NoResults);
  EXPECT_THROW(cmd_report(tmp / "missing"), NoResults);
}

TEST(Report, AggregatesMedianOverSeeds) {
  TempDir tmp;
  write_cell(tmp.path(), "MIX", 1, 0.30, 0.10);
  write_cell(tmp.path(), "MIX", 2, 0.50, 0.20);
  write_cell(tmp.path(), "MIX", 3, 0.40, 0.60);
  write_cell(tmp.path(), "REAL", 1, 0.25, 0.05);
  const ReportTable t = cmd_report(tmp.path());
  ASSERT_EQ(t.strategies, (std::vector<std::string>{"REAL", "MIX"}));
  EXPECT_NEAR(t.find(Condition::Day, "MIX")->coco_ap, 0.40, 1e-12);
  EXPECT_NEAR(t.find(Condition::Night, "MIX")->coco_ap, 0.20, 1e-12);
  EXPECT_EQ(t.find(Condition::Day, "MIX")->seeds, 3u);
  // One seed: the aggregate is that seed's value.
  EXPECT_NEAR(t.find(Condition::Day, "REAL")->coco_ap, 0.25, 1e-12);
  for (const char* f : {"report.txt", "report.csv", "report_day.svg", "report_night.svg"})
    EXPECT_TRUE(fs::exists(tmp / f)) << f;

  const std::string text = slurp(tmp / "report.txt");
  EXPECT_NE(text.find("DAY AP"), std::string::npos);
  EXPECT_NE(text.find("NIGHT AP"), std::string::npos);
  EXPECT_NE(text.find("40.00"), std::string::npos);
  EXPECT_LT(text.find("REAL"), text.find("MIX"));
  EXPECT_NE(slurp(tmp / "report_night.svg").find("<svg"), std::string::npos);
}

TEST(Report, RejectsMalformedCsv) {
  TempDir tmp;
  std::ofstream(tmp / "cell_X_seed1.csv") << "not,a,header\n";
  EXPECT_THROW(cmd_report(tmp.path()), SchemaError);
}

class SmallExperiment : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    root_ = new fs::path(fs::temp_directory_path() / "runwaysim_SmallExperiment");
    fs::remove_all(*root_);
    table_ = new ReportTable(cmd_experiment(small_config(), *root_));
  }
  static void TearDownTestSuite() {
    fs::remove_all(*root_);
    delete table_;
    delete root_;
  }
  static fs::path* root_;
  static ReportTable* table_;
};

fs::path* SmallExperiment::root_ = nullptr;
ReportTable* SmallExperiment::table_ = nullptr;

TEST_F(SmallExperiment, TableIsConditionsByStrategies) {
  EXPECT_EQ(table_->strategies, (std::vector<std::string>{"REAL", "MIX"}));
  EXPECT_EQ(table_->cells.size(), 4u);
  for (Condition c : {Condition::Day, Condition::Night})
    for (const char* s : {"REAL", "MIX"}) {
      const auto* cell = table_->find(c, s);
      ASSERT_NE(cell, nullptr);
      EXPECT_GE(cell->coco_ap, 0.0);
      EXPECT_LE(cell->coco_ap, 1.0);
    }
}

TEST_F(SmallExperiment, PoolsHaveConfiguredCounts) {
  const RunPaths paths{*root_};
  const ExperimentData d = load_experiment_data(paths);
  EXPECT_EQ(d.real_train.size(), 8u);
  EXPECT_EQ(d.synth_train.size(), 32u);
  EXPECT_EQ(d.val_day.size(), 8u);
  EXPECT_EQ(d.val_night.size(), 8u);
  std::size_t night = 0;
  for (const auto& s : d.synth_train.samples) {
    night += s.condition == Condition::Night;
    EXPECT_EQ(s.domain, Domain::Synthetic);
    EXPECT_TRUE(fs::exists(d.synth_train.image_path(s)));
  }
  EXPECT_EQ(night, 16u);
  for (const auto& s : d.val_night.samples) EXPECT_EQ(s.condition, Condition::Night);
  EXPECT_TRUE(fs::exists(paths.data() / "val_day" / "coco.json"));
}

TEST_F(SmallExperiment, PerSeedCsvLayout) {
  std::istringstream in(slurp(*root_ / "results" / "per_seed.csv"));
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line.rfind("condition,strategy,seed,coco_ap,ap_0.50,ap_0.55", 0), 0u);
  EXPECT_EQ(line.substr(line.size() - 8), ",ap_0.95");
  std::vector<std::string> keys;
  while (std::getline(in, line)) {
    const auto f = detail::split_csv(line);
    ASSERT_EQ(f.size(), 4 + kNumIouThresholds);
    keys.push_back(f[0] + "," + f[1] + "," + f[2]);
  }
  EXPECT_EQ(keys, (std::vector<std::string>{"day,REAL,7", "day,MIX,7", "night,REAL,7", "night,MIX,7"}));
}

TEST_F(SmallExperiment, WritesCheckpointsDetectionsAndExamples) {
  const RunPaths paths{*root_};
  for (Strategy s : {Strategy::Real, Strategy::Mix}) {
    EXPECT_TRUE(fs::exists(paths.checkpoint(s, 7)));
    EXPECT_TRUE(fs::exists(paths.cell_csv(s, 7)));
  }
  EXPECT_TRUE(fs::exists(paths.results() / "detections" / "MIX_seed7_night.json"));
  const auto ex = detail::read_json_file(paths.results() / "inference_examples.json");
  ASSERT_EQ(ex.size(), 2u);
  EXPECT_EQ(ex[0]["condition"], "day");
  EXPECT_EQ(ex[1]["condition"], "night");
  EXPECT_TRUE(ex[1]["detections"].contains("REAL"));
  EXPECT_TRUE(ex[1]["detections"].contains("MIX"));
}

TEST_F(SmallExperiment, RerunIsIdentical) {
  TempDir tmp;
  const ReportTable again = cmd_experiment(small_config(), tmp.path());
  EXPECT_EQ(again.cells.size(), table_->cells.size());
  for (const char* pool : {"real_train", "synth_train", "val_day", "val_night"})
    EXPECT_EQ(slurp(tmp / "data" / pool / "manifest.json"), slurp(*root_ / "data" / pool / "manifest.json"))
        << pool;
  EXPECT_EQ(slurp(tmp / "results" / "report.csv"), slurp(*root_ / "results" / "report.csv"));
  EXPECT_EQ(slurp(tmp / "results" / "per_seed.csv"), slurp(*root_ / "results" / "per_seed.csv"));
}

TEST_F(SmallExperiment, GenerateReusesMatchingDataAndRedoesStale) {
  const auto manifest = RunPaths{*root_}.manifest("real_train");
  const auto stamp_time = fs::last_write_time(manifest);
  cmd_generate(small_config(), *root_);
  EXPECT_EQ(fs::last_write_time(manifest), stamp_time);

  TempDir tmp;
  fs::copy(*root_ / "data", tmp / "data", fs::copy_options::recursive);
  auto changed = small_config_json();
  changed["data_seed"] = 99;
  const auto d = cmd_generate(experiment_config_from_json(changed), tmp.path());
  EXPECT_NE(slurp(tmp / "data" / "real_train" / "manifest.json"), slurp(manifest));
  EXPECT_EQ(d.real_train.size(), 8u);
}

TEST_F(SmallExperiment, SamplerStreamNeverSeesValidationAirports) {
  const ExperimentConfig c = small_config();
  const ExperimentData d = load_experiment_data(RunPaths{*root_});
  const std::set<std::string> val(c.validation_airports.begin(), c.validation_airports.end());
  for (Strategy s : kAllStrategies) {
    Sampler sampler = make_sampler(sampling_for(s), d.real_train, d.synth_train, 8, 11);
    std::size_t drawn = 0;
    for (int b = 0; b < 200; ++b)
      for (const auto& item : sampler.next().items) {
        EXPECT_FALSE(val.contains(item.sample->airport_id)) << to_string(s);
        ++drawn;
      }
    EXPECT_EQ(drawn, 1600u);
  }
  for (const auto& a : airports_of(d.val_day)) EXPECT_TRUE(val.contains(a));
}

TEST_F(SmallExperiment, HygieneCheckCatchesLeakedSample) {
  const ExperimentConfig c = small_config();
  ExperimentData d = load_experiment_data(RunPaths{*root_});
  EXPECT_NO_THROW(check_airport_hygiene(c, d));
  d.synth_train.samples.push_back(d.val_day.samples.front());
  EXPECT_THROW(check_airport_hygiene(c, d), InvalidArgument);
}

TEST_F(SmallExperiment, CareWithZeroLambdaMatchesSampler) {
  TempDir tmp;
  ExperimentConfig c = small_config();
  c.care_lambda = 0.0;
  const ExperimentData d = load_experiment_data(RunPaths{*root_});
  const Model care = cmd_train(c, d, Strategy::Care, 5, tmp.path());
  const Model sampler = cmd_train(c, d, Strategy::Sampler, 5, tmp.path());
  EXPECT_EQ(care.params, sampler.params);
  const RunPaths paths{tmp.path()};
  EXPECT_EQ(slurp(paths.checkpoint(Strategy::Care, 5)), slurp(paths.checkpoint(Strategy::Sampler, 5)));

  c.care_lambda = 0.5;
  const Model weighted = cmd_train(c, d, Strategy::Care, 5, tmp.path());
  EXPECT_NE(weighted.params, sampler.params);
}

TEST_F(SmallExperiment, EvaluateReadsCheckpoints) {
  TempDir tmp;
  fs::copy(*root_, tmp.path(), fs::copy_options::recursive);
  fs::remove_all(tmp / "results");
  const auto cells = cmd_evaluate(small_config(), tmp.path());
  ASSERT_EQ(cells.size(), 2u);
  EXPECT_EQ(slurp(RunPaths{tmp.path()}.cell_csv(Strategy::Mix, 7)),
            slurp(RunPaths{*root_}.cell_csv(Strategy::Mix, 7)));
}

}  // namespace
}  // namespace runwaysim
