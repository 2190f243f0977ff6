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
#pragma once

// Experiment orchestration: one JSON config drives data generation, training
// of every (strategy, seed) cell, evaluation on the day and night validation
// sets, and the median report.
//
// Output layout under the run directory:
//   data/{real_train,synth_train,val_day,val_night}/manifest.json
//   checkpoints/<STRATEGY>_seed<N>.json
//   results/cell_<STRATEGY>_seed<N>.csv, per_seed.csv, detections/, report.*

#include <algorithm>
#include <array>
#include <cctype>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "runwaysim/dataset.hpp"
#include "runwaysim/detector.hpp"
#include "runwaysim/errors.hpp"
#include "runwaysim/eval.hpp"
#include "runwaysim/sampling.hpp"
#include "runwaysim/scenegen.hpp"

namespace runwaysim {

enum class Strategy { Real, Synth, Mix, Sampler, Care };

inline constexpr std::array<Strategy, 5> kAllStrategies{Strategy::Real, Strategy::Synth, Strategy::Mix,
                                                        Strategy::Sampler, Strategy::Care};

inline const char* to_string(Strategy s) {
  switch (s) {
    case Strategy::Real: return "REAL";
    case Strategy::Synth: return "SYNTH";
    case Strategy::Mix: return "MIX";
    case Strategy::Sampler: return "SAMPLER";
    case Strategy::Care: return "CARE";
  }
  return "?";
}

inline Strategy parse_strategy(std::string text) {
  for (auto& c : text) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  for (Strategy s : kAllStrategies)
    if (text == to_string(s)) return s;
  throw InvalidArgument("unknown strategy '" + text + "' (expected REAL, SYNTH, MIX, SAMPLER or CARE)");
}

/// "REAL,MIX" -> {Real, Mix}; whitespace around names is ignored.
inline std::vector<Strategy> parse_strategy_list(const std::string& text) {
  std::vector<Strategy> out;
  std::stringstream in(text);
  std::string item;
  while (std::getline(in, item, ',')) {
    const auto b = item.find_first_not_of(" \t"), e = item.find_last_not_of(" \t");
    if (b == std::string::npos) continue;
    const Strategy s = parse_strategy(item.substr(b, e - b + 1));
    if (std::find(out.begin(), out.end(), s) == out.end()) out.push_back(s);
  }
  if (out.empty()) throw InvalidArgument("empty strategy list");
  return out;
}

/// CARE is the balanced sampler plus the alignment term.
inline SamplingStrategy sampling_for(Strategy s) {
  switch (s) {
    case Strategy::Real: return {SamplingKind::RealOnly};
    case Strategy::Synth: return {SamplingKind::SynthOnly};
    case Strategy::Mix: return {SamplingKind::Mix};
    case Strategy::Sampler:
    case Strategy::Care: return {SamplingKind::Balanced};
  }
  return {};
}

// --- configuration ---------------------------------------------------------------

struct PoolPoses {
  PoseRanges real{{55, 60}, {-4, 4}, {740, 780}, {-1.5, 1.5}, {-1, 1}};
  PoseRanges synthetic{{40, 80}, {-30, 30}, {600, 1000}, {-7, 7}, {-5, 5}};
  PoseRanges validation{{40, 80}, {-30, 30}, {600, 1000}, {-7, 7}, {-5, 5}};
};

struct ExperimentConfig {
  std::string name = "experiment";
  std::filesystem::path runway_db;
  std::vector<std::string> real_airports;
  std::vector<std::string> synth_airports;
  std::vector<std::string> validation_airports;
  std::size_t real_train = 200;
  std::size_t synth_train = 2000;
  std::size_t val_per_condition = 200;
  double night_fraction = 0.5;
  double domain_gap = 0.5;
  double label_noise_px = 0.0;
  std::vector<Strategy> strategies{kAllStrategies.begin(), kAllStrategies.end()};
  TrainConfig train;
  double care_lambda = 0.1;
  std::vector<std::uint64_t> seeds{1, 2, 3};
  std::uint64_t data_seed = 2026;
  PoolPoses poses;
  CameraIntrinsics camera = default_intrinsics();

  std::size_t synth_night() const {
    return static_cast<std::size_t>(std::llround(static_cast<double>(synth_train) * night_fraction));
  }
  std::size_t synth_day() const { return synth_train - synth_night(); }
};

namespace detail {

inline Range range_from_json(const nlohmann::json& j, const char* key, Range fallback) {
  if (!j.contains(key)) return fallback;
  const auto& v = j.at(key);
  if (!v.is_array() || v.size() != 2 || !v[0].is_number() || !v[1].is_number()) throw SchemaError(key);
  return {v[0].get<double>(), v[1].get<double>()};
}

inline PoseRanges pose_ranges_from_json(const nlohmann::json& j, const PoseRanges& fallback) {
  if (!j.is_object()) throw SchemaError("poses");
  return {range_from_json(j, "altitude_m", fallback.altitude), range_from_json(j, "lateral_m", fallback.lateral),
          range_from_json(j, "distance_m", fallback.distance),
          range_from_json(j, "yaw_jitter_deg", fallback.yaw_jitter),
          range_from_json(j, "pitch_jitter_deg", fallback.pitch_jitter)};
}

inline nlohmann::json to_json(const Range& r) { return nlohmann::json::array({r.min, r.max}); }

inline nlohmann::json to_json(const PoseRanges& p) {
  return {{"altitude_m", to_json(p.altitude)},
          {"lateral_m", to_json(p.lateral)},
          {"distance_m", to_json(p.distance)},
          {"yaw_jitter_deg", to_json(p.yaw_jitter)},
          {"pitch_jitter_deg", to_json(p.pitch_jitter)}};
}

inline std::vector<std::string> string_list(const nlohmann::json& j, const char* key) {
  const auto& v = require(j, key);
  if (!v.is_array()) throw SchemaError(key);
  std::vector<std::string> out;
  for (const auto& e : v) {
    if (!e.is_string()) throw SchemaError(key);
    out.push_back(e.get<std::string>());
  }
  return out;
}

template <typename T>
T number_or(const nlohmann::json& j, const char* key, T fallback) {
  if (!j.contains(key)) return fallback;
  const auto& v = j.at(key);
  if (!v.is_number()) throw SchemaError(key);
  if constexpr (std::is_integral_v<T>) {
    if (!v.is_number_integer() || (std::is_unsigned_v<T> && v.get<long long>() < 0)) throw SchemaError(key);
  }
  return v.get<T>();
}

}  // namespace detail

/// Checks everything that can be checked without the runway database.
inline void validate(const ExperimentConfig& c) {
  if (c.real_airports.empty() || c.synth_airports.empty() || c.validation_airports.empty())
    throw InvalidArgument("real, synthetic and validation airport lists must be non-empty");
  const std::set<std::string> val(c.validation_airports.begin(), c.validation_airports.end());
  for (const auto* list : {&c.real_airports, &c.synth_airports})
    for (const auto& a : *list)
      if (val.contains(a)) throw InvalidArgument("validation airport " + a + " also appears in a training pool");
  for (const auto* list : {&c.real_airports, &c.synth_airports, &c.validation_airports})
    if (std::set<std::string>(list->begin(), list->end()).size() != list->size())
      throw InvalidArgument("duplicate airport in an airport list");
  if (c.real_train == 0 || c.synth_train == 0 || c.val_per_condition == 0)
    throw InvalidArgument("dataset counts must be > 0");
  if (!(c.night_fraction >= 0.0 && c.night_fraction <= 1.0))
    throw InvalidArgument("night_fraction must be in [0, 1]");
  auto divisible = [](std::size_t count, std::size_t airports, const char* what) {
    if (count % airports != 0)
      throw InvalidArgument(std::string(what) + " count " + std::to_string(count) + " is not divisible by its " +
                            std::to_string(airports) + " airports");
  };
  divisible(c.real_train, c.real_airports.size(), "real_train");
  divisible(c.synth_day(), c.synth_airports.size(), "synthetic day");
  divisible(c.synth_night(), c.synth_airports.size(), "synthetic night");
  divisible(c.val_per_condition, c.validation_airports.size(), "val_per_condition");
  if (c.strategies.empty()) throw InvalidArgument("no strategies configured");
  if (c.seeds.empty()) throw InvalidArgument("no seeds configured");
  if (!(c.care_lambda >= 0.0)) throw InvalidArgument("lambda must be >= 0");
  validate(c.train);
  if (c.train.grid.image_width != c.camera.image_width || c.train.grid.image_height != c.camera.image_height)
    throw InvalidArgument("anchor grid and camera image sizes differ");
  SceneConfig probe;
  probe.domain_gap = c.domain_gap;
  probe.label_noise_px = c.label_noise_px;
  for (const auto* p : {&c.poses.real, &c.poses.synthetic, &c.poses.validation}) {
    probe.pose_ranges = *p;
    validate(probe);
  }
  validate(c.camera);
}

/// Parses a config document. Relative paths resolve against `base_dir`.
inline ExperimentConfig experiment_config_from_json(const nlohmann::json& j,
                                                    const std::filesystem::path& base_dir = {}) {
  using detail::number_or;
  if (!j.is_object()) throw SchemaError("config");
  ExperimentConfig c;
  if (j.contains("name")) c.name = detail::require_string(j, "name");
  const std::filesystem::path db = detail::require_string(j, "runway_db");
  c.runway_db = db.is_absolute() ? db : base_dir / db;
  const auto& airports = detail::require(j, "airports");
  c.real_airports = detail::string_list(airports, "real");
  c.synth_airports = detail::string_list(airports, "synthetic");
  c.validation_airports = detail::string_list(airports, "validation");
  if (j.contains("counts")) {
    const auto& n = j.at("counts");
    c.real_train = number_or(n, "real_train", c.real_train);
    c.synth_train = number_or(n, "synth_train", c.synth_train);
    c.val_per_condition = number_or(n, "val_per_condition", c.val_per_condition);
  }
  c.night_fraction = number_or(j, "night_fraction", c.night_fraction);
  c.domain_gap = number_or(j, "domain_gap", c.domain_gap);
  c.label_noise_px = number_or(j, "label_noise_px", c.label_noise_px);
  if (j.contains("strategies")) {
    c.strategies.clear();
    for (const auto& s : detail::string_list(j, "strategies")) {
      const Strategy st = parse_strategy(s);
      if (std::find(c.strategies.begin(), c.strategies.end(), st) == c.strategies.end()) c.strategies.push_back(st);
    }
  }
  if (j.contains("seeds")) {
    const auto& s = j.at("seeds");
    if (!s.is_array()) throw SchemaError("seeds");
    c.seeds.clear();
    for (const auto& v : s) {
      if (!v.is_number_integer() || v.get<long long>() < 0) throw SchemaError("seeds");
      c.seeds.push_back(v.get<std::uint64_t>());
    }
  }
  c.data_seed = number_or(j, "data_seed", c.data_seed);
  c.care_lambda = number_or(j, "care_lambda", c.care_lambda);
  if (j.contains("train")) {
    const auto& t = j.at("train");
    c.train.batch_size = number_or(t, "batch_size", c.train.batch_size);
    c.train.learning_rate = number_or(t, "learning_rate", c.train.learning_rate);
    c.train.iterations = number_or(t, "iterations", c.train.iterations);
    c.train.anchors_per_image = number_or(t, "anchors_per_image", c.train.anchors_per_image);
    c.train.positive_fraction = number_or(t, "positive_fraction", c.train.positive_fraction);
    c.train.shape.patch_size = number_or(t, "patch_size", c.train.shape.patch_size);
    c.train.shape.feature_dim = number_or(t, "feature_dim", c.train.shape.feature_dim);
  }
  if (j.contains("poses")) {
    const auto& p = j.at("poses");
    if (p.contains("real")) c.poses.real = detail::pose_ranges_from_json(p.at("real"), c.poses.real);
    if (p.contains("synthetic"))
      c.poses.synthetic = detail::pose_ranges_from_json(p.at("synthetic"), c.poses.synthetic);
    if (p.contains("validation"))
      c.poses.validation = detail::pose_ranges_from_json(p.at("validation"), c.poses.validation);
  }
  validate(c);
  return c;
}

inline ExperimentConfig load_experiment_config(const std::filesystem::path& path) {
  return experiment_config_from_json(detail::read_json_file(path), path.parent_path());
}

/// Everything that determines the generated data; used as the reuse stamp.
inline nlohmann::json data_stamp(const ExperimentConfig& c) {
  std::ifstream in(c.runway_db, std::ios::binary);
  if (!in) throw IoError("cannot open runway database " + c.runway_db.string());
  const std::string db_text{std::istreambuf_iterator<char>(in), {}};
  return {{"runway_db_fnv1a", fnv1a(db_text)},
          {"real_airports", c.real_airports},
          {"synth_airports", c.synth_airports},
          {"validation_airports", c.validation_airports},
          {"counts", {c.real_train, c.synth_day(), c.synth_night(), c.val_per_condition}},
          {"domain_gap", c.domain_gap},
          {"label_noise_px", c.label_noise_px},
          {"data_seed", c.data_seed},
          {"poses",
           {detail::to_json(c.poses.real), detail::to_json(c.poses.synthetic), detail::to_json(c.poses.validation)}},
          {"camera",
           {c.camera.fx, c.camera.fy, c.camera.cx, c.camera.cy, c.camera.image_width, c.camera.image_height}}};
}

// --- data generation ---------------------------------------------------------------

struct ExperimentData {
  Dataset real_train;
  Dataset synth_train;
  Dataset val_day;
  Dataset val_night;
};

struct RunPaths {
  std::filesystem::path root;

  std::filesystem::path data() const { return root / "data"; }
  std::filesystem::path manifest(const std::string& pool) const { return data() / pool / "manifest.json"; }
  std::filesystem::path checkpoint(Strategy s, std::uint64_t seed) const {
    return root / "checkpoints" / (std::string(to_string(s)) + "_seed" + std::to_string(seed) + ".json");
  }
  std::filesystem::path results() const { return root / "results"; }
  std::filesystem::path cell_csv(Strategy s, std::uint64_t seed) const {
    return results() / ("cell_" + std::string(to_string(s)) + "_seed" + std::to_string(seed) + ".csv");
  }
};

using ExperimentLog = std::ostream*;

namespace detail {

inline void log_line(ExperimentLog log, const std::string& line) {
  if (log) *log << line << std::endl;
}

inline Dataset generate_pool(const ExperimentConfig& c, const RunwayDb& db,
                             const std::vector<std::string>& airports, Domain domain, Condition condition,
                             const PoseRanges& poses, std::size_t total, std::uint64_t stream,
                             const std::filesystem::path& dir, const std::string& name) {
  std::vector<SceneConfig> configs;
  for (const auto& a : airports) {
    SceneConfig s;
    s.domain = domain;
    s.condition = condition;
    s.airport_id = a;
    s.seed = mix_key(c.data_seed, stream);
    s.pose_ranges = poses;
    s.domain_gap = c.domain_gap;
    s.label_noise_px = c.label_noise_px;
    configs.push_back(s);
  }
  return generate_dataset(configs, db, total / airports.size(), dir, name, c.camera);
}

/// Rebases every image ref of `d` under `prefix`.
inline void prefix_refs(Dataset& d, const std::string& prefix) {
  for (auto& s : d.samples) s.image_ref = prefix + "/" + s.image_ref;
}

}  // namespace detail

/// Throws when a validation airport shows up in a training pool.
inline void check_airport_hygiene(const ExperimentConfig& c, const ExperimentData& d) {
  const std::set<std::string> val(c.validation_airports.begin(), c.validation_airports.end());
  for (const Dataset* pool : {&d.real_train, &d.synth_train})
    for (const auto& a : airports_of(*pool))
      if (val.contains(a)) throw InvalidArgument("validation airport " + a + " found in " + pool->name);
  for (const Dataset* pool : {&d.val_day, &d.val_night})
    for (const auto& a : airports_of(*pool))
      if (!val.contains(a)) throw InvalidArgument("non-validation airport " + a + " found in " + pool->name);
}

inline ExperimentData load_experiment_data(const RunPaths& paths) {
  return {load_manifest(paths.manifest("real_train")), load_manifest(paths.manifest("synth_train")),
          load_manifest(paths.manifest("val_day")), load_manifest(paths.manifest("val_night"))};
}

/// Produces the four pools under `out/data`. Data from an earlier run with
/// the same stamp is reused as-is.
inline ExperimentData cmd_generate(const ExperimentConfig& c, const std::filesystem::path& out,
                                   ExperimentLog log = nullptr) {
  validate(c);
  const RunPaths paths{out};
  const nlohmann::json stamp = data_stamp(c);
  const auto stamp_path = paths.data() / "stamp.json";
  if (std::filesystem::exists(stamp_path)) {
    try {
      if (detail::read_json_file(stamp_path) == stamp) {
        ExperimentData d = load_experiment_data(paths);
        check_airport_hygiene(c, d);
        detail::log_line(log, "data: reusing " + paths.data().string());
        return d;
      }
    } catch (const Error&) {
      // Incomplete or stale data: regenerate below.
    }
  }
  std::filesystem::remove_all(paths.data());

  const RunwayDb db = load_runway_db(c.runway_db);
  for (const auto* list : {&c.real_airports, &c.synth_airports, &c.validation_airports})
    for (const auto& a : *list)
      if (!db.contains(a)) throw UnknownAirport(a);

  ExperimentData d;
  detail::log_line(log, "data: real_train (" + std::to_string(c.real_train) + ")");
  d.real_train = detail::generate_pool(c, db, c.real_airports, Domain::Real, Condition::Day, c.poses.real,
                                       c.real_train, 1, paths.data() / "real_train", "real_train");

  const auto synth_dir = paths.data() / "synth_train";
  d.synth_train = Dataset{"synth_train", {}, synth_dir};
  if (c.synth_day() > 0) {
    detail::log_line(log, "data: synth_train day (" + std::to_string(c.synth_day()) + ")");
    Dataset day = detail::generate_pool(c, db, c.synth_airports, Domain::Synthetic, Condition::Day,
                                        c.poses.synthetic, c.synth_day(), 2, synth_dir / "day", "synth_day");
    detail::prefix_refs(day, "day");
    d.synth_train.samples.insert(d.synth_train.samples.end(), day.samples.begin(), day.samples.end());
  }
  if (c.synth_night() > 0) {
    detail::log_line(log, "data: synth_train night (" + std::to_string(c.synth_night()) + ")");
    Dataset night = detail::generate_pool(c, db, c.synth_airports, Domain::Synthetic, Condition::Night,
                                          c.poses.synthetic, c.synth_night(), 3, synth_dir / "night", "synth_night");
    detail::prefix_refs(night, "night");
    d.synth_train.samples.insert(d.synth_train.samples.end(), night.samples.begin(), night.samples.end());
  }
  save_manifest(d.synth_train, synth_dir / "manifest.json");

  detail::log_line(log, "data: val_day / val_night (" + std::to_string(c.val_per_condition) + " each)");
  d.val_day = detail::generate_pool(c, db, c.validation_airports, Domain::Real, Condition::Day, c.poses.validation,
                                    c.val_per_condition, 4, paths.data() / "val_day", "val_day");
  d.val_night = detail::generate_pool(c, db, c.validation_airports, Domain::Real, Condition::Night,
                                      c.poses.validation, c.val_per_condition, 5, paths.data() / "val_night",
                                      "val_night");
  export_coco(d.val_day, paths.data() / "val_day" / "coco.json");
  export_coco(d.val_night, paths.data() / "val_night" / "coco.json");
  check_airport_hygiene(c, d);
  detail::write_json_file(stamp, stamp_path);
  return d;
}

// --- training and evaluation ---------------------------------------------------------

inline TrainConfig train_config_for(const ExperimentConfig& c, Strategy s, std::uint64_t seed) {
  TrainConfig t = c.train;
  t.seed = seed;
  t.lambda = s == Strategy::Care ? c.care_lambda : 0.0;
  return t;
}

inline Model cmd_train(const ExperimentConfig& c, const ExperimentData& d, Strategy s, std::uint64_t seed,
                       const std::filesystem::path& out, ExperimentLog log = nullptr) {
  const TrainConfig t = train_config_for(c, s, seed);
  detail::log_line(log, std::string("train: ") + to_string(s) + " seed " + std::to_string(seed) + " (" +
                            std::to_string(t.iterations) + " iterations, lambda " + std::to_string(t.lambda) + ")");
  Model m = train(d.real_train, d.synth_train, sampling_for(s), t);
  save_checkpoint(m, t, RunPaths{out}.checkpoint(s, seed));
  return m;
}

struct Evaluation {
  EvalReport report;
  ImageDetections detections;
};

inline Evaluation evaluate_model(const Model& m, const Dataset& d, Condition condition, Strategy s) {
  Evaluation e;
  ImageGroundTruth gts;
  for (const auto& sample : d.samples) {
    if (!sample.bbox) throw UnlabeledSample("validation sample " + sample.image_ref + " has no label");
    e.detections.push_back(detect(m, read_png(d.image_path(sample))));
    gts.push_back({*sample.bbox});
  }
  e.report = coco_ap(e.detections, gts, condition, to_string(s));
  return e;
}

struct CellResult {
  Strategy strategy = Strategy::Real;
  std::uint64_t seed = 0;
  Evaluation day;
  Evaluation night;
};

namespace detail {

inline void write_text_file(const std::string& text, const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << text;
  if (!out) throw IoError("write failed for " + path.string());
}

inline std::vector<long long> coco_image_ids(const Dataset& d) {
  std::vector<long long> ids(d.size());
  for (std::size_t i = 0; i < ids.size(); ++i) ids[i] = static_cast<long long>(i) + 1;
  return ids;
}

}  // namespace detail

/// Evaluates one trained cell on both validation sets and flushes its CSV
/// and COCO-format detections.
inline CellResult evaluate_cell(const Model& m, const ExperimentData& d, Strategy s, std::uint64_t seed,
                                const std::filesystem::path& out, ExperimentLog log = nullptr) {
  const RunPaths paths{out};
  CellResult r{s, seed, evaluate_model(m, d.val_day, Condition::Day, s),
               evaluate_model(m, d.val_night, Condition::Night, s)};
  detail::write_text_file(csv_header() + "\n" + csv_row(r.day.report, seed) + "\n" + csv_row(r.night.report, seed) +
                              "\n",
                          paths.cell_csv(s, seed));
  const std::string stem = std::string(to_string(s)) + "_seed" + std::to_string(seed);
  detail::write_json_file(dets_to_coco(r.day.detections, detail::coco_image_ids(d.val_day)),
                          paths.results() / "detections" / (stem + "_day.json"));
  detail::write_json_file(dets_to_coco(r.night.detections, detail::coco_image_ids(d.val_night)),
                          paths.results() / "detections" / (stem + "_night.json"));
  char buf[128];
  std::snprintf(buf, sizeof buf, "eval: %s seed %llu day AP %.4f night AP %.4f", to_string(s),
                static_cast<unsigned long long>(seed), r.day.report.coco_ap, r.night.report.coco_ap);
  detail::log_line(log, buf);
  return r;
}

/// Evaluates existing checkpoints for the configured cells.
inline std::vector<CellResult> cmd_evaluate(const ExperimentConfig& c, const std::filesystem::path& out,
                                            ExperimentLog log = nullptr) {
  const RunPaths paths{out};
  const ExperimentData d = load_experiment_data(paths);
  check_airport_hygiene(c, d);
  std::vector<CellResult> cells;
  for (Strategy s : c.strategies)
    for (std::uint64_t seed : c.seeds)
      cells.push_back(evaluate_cell(load_checkpoint(paths.checkpoint(s, seed)).model, d, s, seed, out, log));
  return cells;
}

// --- reporting -------------------------------------------------------------------------------

class NoResults : public Error {
 public:
  explicit NoResults(const std::filesystem::path& dir) : Error("no result CSVs found in " + dir.string()) {}
};

inline double median(std::vector<double> v) {
  if (v.empty()) throw InvalidArgument("median of an empty list");
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

struct ResultRow {
  Condition condition = Condition::Day;
  std::string strategy;
  std::uint64_t seed = 0;
  double coco_ap = 0.0;
  std::array<double, kNumIouThresholds> per_threshold{};
};

struct ReportCell {
  std::size_t seeds = 0;
  double coco_ap = 0.0;  // median over seeds
  double ap50 = 0.0;     // median over seeds
};

/// Median table: columns are strategies in canonical order, rows the
/// conditions.
struct ReportTable {
  std::vector<std::string> strategies;
  std::map<std::pair<Condition, std::string>, ReportCell> cells;

  const ReportCell* find(Condition c, const std::string& s) const {
    const auto it = cells.find({c, s});
    return it == cells.end() ? nullptr : &it->second;
  }
};

namespace detail {

inline std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream in(line);
  std::string item;
  while (std::getline(in, item, ',')) out.push_back(item);
  return out;
}

inline std::vector<ResultRow> read_result_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line) || line != csv_header()) throw SchemaError("csv header in " + path.string());
  std::vector<ResultRow> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto f = split_csv(line);
    if (f.size() != 4 + kNumIouThresholds) throw SchemaError("csv row in " + path.string());
    ResultRow r;
    if (f[0] == "day") {
      r.condition = Condition::Day;
    } else if (f[0] == "night") {
      r.condition = Condition::Night;
    } else {
      throw SchemaError("condition");
    }
    r.strategy = f[1];
    try {
      r.seed = std::stoull(f[2]);
      r.coco_ap = std::stod(f[3]);
      for (std::size_t i = 0; i < kNumIouThresholds; ++i) r.per_threshold[i] = std::stod(f[4 + i]);
    } catch (const std::logic_error&) {
      throw SchemaError("numeric field in " + path.string());
    }
    rows.push_back(r);
  }
  return rows;
}

inline std::string fixed(double v, int digits) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

inline std::string bar_chart_svg(const ReportTable& t, Condition c) {
  const int width = 120 + 90 * static_cast<int>(t.strategies.size()), height = 300;
  const double plot_h = 200.0, base_y = 250.0;
  double top = 0.0;
  for (const auto& s : t.strategies)
    if (const auto* cell = t.find(c, s)) top = std::max(top, cell->coco_ap);
  top = top > 0.0 ? top * 1.15 : 1.0;
  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
      << "\" font-family=\"sans-serif\" font-size=\"12\">\n"
      << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
      << "<text x=\"" << width / 2 << "\" y=\"24\" text-anchor=\"middle\" font-size=\"14\">" << (c == Condition::Day ? "DAY" : "NIGHT")
      << " AP (median COCO AP x100)</text>\n"
      << "<line x1=\"60\" y1=\"" << base_y << "\" x2=\"" << width - 20 << "\" y2=\"" << base_y
      << "\" stroke=\"black\"/>\n";
  int x = 80;
  for (const auto& s : t.strategies) {
    const auto* cell = t.find(c, s);
    const double v = cell ? cell->coco_ap : 0.0;
    const double h = plot_h * v / top;
    svg << "<rect x=\"" << x << "\" y=\"" << fixed(base_y - h, 2) << "\" width=\"60\" height=\"" << fixed(h, 2)
        << "\" fill=\"" << (c == Condition::Day ? "#4a7ab5" : "#2f3b63") << "\"/>\n"
        << "<text x=\"" << x + 30 << "\" y=\"" << fixed(base_y - h - 6, 2) << "\" text-anchor=\"middle\">"
        << (cell ? fixed(100.0 * v, 2) : "n/a") << "</text>\n"
        << "<text x=\"" << x + 30 << "\" y=\"" << base_y + 18 << "\" text-anchor=\"middle\">" << s << "</text>\n";
    x += 90;
  }
  svg << "</svg>\n";
  return svg.str();
}

}  // namespace detail

/// Median table from rows; strategies follow the canonical order, any
/// unrecognised names follow alphabetically.
inline ReportTable aggregate(const std::vector<ResultRow>& rows) {
  std::map<std::pair<Condition, std::string>, std::pair<std::vector<double>, std::vector<double>>> values;
  std::set<std::string> names;
  for (const auto& r : rows) {
    auto& v = values[{r.condition, r.strategy}];
    v.first.push_back(r.coco_ap);
    v.second.push_back(r.per_threshold[0]);
    names.insert(r.strategy);
  }
  ReportTable t;
  for (Strategy s : kAllStrategies)
    if (names.erase(to_string(s))) t.strategies.push_back(to_string(s));
  t.strategies.insert(t.strategies.end(), names.begin(), names.end());
  for (const auto& [key, v] : values) t.cells[key] = {v.first.size(), median(v.first), median(v.second)};
  return t;
}

inline std::string render_report_text(const ReportTable& t) {
  std::ostringstream out;
  out << "Median COCO AP x100 over seeds\n\n";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%-10s", "");
  out << buf;
  for (const auto& s : t.strategies) {
    std::snprintf(buf, sizeof buf, "%9s", s.c_str());
    out << buf;
  }
  out << "\n";
  for (Condition c : {Condition::Day, Condition::Night}) {
    std::snprintf(buf, sizeof buf, "%-10s", c == Condition::Day ? "DAY AP" : "NIGHT AP");
    out << buf;
    for (const auto& s : t.strategies) {
      const auto* cell = t.find(c, s);
      if (cell) {
        std::snprintf(buf, sizeof buf, "%9.2f", 100.0 * cell->coco_ap);
      } else {
        std::snprintf(buf, sizeof buf, "%9s", "n/a");
      }
      out << buf;
    }
    out << "\n";
  }
  std::snprintf(buf, sizeof buf, "%-10s", "seeds");
  out << buf;
  for (const auto& s : t.strategies) {
    const auto* cell = t.find(Condition::Day, s);
    if (!cell) cell = t.find(Condition::Night, s);
    std::snprintf(buf, sizeof buf, "%9zu", cell ? cell->seeds : std::size_t{0});
    out << buf;
  }
  out << "\n";
  return out.str();
}

inline std::string render_report_csv(const ReportTable& t) {
  std::string out = "condition,strategy,seeds,median_coco_ap,median_ap_0.50\n";
  for (Condition c : {Condition::Day, Condition::Night})
    for (const auto& s : t.strategies)
      if (const auto* cell = t.find(c, s))
        out += std::string(to_string(c)) + "," + s + "," + std::to_string(cell->seeds) + "," +
               detail::fixed(cell->coco_ap, 6) + "," + detail::fixed(cell->ap50, 6) + "\n";
  return out;
}

/// Aggregates every cell_*.csv in `results_dir` into report.txt,
/// report.csv, report_day.svg and report_night.svg.
inline ReportTable cmd_report(const std::filesystem::path& results_dir) {
  std::vector<std::filesystem::path> files;
  if (std::filesystem::is_directory(results_dir))
    for (const auto& e : std::filesystem::directory_iterator(results_dir)) {
      const std::string name = e.path().filename().string();
      if (e.is_regular_file() && name.starts_with("cell_") && name.ends_with(".csv")) files.push_back(e.path());
    }
  if (files.empty()) throw NoResults(results_dir);
  std::sort(files.begin(), files.end());
  std::vector<ResultRow> rows;
  for (const auto& f : files) {
    const auto part = detail::read_result_csv(f);
    rows.insert(rows.end(), part.begin(), part.end());
  }
  const ReportTable t = aggregate(rows);
  detail::write_text_file(render_report_text(t), results_dir / "report.txt");
  detail::write_text_file(render_report_csv(t), results_dir / "report.csv");
  detail::write_text_file(detail::bar_chart_svg(t, Condition::Day), results_dir / "report_day.svg");
  detail::write_text_file(detail::bar_chart_svg(t, Condition::Night), results_dir / "report_night.svg");
  return t;
}

// --- full experiment ---------------------------------------------------------------------------

namespace detail {

inline nlohmann::json boxes_json(const std::vector<ScoredBox>& dets, std::size_t limit) {
  nlohmann::json out = nlohmann::json::array();
  for (std::size_t i = 0; i < std::min(limit, dets.size()); ++i)
    out.push_back({{"bbox", {dets[i].bbox.xmin, dets[i].bbox.ymin, dets[i].bbox.xmax, dets[i].bbox.ymax}},
                   {"score", dets[i].score}});
  return out;
}

/// For the first validation image of each condition: ground truth and the
/// top detections of every strategy's first seed.
inline nlohmann::json inference_examples(const ExperimentConfig& c, const ExperimentData& d,
                                         const std::vector<CellResult>& cells) {
  nlohmann::json out = nlohmann::json::array();
  for (Condition cond : {Condition::Day, Condition::Night}) {
    const Dataset& val = cond == Condition::Day ? d.val_day : d.val_night;
    const Sample& s = val.samples.front();
    nlohmann::json entry{{"condition", to_string(cond)},
                         {"image", (val.name + "/" + s.image_ref)},
                         {"airport_id", s.airport_id},
                         {"ground_truth", {s.bbox->xmin, s.bbox->ymin, s.bbox->xmax, s.bbox->ymax}},
                         {"detections", nlohmann::json::object()}};
    for (const auto& cell : cells) {
      if (cell.seed != c.seeds.front()) continue;
      const auto& dets = (cond == Condition::Day ? cell.day : cell.night).detections.front();
      entry["detections"][to_string(cell.strategy)] = boxes_json(dets, 3);
    }
    out.push_back(entry);
  }
  return out;
}

}  // namespace detail

/// Generate (or reuse) data, then train and evaluate every (strategy, seed)
/// cell in config order, flushing each cell's results as it completes.
inline ReportTable cmd_experiment(const ExperimentConfig& c, const std::filesystem::path& out,
                                  ExperimentLog log = nullptr) {
  const RunPaths paths{out};
  const ExperimentData d = cmd_generate(c, out, log);
  std::filesystem::remove_all(paths.results());
  std::vector<CellResult> cells;
  for (Strategy s : c.strategies)
    for (std::uint64_t seed : c.seeds) {
      const Model m = cmd_train(c, d, s, seed, out, log);
      cells.push_back(evaluate_cell(m, d, s, seed, out, log));
    }

  std::string per_seed = csv_header() + "\n";
  for (Condition cond : {Condition::Day, Condition::Night})
    for (const auto& cell : cells)
      per_seed += csv_row((cond == Condition::Day ? cell.day : cell.night).report, cell.seed) + "\n";
  detail::write_text_file(per_seed, paths.results() / "per_seed.csv");
  detail::write_json_file(detail::inference_examples(c, d, cells), paths.results() / "inference_examples.json");
  return cmd_report(paths.results());
}

}  // namespace runwaysim
