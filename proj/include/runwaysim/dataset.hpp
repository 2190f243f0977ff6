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

// Sample/Dataset model, per-airport balancing, airport-disjoint splits and the
// manifest / COCO annotation formats.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "json.hpp"
#include "runwaysim/errors.hpp"
#include "runwaysim/geometry.hpp"
#include "runwaysim/rng.hpp"

namespace runwaysim {

enum class Domain { Real, Synthetic };
enum class Condition { Day, Night };

inline const char* to_string(Domain d) { return d == Domain::Real ? "real" : "synthetic"; }
inline const char* to_string(Condition c) { return c == Condition::Day ? "day" : "night"; }

struct Sample {
  std::string image_ref;  // relative to the dataset root
  std::optional<BBox> bbox;
  Domain domain = Domain::Real;
  Condition condition = Condition::Day;
  std::string airport_id;
  int width = 0;
  int height = 0;

  friend bool operator==(const Sample&, const Sample&) = default;
};

/// Ordered, immutable-after-construction collection of samples. `root` is
/// where image refs resolve and is not part of equality.
struct Dataset {
  std::string name;
  std::vector<Sample> samples;
  std::filesystem::path root;

  std::size_t size() const { return samples.size(); }
  bool empty() const { return samples.empty(); }
  std::filesystem::path image_path(const Sample& s) const { return root / s.image_ref; }

  friend bool operator==(const Dataset& a, const Dataset& b) {
    return a.name == b.name && a.samples == b.samples;
  }
};

inline constexpr int kManifestSchemaVersion = 1;

class SchemaError : public Error {
 public:
  explicit SchemaError(std::string field)
      : Error("schema error at field '" + field + "'"), field_(std::move(field)) {}
  const std::string& field() const { return field_; }

 private:
  std::string field_;
};

class InsufficientAirportImages : public Error {
 public:
  InsufficientAirportImages(std::string airport, std::size_t have, std::size_t need)
      : Error("airport " + airport + " has " + std::to_string(have) + " images, " +
              std::to_string(need) + " required"),
        airport_id(std::move(airport)),
        have(have),
        need(need) {}
  std::string airport_id;
  std::size_t have;
  std::size_t need;
};

class EmptySplit : public Error {
 public:
  using Error::Error;
};

class UnlabeledSample : public Error {
 public:
  using Error::Error;
};

inline void validate(const BBox& b) {
  if (!std::isfinite(b.xmin) || !std::isfinite(b.ymin) || !std::isfinite(b.xmax) ||
      !std::isfinite(b.ymax) || b.xmin > b.xmax || b.ymin > b.ymax)
    throw InvalidArgument("invalid bounding box");
}

inline void validate(const Dataset& d) {
  std::set<std::string> refs;
  for (const auto& s : d.samples) {
    if (s.bbox) validate(*s.bbox);
    if (!refs.insert(s.image_ref).second)
      throw InvalidArgument("dataset " + d.name + " has duplicate image ref " + s.image_ref);
  }
}

/// Airport ids in lexicographic order.
inline std::vector<std::string> airports_of(const Dataset& d) {
  std::set<std::string> ids;
  for (const auto& s : d.samples) ids.insert(s.airport_id);
  return {ids.begin(), ids.end()};
}

/// Exactly `per_airport` samples from every airport of `pool`, chosen by a
/// seeded shuffle. Output: airports in lexicographic order, each in draw order.
inline Dataset build_balanced(const Dataset& pool, std::size_t per_airport, std::uint64_t seed) {
  std::map<std::string, std::vector<std::size_t>> by_airport;
  for (std::size_t i = 0; i < pool.samples.size(); ++i)
    by_airport[pool.samples[i].airport_id].push_back(i);

  Dataset out{pool.name + "-balanced", {}, pool.root};
  out.samples.reserve(per_airport * by_airport.size());
  for (auto& [airport, indices] : by_airport) {
    if (indices.size() < per_airport)
      throw InsufficientAirportImages(airport, indices.size(), per_airport);
    Rng rng(mix_key(seed, fnv1a(airport)));
    shuffle(indices, rng);
    for (std::size_t k = 0; k < per_airport; ++k) out.samples.push_back(pool.samples[indices[k]]);
  }
  return out;
}

struct Split {
  Dataset train;
  Dataset val;
};

inline Split split_by_airport(const Dataset& pool, const std::set<std::string>& validation_airports) {
  if (validation_airports.empty()) throw InvalidArgument("validation airport set is empty");
  Split out{{pool.name + "-train", {}, pool.root}, {pool.name + "-val", {}, pool.root}};
  for (const auto& s : pool.samples)
    (validation_airports.contains(s.airport_id) ? out.val : out.train).samples.push_back(s);
  if (out.train.empty()) throw EmptySplit("training side of the split is empty");
  if (out.val.empty()) throw EmptySplit("validation side of the split is empty");
  return out;
}

// --- manifest ------------------------------------------------------------------

namespace detail {

inline const nlohmann::json& require(const nlohmann::json& obj, const char* key) {
  if (!obj.is_object() || !obj.contains(key)) throw SchemaError(key);
  return obj.at(key);
}

inline std::string require_string(const nlohmann::json& obj, const char* key) {
  const auto& v = require(obj, key);
  if (!v.is_string()) throw SchemaError(key);
  return v.get<std::string>();
}

inline int require_int(const nlohmann::json& obj, const char* key) {
  const auto& v = require(obj, key);
  if (!v.is_number_integer()) throw SchemaError(key);
  return v.get<int>();
}

inline nlohmann::json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw IoError("cannot parse " + path.string() + ": " + e.what());
  }
}

inline void write_json_file(const nlohmann::json& j, const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << j.dump(2) << '\n';
  if (!out) throw IoError("write failed for " + path.string());
}

}  // namespace detail

inline nlohmann::json to_json(const Sample& s) {
  nlohmann::json j;
  j["image"] = s.image_ref;
  j["bbox"] = s.bbox ? nlohmann::json::array({s.bbox->xmin, s.bbox->ymin, s.bbox->xmax, s.bbox->ymax})
                     : nlohmann::json(nullptr);
  j["domain"] = to_string(s.domain);
  j["condition"] = to_string(s.condition);
  j["airport_id"] = s.airport_id;
  j["width"] = s.width;
  j["height"] = s.height;
  return j;
}

inline Sample sample_from_json(const nlohmann::json& j) {
  Sample s;
  s.image_ref = detail::require_string(j, "image");
  const auto& box = detail::require(j, "bbox");
  if (!box.is_null()) {
    if (!box.is_array() || box.size() != 4) throw SchemaError("bbox");
    for (const auto& v : box)
      if (!v.is_number()) throw SchemaError("bbox");
    s.bbox = BBox{box[0].get<double>(), box[1].get<double>(), box[2].get<double>(),
                  box[3].get<double>()};
  }
  const std::string domain = detail::require_string(j, "domain");
  if (domain == "real") {
    s.domain = Domain::Real;
  } else if (domain == "synthetic") {
    s.domain = Domain::Synthetic;
  } else {
    throw SchemaError("domain");
  }
  const std::string condition = detail::require_string(j, "condition");
  if (condition == "day") {
    s.condition = Condition::Day;
  } else if (condition == "night") {
    s.condition = Condition::Night;
  } else {
    throw SchemaError("condition");
  }
  s.airport_id = detail::require_string(j, "airport_id");
  s.width = detail::require_int(j, "width");
  s.height = detail::require_int(j, "height");
  return s;
}

/// Writes `d` as a JSON manifest. Image refs are stored as-is, relative to
/// the manifest's directory.
inline void save_manifest(const Dataset& d, const std::filesystem::path& path) {
  nlohmann::json j;
  j["schema_version"] = kManifestSchemaVersion;
  j["name"] = d.name;
  j["samples"] = nlohmann::json::array();
  for (const auto& s : d.samples) j["samples"].push_back(to_json(s));
  detail::write_json_file(j, path);
}

/// Inverse of save_manifest. Unknown keys are ignored; missing or ill-typed
/// required keys raise SchemaError. Every referenced image must exist.
inline Dataset load_manifest(const std::filesystem::path& path) {
  const auto j = detail::read_json_file(path);
  if (detail::require_int(j, "schema_version") != kManifestSchemaVersion)
    throw SchemaError("schema_version");
  Dataset d;
  d.name = detail::require_string(j, "name");
  d.root = path.parent_path();
  const auto& samples = detail::require(j, "samples");
  if (!samples.is_array()) throw SchemaError("samples");
  d.samples.reserve(samples.size());
  for (const auto& record : samples) d.samples.push_back(sample_from_json(record));
  for (const auto& s : d.samples)
    if (!std::filesystem::exists(d.image_path(s)))
      throw IoError("manifest " + path.string() + " references missing image " + s.image_ref);
  validate(d);
  return d;
}

// --- COCO annotations ------------------------------------------------------------

inline constexpr int kRunwayCategoryId = 1;

/// Corner box to COCO [x, y, width, height].
inline std::array<double, 4> to_coco_xywh(const BBox& b) {
  return {b.xmin, b.ymin, b.xmax - b.xmin, b.ymax - b.ymin};
}

inline BBox from_coco_xywh(double x, double y, double w, double h) { return {x, y, x + w, y + h}; }

/// Single-category COCO document; image ids are 1-based sample positions.
inline nlohmann::json coco_json(const Dataset& d) {
  nlohmann::json j;
  j["images"] = nlohmann::json::array();
  j["annotations"] = nlohmann::json::array();
  j["categories"] = nlohmann::json::array({{{"id", kRunwayCategoryId}, {"name", "runway"}}});
  int id = 1;
  for (const auto& s : d.samples) {
    if (!s.bbox) throw UnlabeledSample("sample " + s.image_ref + " has no label");
    const auto xywh = to_coco_xywh(*s.bbox);
    j["images"].push_back(
        {{"id", id}, {"file_name", s.image_ref}, {"width", s.width}, {"height", s.height}});
    j["annotations"].push_back({{"id", id},
                                {"image_id", id},
                                {"category_id", kRunwayCategoryId},
                                {"bbox", xywh},
                                {"area", xywh[2] * xywh[3]},
                                {"iscrowd", 0}});
    ++id;
  }
  return j;
}

inline void export_coco(const Dataset& d, const std::filesystem::path& path) {
  detail::write_json_file(coco_json(d), path);
}

}  // namespace runwaysim
