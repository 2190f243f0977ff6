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

// IoU, greedy matching and COCO-style average precision (101-point
// interpolation, IoU sweep 0.50:0.05:0.95) for a single category.

#include <algorithm>
#include <array>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "runwaysim/dataset.hpp"
#include "runwaysim/geometry.hpp"

namespace runwaysim {

struct ScoredBox {
  BBox bbox;
  double score = 0.0;

  friend bool operator==(const ScoredBox&, const ScoredBox&) = default;
};

class NoGroundTruth : public Error {
 public:
  NoGroundTruth() : Error("no ground-truth boxes to evaluate against") {}
};

inline constexpr std::size_t kNumIouThresholds = 10;
inline constexpr std::size_t kNumRecallPoints = 101;
inline constexpr std::size_t kMaxDetsPerImage = 100;

/// {0.50, 0.55, ..., 0.95}, each computed as an exact decimal quotient.
inline constexpr std::array<double, kNumIouThresholds> iou_thresholds() {
  std::array<double, kNumIouThresholds> t{};
  for (std::size_t i = 0; i < kNumIouThresholds; ++i) t[i] = static_cast<double>(50 + 5 * i) / 100.0;
  return t;
}

inline std::string threshold_label(std::size_t i) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%.2f", iou_thresholds()[i]);
  return buf;
}

inline double iou(const BBox& a, const BBox& b) {
  const double iw = std::min(a.xmax, b.xmax) - std::max(a.xmin, b.xmin);
  const double ih = std::min(a.ymax, b.ymax) - std::max(a.ymin, b.ymin);
  if (iw <= 0.0 || ih <= 0.0) return 0.0;
  const double inter = iw * ih;
  const double uni = a.area() + b.area() - inter;
  return uni > 0.0 ? inter / uni : 0.0;
}

using ImageDetections = std::vector<std::vector<ScoredBox>>;
using ImageGroundTruth = std::vector<std::vector<BBox>>;

/// AP at one IoU threshold. `dets[i]` and `gts[i]` belong to image i; images
/// without detections may be omitted from the tail of `dets`.
///
/// Each image keeps its 100 highest-scoring detections. Detections are then
/// pooled in image order and stably sorted by descending score, so ties keep
/// insertion order. A detection is a true positive when it reaches `tau`
/// against an unmatched ground truth of its image; it claims the highest-IoU
/// one (lowest index on ties).
inline double ap_at_iou(const ImageDetections& dets, const ImageGroundTruth& gts, double tau) {
  if (dets.size() > gts.size()) throw InvalidArgument("detections reference unknown images");
  std::size_t num_gt = 0;
  for (const auto& g : gts) num_gt += g.size();
  if (num_gt == 0) throw NoGroundTruth();

  struct Entry {
    double score;
    std::size_t image;
    std::size_t det;
  };
  std::vector<Entry> pooled;
  for (std::size_t img = 0; img < dets.size(); ++img) {
    std::vector<std::size_t> order(dets[img].size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      return dets[img][a].score > dets[img][b].score;
    });
    if (order.size() > kMaxDetsPerImage) order.resize(kMaxDetsPerImage);
    std::sort(order.begin(), order.end());
    for (std::size_t d : order) pooled.push_back({dets[img][d].score, img, d});
  }
  std::stable_sort(pooled.begin(), pooled.end(),
                   [](const Entry& a, const Entry& b) { return a.score > b.score; });

  std::vector<std::vector<bool>> matched(gts.size());
  for (std::size_t i = 0; i < gts.size(); ++i) matched[i].assign(gts[i].size(), false);

  std::vector<double> precision, recall;
  precision.reserve(pooled.size());
  recall.reserve(pooled.size());
  std::size_t tp = 0, fp = 0;
  for (const Entry& e : pooled) {
    const BBox& box = dets[e.image][e.det].bbox;
    double best_iou = -1.0;
    std::ptrdiff_t best = -1;
    for (std::size_t g = 0; g < gts[e.image].size(); ++g) {
      if (matched[e.image][g]) continue;
      const double o = iou(box, gts[e.image][g]);
      if (o >= tau && o > best_iou) {
        best_iou = o;
        best = static_cast<std::ptrdiff_t>(g);
      }
    }
    if (best >= 0) {
      matched[e.image][static_cast<std::size_t>(best)] = true;
      ++tp;
    } else {
      ++fp;
    }
    precision.push_back(static_cast<double>(tp) / static_cast<double>(tp + fp));
    recall.push_back(static_cast<double>(tp) / static_cast<double>(num_gt));
  }

  // Precision envelope, then sampled at recall r = 0, 0.01, ..., 1.
  for (std::size_t i = precision.size(); i > 1; --i)
    precision[i - 2] = std::max(precision[i - 2], precision[i - 1]);
  double sum = 0.0;
  for (std::size_t r = 0; r < kNumRecallPoints; ++r) {
    const double level = static_cast<double>(r) / 100.0;
    const auto it = std::lower_bound(recall.begin(), recall.end(), level);
    if (it != recall.end()) sum += precision[static_cast<std::size_t>(it - recall.begin())];
  }
  return sum / static_cast<double>(kNumRecallPoints);
}

struct EvalReport {
  std::array<double, kNumIouThresholds> per_threshold_ap{};
  double coco_ap = 0.0;
  Condition condition = Condition::Day;
  std::string strategy;

  /// AP at IoU 0.50.
  double ap50() const { return per_threshold_ap[0]; }
};

inline EvalReport coco_ap(const ImageDetections& dets, const ImageGroundTruth& gts,
                          Condition condition = Condition::Day, std::string strategy = {}) {
  EvalReport report;
  report.condition = condition;
  report.strategy = std::move(strategy);
  const auto taus = iou_thresholds();
  double sum = 0.0;
  for (std::size_t i = 0; i < kNumIouThresholds; ++i) {
    report.per_threshold_ap[i] = ap_at_iou(dets, gts, taus[i]);
    sum += report.per_threshold_ap[i];
  }
  report.coco_ap = sum / static_cast<double>(kNumIouThresholds);
  return report;
}

// --- interchange -------------------------------------------------------------------

inline nlohmann::json to_json(const EvalReport& r) {
  nlohmann::json j;
  j["condition"] = to_string(r.condition);
  j["strategy"] = r.strategy;
  j["coco_ap"] = r.coco_ap;
  nlohmann::json per = nlohmann::json::object();
  for (std::size_t i = 0; i < kNumIouThresholds; ++i) per[threshold_label(i)] = r.per_threshold_ap[i];
  j["per_threshold_ap"] = per;
  return j;
}

inline std::string csv_header() {
  std::string h = "condition,strategy,seed,coco_ap";
  for (std::size_t i = 0; i < kNumIouThresholds; ++i) h += ",ap_" + threshold_label(i);
  return h;
}

inline std::string csv_row(const EvalReport& r, std::uint64_t seed) {
  char buf[32];
  std::string row = std::string(to_string(r.condition)) + "," + r.strategy + "," + std::to_string(seed);
  std::snprintf(buf, sizeof buf, ",%.6f", r.coco_ap);
  row += buf;
  for (double ap : r.per_threshold_ap) {
    std::snprintf(buf, sizeof buf, ",%.6f", ap);
    row += buf;
  }
  return row;
}

/// Ground truth from a single-category COCO annotation document, one entry
/// per image in ascending image-id order. `ids` receives those image ids.
inline ImageGroundTruth gts_from_coco(const nlohmann::json& coco, std::vector<long long>* ids = nullptr) {
  std::map<long long, std::vector<BBox>> by_image;
  for (const auto& img : detail::require(coco, "images")) by_image[img.at("id").get<long long>()];
  for (const auto& ann : detail::require(coco, "annotations")) {
    const auto& b = ann.at("bbox");
    const long long id = ann.at("image_id").get<long long>();
    if (!by_image.contains(id)) throw SchemaError("image_id");
    by_image[id].push_back(
        from_coco_xywh(b[0].get<double>(), b[1].get<double>(), b[2].get<double>(), b[3].get<double>()));
  }
  ImageGroundTruth gts;
  if (ids) ids->clear();
  for (auto& [id, boxes] : by_image) {
    gts.push_back(std::move(boxes));
    if (ids) ids->push_back(id);
  }
  return gts;
}

/// Detections from a COCO results list ({image_id, bbox [x,y,w,h], score}),
/// aligned with `image_ids`; file order is kept within each image.
inline ImageDetections dets_from_coco(const nlohmann::json& results, const std::vector<long long>& image_ids) {
  if (!results.is_array()) throw SchemaError("detections");
  std::map<long long, std::size_t> slot;
  for (std::size_t i = 0; i < image_ids.size(); ++i) slot[image_ids[i]] = i;
  ImageDetections dets(image_ids.size());
  for (const auto& r : results) {
    const long long id = detail::require(r, "image_id").get<long long>();
    const auto it = slot.find(id);
    if (it == slot.end()) throw InvalidArgument("detection for unknown image id " + std::to_string(id));
    const auto& b = detail::require(r, "bbox");
    if (!b.is_array() || b.size() != 4) throw SchemaError("bbox");
    dets[it->second].push_back(
        {from_coco_xywh(b[0].get<double>(), b[1].get<double>(), b[2].get<double>(), b[3].get<double>()),
         detail::require(r, "score").get<double>()});
  }
  return dets;
}

inline nlohmann::json dets_to_coco(const ImageDetections& dets, const std::vector<long long>& image_ids) {
  nlohmann::json out = nlohmann::json::array();
  for (std::size_t i = 0; i < dets.size(); ++i)
    for (const auto& d : dets[i])
      out.push_back({{"image_id", image_ids.at(i)},
                     {"category_id", kRunwayCategoryId},
                     {"bbox", to_coco_xywh(d.bbox)},
                     {"score", d.score}});
  return out;
}

inline EvalReport evaluate_coco_files(const std::filesystem::path& annotations,
                                      const std::filesystem::path& detections,
                                      Condition condition = Condition::Day, std::string strategy = {}) {
  std::vector<long long> ids;
  const auto gts = gts_from_coco(detail::read_json_file(annotations), &ids);
  const auto dets = dets_from_coco(detail::read_json_file(detections), ids);
  return coco_ap(dets, gts, condition, std::move(strategy));
}

}  // namespace runwaysim
