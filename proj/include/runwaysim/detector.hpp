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

// Minimal single-class anchor detector with the same loss structure as a
// two-term region-proposal objective: a fixed anchor grid, a per-anchor
// feature vector computed from a resampled grayscale patch, an objectness
// head and a box head.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "runwaysim/dataset.hpp"
#include "runwaysim/detloss.hpp"
#include "runwaysim/errors.hpp"
#include "runwaysim/eval.hpp"
#include "runwaysim/image.hpp"
#include "runwaysim/rng.hpp"
#include "runwaysim/sampling.hpp"

namespace runwaysim {

// --- anchors ----------------------------------------------------------------------------

/// One anchor of size anchor_w x anchor_h centred in every stride x stride
/// cell of the image.
struct AnchorGrid {
  double stride = 8.0;
  double anchor_w = 32.0;
  double anchor_h = 32.0;
  int image_width = 320;
  int image_height = 240;

  int cols() const { return static_cast<int>(std::ceil(image_width / stride)); }
  int rows() const { return static_cast<int>(std::ceil(image_height / stride)); }
  std::size_t size() const { return static_cast<std::size_t>(cols()) * static_cast<std::size_t>(rows()); }

  BBox anchor(std::size_t i) const {
    const auto c = static_cast<double>(i % static_cast<std::size_t>(cols()));
    const auto r = static_cast<double>(i / static_cast<std::size_t>(cols()));
    const double cx = (c + 0.5) * stride, cy = (r + 0.5) * stride;
    return {cx - 0.5 * anchor_w, cy - 0.5 * anchor_h, cx + 0.5 * anchor_w, cy + 0.5 * anchor_h};
  }

  friend bool operator==(const AnchorGrid&, const AnchorGrid&) = default;
};

inline void validate(const AnchorGrid& g) {
  if (!(g.stride > 0.0) || !(g.anchor_w > 0.0) || !(g.anchor_h > 0.0) || g.image_width <= 0 ||
      g.image_height <= 0)
    throw InvalidArgument("invalid anchor grid");
}

inline constexpr double kPositiveIou = 0.5;
inline constexpr double kNegativeIou = 0.3;

/// Two-threshold rule: >= 0.5 positive, < 0.3 negative, otherwise ignored.
inline AnchorLabel classify_overlap(double overlap) {
  if (overlap >= kPositiveIou) return AnchorLabel::Positive;
  if (overlap < kNegativeIou) return AnchorLabel::Negative;
  return AnchorLabel::Ignore;
}

struct AnchorAssignment {
  std::vector<AnchorLabel> labels;
  std::vector<Box4> targets;  // meaningful for positives only
};

/// Labels every anchor against `gt`; the highest-IoU anchor (lowest index on
/// ties) is always positive.
inline AnchorAssignment assign_anchors(const AnchorGrid& grid, const BBox& gt) {
  validate(grid);
  validate(gt);
  const std::size_t n = grid.size();
  AnchorAssignment out{std::vector<AnchorLabel>(n), std::vector<Box4>(n, Box4{})};
  std::size_t best = 0;
  double best_iou = -1.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double o = iou(grid.anchor(i), gt);
    out.labels[i] = classify_overlap(o);
    if (o > best_iou) {
      best_iou = o;
      best = i;
    }
  }
  out.labels[best] = AnchorLabel::Positive;
  if (gt.width() > 0.0 && gt.height() > 0.0)
    for (std::size_t i = 0; i < n; ++i)
      if (out.labels[i] == AnchorLabel::Positive) out.targets[i] = encode_box(grid.anchor(i), gt);
  return out;
}

// --- model --------------------------------------------------------------------------------

struct ModelShape {
  int patch_size = 16;    // p: the patch is p x p
  int feature_dim = 32;   // d
  double context = 1.5;   // patch side / anchor side

  std::size_t patch_len() const { return static_cast<std::size_t>(patch_size) * patch_size; }
  friend bool operator==(const ModelShape&, const ModelShape&) = default;
};

/// Offsets of the parameter blocks inside Model::params.
struct ParamLayout {
  std::size_t patch_len, dim;
  std::size_t feat_w, feat_b, obj_w, obj_b, box_w, box_b, total;

  explicit ParamLayout(const ModelShape& s)
      : patch_len(s.patch_len()), dim(static_cast<std::size_t>(s.feature_dim)) {
    feat_w = 0;
    feat_b = feat_w + dim * patch_len;
    obj_w = feat_b + dim;
    obj_b = obj_w + dim;
    box_w = obj_b + 1;
    box_b = box_w + 4 * dim;
    total = box_b + 4;
  }
};

/// feature = tanh(W p + b) (W is d x p^2), objectness = w . feature + b0,
/// box offsets = B feature + bb (4 x d). All parameters live in one flat
/// vector so updates, checkpoints and finite differences treat them alike.
struct Model {
  AnchorGrid grid;
  ModelShape shape;
  std::vector<double> params;

  ParamLayout layout() const { return ParamLayout(shape); }
  friend bool operator==(const Model&, const Model&) = default;
};

inline Model initialize_model(const AnchorGrid& grid, const ModelShape& shape, std::uint64_t seed) {
  validate(grid);
  if (shape.patch_size < 2 || shape.feature_dim < 1 || !(shape.context > 0.0))
    throw InvalidArgument("invalid model shape");
  Model m{grid, shape, {}};
  const ParamLayout l = m.layout();
  m.params.assign(l.total, 0.0);
  Rng rng(mix_key(seed, 0x3D0DE1ULL));
  const double feat_scale = 1.0 / std::sqrt(static_cast<double>(l.patch_len));
  for (std::size_t i = 0; i < l.dim * l.patch_len; ++i) m.params[l.feat_w + i] = feat_scale * rng.normal();
  const double head_scale = 0.1 / std::sqrt(static_cast<double>(l.dim));
  for (std::size_t i = 0; i < l.dim; ++i) m.params[l.obj_w + i] = head_scale * rng.normal();
  for (std::size_t i = 0; i < 4 * l.dim; ++i) m.params[l.box_w + i] = head_scale * rng.normal();
  m.params[l.obj_b] = -2.0;
  return m;
}

/// Bilinear p x p resampling of the anchor's context window, standardised to
/// zero mean and (near) unit variance.
inline void extract_patch(const GrayImage& img, const BBox& anchor, const ModelShape& shape,
                          std::span<double> out) {
  const int p = shape.patch_size;
  const double w = anchor.width() * shape.context, h = anchor.height() * shape.context;
  const double x0 = anchor.center_x() - 0.5 * w, y0 = anchor.center_y() - 0.5 * h;
  const double sx = w / p, sy = h / p;
  auto sample = [&](double x, double y) {
    // Pixel (i, j) holds the value at continuous position (i + 0.5, j + 0.5).
    x = std::clamp(x - 0.5, 0.0, img.width - 1.0);
    y = std::clamp(y - 0.5, 0.0, img.height - 1.0);
    const int ix = std::min(static_cast<int>(x), img.width - 2 < 0 ? 0 : img.width - 2);
    const int iy = std::min(static_cast<int>(y), img.height - 2 < 0 ? 0 : img.height - 2);
    const double tx = x - ix, ty = y - iy;
    const int ix1 = std::min(ix + 1, img.width - 1), iy1 = std::min(iy + 1, img.height - 1);
    return (img.at(ix, iy) * (1 - tx) + img.at(ix1, iy) * tx) * (1 - ty) +
           (img.at(ix, iy1) * (1 - tx) + img.at(ix1, iy1) * tx) * ty;
  };
  double mean = 0.0;
  for (int j = 0; j < p; ++j)
    for (int i = 0; i < p; ++i) {
      const double v = sample(x0 + (i + 0.5) * sx, y0 + (j + 0.5) * sy);
      out[static_cast<std::size_t>(j * p + i)] = v;
      mean += v;
    }
  const auto n = static_cast<double>(out.size());
  mean /= n;
  double var = 0.0;
  for (double& v : out) {
    v -= mean;
    var += v * v;
  }
  const double inv = 1.0 / std::sqrt(var / n + 1e-3);
  for (double& v : out) v *= inv;
}

struct AnchorOutput {
  FeatureVec feature;
  double logit = 0.0;
  Box4 box{};
};

inline AnchorOutput forward_patch(const Model& m, std::span<const double> patch) {
  const ParamLayout l = m.layout();
  const double* w = m.params.data();
  AnchorOutput out;
  out.feature.resize(l.dim);
  for (std::size_t k = 0; k < l.dim; ++k) {
    const double* row = w + l.feat_w + k * l.patch_len;
    double s = w[l.feat_b + k];
    for (std::size_t i = 0; i < l.patch_len; ++i) s += row[i] * patch[i];
    out.feature[k] = std::tanh(s);
  }
  out.logit = w[l.obj_b];
  for (std::size_t k = 0; k < l.dim; ++k) out.logit += w[l.obj_w + k] * out.feature[k];
  for (int c = 0; c < 4; ++c) {
    double s = w[l.box_b + c];
    for (std::size_t k = 0; k < l.dim; ++k) s += w[l.box_w + c * l.dim + k] * out.feature[k];
    out.box[c] = s;
  }
  return out;
}

// --- batch objective -------------------------------------------------------------------------

struct AnchorExample {
  std::vector<double> patch;
  AnchorLabel label = AnchorLabel::Negative;
  Box4 target{};
};

struct ImageExample {
  Domain domain = Domain::Real;
  std::vector<AnchorExample> anchors;
};

struct BatchLoss {
  LossBreakdown loss;
  std::vector<double> gradient;  // d total / d params
  bool missing_domain = false;
};

/// Batch objective: the sum over images of (objectness + box regression),
/// each a mean over that image's sampled anchors, plus lambda times the
/// alignment loss between positive-anchor features of synthetic and real
/// images. lambda == 0 skips the alignment entirely.
inline BatchLoss batch_loss(const Model& m, std::span<const ImageExample> images, double lambda) {
  if (images.empty()) throw InvalidArgument("empty batch");
  const ParamLayout l = m.layout();
  BatchLoss out;
  out.gradient.assign(l.total, 0.0);

  struct Cached {
    const AnchorExample* ex;
    AnchorOutput fwd;
    double g_logit = 0.0;
    Box4 g_box{};
    FeatureVec g_feature_extra;
  };
  std::vector<std::vector<Cached>> cache(images.size());
  std::vector<FeatureVec> synth_feats, real_feats;
  std::vector<Cached*> synth_refs, real_refs;

  double frcnn = 0.0;
  for (std::size_t b = 0; b < images.size(); ++b) {
    const auto& anchors = images[b].anchors;
    auto& c = cache[b];
    c.reserve(anchors.size());
    std::vector<double> logits;
    std::vector<AnchorLabel> labels;
    std::vector<Box4> preds, targets;
    std::vector<bool> positive;
    for (const auto& a : anchors) {
      c.push_back({&a, forward_patch(m, a.patch), 0.0, {}, {}});
      logits.push_back(c.back().fwd.logit);
      labels.push_back(a.label);
      preds.push_back(c.back().fwd.box);
      targets.push_back(a.target);
      positive.push_back(a.label == AnchorLabel::Positive);
    }
    const auto obj = objectness_loss(logits, labels);
    const auto box = box_regression_loss(preds, targets, positive);
    frcnn += obj.value + box.value;
    for (std::size_t i = 0; i < c.size(); ++i) {
      c[i].g_logit = obj.gradient[i];
      c[i].g_box = box.gradient[i];
      if (lambda != 0.0 && positive[i]) {
        auto& feats = images[b].domain == Domain::Synthetic ? synth_feats : real_feats;
        auto& refs = images[b].domain == Domain::Synthetic ? synth_refs : real_refs;
        feats.push_back(c[i].fwd.feature);
        refs.push_back(&c[i]);
      }
    }
  }

  double align = 0.0;
  if (lambda != 0.0) {
    const auto al = align_loss(synth_feats, real_feats);
    align = al.value;
    out.missing_domain = al.missing_domain;
    for (std::size_t i = 0; i < synth_refs.size(); ++i) synth_refs[i]->g_feature_extra = al.synth_gradient[i];
    for (std::size_t i = 0; i < real_refs.size(); ++i) real_refs[i]->g_feature_extra = al.real_gradient[i];
  }
  out.loss = total_loss(frcnn, align, lambda);

  // Backward pass, accumulated in fixed (image, anchor) order.
  const double* w = m.params.data();
  double* g = out.gradient.data();
  FeatureVec df(l.dim);
  for (auto& per_image : cache) {
    for (auto& c : per_image) {
      const auto& f = c.fwd.feature;
      g[l.obj_b] += c.g_logit;
      for (std::size_t k = 0; k < l.dim; ++k) {
        g[l.obj_w + k] += c.g_logit * f[k];
        df[k] = c.g_logit * w[l.obj_w + k];
      }
      for (int b = 0; b < 4; ++b) {
        if (c.g_box[b] == 0.0) continue;
        g[l.box_b + b] += c.g_box[b];
        for (std::size_t k = 0; k < l.dim; ++k) {
          g[l.box_w + b * l.dim + k] += c.g_box[b] * f[k];
          df[k] += c.g_box[b] * w[l.box_w + b * l.dim + k];
        }
      }
      if (!c.g_feature_extra.empty())
        for (std::size_t k = 0; k < l.dim; ++k) df[k] += lambda * c.g_feature_extra[k];
      const auto& patch = c.ex->patch;
      for (std::size_t k = 0; k < l.dim; ++k) df[k] *= 1.0 - f[k] * f[k];
      for (std::size_t k = 0; k < l.dim; ++k) {
        g[l.feat_b + k] += df[k];
        double* row = g + l.feat_w + k * l.patch_len;
        for (std::size_t i = 0; i < l.patch_len; ++i) row[i] += df[k] * patch[i];
      }
    }
  }
  return out;
}

// --- training ----------------------------------------------------------------------------------

struct TrainConfig {
  std::size_t batch_size = 8;
  double learning_rate = 0.002;
  std::size_t iterations = 2000;
  double lambda = 0.0;
  std::uint64_t seed = 0;
  std::size_t anchors_per_image = 32;  // sampled anchors per image and step
  double positive_fraction = 0.5;      // cap on positives among them
  AnchorGrid grid;
  ModelShape shape;
};

inline void validate(const TrainConfig& c) {
  if (c.batch_size == 0 || c.iterations == 0 || !(c.learning_rate > 0.0))
    throw InvalidArgument("batch_size, iterations and learning_rate must be positive");
  if (!(c.lambda >= 0.0)) throw InvalidArgument("lambda must be >= 0");
  if (c.anchors_per_image == 0 || !(c.positive_fraction > 0.0 && c.positive_fraction <= 1.0))
    throw InvalidArgument("invalid anchor sampling parameters");
  validate(c.grid);
}

class DivergedLoss : public Error {
 public:
  explicit DivergedLoss(std::size_t iteration)
      : Error("training loss became non-finite at iteration " + std::to_string(iteration)) {}
};

using TrainObserver = std::function<void(std::size_t iteration, const LossBreakdown&)>;

/// Grayscale image plus anchor assignment for every training sample.
struct PreparedSample {
  GrayImage gray;
  AnchorAssignment assignment;
  std::vector<std::size_t> positives;
  std::vector<std::size_t> negatives;
};

inline PreparedSample prepare_sample(const Dataset& d, const Sample& s, const AnchorGrid& grid) {
  if (!s.bbox) throw UnlabeledSample("training sample " + s.image_ref + " has no label");
  PreparedSample p{to_gray(read_png(d.image_path(s))), assign_anchors(grid, *s.bbox), {}, {}};
  if (p.gray.width != grid.image_width || p.gray.height != grid.image_height)
    throw InvalidArgument("image " + s.image_ref + " does not match the anchor grid size");
  for (std::size_t i = 0; i < p.assignment.labels.size(); ++i) {
    if (p.assignment.labels[i] == AnchorLabel::Positive) p.positives.push_back(i);
    if (p.assignment.labels[i] == AnchorLabel::Negative) p.negatives.push_back(i);
  }
  return p;
}

inline std::vector<PreparedSample> prepare_pool(const Dataset& d, const AnchorGrid& grid) {
  std::vector<PreparedSample> out;
  out.reserve(d.size());
  for (const auto& s : d.samples) out.push_back(prepare_sample(d, s, grid));
  return out;
}

/// Anchor subset for one image at one step: up to positive_fraction of the
/// budget from positives, the rest negatives, without replacement.
inline ImageExample sample_anchors(const PreparedSample& p, Domain domain, const TrainConfig& cfg,
                                   Rng& rng) {
  ImageExample ex{domain, {}};
  const auto max_pos = std::max<std::size_t>(
      1, static_cast<std::size_t>(std::floor(cfg.anchors_per_image * cfg.positive_fraction)));
  std::vector<std::size_t> pos = p.positives, neg = p.negatives;
  shuffle(pos, rng);
  shuffle(neg, rng);
  pos.resize(std::min(pos.size(), max_pos));
  neg.resize(std::min(neg.size(), cfg.anchors_per_image - std::min(cfg.anchors_per_image, pos.size())));
  auto add = [&](std::size_t a) {
    AnchorExample e;
    e.patch.resize(cfg.shape.patch_len());
    extract_patch(p.gray, cfg.grid.anchor(a), cfg.shape, e.patch);
    e.label = p.assignment.labels[a];
    e.target = p.assignment.targets[a];
    ex.anchors.push_back(std::move(e));
  };
  for (std::size_t a : pos) add(a);
  for (std::size_t a : neg) add(a);
  return ex;
}

/// Plain SGD on the batch objective for cfg.iterations steps; returns the
/// final-iteration model. Deterministic for a fixed configuration; pools a
/// strategy does not draw from are never read.
inline Model train(const Dataset& real, const Dataset& synth, SamplingStrategy strategy,
                   const TrainConfig& cfg, const TrainObserver& observer = {}) {
  validate(cfg);
  const bool uses_real = strategy.kind != SamplingKind::SynthOnly;
  const bool uses_synth = strategy.kind != SamplingKind::RealOnly;
  static const Dataset kNoPool{};
  const Dataset& real_pool = uses_real ? real : kNoPool;
  const Dataset& synth_pool = uses_synth ? synth : kNoPool;
  Sampler sampler = make_sampler(strategy, real_pool, synth_pool, cfg.batch_size, cfg.seed);

  const auto real_prepared = prepare_pool(real_pool, cfg.grid);
  const auto synth_prepared = prepare_pool(synth_pool, cfg.grid);

  Model model = initialize_model(cfg.grid, cfg.shape, cfg.seed);
  std::vector<ImageExample> batch;
  for (std::size_t it = 0; it < cfg.iterations; ++it) {
    const Batch b = sampler.next();
    batch.clear();
    for (std::size_t slot = 0; slot < b.size(); ++slot) {
      const BatchItem& item = b.items[slot];
      const auto& prepared = item.pool == Domain::Real ? real_prepared[item.index] : synth_prepared[item.index];
      Rng rng(mix_key(cfg.seed, 0xA11C0ULL, it, slot));
      batch.push_back(sample_anchors(prepared, item.pool, cfg, rng));
    }
    const BatchLoss bl = batch_loss(model, batch, cfg.lambda);
    if (!std::isfinite(bl.loss.total)) throw DivergedLoss(it);
    for (std::size_t i = 0; i < model.params.size(); ++i)
      model.params[i] -= cfg.learning_rate * bl.gradient[i];
    if (observer) observer(it, bl.loss);
  }
  return model;
}

// --- inference --------------------------------------------------------------------------------------

inline constexpr double kDefaultScoreThreshold = 0.05;
inline constexpr double kDefaultNmsIou = 0.5;
inline constexpr std::size_t kDefaultMaxDets = 10;

/// Greedy NMS: stable sort by descending score, keep a box unless it
/// overlaps an already kept one by more than `nms_iou`.
inline std::vector<ScoredBox> nms(std::vector<ScoredBox> boxes, double nms_iou, std::size_t max_dets) {
  std::stable_sort(boxes.begin(), boxes.end(),
                   [](const ScoredBox& a, const ScoredBox& b) { return a.score > b.score; });
  std::vector<ScoredBox> kept;
  for (const auto& b : boxes) {
    if (kept.size() >= max_dets) break;
    bool suppressed = false;
    for (const auto& k : kept)
      if (iou(k.bbox, b.bbox) > nms_iou) {
        suppressed = true;
        break;
      }
    if (!suppressed) kept.push_back(b);
  }
  return kept;
}

inline std::vector<ScoredBox> detect(const Model& model, const GrayImage& image,
                                     double score_threshold = kDefaultScoreThreshold,
                                     double nms_iou = kDefaultNmsIou,
                                     std::size_t max_dets = kDefaultMaxDets) {
  const AnchorGrid& g = model.grid;
  if (image.width != g.image_width || image.height != g.image_height)
    throw InvalidArgument("image size does not match the model's anchor grid");
  std::vector<ScoredBox> candidates;
  std::vector<double> patch(model.shape.patch_len());
  const double w = image.width, h = image.height;
  for (std::size_t a = 0; a < g.size(); ++a) {
    const BBox anchor = g.anchor(a);
    extract_patch(image, anchor, model.shape, patch);
    const AnchorOutput out = forward_patch(model, patch);
    const double score = sigmoid(out.logit);
    if (score < score_threshold) continue;
    BBox box = decode_box(anchor, out.box);
    box = {std::clamp(box.xmin, 0.0, w), std::clamp(box.ymin, 0.0, h), std::clamp(box.xmax, 0.0, w),
           std::clamp(box.ymax, 0.0, h)};
    candidates.push_back({box, score});
  }
  return nms(std::move(candidates), nms_iou, max_dets);
}

inline std::vector<ScoredBox> detect(const Model& model, const Image& image,
                                     double score_threshold = kDefaultScoreThreshold,
                                     double nms_iou = kDefaultNmsIou,
                                     std::size_t max_dets = kDefaultMaxDets) {
  return detect(model, to_gray(image), score_threshold, nms_iou, max_dets);
}

// --- checkpoints -----------------------------------------------------------------------------------

inline constexpr int kCheckpointVersion = 1;

inline nlohmann::json to_json(const AnchorGrid& g) {
  return {{"stride", g.stride}, {"anchor_w", g.anchor_w}, {"anchor_h", g.anchor_h},
          {"image_width", g.image_width}, {"image_height", g.image_height}};
}

inline nlohmann::json to_json(const ModelShape& s) {
  return {{"patch_size", s.patch_size}, {"feature_dim", s.feature_dim}, {"context", s.context}};
}

inline nlohmann::json to_json(const TrainConfig& c) {
  return {{"batch_size", c.batch_size},
          {"learning_rate", c.learning_rate},
          {"iterations", c.iterations},
          {"lambda", c.lambda},
          {"seed", c.seed},
          {"anchors_per_image", c.anchors_per_image},
          {"positive_fraction", c.positive_fraction},
          {"grid", to_json(c.grid)},
          {"shape", to_json(c.shape)}};
}

inline AnchorGrid anchor_grid_from_json(const nlohmann::json& j) {
  return {j.at("stride").get<double>(), j.at("anchor_w").get<double>(), j.at("anchor_h").get<double>(),
          j.at("image_width").get<int>(), j.at("image_height").get<int>()};
}

inline ModelShape model_shape_from_json(const nlohmann::json& j) {
  return {j.at("patch_size").get<int>(), j.at("feature_dim").get<int>(), j.at("context").get<double>()};
}

struct Checkpoint {
  Model model;
  TrainConfig config;
};

/// JSON container of the parameters plus an echo of the training config.
/// Doubles are written in shortest round-trip form, so loading reproduces
/// the parameters bit-exactly.
inline void save_checkpoint(const Model& m, const TrainConfig& cfg, const std::filesystem::path& path) {
  nlohmann::json j;
  j["format"] = "runwaysim-detector";
  j["version"] = kCheckpointVersion;
  j["grid"] = to_json(m.grid);
  j["shape"] = to_json(m.shape);
  j["train_config"] = to_json(cfg);
  j["params"] = m.params;
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << j.dump() << '\n';
  if (!out) throw IoError("write failed for " + path.string());
}

inline Checkpoint load_checkpoint(const std::filesystem::path& path) {
  const auto j = detail::read_json_file(path);
  try {
    if (j.at("version").get<int>() != kCheckpointVersion) throw SchemaError("version");
    Checkpoint c;
    c.model.grid = anchor_grid_from_json(j.at("grid"));
    c.model.shape = model_shape_from_json(j.at("shape"));
    c.model.params = j.at("params").get<std::vector<double>>();
    const auto& t = j.at("train_config");
    c.config.batch_size = t.at("batch_size").get<std::size_t>();
    c.config.learning_rate = t.at("learning_rate").get<double>();
    c.config.iterations = t.at("iterations").get<std::size_t>();
    c.config.lambda = t.at("lambda").get<double>();
    c.config.seed = t.at("seed").get<std::uint64_t>();
    c.config.anchors_per_image = t.at("anchors_per_image").get<std::size_t>();
    c.config.positive_fraction = t.at("positive_fraction").get<double>();
    c.config.grid = anchor_grid_from_json(t.at("grid"));
    c.config.shape = model_shape_from_json(t.at("shape"));
    if (c.model.params.size() != c.model.layout().total) throw SchemaError("params");
    return c;
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError(std::string("checkpoint: ") + e.what());
  }
}

}  // namespace runwaysim
