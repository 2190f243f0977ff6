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

// Detection loss with an optional feature-alignment term:
//
//   total = frcnn + lambda * align
//
// where frcnn is binary objectness cross-entropy plus smooth-L1 box
// regression, and align is a symmetric nearest-neighbour squared distance
// between synthetic-object and real-object features. All losses return
// analytic gradients; nothing is accumulated here.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <vector>

#include "runwaysim/errors.hpp"
#include "runwaysim/geometry.hpp"

namespace runwaysim {

enum class AnchorLabel : std::uint8_t { Negative, Positive, Ignore };

using Box4 = std::array<double, 4>;  // (dx, dy, dw, dh)
using FeatureVec = std::vector<double>;

class AllIgnored : public Error {
 public:
  AllIgnored() : Error("objectness loss needs at least one non-ignored anchor") {}
};

struct LossWithGradient {
  double value = 0.0;
  std::vector<double> gradient;
};

inline double sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

/// log(1 + exp(z)) without overflow.
inline double softplus(double z) { return z > 0.0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z)); }

/// Mean binary cross-entropy over non-ignored anchors.
inline LossWithGradient objectness_loss(std::span<const double> logits,
                                        std::span<const AnchorLabel> labels) {
  if (logits.size() != labels.size()) throw InvalidArgument("logits and labels differ in length");
  std::size_t n = 0;
  for (AnchorLabel l : labels) n += l != AnchorLabel::Ignore;
  if (n == 0) throw AllIgnored();

  LossWithGradient out{0.0, std::vector<double>(logits.size(), 0.0)};
  const double inv = 1.0 / static_cast<double>(n);
  for (std::size_t i = 0; i < logits.size(); ++i) {
    if (labels[i] == AnchorLabel::Ignore) continue;
    const double z = logits[i];
    const bool pos = labels[i] == AnchorLabel::Positive;
    out.value += pos ? softplus(-z) : softplus(z);
    out.gradient[i] = (sigmoid(z) - (pos ? 1.0 : 0.0)) * inv;
  }
  out.value *= inv;
  return out;
}

// --- box regression -------------------------------------------------------------

/// Anchor-relative target: dx = (x_gt - x_a)/w_a, dy likewise,
/// dw = ln(w_gt / w_a), dh = ln(h_gt / h_a), on box centres and sizes.
inline Box4 encode_box(const BBox& anchor, const BBox& gt) {
  const double wa = anchor.width(), ha = anchor.height();
  return {(gt.center_x() - anchor.center_x()) / wa, (gt.center_y() - anchor.center_y()) / ha,
          std::log(gt.width() / wa), std::log(gt.height() / ha)};
}

/// Largest |dw|, |dh| accepted when decoding, as in common detector code.
inline constexpr double kMaxLogScale = 4.135166556742356;  // ln(1000 / 16)

inline BBox decode_box(const BBox& anchor, const Box4& d) {
  const double wa = anchor.width(), ha = anchor.height();
  const double cx = anchor.center_x() + d[0] * wa;
  const double cy = anchor.center_y() + d[1] * ha;
  const double w = wa * std::exp(std::clamp(d[2], -kMaxLogScale, kMaxLogScale));
  const double h = ha * std::exp(std::clamp(d[3], -kMaxLogScale, kMaxLogScale));
  return {cx - 0.5 * w, cy - 0.5 * h, cx + 0.5 * w, cy + 0.5 * h};
}

struct BoxLoss {
  double value = 0.0;
  std::vector<Box4> gradient;
  bool no_positives = false;
};

inline double smooth_l1(double e) { return std::abs(e) < 1.0 ? 0.5 * e * e : std::abs(e) - 0.5; }
inline double smooth_l1_grad(double e) { return std::abs(e) < 1.0 ? e : (e > 0.0 ? 1.0 : -1.0); }

/// Element-wise smooth-L1, summed over the four offsets and averaged over
/// positive anchors. No positives gives zero loss and zero gradient.
inline BoxLoss box_regression_loss(std::span<const Box4> pred, std::span<const Box4> target,
                                   const std::vector<bool>& positive_mask) {
  if (pred.size() != target.size() || pred.size() != positive_mask.size())
    throw InvalidArgument("box regression inputs differ in length");
  BoxLoss out{0.0, std::vector<Box4>(pred.size(), Box4{}), false};
  std::size_t n = 0;
  for (bool p : positive_mask) n += p;
  if (n == 0) {
    out.no_positives = true;
    return out;
  }
  const double inv = 1.0 / static_cast<double>(n);
  for (std::size_t i = 0; i < pred.size(); ++i) {
    if (!positive_mask[i]) continue;
    for (int c = 0; c < 4; ++c) {
      const double e = pred[i][c] - target[i][c];
      out.value += smooth_l1(e);
      out.gradient[i][c] = smooth_l1_grad(e) * inv;
    }
  }
  out.value *= inv;
  return out;
}

// --- alignment ------------------------------------------------------------------------

struct AlignLoss {
  double value = 0.0;
  std::vector<FeatureVec> synth_gradient;
  std::vector<FeatureVec> real_gradient;
  bool missing_domain = false;
};

namespace detail {

inline double squared_distance(const FeatureVec& a, const FeatureVec& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return s;
}

/// Index of the nearest neighbour of `q` in `set`, lowest index on ties.
inline std::size_t nearest(const FeatureVec& q, std::span<const FeatureVec> set) {
  std::size_t best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (std::size_t j = 0; j < set.size(); ++j) {
    const double d = squared_distance(q, set[j]);
    if (d < best_d) {
      best_d = d;
      best = j;
    }
  }
  return best;
}

}  // namespace detail

/// Symmetric nearest-neighbour cycle distance
///   0.5 * ( mean_s |s - r(s)|^2 + mean_r |r - s(r)|^2 )
/// with r(s), s(r) the nearest neighbours in the other set. Gradients flow to
/// both endpoints of every matched pair. An empty side yields zero and sets
/// `missing_domain`.
inline AlignLoss align_loss(std::span<const FeatureVec> synth, std::span<const FeatureVec> real) {
  AlignLoss out;
  out.synth_gradient.assign(synth.size(), FeatureVec{});
  out.real_gradient.assign(real.size(), FeatureVec{});
  for (std::size_t i = 0; i < synth.size(); ++i) out.synth_gradient[i].assign(synth[i].size(), 0.0);
  for (std::size_t i = 0; i < real.size(); ++i) out.real_gradient[i].assign(real[i].size(), 0.0);
  if (synth.empty() || real.empty()) {
    out.missing_domain = true;
    return out;
  }
  const std::size_t dim = synth.front().size();
  for (const auto& v : synth)
    if (v.size() != dim) throw InvalidArgument("feature dimensions differ");
  for (const auto& v : real)
    if (v.size() != dim) throw InvalidArgument("feature dimensions differ");

  // One directed pass: each query pulls toward its nearest target.
  auto pass = [&](std::span<const FeatureVec> queries, std::span<const FeatureVec> targets,
                  std::vector<FeatureVec>& gq, std::vector<FeatureVec>& gt) {
    const double w = 1.0 / static_cast<double>(queries.size());
    double sum = 0.0;
    for (std::size_t i = 0; i < queries.size(); ++i) {
      const std::size_t j = detail::nearest(queries[i], targets);
      sum += detail::squared_distance(queries[i], targets[j]);
      for (std::size_t c = 0; c < dim; ++c) {
        // d/dq of 0.5 * w * |q - t|^2
        const double g = w * (queries[i][c] - targets[j][c]);
        gq[i][c] += g;
        gt[j][c] -= g;
      }
    }
    return sum * w;
  };
  const double forward = pass(synth, real, out.synth_gradient, out.real_gradient);
  const double backward = pass(real, synth, out.real_gradient, out.synth_gradient);
  out.value = 0.5 * (forward + backward);
  return out;
}

// --- total ------------------------------------------------------------------------------

struct LossBreakdown {
  double frcnn = 0.0;
  double align = 0.0;
  double lambda = 0.0;
  double total = 0.0;
};

inline LossBreakdown total_loss(double frcnn, double align, double lambda) {
  if (!(lambda >= 0.0)) throw InvalidArgument("lambda must be >= 0");
  return {frcnn, align, lambda, frcnn + lambda * align};
}

}  // namespace runwaysim
