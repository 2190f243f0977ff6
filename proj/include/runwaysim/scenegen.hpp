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

// Deterministic procedural runway scenes in two visual domains (real-style and
// synthetic-style) and two conditions (day, night).
//
// The real domain is simulated: real-style renders carry a richer noise and
// texture model (ground texture, sensor noise, per-image colour jitter,
// vignetting, haze, light bloom) while synthetic-style renders use flat shades
// with a small systematic colour shift. The strength of the gap is a knob
// (SceneConfig::domain_gap), not a measured quantity.

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "runwaysim/dataset.hpp"
#include "runwaysim/errors.hpp"
#include "runwaysim/geometry.hpp"
#include "runwaysim/image.hpp"
#include "runwaysim/rng.hpp"

namespace runwaysim {

struct Range {
  double min = 0.0;
  double max = 0.0;

  double at(double unit) const { return min + (max - min) * unit; }
  friend bool operator==(const Range&, const Range&) = default;
};

/// Approach geometry relative to the runway threshold.
struct PoseRanges {
  Range altitude{45.0, 75.0};    // metres above the threshold
  Range lateral{-25.0, 25.0};    // metres right of the extended centreline
  Range distance{650.0, 850.0};  // metres before the threshold, along track
  Range yaw_jitter{-2.5, 2.5};   // degrees
  Range pitch_jitter{-1.5, 1.5};

  friend bool operator==(const PoseRanges&, const PoseRanges&) = default;
};

struct SceneConfig {
  Domain domain = Domain::Real;  // Real renders real-style, Synthetic renders synth-style
  Condition condition = Condition::Day;
  std::string airport_id;
  std::uint64_t seed = 0;
  PoseRanges pose_ranges;
  double domain_gap = 1.0;      // synthetic-style only: 1 = flat shading, 0 = real-style look
  double label_noise_px = 0.0;  // uniform per-coordinate box jitter; 0 keeps labels exact
};

inline void validate(const SceneConfig& c) {
  for (const Range* r : {&c.pose_ranges.altitude, &c.pose_ranges.lateral, &c.pose_ranges.distance,
                         &c.pose_ranges.yaw_jitter, &c.pose_ranges.pitch_jitter})
    if (!(r->min <= r->max)) throw InvalidArgument("pose range with min > max");
  if (!(c.domain_gap >= 0.0 && c.domain_gap <= 1.0))
    throw InvalidArgument("domain_gap must be in [0, 1]");
  if (!(c.label_noise_px >= 0.0)) throw InvalidArgument("label_noise_px must be >= 0");
}

/// 320x240 camera with a ~36 degree horizontal field of view.
inline CameraIntrinsics default_intrinsics() { return {480.0, 480.0, 160.0, 120.0, 320, 240}; }

// --- runway database -----------------------------------------------------------

using RunwayDb = std::map<std::string, RunwaySpec>;

inline RunwayDb runway_db_from_json(const nlohmann::json& j) {
  if (!j.is_array()) throw SchemaError("runways");
  RunwayDb db;
  for (const auto& r : j) {
    RunwaySpec s;
    s.id = detail::require_string(r, "id");
    auto num = [&](const char* key) {
      const auto& v = detail::require(r, key);
      if (!v.is_number()) throw SchemaError(key);
      return v.get<double>();
    };
    s.threshold = {num("lat"), num("lon"), num("alt")};
    s.heading_deg = num("heading_deg");
    s.length_m = num("length_m");
    s.width_m = num("width_m");
    validate(s);
    if (!db.emplace(s.id, s).second) throw InvalidArgument("duplicate runway id " + s.id);
  }
  return db;
}

inline RunwayDb load_runway_db(const std::filesystem::path& path) {
  return runway_db_from_json(detail::read_json_file(path));
}

// --- poses -----------------------------------------------------------------------

/// Approach pose for draw `draw_index`, a pure function of
/// (seed, airport_id, draw_index). Positions live in the ENU frame anchored
/// at the runway threshold; the camera looks at the threshold plus jitter.
inline Pose sample_pose(const SceneConfig& config, const RunwaySpec& runway,
                        std::uint64_t draw_index) {
  validate(config);
  const CounterRng rng(mix_key(config.seed, fnv1a(config.airport_id), draw_index));
  const auto& pr = config.pose_ranges;
  const double altitude = pr.altitude.at(rng.uniform(0));
  const double lateral = pr.lateral.at(rng.uniform(1));
  const double distance = pr.distance.at(rng.uniform(2));
  const double yaw_jitter = pr.yaw_jitter.at(rng.uniform(3));
  const double pitch_jitter = pr.pitch_jitter.at(rng.uniform(4));

  const EnuPoint fwd = heading_forward(runway.heading_deg);
  const EnuPoint right = heading_right(runway.heading_deg);
  Pose pose;
  pose.position = (-distance) * fwd + lateral * right + EnuPoint{0.0, 0.0, altitude};
  const EnuPoint to_aim = EnuPoint{} - pose.position;
  const double horizontal = std::hypot(to_aim.east, to_aim.north);
  double yaw = rad2deg(std::atan2(to_aim.east, to_aim.north)) + yaw_jitter;
  yaw = std::fmod(yaw, 360.0);
  if (yaw < 0.0) yaw += 360.0;
  pose.yaw = yaw;
  pose.pitch = rad2deg(std::atan2(to_aim.up, horizontal)) + pitch_jitter;
  pose.roll = 0.0;
  return pose;
}

// --- rendering ---------------------------------------------------------------------

struct RenderResult {
  Image image;
  std::optional<BBox> label;
};

inline constexpr double kLightSpacingM = 60.0;
inline constexpr double kLightRadiusPx = 1.5;
inline constexpr double kLightReferenceDepthM = 1000.0;
inline constexpr int kThresholdLights = 9;

/// Edge lights (both sides, every 60 m) followed by threshold lights, in the
/// threshold-anchored frame.
inline std::vector<EnuPoint> runway_lights(const RunwaySpec& spec) {
  const EnuPoint fwd = heading_forward(spec.heading_deg);
  const EnuPoint right = heading_right(spec.heading_deg);
  const double half = 0.5 * spec.width_m;
  std::vector<EnuPoint> lights;
  for (double along = 0.0; along <= spec.length_m + 1e-9; along += kLightSpacingM) {
    lights.push_back(along * fwd + (-half) * right);
    lights.push_back(along * fwd + half * right);
  }
  for (int i = 1; i < kThresholdLights - 1; ++i) {
    const double across = -half + spec.width_m * i / (kThresholdLights - 1);
    lights.push_back(across * right);
  }
  return lights;
}

inline std::size_t edge_light_count(const RunwaySpec& spec) {
  return 2 * (static_cast<std::size_t>(std::floor(spec.length_m / kLightSpacingM + 1e-9)) + 1);
}

namespace detail {

using Rgb = std::array<double, 3>;

inline std::uint8_t to_byte(double v) {
  return static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L));
}

/// Bilinear value noise in [-1, 1] on a lattice of spacing `cell`.
inline double value_noise(const CounterRng& rng, double x, double y, double cell) {
  const double gx = x / cell, gy = y / cell;
  const double fx = std::floor(gx), fy = std::floor(gy);
  const double tx = gx - fx, ty = gy - fy;
  auto corner = [&](double ix, double iy) {
    const auto i = static_cast<std::int64_t>(ix), j = static_cast<std::int64_t>(iy);
    return 2.0 * rng.uniform(mix_key(static_cast<std::uint64_t>(i), static_cast<std::uint64_t>(j))) - 1.0;
  };
  const double a = corner(fx, fy), b = corner(fx + 1, fy);
  const double c = corner(fx, fy + 1), d = corner(fx + 1, fy + 1);
  const double sx = tx * tx * (3 - 2 * tx), sy = ty * ty * (3 - 2 * ty);
  return (a * (1 - sx) + b * sx) * (1 - sy) + (c * (1 - sx) + d * sx) * sy;
}

/// Per-airport ground and surface palette, shared by both domains.
struct Palette {
  Rgb ground;
  Rgb ground_alt;  // second field colour blended in by low-frequency noise
  Rgb asphalt;
  Rgb sky_zenith;
  Rgb sky_horizon;
};

inline Palette airport_palette(const std::string& airport_id) {
  const CounterRng rng(fnv1a(airport_id) ^ 0x5CE4E5u);
  const double g = rng.uniform(0);
  const double soil = rng.uniform(1);
  Palette p;
  p.ground = {70.0 + 50.0 * soil, 95.0 + 40.0 * g, 50.0 + 20.0 * soil};
  p.ground_alt = {110.0 + 40.0 * soil, 105.0 + 25.0 * g, 70.0 + 20.0 * soil};
  const double tar = rng.uniform(2);
  p.asphalt = {70.0 + 40.0 * tar, 72.0 + 40.0 * tar, 78.0 + 40.0 * tar};
  p.sky_zenith = {95.0, 140.0, 205.0};
  p.sky_horizon = {160.0, 180.0, 205.0};
  return p;
}

/// Whether a runway-local ground point is painted white (edge lines,
/// centreline dashes, threshold bars).
inline bool runway_marking(double along, double across, double width) {
  const double half = 0.5 * width;
  if (half - std::abs(across) < 0.9) return true;
  if (std::abs(across) < 0.45 && std::fmod(along, 50.0) > 20.0 && along > 60.0) return true;
  if (along > 6.0 && along < 36.0) {
    const double stripe = std::fmod(std::abs(across), 3.6);
    if (std::abs(across) > 1.8 && std::abs(across) < half - 2.5 && stripe < 1.8) return true;
  }
  return false;
}

}  // namespace detail

/// Renders one scene and its automatic label. The label is exactly
/// label_bbox(spec, pose, k) and the image a pure function of the arguments.
inline RenderResult render(const SceneConfig& config, const RunwaySpec& spec, const Pose& pose,
                           const CameraIntrinsics& k) {
  validate(config);
  validate(spec);
  const Camera cam(pose, k);
  const bool real = config.domain == Domain::Real;
  const bool night = config.condition == Condition::Night;
  const double gap = config.domain_gap;
  const detail::Palette pal = detail::airport_palette(config.airport_id);
  const EnuPoint fwd = heading_forward(spec.heading_deg);
  const EnuPoint right = heading_right(spec.heading_deg);
  const double cam_height = pose.position.up;

  // Per-image noise streams keyed by the pose so different draws differ.
  const std::uint64_t pose_key =
      mix_key(config.seed, fnv1a(config.airport_id), std::bit_cast<std::uint64_t>(pose.position.east),
              std::bit_cast<std::uint64_t>(pose.position.north),
              std::bit_cast<std::uint64_t>(pose.position.up), std::bit_cast<std::uint64_t>(pose.yaw),
              std::bit_cast<std::uint64_t>(pose.pitch), static_cast<std::uint64_t>(night));
  const CounterRng image_rng(pose_key);
  const CounterRng pixel_rng(pose_key ^ 0xA5A5A5A5ULL);
  const CounterRng texture_rng(fnv1a(config.airport_id) ^ 0x7E47u);

  // Domain styling. Real-style carries per-image gain jitter, ground
  // texture, sensor noise, vignetting and haze. Synthetic-style keeps
  // (1 - domain_gap) of each effect and adds domain_gap of a fixed shift, so
  // domain_gap = 1 is flat shading and 0 reproduces the real-style model.
  const double keep = real ? 1.0 : 1.0 - gap;
  detail::Rgb gain{1.0, 1.0, 1.0};
  for (int c = 0; c < 3; ++c) gain[c] = 1.0 + 0.12 * keep * (2.0 * image_rng.uniform(c) - 1.0);
  const detail::Rgb shift = real ? detail::Rgb{0.0, 0.0, 0.0}
                                 : detail::Rgb{-14.0 * gap, 16.0 * gap, 10.0 * gap};
  const double texture = 22.0 * keep;
  const double sensor = (night ? 5.0 : 9.0) * keep;
  const double vignette = 0.35 * keep;
  const double haze = 0.5 * keep;
  const double bloom = 2.5 * keep;
  const bool styled = keep > 0.0;

  RenderResult out{Image(k.image_width, k.image_height), label_bbox(spec, pose, k)};
  const double diag2 = 0.25 * (static_cast<double>(k.image_width) * k.image_width +
                               static_cast<double>(k.image_height) * k.image_height);

  for (int y = 0; y < k.image_height; ++y) {
    for (int x = 0; x < k.image_width; ++x) {
      const EnuPoint dir = cam.ray(x + 0.5, y + 0.5);
      const double norm = std::sqrt(dir.east * dir.east + dir.north * dir.north + dir.up * dir.up);
      detail::Rgb rgb;
      if (dir.up >= 0.0) {
        const double elev = std::clamp(dir.up / norm * 6.0, 0.0, 1.0);
        for (int c = 0; c < 3; ++c)
          rgb[c] = night ? (c == 2 ? 24.0 : 10.0) + 6.0 * (1.0 - elev)
                         : pal.sky_horizon[c] + (pal.sky_zenith[c] - pal.sky_horizon[c]) * elev;
      } else {
        const double t = -cam_height / dir.up;
        const EnuPoint ground = pose.position + t * dir;
        const double along = ground.east * fwd.east + ground.north * fwd.north;
        const double across = ground.east * right.east + ground.north * right.north;
        const bool on_runway = along >= 0.0 && along <= spec.length_m &&
                               std::abs(across) <= 0.5 * spec.width_m;
        const double range = t * norm;
        if (night) {
          const double base = on_runway ? 13.0 : 7.0;
          rgb = {base, base, base + 2.0};
          if (styled) {
            const double n = detail::value_noise(texture_rng, ground.east, ground.north, 40.0);
            for (auto& v : rgb) v += 3.0 * keep * n;
          }
        } else {
          if (on_runway) {
            rgb = pal.asphalt;
            if (detail::runway_marking(along, across, spec.width_m)) rgb = {178.0, 178.0, 174.0};
          } else {
            const double blend =
                0.25 + keep * (0.25 + 0.5 * detail::value_noise(texture_rng, ground.east, ground.north, 90.0));
            for (int c = 0; c < 3; ++c)
              rgb[c] = pal.ground[c] + (pal.ground_alt[c] - pal.ground[c]) * blend;
          }
          if (styled) {
            const double n = detail::value_noise(texture_rng, ground.east, ground.north, 12.0);
            for (auto& v : rgb) v += texture * 0.6 * n;
            const double h = std::clamp(haze * range / 6000.0, 0.0, 0.6);
            for (int c = 0; c < 3; ++c) rgb[c] += (pal.sky_horizon[c] - rgb[c]) * h;
          }
        }
      }
      if (!night)
        for (int c = 0; c < 3; ++c) rgb[c] = rgb[c] * gain[c] + shift[c];
      if (styled) {
        const double dx = x + 0.5 - k.cx, dy = y + 0.5 - k.cy;
        const double fall = 1.0 - vignette * (dx * dx + dy * dy) / diag2;
        const std::uint64_t idx = static_cast<std::uint64_t>(y) * k.image_width + x;
        const double noise = sensor * (2.0 * pixel_rng.uniform(idx) - 1.0);
        for (auto& v : rgb) v = v * fall + noise;
      }
      auto* px = out.image.at(x, y);
      for (int c = 0; c < 3; ++c) px[c] = detail::to_byte(rgb[c]);
    }
  }

  if (night) {
    // Point lights outline the runway; real-style lights get a soft bloom.
    const detail::Rgb light_rgb = real ? detail::Rgb{255.0, 236.0, 190.0} : detail::Rgb{255.0, 245.0, 215.0};
    for (const auto& light : runway_lights(spec)) {
      const auto c = cam.to_camera(light);
      const auto px = cam.project_camera(c);
      if (!px) continue;
      const double radius = std::clamp(kLightRadiusPx * kLightReferenceDepthM / c[2], 1.0, 2.5);
      const double reach = radius + bloom;
      const int x0 = static_cast<int>(std::floor(px->u - reach)), x1 = static_cast<int>(std::ceil(px->u + reach));
      const int y0 = static_cast<int>(std::floor(px->v - reach)), y1 = static_cast<int>(std::ceil(px->v + reach));
      for (int y = std::max(0, y0); y <= std::min(k.image_height - 1, y1); ++y) {
        for (int x = std::max(0, x0); x <= std::min(k.image_width - 1, x1); ++x) {
          const double d = std::hypot(x + 0.5 - px->u, y + 0.5 - px->v);
          auto* p = out.image.at(x, y);
          if (d <= radius) {
            for (int ch = 0; ch < 3; ++ch) p[ch] = detail::to_byte(light_rgb[ch]);
          } else if (d <= reach) {
            const double w = 0.55 * (1.0 - (d - radius) / (reach - radius));
            for (int ch = 0; ch < 3; ++ch)
              p[ch] = detail::to_byte(std::max<double>(p[ch], p[ch] + (light_rgb[ch] - p[ch]) * w));
          }
        }
      }
    }
  }
  return out;
}

// --- dataset generation ------------------------------------------------------------

class UnknownAirport : public Error {
 public:
  explicit UnknownAirport(const std::string& id) : Error("unknown airport " + id) {}
};

class RetryExhausted : public Error {
 public:
  using Error::Error;
};

inline std::optional<BBox> jitter_label(const std::optional<BBox>& label, const SceneConfig& config,
                                        std::uint64_t draw_index, const CameraIntrinsics& k) {
  if (!label || config.label_noise_px == 0.0) return label;
  const CounterRng rng(mix_key(config.seed, fnv1a(config.airport_id), draw_index, 0x1AB31ULL));
  const double a = config.label_noise_px;
  BBox b{label->xmin + rng.uniform(0, -a, a), label->ymin + rng.uniform(1, -a, a),
         label->xmax + rng.uniform(2, -a, a), label->ymax + rng.uniform(3, -a, a)};
  b.xmin = std::clamp(b.xmin, 0.0, double(k.image_width));
  b.xmax = std::clamp(b.xmax, b.xmin, double(k.image_width));
  b.ymin = std::clamp(b.ymin, 0.0, double(k.image_height));
  b.ymax = std::clamp(b.ymax, b.ymin, double(k.image_height));
  return b;
}

/// Renders `count_per_config` labelled images for each config into
/// `out_dir/images/` and writes `out_dir/manifest.json`. Unlabelable draws
/// are skipped and the next draw index is tried, up to 100x the count.
inline Dataset generate_dataset(const std::vector<SceneConfig>& configs, const RunwayDb& db,
                                std::size_t count_per_config, const std::filesystem::path& out_dir,
                                const std::string& name = "dataset",
                                const CameraIntrinsics& k = default_intrinsics()) {
  if (count_per_config == 0) throw InvalidArgument("count_per_config must be > 0");
  for (const auto& c : configs)
    if (!db.contains(c.airport_id)) throw UnknownAirport(c.airport_id);

  std::filesystem::create_directories(out_dir / "images");
  Dataset d{name, {}, out_dir};
  d.samples.reserve(configs.size() * count_per_config);
  for (std::size_t ci = 0; ci < configs.size(); ++ci) {
    const SceneConfig& config = configs[ci];
    const RunwaySpec& spec = db.at(config.airport_id);
    std::size_t made = 0;
    const std::uint64_t cap = 100 * static_cast<std::uint64_t>(count_per_config);
    for (std::uint64_t draw = 0; made < count_per_config; ++draw) {
      if (draw >= cap)
        throw RetryExhausted("config " + std::to_string(ci) + " (" + config.airport_id +
                             ") yielded " + std::to_string(made) + " labelled images in " +
                             std::to_string(cap) + " draws");
      const Pose pose = sample_pose(config, spec, draw);
      if (!label_bbox(spec, pose, k)) continue;
      const RenderResult r = render(config, spec, pose, k);
      char file[96];
      std::snprintf(file, sizeof file, "images/%03zu_%s_%s_%s_%05llu.png", ci,
                    config.airport_id.c_str(), to_string(config.domain), to_string(config.condition),
                    static_cast<unsigned long long>(draw));
      write_png(r.image, out_dir / file);
      d.samples.push_back({file, jitter_label(r.label, config, draw, k), config.domain,
                           config.condition, config.airport_id, k.image_width, k.image_height});
      ++made;
    }
  }
  save_manifest(d, out_dir / "manifest.json");
  return d;
}

}  // namespace runwaysim
