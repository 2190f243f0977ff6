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

// Geodetic runway descriptions to image-space boxes: WGS-84 local tangent
// plane, aerospace Z-Y-X attitude and a pinhole camera.
//
// Frames:
//   ENU    east/north/up metres, anchored at a geodetic origin (by convention
//          the runway threshold for everything in scenegen).
//   body   x forward (boresight), y right wing, z down.
//   camera x = image right, y = image down, z = boresight depth.
//   pixels origin at the top-left image corner, y down.

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "runwaysim/errors.hpp"

namespace runwaysim {

namespace wgs84 {
inline constexpr double kSemiMajor = 6378137.0;
inline constexpr double kFlattening = 1.0 / 298.257223563;
inline constexpr double kEccentricitySq = kFlattening * (2.0 - kFlattening);
}  // namespace wgs84

constexpr double deg2rad(double deg) { return deg * std::numbers::pi / 180.0; }
constexpr double rad2deg(double rad) { return rad * 180.0 / std::numbers::pi; }

struct GeoPoint {
  double lat = 0.0;  // degrees
  double lon = 0.0;  // degrees
  double alt = 0.0;  // metres above the ellipsoid
};

struct EnuPoint {
  double east = 0.0;
  double north = 0.0;
  double up = 0.0;

  friend EnuPoint operator+(const EnuPoint& a, const EnuPoint& b) {
    return {a.east + b.east, a.north + b.north, a.up + b.up};
  }
  friend EnuPoint operator-(const EnuPoint& a, const EnuPoint& b) {
    return {a.east - b.east, a.north - b.north, a.up - b.up};
  }
  friend EnuPoint operator*(double s, const EnuPoint& a) {
    return {s * a.east, s * a.north, s * a.up};
  }
};

struct RunwaySpec {
  std::string id;
  GeoPoint threshold;        // centre of the landing threshold
  double heading_deg = 0.0;  // clockwise from true north, [0, 360)
  double length_m = 0.0;
  double width_m = 0.0;
};

struct CameraIntrinsics {
  double fx = 0.0;
  double fy = 0.0;
  double cx = 0.0;
  double cy = 0.0;
  int image_width = 0;
  int image_height = 0;
};

struct PixelPoint {
  double u = 0.0;
  double v = 0.0;
};

struct BBox {
  double xmin = 0.0;
  double ymin = 0.0;
  double xmax = 0.0;
  double ymax = 0.0;

  double width() const { return xmax - xmin; }
  double height() const { return ymax - ymin; }
  double area() const { return width() * height(); }
  double center_x() const { return 0.5 * (xmin + xmax); }
  double center_y() const { return 0.5 * (ymin + ymax); }

  friend bool operator==(const BBox&, const BBox&) = default;
};

using Mat3 = std::array<std::array<double, 3>, 3>;

/// Camera attitude and position. Angles in degrees, intrinsic Z-Y-X:
/// yaw clockwise from north, pitch positive nose-up, roll positive
/// right-wing-down.
struct Pose {
  EnuPoint position;
  double yaw = 0.0;
  double pitch = 0.0;
  double roll = 0.0;

  friend bool operator==(const Pose& a, const Pose& b) {
    return a.position.east == b.position.east && a.position.north == b.position.north &&
           a.position.up == b.position.up && a.yaw == b.yaw && a.pitch == b.pitch &&
           a.roll == b.roll;
  }
};

// --- validation ----------------------------------------------------------

inline void validate(const GeoPoint& p) {
  if (!std::isfinite(p.lat) || !std::isfinite(p.lon) || !std::isfinite(p.alt))
    throw InvalidArgument("GeoPoint has non-finite components");
  if (p.lat < -90.0 || p.lat > 90.0) throw InvalidArgument("GeoPoint latitude out of [-90, 90]");
  if (p.lon < -180.0 || p.lon >= 180.0)
    throw InvalidArgument("GeoPoint longitude out of [-180, 180)");
}

inline void validate(const RunwaySpec& r) {
  validate(r.threshold);
  if (!(r.length_m > 0.0)) throw InvalidArgument("runway " + r.id + ": length must be > 0");
  if (!(r.width_m >= 0.0) || !std::isfinite(r.width_m))
    throw InvalidArgument("runway " + r.id + ": width must be >= 0");
  if (!(r.heading_deg >= 0.0 && r.heading_deg < 360.0))
    throw InvalidArgument("runway " + r.id + ": heading must be in [0, 360)");
}

inline void validate(const CameraIntrinsics& k) {
  if (!(k.fx > 0.0 && k.fy > 0.0)) throw InvalidArgument("focal lengths must be > 0");
  if (k.image_width <= 0 || k.image_height <= 0)
    throw InvalidArgument("image dimensions must be > 0");
  if (!(k.cx >= 0.0 && k.cx < k.image_width && k.cy >= 0.0 && k.cy < k.image_height))
    throw InvalidArgument("principal point must lie inside the image");
}

// --- local tangent plane -------------------------------------------------

class OutOfLocalRange : public Error {
 public:
  using Error::Error;
};

namespace detail {

inline double wrap_degrees(double d) {
  d = std::fmod(d + 180.0, 360.0);
  if (d < 0) d += 360.0;
  return d - 180.0;
}

struct Radii {
  double meridian;        // M
  double prime_vertical;  // N
};

inline Radii radii_at(double lat_deg) {
  const double s = std::sin(deg2rad(lat_deg));
  const double w = 1.0 - wgs84::kEccentricitySq * s * s;
  return {wgs84::kSemiMajor * (1.0 - wgs84::kEccentricitySq) / (w * std::sqrt(w)),
          wgs84::kSemiMajor / std::sqrt(w)};
}

}  // namespace detail

/// Flat-earth small-angle mapping into the tangent plane at `origin`.
/// Only valid at airport scale: both angular offsets must stay under 1 degree.
inline EnuPoint geodetic_to_enu(const GeoPoint& p, const GeoPoint& origin) {
  const double dlat = p.lat - origin.lat;
  const double dlon = detail::wrap_degrees(p.lon - origin.lon);
  if (!(std::abs(dlat) < 1.0) || !(std::abs(dlon) < 1.0))
    throw OutOfLocalRange("point is more than 1 degree from the local origin");
  const auto r = detail::radii_at(origin.lat);
  return {deg2rad(dlon) * r.prime_vertical * std::cos(deg2rad(origin.lat)),
          deg2rad(dlat) * r.meridian, p.alt - origin.alt};
}

/// Exact inverse of geodetic_to_enu.
inline GeoPoint enu_to_geodetic(const EnuPoint& e, const GeoPoint& origin) {
  const auto r = detail::radii_at(origin.lat);
  const double dlat = rad2deg(e.north / r.meridian);
  const double dlon = rad2deg(e.east / (r.prime_vertical * std::cos(deg2rad(origin.lat))));
  if (!(std::abs(dlat) < 1.0) || !(std::abs(dlon) < 1.0))
    throw OutOfLocalRange("offset is more than 1 degree from the local origin");
  return {origin.lat + dlat, detail::wrap_degrees(origin.lon + dlon), origin.alt + e.up};
}

// --- runway outline --------------------------------------------------------

/// Unit vector along the runway heading, in ENU.
inline EnuPoint heading_forward(double heading_deg) {
  const double h = deg2rad(heading_deg);
  return {std::sin(h), std::cos(h), 0.0};
}

/// Unit vector to the right of the heading, in ENU.
inline EnuPoint heading_right(double heading_deg) {
  const double h = deg2rad(heading_deg);
  return {std::cos(h), -std::sin(h), 0.0};
}

/// Corners in the threshold-anchored tangent plane, ordered near-left,
/// near-right, far-right, far-left (counter-clockwise seen from above).
inline std::array<EnuPoint, 4> runway_corners_enu(const RunwaySpec& spec) {
  validate(spec);
  const EnuPoint fwd = heading_forward(spec.heading_deg);
  const EnuPoint right = heading_right(spec.heading_deg);
  const double half = 0.5 * spec.width_m;
  const EnuPoint far = spec.length_m * fwd;
  return {(-half) * right, half * right, far + half * right, far + (-half) * right};
}

inline std::array<GeoPoint, 4> runway_corners(const RunwaySpec& spec) {
  const auto enu = runway_corners_enu(spec);
  std::array<GeoPoint, 4> out;
  for (std::size_t i = 0; i < 4; ++i) out[i] = enu_to_geodetic(enu[i], spec.threshold);
  return out;
}

// --- attitude and projection -------------------------------------------------

/// Body-to-NED rotation Rz(yaw) * Ry(pitch) * Rx(roll).
inline Mat3 body_to_ned(double yaw_deg, double pitch_deg, double roll_deg) {
  const double cy = std::cos(deg2rad(yaw_deg)), sy = std::sin(deg2rad(yaw_deg));
  const double cp = std::cos(deg2rad(pitch_deg)), sp = std::sin(deg2rad(pitch_deg));
  const double cr = std::cos(deg2rad(roll_deg)), sr = std::sin(deg2rad(roll_deg));
  return {{{cy * cp, cy * sp * sr - sy * cr, cy * sp * cr + sy * sr},
           {sy * cp, sy * sp * sr + cy * cr, sy * sp * cr - cy * sr},
           {-sp, cp * sr, cp * cr}}};
}

inline Mat3 rotation_of(const Pose& pose) { return body_to_ned(pose.yaw, pose.pitch, pose.roll); }

inline void validate(const Pose& pose) {
  const auto& p = pose.position;
  if (!std::isfinite(p.east) || !std::isfinite(p.north) || !std::isfinite(p.up) ||
      !std::isfinite(pose.yaw) || !std::isfinite(pose.pitch) || !std::isfinite(pose.roll))
    throw InvalidArgument("pose has non-finite components");
}

/// World (ENU) to camera transform plus intrinsics, precomputed once per pose.
class Camera {
 public:
  Camera(const Pose& pose, const CameraIntrinsics& k) : position_(pose.position), k_(k) {
    validate(pose);
    validate(k);
    const Mat3 r = rotation_of(pose);
    // Rows of the world->camera matrix: camera axes (body y, z, x) expressed
    // in ENU; NED columns are remapped as (n, e, d) -> (north, east, -up).
    constexpr int kCamFromBody[3] = {1, 2, 0};
    for (int row = 0; row < 3; ++row) {
      const int b = kCamFromBody[row];
      axes_[row] = {r[1][b], r[0][b], -r[2][b]};  // (east, north, up) components
    }
  }

  /// Point in camera coordinates (x right, y down, z depth).
  std::array<double, 3> to_camera(const EnuPoint& pt) const {
    const EnuPoint d = pt - position_;
    std::array<double, 3> c{};
    for (int row = 0; row < 3; ++row)
      c[row] = axes_[row][0] * d.east + axes_[row][1] * d.north + axes_[row][2] * d.up;
    return c;
  }

  /// Pixel of a camera-frame point; nullopt for depth <= 1e-9.
  std::optional<PixelPoint> project_camera(const std::array<double, 3>& c) const {
    if (!(c[2] > kMinDepth)) return std::nullopt;
    return PixelPoint{k_.cx + k_.fx * c[0] / c[2], k_.cy + k_.fy * c[1] / c[2]};
  }

  std::optional<PixelPoint> project(const EnuPoint& pt) const { return project_camera(to_camera(pt)); }

  /// Unnormalised world-frame direction of the ray through pixel (u, v).
  EnuPoint ray(double u, double v) const {
    const double x = (u - k_.cx) / k_.fx;
    const double y = (v - k_.cy) / k_.fy;
    return {axes_[0][0] * x + axes_[1][0] * y + axes_[2][0],
            axes_[0][1] * x + axes_[1][1] * y + axes_[2][1],
            axes_[0][2] * x + axes_[1][2] * y + axes_[2][2]};
  }

  bool in_image(const PixelPoint& p) const {
    return p.u >= 0.0 && p.u <= k_.image_width && p.v >= 0.0 && p.v <= k_.image_height;
  }

  const EnuPoint& position() const { return position_; }
  const CameraIntrinsics& intrinsics() const { return k_; }

  static constexpr double kMinDepth = 1e-9;

 private:
  EnuPoint position_;
  CameraIntrinsics k_;
  std::array<std::array<double, 3>, 3> axes_{};
};

/// Pinhole projection; nullopt means the point is behind the camera (not a
/// fault). Pixels may fall outside the image.
inline std::optional<PixelPoint> project(const EnuPoint& pt, const Pose& pose,
                                         const CameraIntrinsics& k) {
  return Camera(pose, k).project(pt);
}

// --- automatic labelling ----------------------------------------------------

inline constexpr double kDefaultMinVisibleFraction = 0.25;
inline constexpr int kDefaultSamplesPerEdge = 64;

namespace detail {

/// Liang-Barsky clip of segment a->b against [0,w]x[0,h]; returns the
/// surviving parameter interval.
inline std::optional<std::pair<double, double>> clip_segment(const PixelPoint& a,
                                                             const PixelPoint& b, double w,
                                                             double h) {
  double t0 = 0.0, t1 = 1.0;
  const double du = b.u - a.u, dv = b.v - a.v;
  const double p[4] = {-du, du, -dv, dv};
  const double q[4] = {a.u, w - a.u, a.v, h - a.v};
  for (int i = 0; i < 4; ++i) {
    if (p[i] == 0.0) {
      if (q[i] < 0.0) return std::nullopt;
      continue;
    }
    const double t = q[i] / p[i];
    if (p[i] < 0.0) {
      t0 = std::max(t0, t);
    } else {
      t1 = std::min(t1, t);
    }
    if (t0 > t1) return std::nullopt;
  }
  return std::pair{t0, t1};
}

}  // namespace detail

/// Sampled boundary of the runway outline in the threshold-anchored frame:
/// `samples_per_edge` points per edge, corners included once.
inline std::vector<EnuPoint> runway_boundary_samples(const RunwaySpec& spec, int samples_per_edge) {
  const auto corners = runway_corners(spec);
  std::array<EnuPoint, 4> enu;
  for (std::size_t i = 0; i < 4; ++i) enu[i] = geodetic_to_enu(corners[i], spec.threshold);
  std::vector<EnuPoint> out;
  out.reserve(static_cast<std::size_t>(4 * samples_per_edge));
  for (std::size_t e = 0; e < 4; ++e) {
    const EnuPoint& a = enu[e];
    const EnuPoint& b = enu[(e + 1) % 4];
    for (int k = 0; k < samples_per_edge; ++k) {
      const double t = static_cast<double>(k) / samples_per_edge;
      out.push_back(a + t * (b - a));
    }
  }
  return out;
}

/// Fraction of boundary samples that project inside the image.
inline double visible_fraction(const RunwaySpec& spec, const Camera& cam, int samples_per_edge) {
  const auto samples = runway_boundary_samples(spec, samples_per_edge);
  std::size_t visible = 0;
  for (const auto& s : samples) {
    const auto px = cam.project(s);
    if (px && cam.in_image(*px)) ++visible;
  }
  return static_cast<double>(visible) / static_cast<double>(samples.size());
}

/// Axis-aligned image box of the runway, or nullopt (no label) when less than
/// `min_visible_fraction` of the boundary samples land in the image.
///
/// The box extent is computed by clipping every outline edge exactly against
/// the near plane and the image rectangle, so it is independent of the
/// sampling density; the samples only drive the visibility decision.
inline std::optional<BBox> label_bbox(const RunwaySpec& spec, const Pose& pose,
                                      const CameraIntrinsics& k,
                                      double min_visible_fraction = kDefaultMinVisibleFraction,
                                      int samples_per_edge = kDefaultSamplesPerEdge) {
  if (!(min_visible_fraction > 0.0 && min_visible_fraction <= 1.0))
    throw InvalidArgument("min_visible_fraction must be in (0, 1]");
  if (samples_per_edge < kDefaultSamplesPerEdge)
    throw InvalidArgument("at least 64 boundary samples per edge are required");
  const Camera cam(pose, k);
  if (visible_fraction(spec, cam, samples_per_edge) < min_visible_fraction) return std::nullopt;

  const auto corners = runway_corners(spec);
  const double w = k.image_width, h = k.image_height;
  BBox box{w, h, 0.0, 0.0};
  bool any = false;
  for (std::size_t e = 0; e < 4; ++e) {
    auto a = cam.to_camera(geodetic_to_enu(corners[e], spec.threshold));
    auto b = cam.to_camera(geodetic_to_enu(corners[(e + 1) % 4], spec.threshold));
    if (!(a[2] > Camera::kMinDepth) && !(b[2] > Camera::kMinDepth)) continue;
    // Trim the part of the edge at or behind the camera.
    constexpr double kNear = 1e-6;
    auto lerp = [](const std::array<double, 3>& p, const std::array<double, 3>& q, double t) {
      return std::array<double, 3>{p[0] + t * (q[0] - p[0]), p[1] + t * (q[1] - p[1]),
                                   p[2] + t * (q[2] - p[2])};
    };
    if (a[2] < kNear) a = lerp(a, b, (kNear - a[2]) / (b[2] - a[2]));
    if (b[2] < kNear) b = lerp(b, a, (kNear - b[2]) / (a[2] - b[2]));
    const auto pa = cam.project_camera(a);
    const auto pb = cam.project_camera(b);
    if (!pa || !pb) continue;
    const auto span = detail::clip_segment(*pa, *pb, w, h);
    if (!span) continue;
    for (double t : {span->first, span->second}) {
      const double u = std::clamp(pa->u + t * (pb->u - pa->u), 0.0, w);
      const double v = std::clamp(pa->v + t * (pb->v - pa->v), 0.0, h);
      box.xmin = std::min(box.xmin, u);
      box.ymin = std::min(box.ymin, v);
      box.xmax = std::max(box.xmax, u);
      box.ymax = std::max(box.ymax, v);
      any = true;
    }
  }
  if (!any) return std::nullopt;
  return box;
}

}  // namespace runwaysim
