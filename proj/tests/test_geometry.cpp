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

#include <array>
#include <cmath>
#include <random>

#include "runwaysim/geometry.hpp"
#include "oracles.hpp"

namespace runwaysim {
namespace {

using testing::ecef_enu;
using testing::random_approach;

CameraIntrinsics square_camera() { return {500.0, 500.0, 320.0, 320.0, 640, 640}; }

TEST(GeodeticToEnu, OriginMapsToZero) {
  const GeoPoint o{43.6, 1.44, 150.0};
  const EnuPoint e = geodetic_to_enu(o, o);
  EXPECT_EQ(e.east, 0.0);
  EXPECT_EQ(e.north, 0.0);
  EXPECT_EQ(e.up, 0.0);
}

TEST(GeodeticToEnu, PureAltitudeOffset) {
  const GeoPoint o{43.6, 1.44, 150.0};
  const EnuPoint e = geodetic_to_enu({o.lat, o.lon, o.alt + 100.0}, o);
  EXPECT_EQ(e.east, 0.0);
  EXPECT_EQ(e.north, 0.0);
  EXPECT_DOUBLE_EQ(e.up, 100.0);
}

TEST(GeodeticToEnu, MilliDegreeNorthAtEquatorMatchesEcef) {
  const GeoPoint o{0.0, 10.0, 0.0};
  const GeoPoint p{0.001, 10.0, 0.0};
  const EnuPoint oracle = ecef_enu(p, o);
  EXPECT_NEAR(oracle.north, 110.57, 0.01);
  const EnuPoint e = geodetic_to_enu(p, o);
  EXPECT_NEAR(e.north, oracle.north, 0.1);
  EXPECT_NEAR(e.north, 110.57, 0.1);
  EXPECT_NEAR(e.east, 0.0, 1e-9);
}

TEST(GeodeticToEnu, HorizontalAgreesWithEcefAtAirportScale) {
  std::mt19937_64 gen(5);
  std::uniform_real_distribution<double> lat(-70.0, 70.0), lon(-180.0, 179.0), off(-0.03, 0.03);
  for (int i = 0; i < 200; ++i) {
    const GeoPoint o{lat(gen), lon(gen), 200.0};
    const GeoPoint p{o.lat + off(gen), o.lon + off(gen), o.alt};
    const EnuPoint e = geodetic_to_enu(p, o), x = ecef_enu(p, o);
    const double range = std::hypot(x.east, x.north);
    // Second-order flat-earth error grows with range^2 / R.
    EXPECT_NEAR(e.east, x.east, 1e-2 + range * range * 2e-7);
    EXPECT_NEAR(e.north, x.north, 1e-2 + range * range * 2e-7);
  }
}

TEST(GeodeticToEnu, RejectsPointsFartherThanOneDegree) {
  const GeoPoint o{10.0, 20.0, 0.0};
  EXPECT_THROW(geodetic_to_enu({11.5, 20.0, 0.0}, o), OutOfLocalRange);
  EXPECT_THROW(geodetic_to_enu({10.0, 18.9, 0.0}, o), OutOfLocalRange);
  EXPECT_NO_THROW(geodetic_to_enu({10.9, 20.9, 0.0}, o));
}

TEST(GeodeticToEnu, HandlesAntimeridian) {
  const GeoPoint o{0.0, 179.9995, 0.0};
  const EnuPoint e = geodetic_to_enu({0.0, -179.9995, 0.0}, o);
  EXPECT_NEAR(e.east, 111.32, 0.05);
}

TEST(GeodeticToEnu, InverseRoundTripsWithinMicrometre) {
  std::mt19937_64 gen(11);
  std::uniform_real_distribution<double> lat(-60.0, 60.0), lon(-180.0, 179.0), off(-50000.0, 50000.0);
  for (int i = 0; i < 1000; ++i) {
    const GeoPoint o{lat(gen), lon(gen), 35.0};
    const EnuPoint x{off(gen), off(gen), off(gen) / 100.0};
    const EnuPoint y = geodetic_to_enu(enu_to_geodetic(x, o), o);
    EXPECT_NEAR(y.east, x.east, 1e-6);
    EXPECT_NEAR(y.north, x.north, 1e-6);
    EXPECT_NEAR(y.up, x.up, 1e-6);
  }
}

TEST(RunwayCorners, HeadingZeroAtEquatorMatchesForwardOffsets) {
  const RunwaySpec r{"EQ", {0.0, 30.0, 12.0}, 0.0, 3000.0, 45.0};
  const auto c = runway_corners(r);
  // Forward offsets from the radii of curvature at the equator.
  const double a = 6378137.0, e2 = (1.0 / 298.257223563) * (2 - 1.0 / 298.257223563);
  const double meridian = a * (1 - e2), prime = a;
  const double dlon = (22.5 / prime) * 180.0 / M_PI;
  const double dlat = (3000.0 / meridian) * 180.0 / M_PI;
  const std::array<GeoPoint, 4> expected{{{0.0, 30.0 - dlon, 12.0},
                                          {0.0, 30.0 + dlon, 12.0},
                                          {dlat, 30.0 + dlon, 12.0},
                                          {dlat, 30.0 - dlon, 12.0}}};
  for (std::size_t i = 0; i < 4; ++i) {
    const EnuPoint got = ecef_enu(c[i], r.threshold);
    const EnuPoint want = ecef_enu(expected[i], r.threshold);
    EXPECT_NEAR(got.east, want.east, 0.01) << i;
    EXPECT_NEAR(got.north, want.north, 0.01) << i;
  }
  const EnuPoint nl = geodetic_to_enu(c[0], r.threshold), fr = geodetic_to_enu(c[2], r.threshold);
  EXPECT_NEAR(nl.east, -22.5, 0.01);
  EXPECT_NEAR(nl.north, 0.0, 0.01);
  EXPECT_NEAR(fr.east, 22.5, 0.01);
  EXPECT_NEAR(fr.north, 3000.0, 0.01);
}

TEST(RunwayCorners, HeadingNinetySwapsAxes) {
  RunwaySpec r{"R", {45.0, 5.0, 0.0}, 0.0, 2500.0, 60.0};
  const auto north = runway_corners_enu(r);
  r.heading_deg = 90.0;
  const auto east = runway_corners_enu(r);
  for (std::size_t i = 0; i < 4; ++i) {
    EXPECT_NEAR(east[i].east, north[i].north, 1e-9);
    EXPECT_NEAR(east[i].north, -north[i].east, 1e-9);
  }
}

TEST(RunwayCorners, ZeroWidthCollapsesNearPair) {
  const RunwaySpec r{"Z", {30.0, -90.0, 5.0}, 123.0, 2000.0, 0.0};
  const auto c = runway_corners(r);
  const EnuPoint a = geodetic_to_enu(c[0], r.threshold), b = geodetic_to_enu(c[1], r.threshold);
  EXPECT_NEAR(a.east, b.east, 1e-9);
  EXPECT_NEAR(a.north, b.north, 1e-9);
}

TEST(RunwayCorners, CounterClockwiseFromAbove) {
  for (double heading : {0.0, 45.0, 181.0, 300.0}) {
    const auto c = runway_corners_enu({"R", {10.0, 10.0, 0.0}, heading, 1000.0, 40.0});
    double area2 = 0.0;
    for (std::size_t i = 0; i < 4; ++i)
      area2 += c[i].east * c[(i + 1) % 4].north - c[(i + 1) % 4].east * c[i].north;
    EXPECT_GT(area2, 0.0) << heading;
    EXPECT_NEAR(area2 / 2.0, 40000.0, 1e-6);
  }
}

TEST(RunwaySpecValidation, RejectsBadFields) {
  EXPECT_THROW(runway_corners({"R", {0, 0, 0}, 0.0, 0.0, 10.0}), InvalidArgument);
  EXPECT_THROW(runway_corners({"R", {0, 0, 0}, 360.0, 100.0, 10.0}), InvalidArgument);
  EXPECT_THROW(runway_corners({"R", {95, 0, 0}, 0.0, 100.0, 10.0}), InvalidArgument);
}

TEST(Project, BoresightHitsPrincipalPoint) {
  Pose pose;
  pose.yaw = 37.0;
  pose.pitch = -4.0;
  const auto k = square_camera();
  const EnuPoint fwd{std::sin(deg2rad(37.0)) * std::cos(deg2rad(4.0)),
                     std::cos(deg2rad(37.0)) * std::cos(deg2rad(4.0)), -std::sin(deg2rad(4.0))};
  const auto px = project(100.0 * fwd, pose, k);
  ASSERT_TRUE(px);
  EXPECT_NEAR(px->u, k.cx, 1e-9);
  EXPECT_NEAR(px->v, k.cy, 1e-9);
}

TEST(Project, PointBehindCameraIsNotProjectable) {
  const Pose pose;  // looking north
  EXPECT_FALSE(project({0.0, -10.0, 0.0}, pose, square_camera()));
}

TEST(Project, HandPinholeArithmetic) {
  // Identity attitude: camera x = east, y = down, z = north.
  const Pose pose;
  const auto px = project({1.0, 100.0, 0.0}, pose, square_camera());
  ASSERT_TRUE(px);
  EXPECT_DOUBLE_EQ(px->u, 325.0);
  EXPECT_DOUBLE_EQ(px->v, 320.0);
}

TEST(Project, AttitudeConventions) {
  const auto k = square_camera();
  Pose pose;
  // Point above the boresight appears higher in the image (smaller v).
  EXPECT_LT(project({0.0, 100.0, 5.0}, pose, k)->v, k.cy);
  // Nose-up pitch moves a boresight point down in the image.
  pose.pitch = 2.0;
  EXPECT_GT(project({0.0, 100.0, 0.0}, pose, k)->v, k.cy);
  // Yaw right moves it left.
  pose = {};
  pose.yaw = 2.0;
  EXPECT_LT(project({0.0, 100.0, 0.0}, pose, k)->u, k.cx);
  // Right wing down: a point off to the right rises in the image.
  pose = {};
  pose.roll = 10.0;
  EXPECT_LT(project({10.0, 100.0, 0.0}, pose, k)->v, k.cy);
}

TEST(Project, DoublingFocalLengthDoublesOffset) {
  std::mt19937_64 gen(3);
  std::uniform_real_distribution<double> ang(-30.0, 30.0), pos(-200.0, 200.0);
  for (int i = 0; i < 200; ++i) {
    const Pose pose{{pos(gen), pos(gen), 50.0}, ang(gen), ang(gen), ang(gen)};
    const EnuPoint pt{pos(gen), 1000.0 + pos(gen), pos(gen) / 10.0};
    CameraIntrinsics k = square_camera();
    const auto a = project(pt, pose, k);
    k.fx *= 2.0;
    const auto b = project(pt, pose, k);
    ASSERT_EQ(a.has_value(), b.has_value());
    if (!a) continue;
    EXPECT_NEAR(b->u - k.cx, 2.0 * (a->u - k.cx), 1e-9 * (1.0 + std::abs(a->u)));
  }
}

TEST(Pose, RotationIsOrthonormal) {
  std::mt19937_64 gen(9);
  std::uniform_real_distribution<double> ang(-720.0, 720.0);
  for (int t = 0; t < 500; ++t) {
    const Mat3 r = body_to_ned(ang(gen), ang(gen), ang(gen));
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) {
        double dot = 0.0;
        for (int k = 0; k < 3; ++k) dot += r[k][i] * r[k][j];
        EXPECT_NEAR(dot, i == j ? 1.0 : 0.0, 1e-9);
      }
  }
}

// Nadir camera over the runway; runway axis along image y.
Pose nadir_over(double along, double altitude) { return {{0.0, along, altitude}, 0.0, -90.0, 0.0}; }

TEST(LabelBbox, NadirOverRunwayCentreIsCentred) {
  const RunwaySpec r{"N", {40.0, -100.0, 300.0}, 0.0, 400.0, 40.0};
  const auto k = square_camera();
  const auto box = label_bbox(r, nadir_over(200.0, 600.0), k);
  ASSERT_TRUE(box);
  EXPECT_NEAR(box->center_x(), k.cx, 0.5);
  EXPECT_NEAR(box->center_y(), k.cy, 0.5);
  EXPECT_NEAR(box->height(), 400.0 * 500.0 / 600.0, 1e-6);
  EXPECT_NEAR(box->width(), 40.0 * 500.0 / 600.0, 1e-6);
}

TEST(LabelBbox, RunwayBehindCameraHasNoLabel) {
  const RunwaySpec r{"B", {40.0, -100.0, 300.0}, 0.0, 400.0, 40.0};
  Pose pose{{0.0, 1000.0, 50.0}, 0.0, 0.0, 0.0};  // past the far end, looking north
  EXPECT_FALSE(label_bbox(r, pose, square_camera()));
}

// Fraction of a dense interior grid of the runway that lands in the image.
double interior_visible_fraction(const RunwaySpec& r, const Pose& pose, const CameraIntrinsics& k) {
  const auto c = runway_corners_enu(r);
  int in = 0, total = 0;
  for (int i = 0; i <= 200; ++i)
    for (int j = 0; j <= 40; ++j) {
      const double s = i / 200.0, t = j / 40.0;
      const EnuPoint near = c[0] + t * (c[1] - c[0]);
      const EnuPoint far = c[3] + t * (c[2] - c[3]);
      const auto px = project(near + s * (far - near), pose, k);
      ++total;
      if (px && px->u >= 0 && px->u <= k.image_width && px->v >= 0 && px->v <= k.image_height) ++in;
    }
  return static_cast<double>(in) / total;
}

TEST(LabelBbox, HalfVisibleRunwayRespectsThreshold) {
  const RunwaySpec r{"H", {40.0, -100.0, 300.0}, 0.0, 400.0, 40.0};
  const CameraIntrinsics k{500.0, 500.0, 320.0, 240.0, 640, 480};
  // 500 m up: one pixel per metre; image spans 200..680 m along the runway.
  const Pose pose = nadir_over(440.0, 500.0);
  EXPECT_NEAR(interior_visible_fraction(r, pose, k), 0.5, 0.01);
  EXPECT_FALSE(label_bbox(r, pose, k, 0.8));
  const auto box = label_bbox(r, pose, k, 0.3);
  ASSERT_TRUE(box);
  EXPECT_NEAR(box->xmin, 300.0, 1e-6);
  EXPECT_NEAR(box->xmax, 340.0, 1e-6);
  EXPECT_NEAR(box->ymin, 280.0, 1e-6);
  EXPECT_NEAR(box->ymax, 480.0, 1e-6);
}

TEST(LabelBbox, RejectsBadArguments) {
  const RunwaySpec r{"H", {40.0, -100.0, 300.0}, 0.0, 400.0, 40.0};
  EXPECT_THROW(label_bbox(r, nadir_over(0, 500), square_camera(), 0.0), InvalidArgument);
  EXPECT_THROW(label_bbox(r, nadir_over(0, 500), square_camera(), 0.5, 16), InvalidArgument);
}

TEST(LabelBbox, ContainsEveryVisibleBoundarySample) {
  std::mt19937_64 gen(21);
  const auto k = square_camera();
  int labelled = 0;
  for (int t = 0; t < 300; ++t) {
    const auto s = random_approach(gen);
    const auto box = label_bbox(s.runway, s.pose, k, 0.01);
    if (!box) continue;
    ++labelled;
    const Camera cam(s.pose, k);
    for (const auto& pt : runway_boundary_samples(s.runway, 256)) {
      const auto px = cam.project(pt);
      if (!px || !cam.in_image(*px)) continue;
      EXPECT_GE(px->u, box->xmin - 1e-6);
      EXPECT_LE(px->u, box->xmax + 1e-6);
      EXPECT_GE(px->v, box->ymin - 1e-6);
      EXPECT_LE(px->v, box->ymax + 1e-6);
    }
    EXPECT_GE(box->xmin, 0.0);
    EXPECT_LE(box->xmax, k.image_width);
    EXPECT_GE(box->ymin, 0.0);
    EXPECT_LE(box->ymax, k.image_height);
  }
  EXPECT_GT(labelled, 50);
}

TEST(LabelBbox, InsensitiveToSamplingDensity) {
  std::mt19937_64 gen(33);
  const auto k = square_camera();
  for (int t = 0; t < 200; ++t) {
    const auto s = random_approach(gen);
    const auto a = label_bbox(s.runway, s.pose, k, 0.01, 64);
    const auto b = label_bbox(s.runway, s.pose, k, 0.01, 1024);
    if (!a || !b) continue;
    EXPECT_NEAR(a->xmin, b->xmin, 0.5);
    EXPECT_NEAR(a->ymin, b->ymin, 0.5);
    EXPECT_NEAR(a->xmax, b->xmax, 0.5);
    EXPECT_NEAR(a->ymax, b->ymax, 0.5);
  }
}

}  // namespace
}  // namespace runwaysim
