/* Copyright 2026 The EllipBody Authors

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#include "ellipbody/partdr.h"

#include <algorithm>
#include <cmath>

#include <gtest/gtest.h>

#include "ellipbody/losses.h"
#include "ellipbody/optim.h"
#include "testing/fixtures.h"

namespace ellipbody {
namespace {

using testing::Rng;

ProjectedScene single_triangle(double dx = 0.0, double dy = 0.0) {
  ProjectedScene s;
  s.width = 32;
  s.height = 32;
  s.num_classes = 1;
  s.parts.push_back(
      {{{6.0 + dx, 5.0 + dy, 1.0}, {24.0 + dx, 9.0 + dy, 1.0}, {10.0 + dx, 26.0 + dy, 1.0}},
       {{0, 1, 2}},
       0});
  return s;
}

// Target with one pixel changed.
LabelMap with_pixel(const LabelMap& base, int x, int y, uint8_t label) {
  LabelMap out = base;
  out.at(x, y) = label;
  return out;
}

TEST(BackwardXYTest, SerialReferenceIsIdentical) {
  Rng rng(51);
  for (int i = 0; i < 100; ++i) {
    const ProjectedScene scene = testing::random_scene(rng, 50, 64);
    const RasterOutput raster = rasterize(scene);
    // Target: another random scene of the same size and classes.
    ProjectedScene other = testing::random_scene(rng, 50, 64);
    other.width = scene.width;
    other.height = scene.height;
    other.num_classes = scene.num_classes;
    for (ProjectedPart& p : other.parts) p.class_id %= scene.num_classes;
    const LabelMap target = rasterize(other).labels;
    const VertexGradients a = backward_xy(scene, raster, target);
    const VertexGradients b = backward_xy_serial(scene, raster, target);
    ASSERT_EQ(a.parts, b.parts) << "scene " << i;
  }
}

TEST(BackwardXYTest, MatchingTargetGivesZero) {
  const ProjectedScene s = single_triangle();
  const RasterOutput r = rasterize(s);
  const VertexGradients g = backward_xy(s, r, r.labels);
  EXPECT_EQ(g.max_abs(), 0.0);
}

TEST(BackwardXYTest, TwoPixelPullIsOneHalf) {
  ProjectedScene s;
  s.width = 8;
  s.height = 4;
  s.num_classes = 1;
  s.parts.push_back({{{0.0, -10.0, 1.0}, {3.5, -10.0, 1.0}, {3.5, 20.0, 1.0}}, {{0, 1, 2}}, 0});
  const RasterOutput r = rasterize(s);
  const VertexGradients g = backward_xy(s, r, with_pixel(r.labels, 5, 1, 1));
  // Moving right by 2 pixels covers the wanted pixel: the loss falls with x.
  for (const Vec3& v : g.parts[0]) {
    EXPECT_EQ(v.x(), -0.5);
    EXPECT_EQ(v.y(), 0.0);
    EXPECT_EQ(v.z(), 0.0);
  }
}

TEST(BackwardXYTest, PushUsesNearerEdge) {
  ProjectedScene s;
  s.width = 16;
  s.height = 4;
  s.num_classes = 1;
  // Covers x in [2.5, 10.5] on every row.
  s.parts.push_back({{{2.5, -50.0, 1.0}, {10.5, -50.0, 1.0}, {10.5, 50.0, 1.0}}, {{0, 1, 2}}, 0});
  s.parts.push_back({{{2.5, -50.0, 1.0}, {10.5, 50.0, 1.0}, {2.5, 50.0, 1.0}}, {{0, 1, 2}}, 0});
  const RasterOutput r = rasterize(s);
  // Pixel 9 (center 9.5) is unwanted: the right edge is 1 away, the left 7.
  const VertexGradients g = backward_xy(s, r, with_pixel(r.labels, 9, 2, 0));
  // Moving left uncovers it, so the loss grows with x: +1 per covering face.
  double total = 0.0;
  for (const auto& part : g.parts) {
    for (const Vec3& v : part) total += v.x();
  }
  EXPECT_GT(total, 0.0);
  for (const auto& part : g.parts) {
    for (const Vec3& v : part) EXPECT_GE(v.x(), 0.0);
  }
}

TEST(BackwardXYTest, MinimumDistanceClampsTheSlope) {
  ProjectedScene s;
  s.width = 8;
  s.height = 4;
  s.num_classes = 1;
  s.parts.push_back({{{0.0, -10.0, 1.0}, {5.2, -10.0, 1.0}, {5.2, 20.0, 1.0}}, {{0, 1, 2}}, 0});
  const RasterOutput r = rasterize(s);
  // Center 5.5 is 0.3 px beyond the edge.
  const VertexGradients g = backward_xy(s, r, with_pixel(r.labels, 5, 1, 1));
  EXPECT_EQ(g.parts[0][0].x(), -1.0);
  XYGradientOptions opts;
  opts.min_distance = 0.1;
  const VertexGradients h = backward_xy(s, r, with_pixel(r.labels, 5, 1, 1), opts);
  EXPECT_NEAR(h.parts[0][0].x(), -1.0 / 0.3, 1e-12);
}

TEST(BackwardXYTest, EdgesInsideAPartAreIgnored) {
  // Two triangles forming one square part; the diagonal is interior.
  ProjectedScene s;
  s.width = 16;
  s.height = 16;
  s.num_classes = 1;
  s.parts.push_back({{{2.0, 2.0, 1.0}, {12.0, 2.0, 1.0}, {12.0, 12.0, 1.0}, {2.0, 12.0, 1.0}},
                     {{0, 1, 2}, {0, 2, 3}},
                     0});
  const RasterOutput r = rasterize(s);
  // Target: the square shifted right by two pixels.
  ProjectedScene shifted = s;
  for (Vec3& v : shifted.parts[0].vertices) v.x() += 2.0;
  const VertexGradients g = backward_xy(s, r, rasterize(shifted).labels);
  for (const Vec3& v : g.parts[0]) EXPECT_LT(v.x(), 0.0);
}

TEST(BackwardXYTest, HiddenPartGetsNoGradient) {
  ProjectedScene s;
  s.width = 16;
  s.height = 16;
  s.num_classes = 2;
  s.parts.push_back({{{4.0, 4.0, 2.0}, {12.0, 4.0, 2.0}, {4.0, 12.0, 2.0}}, {{0, 1, 2}}, 0});
  s.parts.push_back({{{0.0, 0.0, 1.0}, {16.0, 0.0, 1.0}, {0.0, 16.0, 1.0}}, {{0, 1, 2}}, 1});
  const RasterOutput r = rasterize(s);
  ProjectedScene front = s;
  for (Vec3& v : front.parts[0].vertices) v.z() = 0.5;
  const VertexGradients g = backward_xy(s, r, rasterize(front).labels);
  for (const Vec3& v : g.parts[0]) EXPECT_EQ(v, Vec3::Zero());
}

TEST(BackwardXYTest, RejectsMismatchedSizes) {
  const ProjectedScene s = single_triangle();
  const RasterOutput r = rasterize(s);
  EXPECT_THROW(backward_xy(s, r, LabelMap(8, 8)), std::invalid_argument);
}

TEST(BackwardXYTest, DescentMatchesTranslatedSilhouette) {
  const ProjectedScene start = single_triangle();
  const LabelMap target = rasterize(single_triangle(3.0, -2.0)).labels;
  RigidFitConfig cfg;
  cfg.max_iters = 200;
  cfg.enable_z = false;
  const RigidFitResult r = fit_rigid_parts(start, target, cfg);
  EXPECT_LE(r.best_loss, 0.1 * r.trace.front());
}

ProjectedScene occlusion_scene() {
  ProjectedScene s;
  s.width = 8;
  s.height = 8;
  s.num_classes = 2;
  s.parts.push_back({{{0.5, 2.5, 1.5}, {4.5, 0.5, 1.5}, {4.5, 4.5, 1.5}}, {{0, 1, 2}}, 0});
  s.parts.push_back(
      {{{-10.0, -10.0, 1.0}, {30.0, -10.0, 1.0}, {-10.0, 30.0, 1.0}}, {{0, 1, 2}}, 1});
  return s;
}

TEST(DetectOcclusionsTest, FindsHiddenWantedClass) {
  const ProjectedScene s = occlusion_scene();
  const RasterOutput r = rasterize(s);
  const auto events = detect_occlusions(s, r, with_pixel(r.labels, 2, 2, 1));
  ASSERT_EQ(events.size(), 1u);
  const OcclusionEvent& e = events[0];
  EXPECT_EQ(e.x, 2);
  EXPECT_EQ(e.y, 2);
  EXPECT_EQ(e.target_class, 0);
  EXPECT_EQ(e.residual, -1.0);
  EXPECT_EQ(e.occluded, (FaceId{0, 0}));
  EXPECT_EQ(e.occluder, (FaceId{1, 0}));
  EXPECT_DOUBLE_EQ(e.dz, 0.5);
  EXPECT_TRUE(e.q.isApprox(Vec3(2.5, 2.5, 1.5)));
  EXPECT_TRUE(e.m[0].isApprox(Vec3(4.5, 2.5, 1.5)));
  // Every m_k lies on the edge opposite v_k.
  for (int k = 0; k < 3; ++k) {
    const Vec3& a = e.vertices[(k + 1) % 3];
    const Vec3& b = e.vertices[(k + 2) % 3];
    EXPECT_NEAR(((e.m[k] - a).cross(b - a)).norm(), 0.0, 1e-9);
    EXPECT_NEAR(((e.q - e.vertices[k]).cross(e.m[k] - e.vertices[k])).norm(), 0.0, 1e-9);
  }
}

TEST(DetectOcclusionsTest, NoEventsWhenClassIsAbsentOrVisible) {
  const ProjectedScene s = occlusion_scene();
  const RasterOutput r = rasterize(s);
  EXPECT_TRUE(detect_occlusions(s, r, r.labels).empty());
  // Wanted class has no face under the pixel.
  EXPECT_TRUE(detect_occlusions(s, r, with_pixel(r.labels, 7, 7, 1)).empty());
}

TEST(BackwardZTest, UnitCaseIsLogTwo) {
  const ProjectedScene s = occlusion_scene();
  const RasterOutput r = rasterize(s);
  const auto events = detect_occlusions(s, r, with_pixel(r.labels, 2, 2, 1));
  const VertexGradients g = backward_z(s, events);
  EXPECT_NEAR(g.parts[0][0].z(), std::log(2.0), 1e-9);
  // Only depth, only the occluded face, and positive so descent pulls it
  // toward the camera.
  for (const Vec3& v : g.parts[0]) {
    EXPECT_EQ(v.x(), 0.0);
    EXPECT_EQ(v.y(), 0.0);
    EXPECT_GT(v.z(), 0.0);
  }
  for (const Vec3& v : g.parts[1]) EXPECT_EQ(v, Vec3::Zero());
}

TEST(BackwardZTest, MagnitudeFollowsFormula) {
  const ProjectedScene s = occlusion_scene();
  const RasterOutput r = rasterize(s);
  const auto events = detect_occlusions(s, r, with_pixel(r.labels, 2, 2, 1));
  ZGradientOptions opts;
  opts.lambda = 2.5;
  const VertexGradients g = backward_z(s, events, opts);
  const OcclusionEvent& e = events[0];
  for (int k = 0; k < 3; ++k) {
    const double mq = (e.m[k] - e.q).norm();
    const double mv = (e.m[k] - e.vertices[k]).norm();
    EXPECT_NEAR(g.parts[0][k].z(), 2.5 * std::log(mq / (mv * e.dz) + 1.0), 1e-12);
  }
}

TEST(BackwardZTest, PushOccluderMovesItAway) {
  const ProjectedScene s = occlusion_scene();
  const RasterOutput r = rasterize(s);
  const auto events = detect_occlusions(s, r, with_pixel(r.labels, 2, 2, 1));
  ZGradientOptions opts;
  opts.push_occluder = true;
  const VertexGradients g = backward_z(s, events, opts);
  for (const Vec3& v : g.parts[1]) EXPECT_LT(v.z(), 0.0);
}

TEST(OcclusionMagnitudeTest, ClampsSmallDenominators) {
  EXPECT_DOUBLE_EQ(occlusion_gradient_magnitude(1.0, 1.0, 1.0, 1.0, 1.0), std::log(2.0));
  EXPECT_DOUBLE_EQ(occlusion_gradient_magnitude(1.0, -1.0, 1.0, 1.0, 1.0), std::log(2.0));
  EXPECT_DOUBLE_EQ(occlusion_gradient_magnitude(3.0, 0.5, 2.0, 1.0, 1.0), 1.5 * std::log(3.0));
  const double clamped = occlusion_gradient_magnitude(1.0, 1.0, 1.0, 0.0, 0.0, 1e-3);
  EXPECT_DOUBLE_EQ(clamped, std::log(1e6 + 1.0));
  EXPECT_EQ(occlusion_gradient_magnitude(1.0, 0.0, 1.0, 1.0, 1.0), 0.0);
}

TEST(VertexGradientsTest, Arithmetic) {
  const ProjectedScene s = occlusion_scene();
  VertexGradients a = VertexGradients::zeros(s);
  ASSERT_EQ(a.parts.size(), 2u);
  EXPECT_EQ(a.parts[0].size(), 3u);
  EXPECT_EQ(a.max_abs(), 0.0);
  VertexGradients b = a;
  b.parts[1][2] = Vec3(1.0, -4.0, 2.0);
  a += b;
  a += b;
  EXPECT_EQ(a.parts[1][2], Vec3(2.0, -8.0, 4.0));
  EXPECT_EQ(a.max_abs(), 8.0);
  EXPECT_TRUE(a.all_finite());
  a.parts[0][0].x() = std::nan("");
  EXPECT_FALSE(a.all_finite());
}

TEST(RenderTest, JointsFollowTheCamera) {
  const BodyModel& model = default_body_model();
  const EllipBodyParams p = testing::oblique_pose(model);
  const PartSet set = build(model, p, 1);
  const WeakPerspectiveCamera cam{0.8, 0.05, -0.1};
  const RenderResult r = render(set, cam, 96, 64);
  EXPECT_EQ(r.raster.width, 96);
  EXPECT_EQ(r.raster.height, 64);
  ASSERT_EQ(r.joints2d.size(), set.skeleton.size());
  for (std::size_t j = 0; j < set.skeleton.size(); ++j) {
    EXPECT_TRUE(r.joints2d[j].isApprox(project_weak(set.skeleton[j], cam).uv));
  }
  EXPECT_EQ(r.raster.num_classes, 20);
  const ImageGrid grid{96, 64};
  const Vec3 v = set.parts[3].vertices[5];
  const Vec3 pv = r.scene.parts[3].vertices[5];
  EXPECT_DOUBLE_EQ(pv.x(), grid.to_pixel_x(cam.s * v.x() + cam.tx));
  EXPECT_DOUBLE_EQ(pv.y(), grid.to_pixel_y(cam.s * v.y() + cam.ty));
  EXPECT_EQ(pv.z(), v.z());
}

TEST(RenderTest, FullProjectionWithOrthographicLimitMatches) {
  const BodyModel& model = default_body_model();
  const PartSet set = build(model, mean_params(model), 1);
  // Pinhole far away along z: close to scaled orthographic.
  const double d = 1e4;
  ProjectionMatrix P;
  P << d, 0, 0, 0,  //
      0, d, 0, 0,   //
      0, 0, 1, d;
  const RenderResult full = render(set, P, 64, 64);
  const RenderResult weak = render(set, WeakPerspectiveCamera{1.0, 0.0, 0.0}, 64, 64);
  int differ = 0;
  for (std::size_t i = 0; i < full.raster.alpha.data.size(); ++i) {
    differ += full.raster.alpha.data[i] != weak.raster.alpha.data[i];
  }
  EXPECT_GT(std::count(weak.raster.alpha.data.begin(), weak.raster.alpha.data.end(), 1), 200);
  EXPECT_LE(differ, 8);
}

}  // namespace
}  // namespace ellipbody
