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

#include "ellipbody/geometry.h"

#include <cmath>
#include <limits>

#include <gtest/gtest.h>

#include "testing/fixtures.h"

namespace ellipbody {
namespace {

using testing::Rng;

TEST(IcosahedronTest, HasTwelveUnitVerticesAndTwentyFaces) {
  const TriMesh m = icosahedron();
  EXPECT_EQ(m.num_vertices(), 12u);
  EXPECT_EQ(m.num_faces(), 20u);
  EXPECT_EQ(edge_count(m), 30u);
  for (const Vec3& v : m.vertices) EXPECT_NEAR(v.norm(), 1.0, 1e-15);
}

TEST(IcosahedronTest, FacesWindOutward) {
  const TriMesh m = icosahedron();
  for (const Face& f : m.faces) {
    const Vec3& a = m.vertices[f[0]];
    const Vec3 n = (m.vertices[f[1]] - a).cross(m.vertices[f[2]] - a);
    EXPECT_GT(n.dot(a + m.vertices[f[1]] + m.vertices[f[2]]), 0.0);
  }
}

TEST(SubdivideTest, CountsFollowFourWaySplit) {
  for (int level = 0; level <= 3; ++level) {
    const TriMesh m = icosphere(level);
    const std::size_t faces = 20u << (2 * level);
    EXPECT_EQ(m.num_faces(), faces) << "level " << level;
    EXPECT_EQ(m.num_vertices(), faces / 2 + 2) << "level " << level;
    EXPECT_EQ(edge_count(m), faces * 3 / 2) << "level " << level;
  }
}

TEST(SubdivideTest, PreservesEulerCharacteristicAndWatertightness) {
  for (int level = 0; level <= 3; ++level) {
    const TriMesh m = subdivide(icosahedron(), level);
    EXPECT_EQ(euler_characteristic(m), 2) << "level " << level;
    EXPECT_TRUE(is_closed_manifold(m)) << "level " << level;
  }
}

TEST(SubdivideTest, MidpointsAreProjectedToTheSphere) {
  for (const Vec3& v : icosphere(3).vertices) EXPECT_NEAR(v.norm(), 1.0, 1e-12);
}

TEST(SubdivideTest, KeepsFlatMeshesFlat) {
  TriMesh tetra;
  tetra.vertices = {{0, 0, 0}, {2, 0, 0}, {0, 2, 0}, {0, 0, 2}};
  tetra.faces = {{0, 2, 1}, {0, 1, 3}, {0, 3, 2}, {1, 2, 3}};
  const TriMesh m = subdivide(tetra, 1);
  EXPECT_EQ(m.num_faces(), 16u);
  EXPECT_EQ(euler_characteristic(m), 2);
  // Midpoint of edge (0, 1) is not pushed anywhere.
  bool found = false;
  for (const Vec3& v : m.vertices) found = found || v.isApprox(Vec3(1, 0, 0));
  EXPECT_TRUE(found);
}

TEST(SubdivideTest, RejectsNonManifoldInput) {
  TriMesh m;
  m.vertices = {{0, 0, 0}, {1, 0, 0}, {0, 1, 0}, {0, 0, 1}, {1, 1, 1}};
  // Edge (0, 1) is shared by three faces.
  m.faces = {{0, 1, 2}, {0, 1, 3}, {1, 0, 4}};
  EXPECT_THROW(subdivide(m, 1), std::invalid_argument);
}

TEST(SubdivideTest, RejectsNegativeCount) {
  EXPECT_THROW(subdivide(icosahedron(), -1), std::invalid_argument);
}

TEST(ValidateMeshTest, RejectsBadIndices) {
  TriMesh m;
  m.vertices = {{0, 0, 0}, {1, 0, 0}, {0, 1, 0}};
  m.faces = {{0, 1, 3}};
  EXPECT_THROW(validate_mesh(m), std::invalid_argument);
  m.faces = {{0, 1, 1}};
  EXPECT_THROW(validate_mesh(m), std::invalid_argument);
  m.faces = {{0, 1, -1}};
  EXPECT_THROW(validate_mesh(m), std::invalid_argument);
  m.faces = {{0, 1, 2}};
  EXPECT_NO_THROW(validate_mesh(m));
}

TEST(ClosedManifoldTest, OpenMeshIsNotClosed) {
  TriMesh m = icosahedron();
  m.faces.pop_back();
  EXPECT_FALSE(is_closed_manifold(m));
  EXPECT_EQ(euler_characteristic(m), 1);
}

TEST(AxisAngleTest, ZeroIsIdentity) {
  EXPECT_TRUE(axis_angle_to_matrix(Vec3::Zero()).isApprox(Mat3::Identity()));
}

TEST(AxisAngleTest, QuarterTurnAboutZ) {
  const Mat3 r = axis_angle_to_matrix(Vec3(0, 0, M_PI / 2));
  EXPECT_TRUE((r * Vec3::UnitX()).isApprox(Vec3::UnitY(), 1e-12));
  EXPECT_TRUE((r * Vec3::UnitY()).isApprox(-Vec3::UnitX(), 1e-12));
}

TEST(AxisAngleTest, MatchesEigenAngleAxis) {
  Rng rng(11);
  for (int i = 0; i < 200; ++i) {
    const Vec3 r = testing::random_vec3(rng, 3.0);
    const Mat3 want = Eigen::AngleAxisd(r.norm(), r.normalized()).toRotationMatrix();
    EXPECT_TRUE(axis_angle_to_matrix(r).isApprox(want, 1e-12));
  }
}

TEST(AxisAngleTest, SmallAnglesAreContinuous) {
  for (double a : {1e-6, 1e-8, 5e-9, 1e-10, 1e-12}) {
    const Vec3 r(a, -2 * a, 0.5 * a);
    const Mat3 want = Mat3::Identity() + (Mat3() << 0, -r.z(), r.y(), r.z(), 0, -r.x(), -r.y(),
                                          r.x(), 0).finished();
    EXPECT_LT((axis_angle_to_matrix(r) - want).norm(), 1e-11) << a;
  }
}

TEST(AxisAngleTest, JacobianMatchesFiniteDifferences) {
  Rng rng(12);
  for (int i = 0; i < 50; ++i) {
    // Includes the near-zero branch.
    const Vec3 r = i == 0 ? Vec3(1e-10, 0, 0) : testing::random_vec3(rng, 2.5);
    std::array<Mat3, 3> jac;
    axis_angle_to_matrix(r, &jac);
    for (int k = 0; k < 3; ++k) {
      const double h = 1e-6;
      Vec3 rp = r;
      Vec3 rm = r;
      rp[k] += h;
      rm[k] -= h;
      const Mat3 fd = (axis_angle_to_matrix(rp) - axis_angle_to_matrix(rm)) / (2 * h);
      EXPECT_LT((fd - jac[k]).norm(), 1e-8) << "r " << r.transpose() << " k " << k;
    }
  }
}

TEST(AxisAngleTest, RoundTripRecoversVector) {
  Rng rng(13);
  for (int i = 0; i < 500; ++i) {
    const Vec3 axis = testing::random_vec3(rng, 1.0).normalized();
    const double angle = testing::uniform(rng, 1e-7, M_PI - 1e-4);
    const Vec3 r = angle * axis;
    EXPECT_LT((matrix_to_axis_angle(axis_angle_to_matrix(r)) - r).norm(), 1e-7)
        << r.transpose();
  }
}

TEST(AxisAngleTest, LogOfIdentityIsZero) {
  EXPECT_EQ(matrix_to_axis_angle(Mat3::Identity()), Vec3::Zero());
}

TEST(OrthonormalizeTest, ProducesRotation) {
  Rng rng(14);
  for (int i = 0; i < 500; ++i) {
    Mat3 m;
    for (int k = 0; k < 9; ++k) m(k / 3, k % 3) = testing::uniform(rng, -1.0, 1.0);
    if (std::abs(m.determinant()) < 1e-3) continue;
    const Mat3 q = orthonormalize(m);
    EXPECT_TRUE(is_rotation(q, 1e-10));
    // The first column keeps its direction.
    EXPECT_TRUE(q.col(0).isApprox(m.col(0).normalized(), 1e-12));
  }
}

TEST(OrthonormalizeTest, FixesReflections) {
  const Mat3 reflection = Vec3(1.0, 1.0, -1.0).asDiagonal();
  const Mat3 q = orthonormalize(reflection);
  EXPECT_TRUE(is_rotation(q));
  EXPECT_TRUE(q.isApprox(Mat3::Identity()));
}

TEST(OrthonormalizeTest, RejectsDependentColumns) {
  Mat3 m;
  m << 1, 2, 0, 0, 0, 0, 0, 0, 1;
  EXPECT_THROW(orthonormalize(m), std::invalid_argument);
}

TEST(IsRotationTest, DetectsNonRotations) {
  EXPECT_TRUE(is_rotation(Mat3::Identity()));
  EXPECT_FALSE(is_rotation(2.0 * Mat3::Identity()));
  EXPECT_FALSE(is_rotation(Vec3(1.0, 1.0, -1.0).asDiagonal()));
}

EllipsoidSpec random_spec(Rng& rng) {
  EllipsoidSpec s;
  s.rotation = axis_angle_to_matrix(testing::random_vec3(rng, 3.0));
  s.center = testing::random_vec3(rng, 1.0);
  s.length = testing::uniform(rng, 0.1, 2.0);
  s.thickness1 = testing::uniform(rng, 0.1, 2.0);
  s.thickness2 = testing::uniform(rng, 0.1, 2.0);
  return s;
}

TEST(EllipsoidTest, DeformedSphereLiesOnSurface) {
  Rng rng(15);
  const TriMesh sphere = icosphere(2);
  for (int i = 0; i < 100; ++i) {
    const EllipsoidSpec s = random_spec(rng);
    const TriMesh m = deform_ellipsoid(s, sphere);
    ASSERT_EQ(m.faces, sphere.faces);
    for (const Vec3& v : m.vertices) EXPECT_NEAR(ellipsoid_distance(v, s), 1.0, 1e-12);
  }
}

TEST(EllipsoidTest, ExtentsAreFullDiameters) {
  EllipsoidSpec s;
  s.length = 2.0;
  s.thickness1 = 0.5;
  s.thickness2 = 0.25;
  EXPECT_DOUBLE_EQ(ellipsoid_distance(Vec3(1.0, 0, 0), s), 1.0);
  EXPECT_DOUBLE_EQ(ellipsoid_distance(Vec3(0, 0.25, 0), s), 1.0);
  EXPECT_DOUBLE_EQ(ellipsoid_distance(Vec3(0, 0, 0.125), s), 1.0);
  EXPECT_DOUBLE_EQ(ellipsoid_distance(Vec3(0.5, 0, 0), s), 0.5);
  EXPECT_EQ(ellipsoid_distance(Vec3::Zero(), s), 0.0);
}

TEST(EllipsoidTest, DistanceGradientMatchesFiniteDifferences) {
  Rng rng(16);
  for (int i = 0; i < 100; ++i) {
    const EllipsoidSpec s = random_spec(rng);
    const Vec3 v = s.center + testing::random_vec3(rng, 1.0);
    const Vec3 g = ellipsoid_distance_gradient(v, s);
    for (int k = 0; k < 3; ++k) {
      Vec3 vp = v;
      Vec3 vm = v;
      vp[k] += 1e-6;
      vm[k] -= 1e-6;
      const double fd = (ellipsoid_distance(vp, s) - ellipsoid_distance(vm, s)) / 2e-6;
      EXPECT_NEAR(g[k], fd, 1e-6 * std::max(1.0, std::abs(fd)));
    }
  }
}

TEST(EllipsoidTest, GradientIsZeroAtCenter) {
  EllipsoidSpec s;
  EXPECT_EQ(ellipsoid_distance_gradient(s.center, s), Vec3::Zero());
}

TEST(EllipsoidTest, ValidationRejectsBadExtents) {
  EllipsoidSpec s;
  EXPECT_NO_THROW(validate_ellipsoid(s));
  s.length = 0.0;
  EXPECT_THROW(validate_ellipsoid(s), std::invalid_argument);
  s.length = 1.0;
  s.thickness2 = -1.0;
  EXPECT_THROW(validate_ellipsoid(s), std::invalid_argument);
  s.thickness2 = std::numeric_limits<double>::quiet_NaN();
  EXPECT_THROW(validate_ellipsoid(s), std::invalid_argument);
}

}  // namespace
}  // namespace ellipbody
