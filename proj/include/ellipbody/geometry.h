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

#ifndef ELLIPBODY_GEOMETRY_H_
#define ELLIPBODY_GEOMETRY_H_

#include <array>
#include <cstdint>
#include <vector>

#include <Eigen/Core>
#include <Eigen/Geometry>

namespace ellipbody {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
using Face = std::array<int32_t, 3>;

// Triangle mesh. Faces wind counter-clockwise when viewed from outside.
struct TriMesh {
  std::vector<Vec3> vertices;
  std::vector<Face> faces;

  std::size_t num_vertices() const { return vertices.size(); }
  std::size_t num_faces() const { return faces.size(); }
};

// Ellipsoid placed in world space. `length` is the full extent along the
// local x-axis (the bone axis); the thicknesses are full extents along local
// y and z. Semi-axes are half of these.
struct EllipsoidSpec {
  Mat3 rotation = Mat3::Identity();
  Vec3 center = Vec3::Zero();
  double length = 1.0;
  double thickness1 = 1.0;
  double thickness2 = 1.0;
};

// Regular unit icosahedron: 12 vertices on the unit sphere, 20 faces.
TriMesh icosahedron();

// Splits every face into four through its edge midpoints, `times` times. If
// every input vertex lies on the unit sphere the new midpoints are projected
// back onto it. Throws std::invalid_argument for non-manifold input.
TriMesh subdivide(const TriMesh& mesh, int times);

// Icosahedron subdivided `level` times (level 0 is the icosahedron itself).
TriMesh icosphere(int level);

// Number of unique undirected edges.
std::size_t edge_count(const TriMesh& mesh);

// V - E + F.
long euler_characteristic(const TriMesh& mesh);

// True when every undirected edge is shared by exactly two faces.
bool is_closed_manifold(const TriMesh& mesh);

// Throws std::invalid_argument when a face index is out of range or a face
// repeats a vertex.
void validate_mesh(const TriMesh& mesh);

// Rodrigues' formula. The norm of `r` is the angle in radians.
Mat3 axis_angle_to_matrix(const Vec3& r);

// Rodrigues' formula together with the three partial derivatives
// dR/dr_x, dR/dr_y, dR/dr_z.
Mat3 axis_angle_to_matrix(const Vec3& r, std::array<Mat3, 3>* jacobian);

// Inverse of axis_angle_to_matrix for angles in [0, pi).
Vec3 matrix_to_axis_angle(const Mat3& rotation);

// Gram-Schmidt on the columns of `m` (in order). The third column is flipped
// if needed so the result has determinant +1. Throws std::invalid_argument
// when the columns are (numerically) linearly dependent.
Mat3 orthonormalize(const Mat3& m);

// True when m^T m = I and det(m) = 1 within `tolerance`.
bool is_rotation(const Mat3& m, double tolerance = 1e-6);

// Maps each vertex u of `base` to R * diag(l/2, t1/2, t2/2) * u + C.
TriMesh deform_ellipsoid(const EllipsoidSpec& spec, const TriMesh& base);

// Normalized ellipsoid radius of `v`: < 1 inside, 1 on the surface, > 1
// outside.
double ellipsoid_distance(const Vec3& v, const EllipsoidSpec& spec);

// Gradient of ellipsoid_distance with respect to `v`. Zero at the center.
Vec3 ellipsoid_distance_gradient(const Vec3& v, const EllipsoidSpec& spec);

// Throws std::invalid_argument unless all extents are strictly positive and
// finite.
void validate_ellipsoid(const EllipsoidSpec& spec);

}  // namespace ellipbody

#endif  // ELLIPBODY_GEOMETRY_H_
