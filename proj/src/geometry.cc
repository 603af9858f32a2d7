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

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <stdexcept>
#include <string>
#include <utility>

namespace ellipbody {
namespace {

using EdgeKey = std::pair<int32_t, int32_t>;

EdgeKey make_edge(int32_t a, int32_t b) {
  return a < b ? EdgeKey{a, b} : EdgeKey{b, a};
}

std::map<EdgeKey, int> edge_use_counts(const TriMesh& mesh) {
  std::map<EdgeKey, int> counts;
  for (const Face& f : mesh.faces) {
    for (int k = 0; k < 3; ++k) ++counts[make_edge(f[k], f[(k + 1) % 3])];
  }
  return counts;
}

bool on_unit_sphere(const TriMesh& mesh) {
  return std::all_of(mesh.vertices.begin(), mesh.vertices.end(),
                     [](const Vec3& v) { return std::abs(v.norm() - 1.0) < 1e-9; });
}

Mat3 skew(const Vec3& v) {
  Mat3 k;
  k << 0.0, -v.z(), v.y(),
       v.z(), 0.0, -v.x(),
       -v.y(), v.x(), 0.0;
  return k;
}

TriMesh subdivide_once(const TriMesh& mesh, bool project) {
  TriMesh out;
  out.vertices = mesh.vertices;
  out.faces.reserve(mesh.faces.size() * 4);
  std::map<EdgeKey, int32_t> midpoints;
  auto midpoint = [&](int32_t a, int32_t b) {
    const EdgeKey key = make_edge(a, b);
    auto it = midpoints.find(key);
    if (it != midpoints.end()) return it->second;
    Vec3 m = 0.5 * (mesh.vertices[a] + mesh.vertices[b]);
    if (project) m.normalize();
    const auto index = static_cast<int32_t>(out.vertices.size());
    out.vertices.push_back(m);
    midpoints.emplace(key, index);
    return index;
  };
  for (const Face& f : mesh.faces) {
    const int32_t ab = midpoint(f[0], f[1]);
    const int32_t bc = midpoint(f[1], f[2]);
    const int32_t ca = midpoint(f[2], f[0]);
    out.faces.push_back({f[0], ab, ca});
    out.faces.push_back({f[1], bc, ab});
    out.faces.push_back({f[2], ca, bc});
    out.faces.push_back({ab, bc, ca});
  }
  return out;
}

}  // namespace

TriMesh icosahedron() {
  const double t = (1.0 + std::sqrt(5.0)) / 2.0;
  TriMesh mesh;
  mesh.vertices = {
      {-1, t, 0}, {1, t, 0}, {-1, -t, 0}, {1, -t, 0},
      {0, -1, t}, {0, 1, t}, {0, -1, -t}, {0, 1, -t},
      {t, 0, -1}, {t, 0, 1}, {-t, 0, -1}, {-t, 0, 1},
  };
  for (Vec3& v : mesh.vertices) v.normalize();
  mesh.faces = {
      {0, 11, 5}, {0, 5, 1},  {0, 1, 7},   {0, 7, 10}, {0, 10, 11},
      {1, 5, 9},  {5, 11, 4}, {11, 10, 2}, {10, 7, 6}, {7, 1, 8},
      {3, 9, 4},  {3, 4, 2},  {3, 2, 6},   {3, 6, 8},  {3, 8, 9},
      {4, 9, 5},  {2, 4, 11}, {6, 2, 10},  {8, 6, 7},  {9, 8, 1},
  };
  return mesh;
}

TriMesh subdivide(const TriMesh& mesh, int times) {
  if (times < 0) throw std::invalid_argument("subdivide: negative count");
  validate_mesh(mesh);
  if (!is_closed_manifold(mesh)) {
    throw std::invalid_argument(
        "subdivide: mesh is not a closed manifold (an edge is not shared by "
        "exactly two faces)");
  }
  const bool project = on_unit_sphere(mesh);
  TriMesh out = mesh;
  for (int i = 0; i < times; ++i) out = subdivide_once(out, project);
  return out;
}

TriMesh icosphere(int level) { return subdivide(icosahedron(), level); }

std::size_t edge_count(const TriMesh& mesh) { return edge_use_counts(mesh).size(); }

long euler_characteristic(const TriMesh& mesh) {
  return static_cast<long>(mesh.num_vertices()) -
         static_cast<long>(edge_count(mesh)) +
         static_cast<long>(mesh.num_faces());
}

bool is_closed_manifold(const TriMesh& mesh) {
  const auto counts = edge_use_counts(mesh);
  return !counts.empty() &&
         std::all_of(counts.begin(), counts.end(),
                     [](const auto& kv) { return kv.second == 2; });
}

void validate_mesh(const TriMesh& mesh) {
  const auto n = static_cast<int64_t>(mesh.vertices.size());
  for (std::size_t i = 0; i < mesh.faces.size(); ++i) {
    const Face& f = mesh.faces[i];
    for (int32_t idx : f) {
      if (idx < 0 || idx >= n) {
        throw std::invalid_argument("face " + std::to_string(i) +
                                    " references vertex " + std::to_string(idx) +
                                    " out of range");
      }
    }
    if (f[0] == f[1] || f[1] == f[2] || f[0] == f[2]) {
      throw std::invalid_argument("face " + std::to_string(i) + " is degenerate");
    }
  }
}

Mat3 axis_angle_to_matrix(const Vec3& r) { return axis_angle_to_matrix(r, nullptr); }

Mat3 axis_angle_to_matrix(const Vec3& r, std::array<Mat3, 3>* jacobian) {
  const double theta2 = r.squaredNorm();
  const double theta = std::sqrt(theta2);
  double a;  // sin(t) / t
  double b;  // (1 - cos(t)) / t^2
  if (theta < 1e-8) {
    a = 1.0 - theta2 / 6.0;
    b = 0.5 - theta2 / 24.0;
  } else {
    a = std::sin(theta) / theta;
    b = (1.0 - std::cos(theta)) / theta2;
  }
  const Mat3 k = skew(r);
  const Mat3 k2 = k * k;
  if (jacobian != nullptr) {
    // da/dr_j = ca * r_j, db/dr_j = cb * r_j.
    double ca;
    double cb;
    if (theta < 1e-3) {
      ca = -1.0 / 3.0 + theta2 / 30.0;
      cb = -1.0 / 12.0 + theta2 / 180.0;
    } else {
      const double s = std::sin(theta);
      const double c = std::cos(theta);
      ca = (theta * c - s) / (theta2 * theta);
      cb = (theta * s - 2.0 * (1.0 - c)) / (theta2 * theta2);
    }
    for (int j = 0; j < 3; ++j) {
      const Mat3 e = skew(Vec3::Unit(j));
      (*jacobian)[j] = ca * r[j] * k + a * e + cb * r[j] * k2 + b * (e * k + k * e);
    }
  }
  return Mat3::Identity() + a * k + b * k2;
}

Vec3 matrix_to_axis_angle(const Mat3& rotation) {
  const double cos_theta = std::clamp((rotation.trace() - 1.0) / 2.0, -1.0, 1.0);
  const double theta = std::acos(cos_theta);
  const Vec3 w(rotation(2, 1) - rotation(1, 2), rotation(0, 2) - rotation(2, 0),
               rotation(1, 0) - rotation(0, 1));
  if (theta < 1e-8) return 0.5 * w;
  return theta / (2.0 * std::sin(theta)) * w;
}

Mat3 orthonormalize(const Mat3& m) {
  const double scale = std::max(m.cwiseAbs().maxCoeff(), 1e-300);
  constexpr double kRankTolerance = 1e-10;
  Mat3 q;
  for (int c = 0; c < 3; ++c) {
    Vec3 col = m.col(c);
    for (int p = 0; p < c; ++p) col -= col.dot(q.col(p)) * q.col(p);
    const double norm = col.norm();
    if (!(norm > kRankTolerance * scale)) {
      throw std::invalid_argument(
          "orthonormalize: degenerate rotation estimate (rank-deficient columns)");
    }
    q.col(c) = col / norm;
  }
  if (q.determinant() < 0.0) q.col(2) = -q.col(2);
  return q;
}

bool is_rotation(const Mat3& m, double tolerance) {
  return (m.transpose() * m - Mat3::Identity()).cwiseAbs().maxCoeff() <= tolerance &&
         std::abs(m.determinant() - 1.0) <= tolerance;
}

void validate_ellipsoid(const EllipsoidSpec& spec) {
  for (double extent : {spec.length, spec.thickness1, spec.thickness2}) {
    if (!(extent > 0.0) || !std::isfinite(extent)) {
      throw std::invalid_argument("ellipsoid extents must be positive and finite");
    }
  }
}

TriMesh deform_ellipsoid(const EllipsoidSpec& spec, const TriMesh& base) {
  validate_ellipsoid(spec);
  const Vec3 semi(spec.length / 2.0, spec.thickness1 / 2.0, spec.thickness2 / 2.0);
  const Mat3 linear = spec.rotation * semi.asDiagonal();
  TriMesh out;
  out.faces = base.faces;
  out.vertices.reserve(base.vertices.size());
  for (const Vec3& u : base.vertices) out.vertices.push_back(linear * u + spec.center);
  return out;
}

double ellipsoid_distance(const Vec3& v, const EllipsoidSpec& spec) {
  const Vec3 d = spec.rotation.transpose() * (v - spec.center);
  return Vec3(2.0 * d.x() / spec.length, 2.0 * d.y() / spec.thickness1,
              2.0 * d.z() / spec.thickness2)
      .norm();
}

Vec3 ellipsoid_distance_gradient(const Vec3& v, const EllipsoidSpec& spec) {
  const Vec3 d = spec.rotation.transpose() * (v - spec.center);
  const Vec3 inv(2.0 / spec.length, 2.0 / spec.thickness1, 2.0 / spec.thickness2);
  const Vec3 w = inv.cwiseProduct(d);
  const double e = w.norm();
  if (e == 0.0) return Vec3::Zero();
  return spec.rotation * inv.cwiseProduct(w) / e;
}

}  // namespace ellipbody
