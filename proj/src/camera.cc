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

#include "ellipbody/camera.h"

#include <cmath>
#include <stdexcept>
#include <string>

namespace ellipbody {

void validate_camera(const WeakPerspectiveCamera& cam) {
  if (!(cam.s > 0.0) || !std::isfinite(cam.s) || !std::isfinite(cam.tx) ||
      !std::isfinite(cam.ty)) {
    throw std::invalid_argument("camera scale must be positive and finite");
  }
}

ProjectedPoint project_weak(const Vec3& point, const WeakPerspectiveCamera& cam) {
  return {Vec2(cam.s * point.x() + cam.tx, cam.s * point.y() + cam.ty), point.z()};
}

std::vector<ProjectedPoint> project_weak(std::span<const Vec3> points,
                                         const WeakPerspectiveCamera& cam) {
  validate_camera(cam);
  std::vector<ProjectedPoint> out;
  out.reserve(points.size());
  for (const Vec3& p : points) out.push_back(project_weak(p, cam));
  return out;
}

std::vector<ProjectedPoint> project_full(std::span<const Vec3> points,
                                         const ProjectionMatrix& P) {
  if (std::abs(P.leftCols<3>().determinant()) < 1e-12) {
    throw std::invalid_argument("projection matrix has a singular 3x3 block");
  }
  std::vector<ProjectedPoint> out;
  out.reserve(points.size());
  for (std::size_t i = 0; i < points.size(); ++i) {
    const Eigen::Vector3d h = P * points[i].homogeneous();
    if (std::abs(h.z()) < 1e-12) {
      throw std::invalid_argument("point " + std::to_string(i) +
                                  " projects to the camera center");
    }
    out.push_back({Vec2(h.x() / h.z(), h.y() / h.z()), h.z()});
  }
  return out;
}

}  // namespace ellipbody
