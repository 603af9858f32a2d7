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

#ifndef ELLIPBODY_CAMERA_H_
#define ELLIPBODY_CAMERA_H_

#include <span>
#include <vector>

#include <Eigen/Core>

#include "ellipbody/geometry.h"

namespace ellipbody {

// Scaled orthographic camera: (u, v) = (s*x + tx, s*y + ty) in normalized
// image coordinates.
struct WeakPerspectiveCamera {
  double s = 1.0;
  double tx = 0.0;
  double ty = 0.0;
};

// 3x4 pinhole projection matrix.
using ProjectionMatrix = Eigen::Matrix<double, 3, 4>;

// A projected point: normalized image coordinates plus the depth used by the
// z-buffer.
struct ProjectedPoint {
  Vec2 uv = Vec2::Zero();
  double depth = 0.0;
};

void validate_camera(const WeakPerspectiveCamera& cam);

ProjectedPoint project_weak(const Vec3& point, const WeakPerspectiveCamera& cam);
std::vector<ProjectedPoint> project_weak(std::span<const Vec3> points,
                                         const WeakPerspectiveCamera& cam);

// Homogeneous projection followed by the perspective divide. The retained
// depth is the pre-divide third coordinate. Throws std::invalid_argument if a
// point maps to |w| < 1e-12 or the leading 3x3 block is singular.
std::vector<ProjectedPoint> project_full(std::span<const Vec3> points,
                                         const ProjectionMatrix& P);

// Pixel grid convention: normalized [-1, 1]^2 covers the w x h grid; pixel
// (i, j) has its center at (i + 0.5, j + 0.5); rows grow downward, so v = +1
// is the top edge of the image.
struct ImageGrid {
  int width = 256;
  int height = 256;

  double to_pixel_x(double u) const { return (u + 1.0) * 0.5 * width; }
  double to_pixel_y(double v) const { return (1.0 - v) * 0.5 * height; }
  double to_normalized_u(double px) const { return px / (0.5 * width) - 1.0; }
  double to_normalized_v(double py) const { return 1.0 - py / (0.5 * height); }
  // d(pixel)/d(normalized)
  double du_scale() const { return 0.5 * width; }
  double dv_scale() const { return -0.5 * height; }
  std::size_t pixel_count() const {
    return static_cast<std::size_t>(width) * static_cast<std::size_t>(height);
  }
};

}  // namespace ellipbody

#endif  // ELLIPBODY_CAMERA_H_
