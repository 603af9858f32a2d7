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

#ifndef ELLIPBODY_PARTDR_H_
#define ELLIPBODY_PARTDR_H_

#include <array>
#include <vector>

#include "ellipbody/body.h"
#include "ellipbody/camera.h"
#include "ellipbody/raster.h"

namespace ellipbody {

// dL/d(pixel x, pixel y, depth) for every vertex of every part in a scene.
struct VertexGradients {
  std::vector<std::vector<Vec3>> parts;

  static VertexGradients zeros(const ProjectedScene& scene);
  VertexGradients& operator+=(const VertexGradients& other);
  bool all_finite() const;
  double max_abs() const;
};

struct XYGradientOptions {
  // Lower bound on |x0 - x1| in pixels.
  double min_distance = 1.0;
};

// Approximate gradient of the part segmentation loss with respect to the x
// and y pixel coordinates of each vertex.
//
// For every pixel where class k is rendered but not wanted, each class-k face
// covering the pixel gets 1 / (x0 - x1), where x1 - x0 is the smallest
// translation along the row that moves the face off the pixel. For every
// background pixel where class k is wanted, each class-k face crossing the
// row gets the same slope for the translation that makes it reach the pixel.
// Only translations that can flip the pixel count: the pixel just beyond the
// edge that sweeps over it must not already show class k, so edges interior
// to a part's region are ignored. Pixels covered by another class contribute
// nothing to class k. The value is added to all three vertices of the face.
// Columns are handled the same way for y. Positive values mean the loss grows
// with the coordinate.
VertexGradients backward_xy(const ProjectedScene& scene, const RasterOutput& raster,
                            const LabelMap& target, const XYGradientOptions& options = {});

// Serial reference for backward_xy. Bit-identical results.
VertexGradients backward_xy_serial(const ProjectedScene& scene, const RasterOutput& raster,
                                   const LabelMap& target,
                                   const XYGradientOptions& options = {});

// A pixel where the target shows class k but a face of another class is in
// front of class k's frontmost face.
struct OcclusionEvent {
  int x = 0;
  int y = 0;
  int target_class = 0;
  double residual = 0.0;                 // rendered minus target for class k
  FaceId occluded;
  std::array<Vec3, 3> vertices;          // occluded face, pixel space
  FaceId occluder;
  Vec3 q = Vec3::Zero();                 // point of the occluded face under the pixel
  std::array<Vec3, 3> m;                 // m[k]: line v_k -> q meets the opposite edge
  double dz = 0.0;                       // occluded depth minus occluder depth
};

std::vector<OcclusionEvent> detect_occlusions(const ProjectedScene& scene,
                                              const RasterOutput& raster,
                                              const LabelMap& target);

struct ZGradientOptions {
  double lambda = 1.0;
  double epsilon = 1e-6;
  // Also push the occluding face away from the camera.
  bool push_occluder = false;
};

// lambda * |residual| * log(dist_mq / (dist_mv * dz) + 1) with dist_mv and dz
// clamped below at epsilon.
double occlusion_gradient_magnitude(double lambda, double residual, double dist_mq,
                                    double dist_mv, double dz, double epsilon = 1e-6);

// Depth gradients for the occluded faces. Descent decreases their depth.
VertexGradients backward_z(const ProjectedScene& scene,
                           const std::vector<OcclusionEvent>& events,
                           const ZGradientOptions& options = {});

// Projects every part into pixel space with the weak-perspective camera.
ProjectedScene project_partset(const PartSet& set, const WeakPerspectiveCamera& cam,
                               const ImageGrid& grid);

struct RenderResult {
  ProjectedScene scene;
  RasterOutput raster;
  std::vector<Vec2> joints2d;  // normalized image coordinates
};

RenderResult render(const PartSet& set, const WeakPerspectiveCamera& cam, int width,
                    int height);

// Same with a full projection matrix. Not differentiable here; used for
// forward rendering only.
ProjectedScene project_partset(const PartSet& set, const ProjectionMatrix& P,
                               const ImageGrid& grid);
RenderResult render(const PartSet& set, const ProjectionMatrix& P, int width, int height);

}  // namespace ellipbody

#endif  // ELLIPBODY_PARTDR_H_
