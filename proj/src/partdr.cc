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
#include <limits>
#include <stdexcept>

#include "partdr_internal.h"

namespace ellipbody {

VertexGradients VertexGradients::zeros(const ProjectedScene& scene) {
  VertexGradients g;
  g.parts.reserve(scene.parts.size());
  for (const ProjectedPart& p : scene.parts) g.parts.emplace_back(p.vertices.size(), Vec3::Zero());
  return g;
}

VertexGradients& VertexGradients::operator+=(const VertexGradients& other) {
  if (other.parts.size() != parts.size()) throw std::invalid_argument("gradient shape mismatch");
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (other.parts[i].size() != parts[i].size()) throw std::invalid_argument("gradient shape mismatch");
    for (std::size_t k = 0; k < parts[i].size(); ++k) parts[i][k] += other.parts[i][k];
  }
  return *this;
}

bool VertexGradients::all_finite() const {
  for (const auto& part : parts) {
    for (const Vec3& g : part) {
      if (!g.allFinite()) return false;
    }
  }
  return true;
}

double VertexGradients::max_abs() const {
  double m = 0.0;
  for (const auto& part : parts) {
    for (const Vec3& g : part) m = std::max(m, g.cwiseAbs().maxCoeff());
  }
  return m;
}

VertexGradients backward_xy(const ProjectedScene& scene, const RasterOutput& raster,
                            const LabelMap& target, const XYGradientOptions& options) {
  internal::check_same_size(scene, raster, target);
  const SceneIndex index = index_scene(scene, /*with_columns=*/true);
  std::vector<std::vector<internal::LineContribution>> rows(scene.height);
  std::vector<std::vector<internal::LineContribution>> cols(scene.width);
  const int height = scene.height;
  const int width = scene.width;
#pragma omp parallel
  {
#pragma omp for schedule(dynamic, 4) nowait
    for (int y = 0; y < height; ++y) {
      rows[y] = internal::sweep_line(index, raster, target, /*axis=*/0, y, options);
    }
#pragma omp for schedule(dynamic, 4)
    for (int x = 0; x < width; ++x) {
      cols[x] = internal::sweep_line(index, raster, target, /*axis=*/1, x, options);
    }
  }
  // Fixed merge order keeps the result independent of the thread schedule.
  VertexGradients grads = VertexGradients::zeros(scene);
  internal::accumulate(scene, rows, 0, &grads);
  internal::accumulate(scene, cols, 1, &grads);
  return grads;
}

std::vector<OcclusionEvent> detect_occlusions(const ProjectedScene& scene,
                                              const RasterOutput& raster,
                                              const LabelMap& target) {
  internal::check_same_size(scene, raster, target);
  const SceneIndex index = index_scene(scene);
  std::vector<std::vector<OcclusionEvent>> rows(scene.height);
  const int height = scene.height;
#pragma omp parallel for schedule(dynamic, 4)
  for (int y = 0; y < height; ++y) rows[y] = internal::occlusions_in_row(index, raster, target, y);
  std::vector<OcclusionEvent> events;
  for (auto& row : rows) events.insert(events.end(), row.begin(), row.end());
  return events;
}

double occlusion_gradient_magnitude(double lambda, double residual, double dist_mq,
                                    double dist_mv, double dz, double epsilon) {
  const double denom = std::max(dist_mv, epsilon) * std::max(dz, epsilon);
  return lambda * std::abs(residual) * std::log(dist_mq / denom + 1.0);
}

VertexGradients backward_z(const ProjectedScene& scene,
                           const std::vector<OcclusionEvent>& events,
                           const ZGradientOptions& options) {
  VertexGradients grads = VertexGradients::zeros(scene);
  for (const OcclusionEvent& e : events) {
    const ProjectedPart& part = scene.parts.at(e.occluded.part);
    const Face& face = part.faces.at(e.occluded.face);
    for (int k = 0; k < 3; ++k) {
      const double mag = occlusion_gradient_magnitude(
          options.lambda, e.residual, (e.m[k] - e.q).norm(), (e.m[k] - e.vertices[k]).norm(),
          e.dz, options.epsilon);
      grads.parts[e.occluded.part][face[k]].z() += mag;
    }
    if (options.push_occluder && !e.occluder.empty()) {
      const ProjectedPart& occ_part = scene.parts.at(e.occluder.part);
      const Face& occ_face = occ_part.faces.at(e.occluder.face);
      const std::array<Vec3, 3> ov = {occ_part.vertices[occ_face[0]],
                                      occ_part.vertices[occ_face[1]],
                                      occ_part.vertices[occ_face[2]]};
      const Vec3 q_front(e.q.x(), e.q.y(), e.q.z() - e.dz);
      const std::array<Vec3, 3> m = internal::opposite_edge_points(ov, q_front);
      for (int k = 0; k < 3; ++k) {
        const double mag = occlusion_gradient_magnitude(
            options.lambda, e.residual, (m[k] - q_front).norm(), (m[k] - ov[k]).norm(), e.dz,
            options.epsilon);
        grads.parts[e.occluder.part][occ_face[k]].z() -= mag;
      }
    }
  }
  return grads;
}

ProjectedScene project_partset(const PartSet& set, const WeakPerspectiveCamera& cam,
                               const ImageGrid& grid) {
  validate_camera(cam);
  ProjectedScene scene;
  scene.width = grid.width;
  scene.height = grid.height;
  scene.num_classes = std::max(set.num_classes, 1);
  scene.parts.reserve(set.parts.size());
  for (std::size_t i = 0; i < set.parts.size(); ++i) {
    ProjectedPart part;
    part.faces = set.parts[i].faces;
    part.class_id = set.part_to_class.empty() ? static_cast<int>(i) : set.part_to_class[i];
    part.vertices.reserve(set.parts[i].vertices.size());
    for (const Vec3& v : set.parts[i].vertices) {
      const ProjectedPoint p = project_weak(v, cam);
      part.vertices.emplace_back(grid.to_pixel_x(p.uv.x()), grid.to_pixel_y(p.uv.y()), p.depth);
    }
    scene.parts.push_back(std::move(part));
  }
  return scene;
}

RenderResult render(const PartSet& set, const WeakPerspectiveCamera& cam, int width,
                    int height) {
  RenderResult out;
  out.scene = project_partset(set, cam, ImageGrid{width, height});
  out.raster = rasterize(out.scene);
  out.joints2d.reserve(set.skeleton.size());
  for (const Vec3& j : set.skeleton) out.joints2d.push_back(project_weak(j, cam).uv);
  return out;
}

ProjectedScene project_partset(const PartSet& set, const ProjectionMatrix& P,
                               const ImageGrid& grid) {
  ProjectedScene scene;
  scene.width = grid.width;
  scene.height = grid.height;
  scene.num_classes = std::max(set.num_classes, 1);
  scene.parts.reserve(set.parts.size());
  for (std::size_t i = 0; i < set.parts.size(); ++i) {
    ProjectedPart part;
    part.faces = set.parts[i].faces;
    part.class_id = set.part_to_class.empty() ? static_cast<int>(i) : set.part_to_class[i];
    for (const ProjectedPoint& p : project_full(set.parts[i].vertices, P)) {
      part.vertices.emplace_back(grid.to_pixel_x(p.uv.x()), grid.to_pixel_y(p.uv.y()), p.depth);
    }
    scene.parts.push_back(std::move(part));
  }
  return scene;
}

RenderResult render(const PartSet& set, const ProjectionMatrix& P, int width, int height) {
  RenderResult out;
  out.scene = project_partset(set, P, ImageGrid{width, height});
  out.raster = rasterize(out.scene);
  for (const ProjectedPoint& p : project_full(set.skeleton, P)) out.joints2d.push_back(p.uv);
  return out;
}

}  // namespace ellipbody
