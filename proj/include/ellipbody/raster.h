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

#ifndef ELLIPBODY_RASTER_H_
#define ELLIPBODY_RASTER_H_

#include <cstdint>
#include <limits>
#include <vector>

#include "ellipbody/geometry.h"

namespace ellipbody {

// Row-major w x h grid.
template <typename T>
struct Grid {
  int width = 0;
  int height = 0;
  std::vector<T> data;

  Grid() = default;
  Grid(int w, int h, T fill = T{})
      : width(w), height(h), data(static_cast<std::size_t>(w) * h, fill) {}

  std::size_t index(int x, int y) const {
    return static_cast<std::size_t>(y) * width + x;
  }
  T& at(int x, int y) { return data[index(x, y)]; }
  const T& at(int x, int y) const { return data[index(x, y)]; }
  bool operator==(const Grid&) const = default;
};

using BinaryMap = Grid<uint8_t>;
// 0 is background, k + 1 is class k.
using LabelMap = Grid<uint8_t>;

// One mesh in pixel space: vertices hold (pixel x, pixel y, depth). Smaller
// depth is nearer.
struct ProjectedPart {
  std::vector<Vec3> vertices;
  std::vector<Face> faces;
  int class_id = 0;
};

struct ProjectedScene {
  std::vector<ProjectedPart> parts;
  int num_classes = 1;
  int width = 0;
  int height = 0;

  std::size_t num_faces() const;
};

struct FaceId {
  int32_t part = -1;
  int32_t face = -1;

  bool empty() const { return part < 0; }
  bool operator==(const FaceId&) const = default;
};

struct RasterOutput {
  int width = 0;
  int height = 0;
  int num_classes = 0;
  Grid<FaceId> face_map;
  BinaryMap alpha;
  LabelMap labels;
  Grid<double> depth;  // +inf where empty

  // A^k: 1 where the frontmost face belongs to class k.
  BinaryMap part_map(int k) const;
  std::vector<BinaryMap> part_maps() const;
};

// Triangle in pixel space prepared for coverage tests.
struct RasterTriangle {
  Vec3 v[3];
  double area = 0.0;  // signed, twice the triangle area
  int x_min = 0, x_max = -1, y_min = 0, y_max = -1;
  FaceId id;
  int class_id = 0;
};

// Face records plus per-row and per-column bins (face indices in scene
// order). Zero-area faces are dropped.
struct SceneIndex {
  std::vector<RasterTriangle> triangles;
  std::vector<std::vector<int32_t>> rows;
  std::vector<std::vector<int32_t>> cols;
};

SceneIndex index_scene(const ProjectedScene& scene, bool with_columns = false);

// Edge function of (a, b) at p; positive when p is to the left of a->b in a
// y-up frame.
inline double edge_function(const Vec3& a, const Vec3& b, double px, double py) {
  return (b.x() - a.x()) * (py - a.y()) - (b.y() - a.y()) * (px - a.x());
}

// Coverage test at (px, py), inclusive of edges, for either winding. On
// success stores the unnormalized barycentric weights.
inline bool covers(const RasterTriangle& t, double px, double py, double w[3]) {
  w[0] = edge_function(t.v[1], t.v[2], px, py);
  w[1] = edge_function(t.v[2], t.v[0], px, py);
  w[2] = edge_function(t.v[0], t.v[1], px, py);
  if (t.area > 0.0) return w[0] >= 0.0 && w[1] >= 0.0 && w[2] >= 0.0;
  return w[0] <= 0.0 && w[1] <= 0.0 && w[2] <= 0.0;
}

inline double interpolate_depth(const RasterTriangle& t, const double w[3]) {
  return (w[0] * t.v[0].z() + w[1] * t.v[1].z() + w[2] * t.v[2].z()) / t.area;
}

// Interval covered by the triangle along the horizontal line y = py (or the
// vertical line x = px for `span_y`). Returns false if the line misses it.
bool span_x(const RasterTriangle& t, double py, double* lo, double* hi);
bool span_y(const RasterTriangle& t, double px, double* lo, double* hi);

// Z-buffer rasterization at pixel centers: the covering face with the
// smallest interpolated depth wins; ties go to the face that comes first in
// scene order. Both windings are drawn. Rows are processed in parallel.
RasterOutput rasterize(const ProjectedScene& scene);

// Face-by-face serial z-buffer. Produces output identical to rasterize().
RasterOutput rasterize_serial(const ProjectedScene& scene);

}  // namespace ellipbody

#endif  // ELLIPBODY_RASTER_H_
