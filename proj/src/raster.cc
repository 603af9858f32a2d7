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

#include "ellipbody/raster.h"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "raster_internal.h"

namespace ellipbody {
namespace {

// Clamps before the integer conversion so far-away vertices stay defined.
int clamped_floor(double v, int lo, int hi) {
  return static_cast<int>(std::clamp(std::floor(v), double(lo), double(hi)));
}

int clamped_ceil(double v, int lo, int hi) {
  return static_cast<int>(std::clamp(std::ceil(v), double(lo), double(hi)));
}

}  // namespace

std::size_t ProjectedScene::num_faces() const {
  std::size_t n = 0;
  for (const ProjectedPart& p : parts) n += p.faces.size();
  return n;
}

BinaryMap RasterOutput::part_map(int k) const {
  BinaryMap m(width, height, 0);
  for (std::size_t p = 0; p < labels.data.size(); ++p) {
    m.data[p] = labels.data[p] == k + 1 ? alpha.data[p] : 0;
  }
  return m;
}

std::vector<BinaryMap> RasterOutput::part_maps() const {
  std::vector<BinaryMap> maps;
  maps.reserve(num_classes);
  for (int k = 0; k < num_classes; ++k) maps.push_back(part_map(k));
  return maps;
}

SceneIndex index_scene(const ProjectedScene& scene, bool with_columns) {
  if (scene.num_classes < 1 || scene.num_classes > 254) {
    throw std::invalid_argument("scene must have between 1 and 254 classes");
  }
  SceneIndex index;
  index.triangles.reserve(scene.num_faces());
  for (std::size_t pi = 0; pi < scene.parts.size(); ++pi) {
    const ProjectedPart& part = scene.parts[pi];
    if (part.class_id < 0 || part.class_id >= scene.num_classes) {
      throw std::invalid_argument("part class out of range");
    }
    for (std::size_t fi = 0; fi < part.faces.size(); ++fi) {
      RasterTriangle t;
      for (int k = 0; k < 3; ++k) {
        const int32_t vi = part.faces[fi][k];
        if (vi < 0 || static_cast<std::size_t>(vi) >= part.vertices.size()) {
          throw std::invalid_argument("face references a missing vertex");
        }
        t.v[k] = part.vertices[vi];
        if (!t.v[k].allFinite()) throw std::invalid_argument("non-finite projected vertex");
      }
      t.area = edge_function(t.v[0], t.v[1], t.v[2].x(), t.v[2].y());
      if (t.area == 0.0) continue;
      const double min_x = std::min({t.v[0].x(), t.v[1].x(), t.v[2].x()});
      const double max_x = std::max({t.v[0].x(), t.v[1].x(), t.v[2].x()});
      const double min_y = std::min({t.v[0].y(), t.v[1].y(), t.v[2].y()});
      const double max_y = std::max({t.v[0].y(), t.v[1].y(), t.v[2].y()});
      // Conservative pixel ranges; the coverage test is exact.
      t.x_min = clamped_floor(min_x - 0.5, 0, scene.width);
      t.x_max = clamped_ceil(max_x - 0.5, -1, scene.width - 1);
      t.y_min = clamped_floor(min_y - 0.5, 0, scene.height);
      t.y_max = clamped_ceil(max_y - 0.5, -1, scene.height - 1);
      t.id = {static_cast<int32_t>(pi), static_cast<int32_t>(fi)};
      t.class_id = part.class_id;
      index.triangles.push_back(t);
    }
  }
  index.rows.resize(scene.height);
  if (with_columns) index.cols.resize(scene.width);
  for (std::size_t i = 0; i < index.triangles.size(); ++i) {
    const RasterTriangle& t = index.triangles[i];
    for (int y = t.y_min; y <= t.y_max; ++y) index.rows[y].push_back(static_cast<int32_t>(i));
    if (with_columns) {
      for (int x = t.x_min; x <= t.x_max; ++x) index.cols[x].push_back(static_cast<int32_t>(i));
    }
  }
  return index;
}

namespace {

bool span_along(const Vec3 v[3], int axis, double line, double* lo, double* hi) {
  const int other = 1 - axis;
  bool hit = false;
  double a = std::numeric_limits<double>::infinity();
  double b = -std::numeric_limits<double>::infinity();
  for (int k = 0; k < 3; ++k) {
    const Vec3& p = v[k];
    const Vec3& q = v[(k + 1) % 3];
    const double pl = p[other];
    const double ql = q[other];
    if ((pl < line && ql < line) || (pl > line && ql > line)) continue;
    if (pl == ql) {
      // Edge lies on the line.
      a = std::min({a, p[axis], q[axis]});
      b = std::max({b, p[axis], q[axis]});
    } else {
      const double s = (line - pl) / (ql - pl);
      const double c = p[axis] + s * (q[axis] - p[axis]);
      a = std::min(a, c);
      b = std::max(b, c);
    }
    hit = true;
  }
  if (hit) {
    *lo = a;
    *hi = b;
  }
  return hit;
}

}  // namespace

bool span_x(const RasterTriangle& t, double py, double* lo, double* hi) {
  return span_along(t.v, 0, py, lo, hi);
}

bool span_y(const RasterTriangle& t, double px, double* lo, double* hi) {
  return span_along(t.v, 1, px, lo, hi);
}

RasterOutput rasterize(const ProjectedScene& scene) {
  RasterOutput out = internal::empty_output(scene);
  const SceneIndex index = index_scene(scene);
  const int height = scene.height;
#pragma omp parallel for schedule(dynamic, 4)
  for (int y = 0; y < height; ++y) {
    for (int32_t ti : index.rows[y]) {
      const RasterTriangle& t = index.triangles[ti];
      for (int x = t.x_min; x <= t.x_max; ++x) internal::shade(t, x, y, &out);
    }
  }
  internal::finish_maps(&out);
  return out;
}

}  // namespace ellipbody
