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

#ifndef ELLIPBODY_SRC_PARTDR_INTERNAL_H_
#define ELLIPBODY_SRC_PARTDR_INTERNAL_H_

#include <algorithm>
#include <cmath>
#include <array>
#include <stdexcept>
#include <vector>

#include "ellipbody/partdr.h"

namespace ellipbody::internal {

struct LineContribution {
  FaceId face;
  double value = 0.0;
};

inline void check_same_size(const ProjectedScene& scene, const RasterOutput& raster,
                            const LabelMap& target) {
  if (raster.width != scene.width || raster.height != scene.height ||
      target.width != scene.width || target.height != scene.height) {
    throw std::invalid_argument("target and raster sizes must match the scene");
  }
}

struct Span {
  FaceId face;
  double lo = 0.0;
  double hi = 0.0;
};

// Surrogate slopes for one row (axis 0) or column (axis 1).
inline std::vector<LineContribution> sweep_line(const SceneIndex& index,
                                                const RasterOutput& raster,
                                                const LabelMap& target, int axis, int line,
                                                const XYGradientOptions& options) {
  std::vector<LineContribution> out;
  const auto& bin = axis == 0 ? index.rows[line] : index.cols[line];
  if (bin.empty()) return out;
  const double center = line + 0.5;
  const int length = axis == 0 ? raster.width : raster.height;
  std::vector<std::vector<Span>> by_class(raster.num_classes);
  for (int32_t ti : bin) {
    const RasterTriangle& t = index.triangles[ti];
    double lo;
    double hi;
    const bool hit = axis == 0 ? span_x(t, center, &lo, &hi) : span_y(t, center, &lo, &hi);
    if (!hit || hi < 0.0 || lo > length) continue;
    by_class[t.class_id].push_back({t.id, lo, hi});
  }
  const double min_d = options.min_distance;
  // Rendered label of line position i; background outside the image.
  auto label_at = [&](double i) -> int {
    if (i < 0.0 || i >= length) return 0;
    const int k = static_cast<int>(i);
    return axis == 0 ? raster.labels.at(k, line) : raster.labels.at(line, k);
  };
  // Labels of the first pixel centers strictly outside a span. Moving a face
  // across P only flips P if what lies beyond the crossing edge is not the
  // face's own class; edges inside a part's region are skipped.
  auto beyond_lo = [&](double lo) { return label_at(std::ceil(lo - 0.5) - 1.0); };
  auto beyond_hi = [&](double hi) { return label_at(std::floor(hi - 0.5) + 1.0); };
  for (int c = 0; c < length; ++c) {
    const int x = axis == 0 ? c : line;
    const int y = axis == 0 ? line : c;
    const uint8_t rendered = raster.labels.at(x, y);
    const uint8_t wanted = target.at(x, y);
    if (rendered == wanted) continue;
    const double pc = c + 0.5;
    if (rendered != 0) {
      // Class shown but not wanted: push covering faces off the pixel.
      for (const Span& s : by_class[rendered - 1]) {
        if (pc < s.lo || pc > s.hi) continue;
        const bool can_forward = beyond_lo(s.lo) != rendered;
        const bool can_backward = beyond_hi(s.hi) != rendered;
        const double forward = pc - s.lo;
        const double backward = s.hi - pc;
        double value;
        if (can_forward && (!can_backward || forward <= backward)) {
          value = -1.0 / std::max(forward, min_d);
        } else if (can_backward) {
          value = 1.0 / std::max(backward, min_d);
        } else {
          continue;
        }
        out.push_back({s.face, value});
      }
    } else if (wanted != 0) {
      // Background where a class is wanted: pull that class's faces over it.
      for (const Span& s : by_class[wanted - 1]) {
        double value;
        if (pc < s.lo) {
          if (beyond_lo(s.lo) == wanted) continue;
          value = 1.0 / std::max(s.lo - pc, min_d);
        } else if (pc > s.hi) {
          if (beyond_hi(s.hi) == wanted) continue;
          value = -1.0 / std::max(pc - s.hi, min_d);
        } else {
          continue;
        }
        out.push_back({s.face, value});
      }
    }
    // Otherwise the wanted class is hidden behind another class: no x/y
    // gradient for it at this pixel.
  }
  return out;
}

inline void accumulate(const ProjectedScene& scene,
                       const std::vector<std::vector<LineContribution>>& lines, int axis,
                       VertexGradients* grads) {
  for (const auto& line : lines) {
    for (const LineContribution& c : line) {
      const Face& face = scene.parts[c.face.part].faces[c.face.face];
      auto& part = grads->parts[c.face.part];
      for (int k = 0; k < 3; ++k) part[face[k]][axis] += c.value;
    }
  }
}

// For each vertex k, the point where the line from v_k through q meets the
// opposite edge.
inline std::array<Vec3, 3> opposite_edge_points(const std::array<Vec3, 3>& v, const Vec3& q) {
  const double area = edge_function(v[0], v[1], v[2].x(), v[2].y());
  const double b[3] = {edge_function(v[1], v[2], q.x(), q.y()) / area,
                       edge_function(v[2], v[0], q.x(), q.y()) / area,
                       edge_function(v[0], v[1], q.x(), q.y()) / area};
  std::array<Vec3, 3> m;
  for (int k = 0; k < 3; ++k) {
    const int i = (k + 1) % 3;
    const int j = (k + 2) % 3;
    const double rest = b[i] + b[j];
    if (std::abs(rest) < 1e-12) {
      m[k] = 0.5 * (v[i] + v[j]);
    } else {
      m[k] = (b[i] * v[i] + b[j] * v[j]) / rest;
    }
  }
  return m;
}

inline std::vector<OcclusionEvent> occlusions_in_row(const SceneIndex& index,
                                                     const RasterOutput& raster,
                                                     const LabelMap& target, int y) {
  std::vector<OcclusionEvent> out;
  const double py = y + 0.5;
  for (int x = 0; x < raster.width; ++x) {
    const uint8_t rendered = raster.labels.at(x, y);
    const uint8_t wanted = target.at(x, y);
    if (wanted == 0 || rendered == 0 || rendered == wanted) continue;
    const int cls = wanted - 1;
    const double px = x + 0.5;
    const RasterTriangle* best = nullptr;
    double best_z = std::numeric_limits<double>::infinity();
    for (int32_t ti : index.rows[y]) {
      const RasterTriangle& t = index.triangles[ti];
      if (t.class_id != cls) continue;
      double w[3];
      if (!covers(t, px, py, w)) continue;
      const double z = interpolate_depth(t, w);
      if (z < best_z) {
        best_z = z;
        best = &t;
      }
    }
    if (best == nullptr) continue;
    OcclusionEvent e;
    e.x = x;
    e.y = y;
    e.target_class = cls;
    e.residual = -1.0;
    e.occluded = best->id;
    e.vertices = {best->v[0], best->v[1], best->v[2]};
    e.occluder = raster.face_map.at(x, y);
    e.q = Vec3(px, py, best_z);
    e.m = opposite_edge_points(e.vertices, e.q);
    e.dz = best_z - raster.depth.at(x, y);
    out.push_back(e);
  }
  return out;
}

}  // namespace ellipbody::internal

#endif  // ELLIPBODY_SRC_PARTDR_INTERNAL_H_
