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

#ifndef ELLIPBODY_SRC_RASTER_INTERNAL_H_
#define ELLIPBODY_SRC_RASTER_INTERNAL_H_

#include <limits>
#include <stdexcept>

#include "ellipbody/raster.h"

namespace ellipbody::internal {

inline RasterOutput empty_output(const ProjectedScene& scene) {
  if (scene.width < 1 || scene.height < 1) {
    throw std::invalid_argument("rasterize: image size must be at least 1x1");
  }
  RasterOutput out;
  out.width = scene.width;
  out.height = scene.height;
  out.num_classes = scene.num_classes;
  out.face_map = Grid<FaceId>(scene.width, scene.height);
  out.alpha = BinaryMap(scene.width, scene.height, 0);
  out.labels = LabelMap(scene.width, scene.height, 0);
  out.depth = Grid<double>(scene.width, scene.height, std::numeric_limits<double>::infinity());
  return out;
}

inline void finish_maps(RasterOutput* out) {
  for (std::size_t p = 0; p < out->face_map.data.size(); ++p) {
    out->alpha.data[p] = out->face_map.data[p].empty() ? 0 : 1;
  }
}

// Winner bookkeeping shared by both kernels: strict less-than keeps the
// first face in scene order on depth ties.
inline void shade(const RasterTriangle& t, int x, int y, RasterOutput* out) {
  double w[3];
  if (!covers(t, x + 0.5, y + 0.5, w)) return;
  const double z = interpolate_depth(t, w);
  const std::size_t p = out->depth.index(x, y);
  if (z < out->depth.data[p]) {
    out->depth.data[p] = z;
    out->face_map.data[p] = t.id;
    out->labels.data[p] = static_cast<uint8_t>(t.class_id + 1);
  }
}

}  // namespace ellipbody::internal

#endif  // ELLIPBODY_SRC_RASTER_INTERNAL_H_
