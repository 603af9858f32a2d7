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

// Serial reference kernels. Kept for differential testing against the
// parallel versions and for the benchmark.
#include "ellipbody/raster.h"

#include "raster_internal.h"

namespace ellipbody {

RasterOutput rasterize_serial(const ProjectedScene& scene) {
  RasterOutput out = internal::empty_output(scene);
  const SceneIndex index = index_scene(scene);
  for (const RasterTriangle& t : index.triangles) {
    for (int y = t.y_min; y <= t.y_max; ++y) {
      for (int x = t.x_min; x <= t.x_max; ++x) internal::shade(t, x, y, &out);
    }
  }
  internal::finish_maps(&out);
  return out;
}

}  // namespace ellipbody
