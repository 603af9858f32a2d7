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

// Serial reference for the surrogate x/y gradient kernel.
#include "ellipbody/partdr.h"

#include "partdr_internal.h"

namespace ellipbody {

VertexGradients backward_xy_serial(const ProjectedScene& scene, const RasterOutput& raster,
                                   const LabelMap& target, const XYGradientOptions& options) {
  internal::check_same_size(scene, raster, target);
  const SceneIndex index = index_scene(scene, /*with_columns=*/true);
  VertexGradients grads = VertexGradients::zeros(scene);
  std::vector<std::vector<internal::LineContribution>> line(1);
  for (int y = 0; y < scene.height; ++y) {
    line[0] = internal::sweep_line(index, raster, target, 0, y, options);
    internal::accumulate(scene, line, 0, &grads);
  }
  for (int x = 0; x < scene.width; ++x) {
    line[0] = internal::sweep_line(index, raster, target, 1, x, options);
    internal::accumulate(scene, line, 1, &grads);
  }
  return grads;
}

}  // namespace ellipbody
