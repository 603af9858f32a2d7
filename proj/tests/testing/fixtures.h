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

#ifndef ELLIPBODY_TESTS_TESTING_FIXTURES_H_
#define ELLIPBODY_TESTS_TESTING_FIXTURES_H_

#include <functional>
#include <random>
#include <string>
#include <vector>

#include "ellipbody/body.h"
#include "ellipbody/optim.h"
#include "ellipbody/partdr.h"
#include "ellipbody/raster.h"

namespace ellipbody::testing {

using Rng = std::mt19937_64;

double uniform(Rng& rng, double lo, double hi);
Vec3 random_vec3(Rng& rng, double scale);

// Per-pixel z-buffer written independently of the library kernels: every
// pixel center is tested against every face in scene order.
RasterOutput brute_force_rasterize(const ProjectedScene& scene);

// Up to `max_faces` faces spread over up to five parts on a grid of at most
// `max_side` pixels per side. A share of vertices is snapped to pixel centers
// and some faces share edges or are degenerate, to exercise tie rules.
ProjectedScene random_scene(Rng& rng, int max_faces = 50, int max_side = 64);

// Two one-triangle parts on a 64 x 64 grid. Part 0 is shifted by `offset`
// pixels; with `merged` both parts get class 0.
ProjectedScene two_triangle_scene(double depth_a, double depth_b, const Vec2& offset,
                                  bool merged);

// Copy of the body's outer surface with every vertex scaled about the center
// of the part it belongs to.
TriMesh inflated_surface(const PartSet& body, double factor);

// Oblique pose used for self-reconstruction: no limb lies in the image
// plane, so depth is observable from the silhouette and keypoints.
EllipBodyParams oblique_pose(const BodyModel& model);

// Adds U(-amplitude, amplitude) to every rotation component.
EllipBodyParams perturb_rotations(const EllipBodyParams& params, Rng& rng, double amplitude);

// Mean distance over the evaluation joints after subtracting the root joint.
double root_aligned_joint_error(const BodyModel& model, const std::vector<Vec3>& a,
                                const std::vector<Vec3>& b);

// Crossed-limb scenes: the initialization mirrors the crossing limbs so
// their silhouettes match the target while the depth order is wrong.
struct CrossedLimbScene {
  std::string name;
  EllipBodyParams target;
  EllipBodyParams init;
};
std::vector<CrossedLimbScene> crossed_limb_suite(const BodyModel& model);

// Central differences of f at x.
std::vector<double> numeric_gradient(const std::function<double(const std::vector<double>&)>& f,
                                     std::vector<double> x, double h = 1e-6);

std::vector<double> flatten(const std::vector<Vec3>& v);
std::vector<Vec3> unflatten(const std::vector<double>& x);

// Fresh empty directory under the system temp dir.
std::string make_temp_dir(const std::string& prefix);

}  // namespace ellipbody::testing

#endif  // ELLIPBODY_TESTS_TESTING_FIXTURES_H_
