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

#ifndef ELLIPBODY_LOSSES_H_
#define ELLIPBODY_LOSSES_H_

#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "ellipbody/body.h"
#include "ellipbody/partdr.h"
#include "ellipbody/raster.h"

namespace ellipbody {

struct Keypoints2D {
  std::vector<Vec2> points;       // normalized image coordinates
  std::vector<double> confidence; // per joint, in [0, 1]
};

struct FitTargets {
  Keypoints2D keypoints;
  std::optional<std::vector<Vec3>> joints3d;
  LabelMap part_labels;  // 0 background, k + 1 for class k
};

struct LossWeights {
  double w3d = 1.0;
  double proj = 1.0;
  double seg = 1e-2;
  double l = 1e-3;
  double t = 1e-3;
};

void validate_weights(const LossWeights& w);

// Sum of squared joint distances. Optional gradient w.r.t. `s`.
double loss_3d(std::span<const Vec3> s, std::span<const Vec3> s_hat,
               std::vector<Vec3>* grad = nullptr);

// Confidence-weighted L1 distance between projected and target joints.
// Optional (sub)gradient w.r.t. `s2d`.
double loss_proj(std::span<const Vec2> s2d, std::span<const Vec2> s2d_hat,
                 std::span<const double> confidence, std::vector<Vec2>* grad = nullptr);

// Sum over parts and pixels of squared differences. Throws on shape mismatch.
double loss_seg(const std::vector<BinaryMap>& rendered, const std::vector<BinaryMap>& target);

// Same quantity computed from label maps (each mismatching pixel counts once
// per class it is wrong for).
double loss_seg(const LabelMap& rendered, const LabelMap& target);

// (||l - l_mean||^2, ||t - t_mean||^2).
std::pair<double, double> loss_shape_reg(std::span<const double> l, std::span<const double> t,
                                         std::span<const double> l_mean,
                                         std::span<const double> t_mean);

// Sum of (1 - e)^2 over vertex/ellipsoid pairs with e < 1. Optional gradient
// w.r.t. the vertices.
double loss_pen(std::span<const Vec3> vertices, std::span<const EllipsoidSpec> ellipsoids,
                std::vector<Vec3>* grad = nullptr);

// Nearest-neighbour correspondences in both directions.
struct IcpCorrespondences {
  std::vector<int32_t> a_to_b;
  std::vector<int32_t> b_to_a;
};

IcpCorrespondences icp_correspondences(std::span<const Vec3> a, std::span<const Vec3> b);

// Symmetric mean squared nearest-vertex distance.
double loss_icp(const TriMesh& a, const TriMesh& b);
double loss_icp(std::span<const Vec3> a, std::span<const Vec3> b);

// loss_icp with frozen correspondences, and its gradient w.r.t. `a`.
double loss_icp_fixed(std::span<const Vec3> a, std::span<const Vec3> b,
                      const IcpCorrespondences& corr, std::vector<Vec3>* grad_a = nullptr);

struct LossTerms {
  double seg = 0.0;
  double proj = 0.0;
  double l = 0.0;
  double t = 0.0;
  double total = 0.0;
};

// Everything fit_objective needs besides the parameters.
struct FitContext {
  const BodyModel* model = nullptr;
  TriMesh unit_sphere;
  Grouping grouping;
  int width = 256;
  int height = 256;
  bool enable_z = true;
  XYGradientOptions xy;
  ZGradientOptions z;

  static FitContext make(const BodyModel& model, int subdivision, const Grouping& grouping,
                         int width, int height);
};

struct ObjectiveResult {
  LossTerms terms;
  BodyGradient grad;
  RenderResult render;
};

// lambda_seg*L_seg + lambda_proj*L_proj + lambda_l*L_l + lambda_t*L_t and its
// gradient. The segmentation part uses the surrogate vertex gradients chained
// through the projection and the body model.
ObjectiveResult fit_objective(const EllipBodyParams& params, const FitTargets& targets,
                              const LossWeights& weights, const FitContext& ctx);

// lambda_3d*L_3d + lambda_proj*L_proj + lambda_seg*L_seg; the 3D term is
// dropped when `targets.joints3d` is empty.
double train_objective(std::span<const Vec3> s, std::span<const Vec2> s2d,
                       const LabelMap& rendered, const FitTargets& targets,
                       const LossWeights& weights);

// Weak-perspective chain rule: maps pixel-space vertex gradients of a scene
// produced by project_partset() back to world space. Adds the camera part
// to `cam_grad` when non-null.
std::vector<std::vector<Vec3>> pixel_to_world_gradients(const PartSet& set,
                                                        const VertexGradients& pixel_grads,
                                                        const WeakPerspectiveCamera& cam,
                                                        const ImageGrid& grid, double weight,
                                                        Vec3* cam_grad);

}  // namespace ellipbody

#endif  // ELLIPBODY_LOSSES_H_
