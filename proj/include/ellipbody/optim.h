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

#ifndef ELLIPBODY_OPTIM_H_
#define ELLIPBODY_OPTIM_H_

#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "ellipbody/body.h"
#include "ellipbody/losses.h"
#include "ellipbody/partdr.h"

namespace ellipbody {

// A named slice of a flat parameter vector.
struct ParamBlock {
  std::string name;
  std::size_t offset = 0;
  std::size_t size = 0;
};

struct AdamOptions {
  double learning_rate = 1e-2;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

struct AdamState {
  AdamOptions options;
  std::vector<double> m;
  std::vector<double> v;
  long step = 0;

  explicit AdamState(std::size_t n, AdamOptions opts = {})
      : options(opts), m(n, 0.0), v(n, 0.0) {}
};

// One bias-corrected Adam update of `params` in place. Throws
// std::invalid_argument naming the offending block if a gradient is not
// finite. `learning_rates`, when given, holds one rate per parameter.
void adam_step(AdamState& state, std::span<double> params, std::span<const double> grads,
               const std::vector<ParamBlock>& blocks = {},
               std::span<const double> learning_rates = {});

// Flat layout of EllipBodyParams: r, l, t, root_translation, cam (s, tx, ty).
std::vector<ParamBlock> param_blocks(const EllipBodyParams& params);
std::vector<double> pack(const EllipBodyParams& params);
void unpack(std::span<const double> flat, EllipBodyParams* params);
std::vector<double> pack(const BodyGradient& grad);

struct FitConfig {
  int max_iters = 50;
  int passes = 1;  // each pass restarts Adam from the best iterate so far
  double learning_rate = 1e-2;
  double pass_decay = 1.0;  // learning rate multiplier applied per restart
  LossWeights weights;
  // A pass stops once the objective changes by at most `tolerance` (relative)
  // over `patience` iterations.
  double tolerance = 1e-5;
  int patience = 5;
  int subdivision = 1;
  int width = 256;
  int height = 256;
  std::string grouping = "20";
  double lambda_z = 1.0;
  bool enable_z = true;
  bool push_occluder = false;
  bool freeze_camera = true;
  bool freeze_shape = false;
  bool freeze_root = false;
};

void validate_fit_config(const FitConfig& config);

struct TraceRow {
  int iter = 0;
  LossTerms terms;
  double best = 0.0;
};

struct FitResult {
  EllipBodyParams params;  // best iterate
  std::vector<TraceRow> trace;
  LossTerms best_terms;
  int iterations = 0;
};

class FitDiverged : public std::runtime_error {
 public:
  FitDiverged(const std::string& what, std::vector<TraceRow> trace)
      : std::runtime_error(what), trace_(std::move(trace)) {}
  const std::vector<TraceRow>& trace() const { return trace_; }

 private:
  std::vector<TraceRow> trace_;
};

// Adam on fit_objective. Returns the best iterate seen.
FitResult fit(const EllipBodyParams& initial, const FitTargets& targets, const FitConfig& config,
              const BodyModel& model);
FitResult fit(const EllipBodyParams& initial, const FitTargets& targets, const FitConfig& config);

// Targets rendered from `params`: labels, projected joints with unit
// confidence, and the 3D skeleton.
FitTargets synthesize_targets(const EllipBodyParams& params, const BodyModel& model,
                              const FitConfig& config);

// Fraction of pixels whose label matches.
double label_accuracy(const LabelMap& a, const LabelMap& b);

// Mean Euclidean distance between corresponding joints.
double mean_joint_error(std::span<const Vec3> a, std::span<const Vec3> b);

// Fits one rigid (x, y, depth) translation per part of a pixel-space scene to
// a target label map using the surrogate gradients directly.
struct RigidFitConfig {
  int max_iters = 300;
  double learning_rate_xy = 0.25;  // pixels
  double learning_rate_z = 0.02;   // depth units
  bool enable_z = true;
  ZGradientOptions z;
  XYGradientOptions xy;
};

struct RigidFitResult {
  std::vector<Vec3> translations;  // best iterate
  std::vector<double> trace;       // segmentation loss per iteration
  LabelMap labels;                 // rendered at the best iterate
  double best_loss = 0.0;
  int iterations = 0;
};

ProjectedScene translate_parts(const ProjectedScene& scene, std::span<const Vec3> translations);

RigidFitResult fit_rigid_parts(const ProjectedScene& scene, const LabelMap& target,
                               const RigidFitConfig& config);

// Registration of a free-form target mesh onto a fixed EllipBody:
//   w_icp * L_ICP(target, body surface) + w_pen * L_PEN(target, ellipsoids)
//   + w_smooth * mean ||L(v) - L(v0)||^2
// with L the uniform Laplacian of the target. Correspondences are refreshed
// every iteration. Steps are scaled by a per-vertex diagonal curvature
// estimate.
struct RegisterConfig {
  int max_iters = 200;
  double w_icp = 1.0;
  double w_pen = 1.0;
  double w_smooth = 0.1;
  double step = 0.5;
};

struct RegisterTraceRow {
  int iter = 0;
  double icp = 0.0;
  double pen = 0.0;
  double smooth = 0.0;
  double total = 0.0;
  double best = 0.0;
};

struct RegisterResult {
  TriMesh mesh;  // best iterate
  std::vector<RegisterTraceRow> trace;
  RegisterTraceRow final_terms;  // terms at the returned mesh
};

RegisterResult register_mesh(const TriMesh& target, const PartSet& body,
                             const RegisterConfig& config = {});
RegisterResult register_mesh(const TriMesh& target, const BodyModel& model,
                             const EllipBodyParams& fitted, int subdivision,
                             const RegisterConfig& config = {});

}  // namespace ellipbody

#endif  // ELLIPBODY_OPTIM_H_
