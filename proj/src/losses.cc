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

#include "ellipbody/losses.h"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "ellipbody/nearest.h"

namespace ellipbody {
namespace {

void require_same_size(std::size_t a, std::size_t b, const char* what) {
  if (a != b) {
    throw std::invalid_argument(std::string(what) + ": size mismatch (" + std::to_string(a) +
                                " vs " + std::to_string(b) + ")");
  }
}

double sign(double v) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); }

}  // namespace

void validate_weights(const LossWeights& w) {
  for (double v : {w.w3d, w.proj, w.seg, w.l, w.t}) {
    if (!(v >= 0.0) || !std::isfinite(v)) throw std::invalid_argument("loss weights must be non-negative");
  }
}

double loss_3d(std::span<const Vec3> s, std::span<const Vec3> s_hat, std::vector<Vec3>* grad) {
  require_same_size(s.size(), s_hat.size(), "loss_3d");
  double total = 0.0;
  if (grad != nullptr) grad->assign(s.size(), Vec3::Zero());
  for (std::size_t i = 0; i < s.size(); ++i) {
    const Vec3 d = s[i] - s_hat[i];
    total += d.squaredNorm();
    if (grad != nullptr) (*grad)[i] = 2.0 * d;
  }
  return total;
}

double loss_proj(std::span<const Vec2> s2d, std::span<const Vec2> s2d_hat,
                 std::span<const double> confidence, std::vector<Vec2>* grad) {
  require_same_size(s2d.size(), s2d_hat.size(), "loss_proj");
  if (!confidence.empty()) require_same_size(s2d.size(), confidence.size(), "loss_proj confidence");
  double total = 0.0;
  if (grad != nullptr) grad->assign(s2d.size(), Vec2::Zero());
  for (std::size_t i = 0; i < s2d.size(); ++i) {
    const double w = confidence.empty() ? 1.0 : confidence[i];
    const Vec2 d = s2d[i] - s2d_hat[i];
    total += w * d.cwiseAbs().sum();
    if (grad != nullptr) (*grad)[i] = Vec2(w * sign(d.x()), w * sign(d.y()));
  }
  return total;
}

double loss_seg(const std::vector<BinaryMap>& rendered, const std::vector<BinaryMap>& target) {
  require_same_size(rendered.size(), target.size(), "loss_seg part count");
  double total = 0.0;
  for (std::size_t k = 0; k < rendered.size(); ++k) {
    if (rendered[k].width != target[k].width || rendered[k].height != target[k].height) {
      throw std::invalid_argument("loss_seg: map " + std::to_string(k) + " has a different shape");
    }
    for (std::size_t p = 0; p < rendered[k].data.size(); ++p) {
      const double d = double(rendered[k].data[p]) - double(target[k].data[p]);
      total += d * d;
    }
  }
  return total;
}

double loss_seg(const LabelMap& rendered, const LabelMap& target) {
  if (rendered.width != target.width || rendered.height != target.height) {
    throw std::invalid_argument("loss_seg: label maps have different shapes");
  }
  double total = 0.0;
  for (std::size_t p = 0; p < rendered.data.size(); ++p) {
    const uint8_t r = rendered.data[p];
    const uint8_t t = target.data[p];
    if (r == t) continue;
    total += (r != 0 && t != 0) ? 2.0 : 1.0;
  }
  return total;
}

std::pair<double, double> loss_shape_reg(std::span<const double> l, std::span<const double> t,
                                         std::span<const double> l_mean,
                                         std::span<const double> t_mean) {
  require_same_size(l.size(), l_mean.size(), "loss_shape_reg l");
  require_same_size(t.size(), t_mean.size(), "loss_shape_reg t");
  double ll = 0.0;
  double lt = 0.0;
  for (std::size_t i = 0; i < l.size(); ++i) ll += (l[i] - l_mean[i]) * (l[i] - l_mean[i]);
  for (std::size_t i = 0; i < t.size(); ++i) lt += (t[i] - t_mean[i]) * (t[i] - t_mean[i]);
  return {ll, lt};
}

double loss_pen(std::span<const Vec3> vertices, std::span<const EllipsoidSpec> ellipsoids,
                std::vector<Vec3>* grad) {
  if (grad != nullptr) grad->assign(vertices.size(), Vec3::Zero());
  double total = 0.0;
  for (const EllipsoidSpec& spec : ellipsoids) {
    const double radius = 0.5 * std::max({spec.length, spec.thickness1, spec.thickness2});
    const double radius2 = radius * radius;
    for (std::size_t i = 0; i < vertices.size(); ++i) {
      if ((vertices[i] - spec.center).squaredNorm() > radius2) continue;
      const double e = ellipsoid_distance(vertices[i], spec);
      if (e >= 1.0) continue;
      total += (1.0 - e) * (1.0 - e);
      if (grad != nullptr) {
        (*grad)[i] -= 2.0 * (1.0 - e) * ellipsoid_distance_gradient(vertices[i], spec);
      }
    }
  }
  return total;
}

IcpCorrespondences icp_correspondences(std::span<const Vec3> a, std::span<const Vec3> b) {
  if (a.empty() || b.empty()) throw std::invalid_argument("icp: meshes must be nonempty");
  IcpCorrespondences corr;
  const PointIndex index_b(b);
  const PointIndex index_a(a);
  corr.a_to_b.resize(a.size());
  corr.b_to_a.resize(b.size());
  for (std::size_t i = 0; i < a.size(); ++i) corr.a_to_b[i] = index_b.nearest(a[i]);
  for (std::size_t j = 0; j < b.size(); ++j) corr.b_to_a[j] = index_a.nearest(b[j]);
  return corr;
}

double loss_icp_fixed(std::span<const Vec3> a, std::span<const Vec3> b,
                      const IcpCorrespondences& corr, std::vector<Vec3>* grad_a) {
  require_same_size(a.size(), corr.a_to_b.size(), "loss_icp a");
  require_same_size(b.size(), corr.b_to_a.size(), "loss_icp b");
  if (grad_a != nullptr) grad_a->assign(a.size(), Vec3::Zero());
  double forward = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const Vec3 d = a[i] - b[corr.a_to_b[i]];
    forward += d.squaredNorm();
    if (grad_a != nullptr) (*grad_a)[i] += 2.0 * d / double(a.size());
  }
  double backward = 0.0;
  for (std::size_t j = 0; j < b.size(); ++j) {
    const Vec3 d = a[corr.b_to_a[j]] - b[j];
    backward += d.squaredNorm();
    if (grad_a != nullptr) (*grad_a)[corr.b_to_a[j]] += 2.0 * d / double(b.size());
  }
  return forward / double(a.size()) + backward / double(b.size());
}

double loss_icp(std::span<const Vec3> a, std::span<const Vec3> b) {
  return loss_icp_fixed(a, b, icp_correspondences(a, b));
}

double loss_icp(const TriMesh& a, const TriMesh& b) { return loss_icp(a.vertices, b.vertices); }

FitContext FitContext::make(const BodyModel& model, int subdivision, const Grouping& grouping,
                            int width, int height) {
  FitContext ctx;
  ctx.model = &model;
  ctx.unit_sphere = icosphere(subdivision);
  ctx.grouping = grouping;
  ctx.width = width;
  ctx.height = height;
  return ctx;
}

std::vector<std::vector<Vec3>> pixel_to_world_gradients(const PartSet& set,
                                                        const VertexGradients& pixel_grads,
                                                        const WeakPerspectiveCamera& cam,
                                                        const ImageGrid& grid, double weight,
                                                        Vec3* cam_grad) {
  const double sx = grid.du_scale();
  const double sy = grid.dv_scale();
  std::vector<std::vector<Vec3>> out(set.parts.size());
  for (std::size_t i = 0; i < set.parts.size(); ++i) {
    const auto& pg = pixel_grads.parts.at(i);
    out[i].resize(pg.size());
    for (std::size_t k = 0; k < pg.size(); ++k) {
      const double gu = weight * pg[k].x() * sx;  // dL/du
      const double gv = weight * pg[k].y() * sy;  // dL/dv
      out[i][k] = Vec3(gu * cam.s, gv * cam.s, weight * pg[k].z());
      if (cam_grad != nullptr) {
        const Vec3& v = set.parts[i].vertices[k];
        (*cam_grad) += Vec3(gu * v.x() + gv * v.y(), gu, gv);
      }
    }
  }
  return out;
}

ObjectiveResult fit_objective(const EllipBodyParams& params, const FitTargets& targets,
                              const LossWeights& weights, const FitContext& ctx) {
  if (ctx.model == nullptr) throw std::invalid_argument("fit_objective: no body model");
  validate_weights(weights);
  const BodyModel& model = *ctx.model;
  const PartSet set = build(model, params, ctx.unit_sphere, ctx.grouping);
  ObjectiveResult out;
  out.render = render(set, params.cam, ctx.width, ctx.height);
  const ImageGrid grid{ctx.width, ctx.height};
  if (targets.part_labels.width != ctx.width || targets.part_labels.height != ctx.height) {
    throw std::invalid_argument("fit_objective: target label map does not match the render size");
  }

  LossTerms& terms = out.terms;
  terms.seg = loss_seg(out.render.raster.labels, targets.part_labels);
  std::vector<Vec2> g2d;
  terms.proj = targets.keypoints.points.empty()
                   ? 0.0
                   : loss_proj(out.render.joints2d, targets.keypoints.points,
                               targets.keypoints.confidence, &g2d);
  const auto [ll, lt] = loss_shape_reg(params.l, params.t, model.mean_lengths,
                                       model.mean_thicknesses);
  terms.l = ll;
  terms.t = lt;
  terms.total = weights.seg * terms.seg + weights.proj * terms.proj + weights.l * ll +
                weights.t * lt;

  Vec3 cam_grad = Vec3::Zero();
  std::vector<std::vector<Vec3>> vertex_grads;
  if (weights.seg > 0.0 && terms.seg > 0.0) {
    VertexGradients pixel =
        backward_xy(out.render.scene, out.render.raster, targets.part_labels, ctx.xy);
    if (ctx.enable_z) {
      pixel += backward_z(out.render.scene,
                          detect_occlusions(out.render.scene, out.render.raster,
                                            targets.part_labels),
                          ctx.z);
    }
    vertex_grads = pixel_to_world_gradients(set, pixel, params.cam, grid, weights.seg, &cam_grad);
  }
  std::vector<Vec3> joint_grads;
  if (!g2d.empty()) {
    joint_grads.resize(set.skeleton.size());
    for (std::size_t j = 0; j < set.skeleton.size(); ++j) {
      const Vec2 g = weights.proj * g2d[j];
      joint_grads[j] = Vec3(g.x() * params.cam.s, g.y() * params.cam.s, 0.0);
      cam_grad += Vec3(g.x() * set.skeleton[j].x() + g.y() * set.skeleton[j].y(), g.x(), g.y());
    }
  }
  out.grad = build_backward(model, params, ctx.unit_sphere, vertex_grads, joint_grads);
  for (std::size_t i = 0; i < params.l.size(); ++i) {
    out.grad.l[i] += weights.l * 2.0 * (params.l[i] - model.mean_lengths[i]);
  }
  for (std::size_t i = 0; i < params.t.size(); ++i) {
    out.grad.t[i] += weights.t * 2.0 * (params.t[i] - model.mean_thicknesses[i]);
  }
  out.grad.cam = cam_grad;
  return out;
}

double train_objective(std::span<const Vec3> s, std::span<const Vec2> s2d,
                       const LabelMap& rendered, const FitTargets& targets,
                       const LossWeights& weights) {
  validate_weights(weights);
  double total = weights.seg * loss_seg(rendered, targets.part_labels);
  if (!targets.keypoints.points.empty()) {
    total += weights.proj * loss_proj(s2d, targets.keypoints.points, targets.keypoints.confidence);
  }
  if (targets.joints3d.has_value() && weights.w3d > 0.0) {
    total += weights.w3d * loss_3d(s, *targets.joints3d);
  }
  return total;
}

}  // namespace ellipbody
