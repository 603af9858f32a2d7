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

#include "ellipbody/optim.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <string>

namespace ellipbody {
namespace {

constexpr double kMinShape = 1e-3;
constexpr double kMinScale = 1e-6;

std::string block_of(const std::vector<ParamBlock>& blocks, std::size_t index) {
  for (const ParamBlock& b : blocks) {
    if (index >= b.offset && index < b.offset + b.size) {
      return b.name + "[" + std::to_string(index - b.offset) + "]";
    }
  }
  return "#" + std::to_string(index);
}

const ParamBlock& find_block(const std::vector<ParamBlock>& blocks, const std::string& name) {
  for (const ParamBlock& b : blocks) {
    if (b.name == name) return b;
  }
  throw std::invalid_argument("unknown parameter block " + name);
}

void clamp_params(EllipBodyParams* p) {
  for (double& v : p->l) v = std::max(v, kMinShape);
  for (double& v : p->t) v = std::max(v, kMinShape);
  p->cam.s = std::max(p->cam.s, kMinScale);
}

}  // namespace

void adam_step(AdamState& state, std::span<double> params, std::span<const double> grads,
               const std::vector<ParamBlock>& blocks, std::span<const double> learning_rates) {
  const std::size_t n = params.size();
  if (grads.size() != n || state.m.size() != n || state.v.size() != n) {
    throw std::invalid_argument("adam_step: parameter, gradient and state sizes differ");
  }
  if (!learning_rates.empty() && learning_rates.size() != n) {
    throw std::invalid_argument("adam_step: need one learning rate per parameter");
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (!std::isfinite(grads[i])) {
      throw std::invalid_argument("non-finite gradient in parameter block " +
                                  block_of(blocks, i));
    }
  }
  const AdamOptions& o = state.options;
  ++state.step;
  const double bc1 = 1.0 - std::pow(o.beta1, double(state.step));
  const double bc2 = 1.0 - std::pow(o.beta2, double(state.step));
  for (std::size_t i = 0; i < n; ++i) {
    const double g = grads[i];
    state.m[i] = o.beta1 * state.m[i] + (1.0 - o.beta1) * g;
    state.v[i] = o.beta2 * state.v[i] + (1.0 - o.beta2) * g * g;
    const double lr = learning_rates.empty() ? o.learning_rate : learning_rates[i];
    params[i] -= lr * (state.m[i] / bc1) / (std::sqrt(state.v[i] / bc2) + o.epsilon);
  }
}

std::vector<ParamBlock> param_blocks(const EllipBodyParams& p) {
  std::vector<ParamBlock> blocks;
  std::size_t off = 0;
  auto add = [&](const char* name, std::size_t size) {
    blocks.push_back({name, off, size});
    off += size;
  };
  add("r", 3 * p.r.size());
  add("l", p.l.size());
  add("t", p.t.size());
  add("root_translation", 3);
  add("cam", 3);
  return blocks;
}

std::vector<double> pack(const EllipBodyParams& p) {
  std::vector<double> flat;
  flat.reserve(3 * p.r.size() + p.l.size() + p.t.size() + 6);
  for (const Vec3& r : p.r) flat.insert(flat.end(), {r.x(), r.y(), r.z()});
  flat.insert(flat.end(), p.l.begin(), p.l.end());
  flat.insert(flat.end(), p.t.begin(), p.t.end());
  const Vec3& root = p.root_translation;
  flat.insert(flat.end(), {root.x(), root.y(), root.z(), p.cam.s, p.cam.tx, p.cam.ty});
  return flat;
}

std::vector<double> pack(const BodyGradient& g) {
  std::vector<double> flat;
  flat.reserve(3 * g.r.size() + g.l.size() + g.t.size() + 6);
  for (const Vec3& r : g.r) flat.insert(flat.end(), {r.x(), r.y(), r.z()});
  flat.insert(flat.end(), g.l.begin(), g.l.end());
  flat.insert(flat.end(), g.t.begin(), g.t.end());
  const Vec3& root = g.root_translation;
  flat.insert(flat.end(), {root.x(), root.y(), root.z(), g.cam.x(), g.cam.y(), g.cam.z()});
  return flat;
}

void unpack(std::span<const double> flat, EllipBodyParams* p) {
  const std::size_t expected = 3 * p->r.size() + p->l.size() + p->t.size() + 6;
  if (flat.size() != expected) throw std::invalid_argument("unpack: wrong parameter count");
  std::size_t i = 0;
  for (Vec3& r : p->r) {
    r = Vec3(flat[i], flat[i + 1], flat[i + 2]);
    i += 3;
  }
  for (double& v : p->l) v = flat[i++];
  for (double& v : p->t) v = flat[i++];
  p->root_translation = Vec3(flat[i], flat[i + 1], flat[i + 2]);
  p->cam.s = flat[i + 3];
  p->cam.tx = flat[i + 4];
  p->cam.ty = flat[i + 5];
}

void validate_fit_config(const FitConfig& c) {
  if (c.max_iters < 0) throw std::invalid_argument("max_iters must be non-negative");
  if (c.passes < 1) throw std::invalid_argument("passes must be at least 1");
  if (!(c.learning_rate > 0.0) || !std::isfinite(c.learning_rate)) {
    throw std::invalid_argument("learning_rate must be positive");
  }
  if (!(c.pass_decay > 0.0) || c.pass_decay > 1.0) {
    throw std::invalid_argument("pass_decay must be in (0, 1]");
  }
  if (!(c.tolerance >= 0.0)) throw std::invalid_argument("tolerance must be non-negative");
  if (c.patience < 1) throw std::invalid_argument("patience must be at least 1");
  if (c.subdivision < 0 || c.subdivision > 6) {
    throw std::invalid_argument("subdivision must be in [0, 6]");
  }
  if (c.width <= 0 || c.height <= 0) throw std::invalid_argument("image size must be positive");
  if (!(c.lambda_z >= 0.0) || !std::isfinite(c.lambda_z)) {
    throw std::invalid_argument("lambda_z must be non-negative");
  }
  validate_weights(c.weights);
}

FitResult fit(const EllipBodyParams& initial, const FitTargets& targets, const FitConfig& config) {
  return fit(initial, targets, config, default_body_model());
}

FitResult fit(const EllipBodyParams& initial, const FitTargets& targets, const FitConfig& config,
              const BodyModel& model) {
  validate_fit_config(config);
  validate_params(model, initial);
  FitContext ctx = FitContext::make(model, config.subdivision, model.grouping(config.grouping),
                                    config.width, config.height);
  ctx.enable_z = config.enable_z;
  ctx.z.lambda = config.lambda_z;
  ctx.z.push_occluder = config.push_occluder;

  const std::vector<ParamBlock> blocks = param_blocks(initial);
  std::vector<double> mask(pack(initial).size(), 1.0);
  auto freeze = [&](const char* name) {
    const ParamBlock& b = find_block(blocks, name);
    std::fill_n(mask.begin() + long(b.offset), b.size, 0.0);
  };
  if (config.freeze_camera) freeze("cam");
  if (config.freeze_shape) {
    freeze("l");
    freeze("t");
  }
  if (config.freeze_root) freeze("root_translation");

  FitResult result;
  result.params = initial;
  double best = std::numeric_limits<double>::infinity();
  EllipBodyParams current = initial;
  int total_iters = 0;

  for (int pass = 0; pass < config.passes; ++pass) {
    current = result.params;
    const double lr = config.learning_rate * std::pow(config.pass_decay, double(pass));
    AdamState state(mask.size(), AdamOptions{lr});
    std::vector<double> recent;
    for (int it = 0; it <= config.max_iters; ++it) {
      const ObjectiveResult obj = fit_objective(current, targets, config.weights, ctx);
      if (!std::isfinite(obj.terms.total)) {
        throw FitDiverged("objective became non-finite at iteration " +
                              std::to_string(total_iters),
                          std::move(result.trace));
      }
      if (obj.terms.total < best) {
        best = obj.terms.total;
        result.params = current;
        result.best_terms = obj.terms;
      }
      result.trace.push_back({total_iters, obj.terms, best});
      recent.push_back(obj.terms.total);
      if (it == config.max_iters || best == 0.0) break;
      if (int(recent.size()) > config.patience) {
        // Stationary objective: relative change over `patience` iterations.
        const double old = recent[recent.size() - 1 - config.patience];
        if (std::abs(old - obj.terms.total) <= config.tolerance * std::max(std::abs(old), 1e-12)) {
          break;
        }
      }

      std::vector<double> grad = pack(obj.grad);
      for (std::size_t i = 0; i < grad.size(); ++i) grad[i] *= mask[i];
      std::vector<double> flat = pack(current);
      try {
        adam_step(state, flat, grad, blocks);
      } catch (const std::invalid_argument& e) {
        throw FitDiverged(e.what(), std::move(result.trace));
      }
      unpack(flat, &current);
      clamp_params(&current);
      ++total_iters;
    }
    if (best == 0.0) break;
  }
  result.iterations = total_iters;
  return result;
}

FitTargets synthesize_targets(const EllipBodyParams& params, const BodyModel& model,
                              const FitConfig& config) {
  const PartSet set = build(model, params, config.subdivision, config.grouping);
  const RenderResult r = render(set, params.cam, config.width, config.height);
  FitTargets targets;
  targets.part_labels = r.raster.labels;
  targets.keypoints.points = r.joints2d;
  targets.keypoints.confidence.assign(r.joints2d.size(), 1.0);
  targets.joints3d = set.skeleton;
  return targets;
}

double label_accuracy(const LabelMap& a, const LabelMap& b) {
  if (a.width != b.width || a.height != b.height) {
    throw std::invalid_argument("label_accuracy: label maps have different shapes");
  }
  if (a.data.empty()) return 1.0;
  std::size_t same = 0;
  for (std::size_t i = 0; i < a.data.size(); ++i) same += a.data[i] == b.data[i];
  return double(same) / double(a.data.size());
}

double mean_joint_error(std::span<const Vec3> a, std::span<const Vec3> b) {
  if (a.size() != b.size() || a.empty()) {
    throw std::invalid_argument("mean_joint_error: need two nonempty joint lists of equal size");
  }
  double sum = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) sum += (a[i] - b[i]).norm();
  return sum / double(a.size());
}

ProjectedScene translate_parts(const ProjectedScene& scene, std::span<const Vec3> translations) {
  if (translations.size() != scene.parts.size()) {
    throw std::invalid_argument("translate_parts: need one translation per part");
  }
  ProjectedScene out = scene;
  for (std::size_t i = 0; i < out.parts.size(); ++i) {
    for (Vec3& v : out.parts[i].vertices) v += translations[i];
  }
  return out;
}

RigidFitResult fit_rigid_parts(const ProjectedScene& scene, const LabelMap& target,
                               const RigidFitConfig& config) {
  if (config.max_iters < 0) throw std::invalid_argument("max_iters must be non-negative");
  if (target.width != scene.width || target.height != scene.height) {
    throw std::invalid_argument("fit_rigid_parts: target does not match the scene size");
  }
  const std::size_t n = scene.parts.size();
  std::vector<double> flat(3 * n, 0.0);
  std::vector<double> rates(3 * n);
  for (std::size_t i = 0; i < n; ++i) {
    rates[3 * i] = rates[3 * i + 1] = config.learning_rate_xy;
    rates[3 * i + 2] = config.learning_rate_z;
  }
  std::vector<ParamBlock> blocks;
  for (std::size_t i = 0; i < n; ++i) {
    blocks.push_back({"translation" + std::to_string(i), 3 * i, 3});
  }
  AdamState state(flat.size());

  auto unflatten = [n](const std::vector<double>& f) {
    std::vector<Vec3> t(n);
    for (std::size_t i = 0; i < n; ++i) t[i] = Vec3(f[3 * i], f[3 * i + 1], f[3 * i + 2]);
    return t;
  };

  RigidFitResult result;
  result.best_loss = std::numeric_limits<double>::infinity();
  for (int it = 0; it <= config.max_iters; ++it) {
    const std::vector<Vec3> t = unflatten(flat);
    const ProjectedScene moved = translate_parts(scene, t);
    const RasterOutput raster = rasterize(moved);
    const double loss = loss_seg(raster.labels, target);
    result.trace.push_back(loss);
    if (loss < result.best_loss) {
      result.best_loss = loss;
      result.translations = t;
      result.labels = raster.labels;
    }
    result.iterations = it;
    if (loss == 0.0 || it == config.max_iters) break;

    VertexGradients g = backward_xy(moved, raster, target, config.xy);
    if (config.enable_z) g += backward_z(moved, detect_occlusions(moved, raster, target), config.z);
    std::vector<double> grad(3 * n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      for (const Vec3& gv : g.parts[i]) {
        for (int c = 0; c < 3; ++c) grad[3 * i + c] += gv[c];
      }
    }
    if (!config.enable_z) {
      for (std::size_t i = 0; i < n; ++i) grad[3 * i + 2] = 0.0;
    }
    adam_step(state, flat, grad, blocks, rates);
  }
  return result;
}

namespace {

// Uniform Laplacian of a mesh: L(v)_i = v_i - mean of the neighbours of i.
struct Laplacian {
  std::vector<std::vector<int32_t>> neighbours;

  explicit Laplacian(const TriMesh& mesh) : neighbours(mesh.vertices.size()) {
    std::vector<std::set<int32_t>> adj(mesh.vertices.size());
    for (const Face& f : mesh.faces) {
      for (int k = 0; k < 3; ++k) {
        adj[f[k]].insert(f[(k + 1) % 3]);
        adj[f[k]].insert(f[(k + 2) % 3]);
      }
    }
    for (std::size_t i = 0; i < adj.size(); ++i) {
      neighbours[i].assign(adj[i].begin(), adj[i].end());
    }
  }

  std::vector<Vec3> apply(const std::vector<Vec3>& v) const {
    std::vector<Vec3> out(v.size(), Vec3::Zero());
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (neighbours[i].empty()) continue;
      Vec3 mean = Vec3::Zero();
      for (int32_t j : neighbours[i]) mean += v[j];
      out[i] = v[i] - mean / double(neighbours[i].size());
    }
    return out;
  }

  // sum_i ||r_i||^2 gradient contributions: dr_i/dv_k = [i == k] - [k in N(i)] / deg(i).
  std::vector<Vec3> transpose_apply(const std::vector<Vec3>& r) const {
    std::vector<Vec3> out(r.size(), Vec3::Zero());
    for (std::size_t i = 0; i < r.size(); ++i) {
      if (neighbours[i].empty()) continue;
      out[i] += r[i];
      const double w = 1.0 / double(neighbours[i].size());
      for (int32_t j : neighbours[i]) out[j] -= w * r[i];
    }
    return out;
  }

  std::vector<double> diagonal() const {
    std::vector<double> d(neighbours.size(), 0.0);
    for (std::size_t i = 0; i < neighbours.size(); ++i) {
      if (neighbours[i].empty()) continue;
      d[i] += 1.0;
      const double w = 1.0 / double(neighbours[i].size());
      for (int32_t j : neighbours[i]) d[j] += w * w;
    }
    return d;
  }
};

}  // namespace

RegisterResult register_mesh(const TriMesh& target, const BodyModel& model,
                             const EllipBodyParams& fitted, int subdivision,
                             const RegisterConfig& config) {
  return register_mesh(target, build(model, fitted, subdivision), config);
}

RegisterResult register_mesh(const TriMesh& target, const PartSet& body,
                             const RegisterConfig& config) {
  validate_mesh(target);
  if (target.vertices.empty()) throw std::invalid_argument("register: empty target mesh");
  if (config.max_iters < 0) throw std::invalid_argument("register: max_iters must be >= 0");
  for (double w : {config.w_icp, config.w_pen, config.w_smooth}) {
    if (!(w >= 0.0) || !std::isfinite(w)) {
      throw std::invalid_argument("register: weights must be non-negative");
    }
  }
  if (!(config.step > 0.0)) throw std::invalid_argument("register: step must be positive");

  const TriMesh surface = outer_surface(body);
  if (surface.vertices.empty()) throw std::invalid_argument("register: empty body surface");
  const Laplacian lap(target);
  const std::size_t n = target.vertices.size();
  const double na = double(n);
  const double nb = double(surface.vertices.size());
  const std::vector<Vec3> delta0 = lap.apply(target.vertices);
  const std::vector<double> lap_diag = lap.diagonal();

  std::vector<Vec3> v = target.vertices;
  RegisterResult result;
  result.final_terms.total = std::numeric_limits<double>::infinity();
  result.final_terms.best = result.final_terms.total;
  double best = std::numeric_limits<double>::infinity();

  for (int it = 0; it <= config.max_iters; ++it) {
    const IcpCorrespondences corr = icp_correspondences(v, surface.vertices);
    std::vector<Vec3> g_icp;
    const double icp = loss_icp_fixed(v, surface.vertices, corr, &g_icp);

    // Penetration term and its Gauss-Newton diagonal.
    double pen = 0.0;
    std::vector<Vec3> g_pen(n, Vec3::Zero());
    std::vector<double> h_pen(n, 0.0);
    for (const EllipsoidSpec& spec : body.ellipsoids) {
      const double radius = 0.5 * std::max({spec.length, spec.thickness1, spec.thickness2});
      for (std::size_t i = 0; i < n; ++i) {
        if ((v[i] - spec.center).squaredNorm() > radius * radius) continue;
        const double e = ellipsoid_distance(v[i], spec);
        if (e >= 1.0) continue;
        const Vec3 de = ellipsoid_distance_gradient(v[i], spec);
        pen += (1.0 - e) * (1.0 - e);
        g_pen[i] -= 2.0 * (1.0 - e) * de;
        h_pen[i] += 2.0 * de.squaredNorm();
      }
    }

    std::vector<Vec3> residual = lap.apply(v);
    double smooth = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      residual[i] -= delta0[i];
      smooth += residual[i].squaredNorm();
    }
    smooth /= na;

    RegisterTraceRow row;
    row.iter = it;
    row.icp = icp;
    row.pen = pen;
    row.smooth = smooth;
    row.total = config.w_icp * icp + config.w_pen * pen + config.w_smooth * smooth;
    if (!std::isfinite(row.total)) {
      throw std::runtime_error("register: objective became non-finite at iteration " +
                               std::to_string(it));
    }
    if (row.total < best) {
      best = row.total;
      result.mesh = TriMesh{v, target.faces};
      result.final_terms = row;
    }
    row.best = best;
    result.final_terms.best = best;
    result.trace.push_back(row);
    if (it == config.max_iters) break;

    std::vector<double> icp_count(n, 0.0);
    for (int32_t k : corr.b_to_a) icp_count[k] += 1.0;
    const std::vector<Vec3> g_smooth = lap.transpose_apply(residual);
    for (std::size_t k = 0; k < n; ++k) {
      const Vec3 g = config.w_icp * g_icp[k] + config.w_pen * g_pen[k] +
                     config.w_smooth * (2.0 / na) * g_smooth[k];
      const double h = config.w_icp * (2.0 / na + icp_count[k] * 2.0 / nb) +
                       config.w_pen * h_pen[k] + config.w_smooth * (2.0 / na) * lap_diag[k];
      if (h > 0.0) v[k] -= config.step * g / h;
    }
  }
  return result;
}

}  // namespace ellipbody
