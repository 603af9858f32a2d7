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

#include "ellipbody/gradcheck.h"

#include <algorithm>
#include <cmath>
#include <functional>
#include <random>
#include <stdexcept>

#include "ellipbody/losses.h"
#include "ellipbody/optim.h"
#include "ellipbody/partdr.h"

namespace ellipbody {
namespace {

using Rng = std::mt19937_64;

double uniform(Rng& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

// Central differences of f at x, one coordinate at a time.
std::vector<double> numeric_gradient(const std::function<double(const std::vector<double>&)>& f,
                                     std::vector<double> x, double h) {
  std::vector<double> g(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double x0 = x[i];
    x[i] = x0 + h;
    const double fp = f(x);
    x[i] = x0 - h;
    const double fm = f(x);
    x[i] = x0;
    g[i] = (fp - fm) / (2.0 * h);
  }
  return g;
}

std::vector<double> flatten(std::span<const Vec3> v) {
  std::vector<double> out;
  for (const Vec3& p : v) out.insert(out.end(), {p.x(), p.y(), p.z()});
  return out;
}

std::vector<double> flatten(std::span<const Vec2> v) {
  std::vector<double> out;
  for (const Vec2& p : v) out.insert(out.end(), {p.x(), p.y()});
  return out;
}

std::vector<Vec3> to_vec3(const std::vector<double>& x) {
  std::vector<Vec3> out(x.size() / 3);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = Vec3(x[3 * i], x[3 * i + 1], x[3 * i + 2]);
  return out;
}

std::vector<Vec2> to_vec2(const std::vector<double>& x) {
  std::vector<Vec2> out(x.size() / 2);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = Vec2(x[2 * i], x[2 * i + 1]);
  return out;
}

Vec3 random_vec3(Rng& rng, double scale) {
  return Vec3(uniform(rng, -scale, scale), uniform(rng, -scale, scale),
              uniform(rng, -scale, scale));
}

EllipBodyParams random_params(Rng& rng, const BodyModel& model) {
  EllipBodyParams p = mean_params(model);
  for (Vec3& r : p.r) r = random_vec3(rng, 0.5);
  for (double& l : p.l) l *= uniform(rng, 0.8, 1.2);
  for (double& t : p.t) t *= uniform(rng, 0.8, 1.2);
  p.root_translation = random_vec3(rng, 0.1);
  p.cam.s = p.cam.s * uniform(rng, 0.8, 1.2);
  p.cam.tx = uniform(rng, -0.1, 0.1);
  p.cam.ty = uniform(rng, -0.1, 0.1);
  return p;
}

GradCheckRow smooth_row(const std::string& name, const GradCheckOptions& o,
                        const std::function<double(Rng&)>& one_point) {
  Rng rng(o.seed ^ std::hash<std::string>{}(name));
  GradCheckRow row{name, o.points, 0.0, o.tolerance, false};
  for (int i = 0; i < o.points; ++i) row.max_error = std::max(row.max_error, one_point(rng));
  row.pass = row.max_error < o.tolerance;
  return row;
}

GradCheckRow fixture_row(const std::string& name, double value, double expected, double tol) {
  const double err = std::abs(value - expected);
  return {name, 1, err, tol, err <= tol};
}

// Row sweep where the nearest edge is two pixels from a wanted pixel.
double two_pixel_slope() {
  ProjectedScene scene;
  scene.width = 8;
  scene.height = 4;
  scene.num_classes = 1;
  scene.parts.push_back({{{0.0, -10.0, 1.0}, {3.5, -10.0, 1.0}, {3.5, 20.0, 1.0}}, {{0, 1, 2}}, 0});
  const RasterOutput raster = rasterize(scene);
  LabelMap target = raster.labels;
  target.at(5, 1) = 1;
  const VertexGradients g = backward_xy(scene, raster, target);
  return std::abs(g.parts[0][0].x());
}

// Largest x/y entry of a part that is entirely hidden behind another class.
double hidden_part_slope() {
  ProjectedScene scene;
  scene.width = 16;
  scene.height = 16;
  scene.num_classes = 2;
  scene.parts.push_back({{{4.0, 4.0, 2.0}, {12.0, 4.0, 2.0}, {4.0, 12.0, 2.0}}, {{0, 1, 2}}, 0});
  scene.parts.push_back({{{0.0, 0.0, 1.0}, {16.0, 0.0, 1.0}, {0.0, 16.0, 1.0}}, {{0, 1, 2}}, 1});
  const RasterOutput raster = rasterize(scene);
  ProjectedScene front = scene;
  for (Vec3& v : front.parts[0].vertices) v.z() = 0.5;
  const LabelMap target = rasterize(front).labels;
  const VertexGradients g = backward_xy(scene, raster, target);
  double m = 0.0;
  for (const Vec3& v : g.parts[0]) m = std::max({m, std::abs(v.x()), std::abs(v.y())});
  return m;
}

// Occluded vertex halfway from its opposite edge with unit depth ratio.
double unit_occlusion_gradient() {
  ProjectedScene scene;
  scene.width = 8;
  scene.height = 8;
  scene.num_classes = 2;
  scene.parts.push_back({{{0.5, 2.5, 1.5}, {4.5, 0.5, 1.5}, {4.5, 4.5, 1.5}}, {{0, 1, 2}}, 0});
  scene.parts.push_back(
      {{{-10.0, -10.0, 1.0}, {30.0, -10.0, 1.0}, {-10.0, 30.0, 1.0}}, {{0, 1, 2}}, 1});
  const RasterOutput raster = rasterize(scene);
  LabelMap target = raster.labels;
  target.at(2, 2) = 1;
  const VertexGradients g = backward_z(scene, detect_occlusions(scene, raster, target));
  return g.parts[0][0].z();
}

}  // namespace

double relative_error(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size()) throw std::invalid_argument("relative_error: size mismatch");
  double diff = 0.0;
  double scale = 1e-8;
  for (std::size_t i = 0; i < a.size(); ++i) {
    diff = std::max(diff, std::abs(a[i] - b[i]));
    scale = std::max({scale, std::abs(a[i]), std::abs(b[i])});
  }
  return diff / scale;
}

std::vector<GradCheckRow> run_gradcheck(const GradCheckOptions& o) {
  const BodyModel& model = default_body_model();
  const double h = o.step;
  std::vector<GradCheckRow> rows;

  rows.push_back(smooth_row("loss_3d", o, [&](Rng& rng) {
    std::vector<Vec3> s(17), t(17);
    for (std::size_t i = 0; i < s.size(); ++i) {
      s[i] = random_vec3(rng, 0.5);
      t[i] = random_vec3(rng, 0.5);
    }
    std::vector<Vec3> g;
    loss_3d(s, t, &g);
    const auto f = [&](const std::vector<double>& x) { return loss_3d(to_vec3(x), t); };
    return relative_error(flatten(g), numeric_gradient(f, flatten(s), h));
  }));

  rows.push_back(smooth_row("loss_proj", o, [&](Rng& rng) {
    std::vector<Vec2> s(17), t(17);
    std::vector<double> c(17);
    for (std::size_t i = 0; i < s.size(); ++i) {
      for (int k = 0; k < 2; ++k) {
        s[i][k] = uniform(rng, -0.8, 0.8);
        // Keep away from the kink of the absolute value.
        const double d = uniform(rng, 0.01, 0.3);
        t[i][k] = s[i][k] + (uniform(rng, 0.0, 1.0) < 0.5 ? -d : d);
      }
      c[i] = uniform(rng, 0.1, 1.0);
    }
    std::vector<Vec2> g;
    loss_proj(s, t, c, &g);
    const auto f = [&](const std::vector<double>& x) { return loss_proj(to_vec2(x), t, c); };
    return relative_error(flatten(g), numeric_gradient(f, flatten(s), h));
  }));

  // fit_objective with a single active term, differentiated w.r.t. the flat
  // parameter vector.
  const auto objective_point = [&](Rng& rng, const LossWeights& w) {
    const FitContext ctx =
        FitContext::make(model, o.subdivision, model.grouping("20"), 32, 32);
    const EllipBodyParams p = random_params(rng, model);
    FitTargets targets;
    targets.part_labels = LabelMap(32, 32);
    const int n = model.tree.num_joints();
    for (int j = 0; j < n; ++j) {
      // Targets far from the projected joints keep away from the L1 kink.
      targets.keypoints.points.emplace_back(uniform(rng, 1.5, 2.5), uniform(rng, -2.5, -1.5));
      targets.keypoints.confidence.push_back(uniform(rng, 0.1, 1.0));
    }
    const std::vector<double> analytic = pack(fit_objective(p, targets, w, ctx).grad);
    const auto f = [&](const std::vector<double>& x) {
      EllipBodyParams q = p;
      unpack(x, &q);
      return fit_objective(q, targets, w, ctx).terms.total;
    };
    return relative_error(analytic, numeric_gradient(f, pack(p), h));
  };
  rows.push_back(smooth_row("loss_proj_chain", o, [&](Rng& rng) {
    return objective_point(rng, LossWeights{0.0, 1.0, 0.0, 0.0, 0.0});
  }));
  rows.push_back(smooth_row("loss_shape", o, [&](Rng& rng) {
    return objective_point(rng, LossWeights{0.0, 0.0, 0.0, 1.0, 1.0});
  }));

  rows.push_back(smooth_row("loss_pen", o, [&](Rng& rng) {
    const PartSet set = build(model, random_params(rng, model), 0);
    std::vector<Vec3> v;
    for (const EllipsoidSpec& e : set.ellipsoids) {
      for (int k = 0; k < 3; ++k) {
        // Points at normalized radius 0.3..1.5 of a random ellipsoid.
        Vec3 dir = random_vec3(rng, 1.0).normalized();
        const double radius = uniform(rng, 0.3, 1.5);
        const Vec3 local(0.5 * e.length * dir.x(), 0.5 * e.thickness1 * dir.y(),
                         0.5 * e.thickness2 * dir.z());
        v.push_back(e.center + e.rotation * (radius * local));
      }
    }
    std::vector<Vec3> g;
    loss_pen(v, set.ellipsoids, &g);
    const auto f = [&](const std::vector<double>& x) { return loss_pen(to_vec3(x), set.ellipsoids); };
    return relative_error(flatten(g), numeric_gradient(f, flatten(v), h));
  }));

  rows.push_back(smooth_row("loss_icp_fixed", o, [&](Rng& rng) {
    std::vector<Vec3> a(30), b(40);
    for (Vec3& p : a) p = random_vec3(rng, 1.0);
    for (Vec3& p : b) p = random_vec3(rng, 1.0);
    const IcpCorrespondences corr = icp_correspondences(a, b);
    std::vector<Vec3> g;
    loss_icp_fixed(a, b, corr, &g);
    const auto f = [&](const std::vector<double>& x) {
      return loss_icp_fixed(to_vec3(x), b, corr);
    };
    return relative_error(flatten(g), numeric_gradient(f, flatten(a), h));
  }));

  rows.push_back(smooth_row("build_backward", o, [&](Rng& rng) {
    const TriMesh sphere = icosphere(o.subdivision);
    const Grouping& grouping = model.grouping("20");
    const EllipBodyParams p = random_params(rng, model);
    const PartSet set = build(model, p, sphere, grouping);
    std::vector<std::vector<Vec3>> gv(set.parts.size());
    for (std::size_t i = 0; i < set.parts.size(); ++i) {
      for (std::size_t j = 0; j < set.parts[i].num_vertices(); ++j) {
        gv[i].push_back(random_vec3(rng, 1.0));
      }
    }
    std::vector<Vec3> gj(set.skeleton.size());
    for (Vec3& g : gj) g = random_vec3(rng, 1.0);
    const auto f = [&](const std::vector<double>& x) {
      EllipBodyParams q = p;
      unpack(x, &q);
      const PartSet s = build(model, q, sphere, grouping);
      double total = 0.0;
      for (std::size_t i = 0; i < s.parts.size(); ++i) {
        for (std::size_t j = 0; j < s.parts[i].num_vertices(); ++j) {
          total += gv[i][j].dot(s.parts[i].vertices[j]);
        }
      }
      for (std::size_t j = 0; j < s.skeleton.size(); ++j) total += gj[j].dot(s.skeleton[j]);
      return total;
    };
    std::vector<double> analytic = pack(build_backward(model, p, sphere, gv, gj));
    std::vector<double> numeric = numeric_gradient(f, pack(p), h);
    // The camera does not enter build().
    analytic.resize(analytic.size() - 3);
    numeric.resize(numeric.size() - 3);
    return relative_error(analytic, numeric);
  }));

  rows.push_back(fixture_row("xy_two_pixel", two_pixel_slope(), 0.5, 1e-12));
  rows.push_back(fixture_row("xy_hidden_part", hidden_part_slope(), 0.0, 0.0));
  rows.push_back(fixture_row("z_unit", unit_occlusion_gradient(), std::log(2.0), 1e-9));
  return rows;
}

}  // namespace ellipbody
