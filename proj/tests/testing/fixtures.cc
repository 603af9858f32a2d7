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

#include "testing/fixtures.h"

#include <unistd.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <limits>
#include <stdexcept>

namespace ellipbody::testing {

double uniform(Rng& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

Vec3 random_vec3(Rng& rng, double scale) {
  return Vec3(uniform(rng, -scale, scale), uniform(rng, -scale, scale),
              uniform(rng, -scale, scale));
}

RasterOutput brute_force_rasterize(const ProjectedScene& scene) {
  const int w = scene.width;
  const int h = scene.height;
  RasterOutput out;
  out.width = w;
  out.height = h;
  out.num_classes = scene.num_classes;
  out.face_map = Grid<FaceId>(w, h);
  out.alpha = BinaryMap(w, h);
  out.labels = LabelMap(w, h);
  out.depth = Grid<double>(w, h, std::numeric_limits<double>::infinity());
  auto edge = [](const Vec3& a, const Vec3& b, double px, double py) {
    return (b.x() - a.x()) * (py - a.y()) - (b.y() - a.y()) * (px - a.x());
  };
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const double px = x + 0.5;
      const double py = y + 0.5;
      double best = std::numeric_limits<double>::infinity();
      for (std::size_t p = 0; p < scene.parts.size(); ++p) {
        const ProjectedPart& part = scene.parts[p];
        for (std::size_t f = 0; f < part.faces.size(); ++f) {
          const Vec3& a = part.vertices[part.faces[f][0]];
          const Vec3& b = part.vertices[part.faces[f][1]];
          const Vec3& c = part.vertices[part.faces[f][2]];
          const double area = edge(a, b, c.x(), c.y());
          if (area == 0.0) continue;
          const double w0 = edge(b, c, px, py);
          const double w1 = edge(c, a, px, py);
          const double w2 = edge(a, b, px, py);
          const bool inside = area > 0.0 ? (w0 >= 0.0 && w1 >= 0.0 && w2 >= 0.0)
                                         : (w0 <= 0.0 && w1 <= 0.0 && w2 <= 0.0);
          if (!inside) continue;
          const double z = (w0 * a.z() + w1 * b.z() + w2 * c.z()) / area;
          if (z < best) {
            best = z;
            out.depth.at(x, y) = z;
            out.face_map.at(x, y) = FaceId{int32_t(p), int32_t(f)};
            out.alpha.at(x, y) = 1;
            out.labels.at(x, y) = uint8_t(part.class_id + 1);
          }
        }
      }
    }
  }
  return out;
}

ProjectedScene random_scene(Rng& rng, int max_faces, int max_side) {
  std::uniform_int_distribution<int> side(1, max_side);
  ProjectedScene scene;
  scene.width = side(rng);
  scene.height = side(rng);
  scene.num_classes = std::uniform_int_distribution<int>(1, 5)(rng);
  const int num_parts = std::uniform_int_distribution<int>(1, std::min(5, max_faces))(rng);
  int faces_left = std::uniform_int_distribution<int>(num_parts, max_faces)(rng);
  auto coord = [&](int extent) {
    const double v = uniform(rng, -0.25 * extent, 1.25 * extent);
    // Snap to a pixel center or a pixel border now and then.
    const double r = uniform(rng, 0.0, 1.0);
    if (r < 0.2) return std::floor(v) + 0.5;
    if (r < 0.3) return std::floor(v);
    return v;
  };
  for (int p = 0; p < num_parts; ++p) {
    ProjectedPart part;
    part.class_id = std::uniform_int_distribution<int>(0, scene.num_classes - 1)(rng);
    const int n_faces =
        p == num_parts - 1 ? faces_left
                           : std::uniform_int_distribution<int>(1, faces_left - (num_parts - p - 1))(rng);
    faces_left -= n_faces;
    const double plane_depth = uniform(rng, 0.5, 3.0);
    for (int f = 0; f < n_faces; ++f) {
      const int base = static_cast<int>(part.vertices.size());
      const double kind = uniform(rng, 0.0, 1.0);
      if (kind < 0.25 && base >= 2) {
        // Share an edge with the previous face.
        part.vertices.emplace_back(coord(scene.width), coord(scene.height),
                                   uniform(rng, 0.5, 3.0));
        part.faces.push_back({base - 2, base - 1, base});
        continue;
      }
      for (int k = 0; k < 3; ++k) {
        const double z = kind < 0.45 ? plane_depth : uniform(rng, 0.5, 3.0);
        part.vertices.emplace_back(coord(scene.width), coord(scene.height), z);
      }
      if (kind > 0.95) {
        // Collinear corners: zero area.
        part.vertices[base + 2] = 0.5 * (part.vertices[base] + part.vertices[base + 1]);
      }
      part.faces.push_back({base, base + 1, base + 2});
    }
    scene.parts.push_back(std::move(part));
  }
  return scene;
}

ProjectedScene two_triangle_scene(double depth_a, double depth_b, const Vec2& offset,
                                  bool merged) {
  ProjectedScene s;
  s.width = 64;
  s.height = 64;
  s.num_classes = merged ? 1 : 2;
  ProjectedPart a;
  a.vertices = {{8.0 + offset.x(), 10.0 + offset.y(), depth_a},
                {44.0 + offset.x(), 14.0 + offset.y(), depth_a},
                {16.0 + offset.x(), 52.0 + offset.y(), depth_a}};
  a.faces = {{0, 1, 2}};
  a.class_id = 0;
  ProjectedPart b;
  b.vertices = {{26.0, 8.0, depth_b}, {58.0, 36.0, depth_b}, {22.0, 56.0, depth_b}};
  b.faces = {{0, 1, 2}};
  b.class_id = merged ? 0 : 1;
  s.parts = {a, b};
  return s;
}

TriMesh inflated_surface(const PartSet& body, double factor) {
  TriMesh out;
  for (std::size_t i = 0; i < body.parts.size(); ++i) {
    const TriMesh& m = body.parts[i];
    const Vec3 c = body.ellipsoids[i].center;
    std::vector<int32_t> remap(m.num_vertices(), -1);
    for (std::size_t j = 0; j < m.num_vertices(); ++j) {
      bool hidden = false;
      for (std::size_t k = 0; k < body.ellipsoids.size(); ++k) {
        if (k != i && ellipsoid_distance(m.vertices[j], body.ellipsoids[k]) < 1.0 - 1e-9) {
          hidden = true;
        }
      }
      if (hidden) continue;
      remap[j] = static_cast<int32_t>(out.vertices.size());
      out.vertices.push_back(c + factor * (m.vertices[j] - c));
    }
    for (const Face& f : m.faces) {
      if (remap[f[0]] >= 0 && remap[f[1]] >= 0 && remap[f[2]] >= 0) {
        out.faces.push_back({remap[f[0]], remap[f[1]], remap[f[2]]});
      }
    }
  }
  return out;
}

EllipBodyParams oblique_pose(const BodyModel& model) {
  EllipBodyParams p = mean_params(model);
  auto set = [&](const char* name, const Vec3& r) { p.r[model.tree.part_index(name)] = r; };
  set("abdomen", {0.35, 0.5, 0.0});
  set("chest", {0.25, 0.0, 0.0});
  set("neck", {0.2, 0.0, 0.0});
  set("head", {0.2, 0.0, 0.0});
  set("upper_arm_left", {0.0, 0.5, -0.9});
  set("upper_arm_right", {0.0, -1.0, 0.9});
  set("forearm_left", {0.0, 0.7, 0.0});
  set("forearm_right", {0.0, -0.7, 0.0});
  set("upper_leg_left", {0.2, 0.0, 0.1});
  set("upper_leg_right", {-0.7, 0.0, -0.1});
  set("lower_leg_left", {-0.9, 0.0, 0.0});
  set("lower_leg_right", {-0.5, 0.0, 0.0});
  return p;
}

EllipBodyParams perturb_rotations(const EllipBodyParams& params, Rng& rng, double amplitude) {
  EllipBodyParams p = params;
  std::uniform_real_distribution<double> u(-amplitude, amplitude);
  for (Vec3& r : p.r) {
    const double x = u(rng);
    const double y = u(rng);
    const double z = u(rng);
    r += Vec3(x, y, z);
  }
  return p;
}

double root_aligned_joint_error(const BodyModel& model, const std::vector<Vec3>& a,
                                const std::vector<Vec3>& b) {
  const int root = model.tree.root_joint;
  std::vector<Vec3> x;
  std::vector<Vec3> y;
  for (const std::string& name : model.eval_joints) {
    const int j = model.tree.joint_index(name);
    x.push_back(a[j] - a[root]);
    y.push_back(b[j] - b[root]);
  }
  return mean_joint_error(x, y);
}

std::vector<CrossedLimbScene> crossed_limb_suite(const BodyModel& model) {
  auto part = [&](const char* name) { return model.tree.part_index(name); };
  auto mirror = [](const Vec3& r) { return Vec3(-r.x(), -r.y(), r.z()); };
  std::vector<CrossedLimbScene> suite;
  for (double a : {0.08, 0.12, 0.16}) {
    for (double c : {0.2, 0.3}) {
      EllipBodyParams t = mean_params(model);
      t.r[part("upper_leg_left")] = Vec3(a, 0.0, -c);
      t.r[part("upper_leg_right")] = Vec3(-a, 0.0, c);
      t.r[part("upper_arm_left")] = Vec3(0.0, 0.0, -1.2);
      t.r[part("upper_arm_right")] = Vec3(0.0, 0.0, 1.2);
      EllipBodyParams i = t;
      for (const char* n : {"upper_leg_left", "upper_leg_right"}) i.r[part(n)] = mirror(t.r[part(n)]);
      suite.push_back({"legs_" + std::to_string(suite.size()), t, i});
    }
  }
  for (double b : {0.1, 0.15}) {
    for (double f : {1.4, 1.6}) {
      EllipBodyParams t = mean_params(model);
      t.r[part("upper_arm_left")] = Vec3(0.0, 0.0, 1.4);
      t.r[part("upper_arm_right")] = Vec3(0.0, 0.0, -1.4);
      t.r[part("forearm_left")] = Vec3(0.0, b, f);
      t.r[part("forearm_right")] = Vec3(0.0, b, -f);
      EllipBodyParams i = t;
      for (const char* n : {"forearm_left", "forearm_right"}) i.r[part(n)] = mirror(t.r[part(n)]);
      suite.push_back({"arms_" + std::to_string(suite.size()), t, i});
    }
  }
  return suite;
}

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

std::vector<double> flatten(const std::vector<Vec3>& v) {
  std::vector<double> out;
  out.reserve(3 * v.size());
  for (const Vec3& p : v) out.insert(out.end(), {p.x(), p.y(), p.z()});
  return out;
}

std::vector<Vec3> unflatten(const std::vector<double>& x) {
  std::vector<Vec3> out(x.size() / 3);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = Vec3(x[3 * i], x[3 * i + 1], x[3 * i + 2]);
  return out;
}

std::string make_temp_dir(const std::string& prefix) {
  namespace fs = std::filesystem;
  static int counter = 0;
  for (;;) {
    const fs::path p = fs::temp_directory_path() /
                       (prefix + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    if (fs::create_directory(p)) return p.string();
  }
}

}  // namespace ellipbody::testing
