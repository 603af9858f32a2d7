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

#include "ellipbody/body.h"

#include <cmath>
#include <map>
#include <stdexcept>
#include <string>

#include "ellipbody_default_config.h"

namespace ellipbody {
namespace {

[[noreturn]] void config_error(const std::string& what) {
  throw std::invalid_argument("body config: " + what);
}

Vec3 read_vec3(const nlohmann::json& j, const std::string& field) {
  if (!j.is_array() || j.size() != 3) config_error(field + " must be 3 numbers");
  return Vec3(j[0].get<double>(), j[1].get<double>(), j[2].get<double>());
}

}  // namespace

int KinematicTree::root_part() const {
  for (int i = 0; i < num_parts(); ++i) {
    if (parts[i].parent < 0) return i;
  }
  return -1;
}

int KinematicTree::joint_index(std::string_view name) const {
  for (int i = 0; i < num_joints(); ++i) {
    if (joint_names[i] == name) return i;
  }
  return -1;
}

int KinematicTree::part_index(std::string_view name) const {
  for (int i = 0; i < num_parts(); ++i) {
    if (parts[i].name == name) return i;
  }
  return -1;
}

const Grouping& BodyModel::grouping(std::string_view name) const {
  for (const Grouping& g : groupings) {
    if (g.name == name) return g;
  }
  throw std::invalid_argument("unknown grouping '" + std::string(name) + "'");
}

std::vector<double> BodyModel::part_lengths(const std::vector<double>& l) const {
  std::vector<double> out(shape.rows.size());
  for (std::size_t i = 0; i < shape.rows.size(); ++i) out[i] = l.at(shape.rows[i].length_index);
  return out;
}

BodyGradient BodyGradient::zeros_like(const EllipBodyParams& params) {
  BodyGradient g;
  g.r.assign(params.r.size(), Vec3::Zero());
  g.l.assign(params.l.size(), 0.0);
  g.t.assign(params.t.size(), 0.0);
  return g;
}

BodyGradient& BodyGradient::operator+=(const BodyGradient& other) {
  for (std::size_t i = 0; i < r.size(); ++i) r[i] += other.r[i];
  for (std::size_t i = 0; i < l.size(); ++i) l[i] += other.l[i];
  for (std::size_t i = 0; i < t.size(); ++i) t[i] += other.t[i];
  root_translation += other.root_translation;
  cam += other.cam;
  return *this;
}

BodyGradient& BodyGradient::operator*=(double k) {
  for (Vec3& v : r) v *= k;
  for (double& v : l) v *= k;
  for (double& v : t) v *= k;
  root_translation *= k;
  cam *= k;
  return *this;
}

void validate_tree(const KinematicTree& tree) {
  int roots = 0;
  for (int i = 0; i < tree.num_parts(); ++i) {
    const PartDef& p = tree.parts[i];
    if (p.parent < 0) {
      ++roots;
      if (p.joint_from != tree.root_joint) config_error("root part must start at the root joint");
    } else {
      if (p.parent >= i) config_error("part '" + p.name + "' listed before its parent");
      const PartDef& parent = tree.parts[p.parent];
      if (p.joint_from != parent.joint_from && p.joint_from != parent.joint_to) {
        config_error("part '" + p.name + "' does not start at a joint of its parent");
      }
    }
    if (std::abs(p.offset.norm() - 1.0) > 1e-9) config_error("offset of '" + p.name + "' is not unit");
    if (p.joint_from < 0 || p.joint_from >= tree.num_joints() || p.joint_to < 0 ||
        p.joint_to >= tree.num_joints() || p.joint_to == tree.root_joint) {
      config_error("part '" + p.name + "' has invalid joints");
    }
  }
  if (roots != 1) config_error("expected exactly one root part, found " + std::to_string(roots));
  std::vector<int> owner(tree.num_joints(), -1);
  for (int i = 0; i < tree.num_parts(); ++i) {
    int& o = owner[tree.parts[i].joint_to];
    if (o >= 0) config_error("joint '" + tree.joint_names[tree.parts[i].joint_to] + "' ends two parts");
    o = i;
  }
}

BodyModel load_body_model(const nlohmann::json& config) {
  BodyModel model;
  try {
    model.tree.joint_names = config.at("joints").get<std::vector<std::string>>();
    model.tree.root_joint = model.tree.joint_index(config.at("root_joint").get<std::string>());
    if (model.tree.root_joint < 0) config_error("unknown root joint");
    std::map<std::string, int> part_ids;
    for (const auto& jp : config.at("parts")) {
      PartDef part;
      part.name = jp.at("name").get<std::string>();
      if (jp.at("parent").is_null()) {
        part.parent = -1;
      } else {
        auto it = part_ids.find(jp.at("parent").get<std::string>());
        if (it == part_ids.end()) config_error("parent of '" + part.name + "' must be listed first");
        part.parent = it->second;
      }
      part.joint_from = model.tree.joint_index(jp.at("from").get<std::string>());
      part.joint_to = model.tree.joint_index(jp.at("to").get<std::string>());
      part.offset = read_vec3(jp.at("offset"), part.name + ".offset");
      const auto shape = jp.at("shape").get<std::vector<int>>();
      if (shape.size() != 3) config_error(part.name + ".shape must have 3 indices");
      model.shape.rows.push_back({shape[0], shape[1], shape[2]});
      part_ids.emplace(part.name, static_cast<int>(model.tree.parts.size()));
      model.tree.parts.push_back(std::move(part));
    }
    model.mean_lengths = config.at("mean_shape").at("l").get<std::vector<double>>();
    model.mean_thicknesses = config.at("mean_shape").at("t").get<std::vector<double>>();
    const auto& cam = config.at("default_camera");
    model.default_camera = {cam.at("s").get<double>(), cam.at("tx").get<double>(),
                            cam.at("ty").get<double>()};
    for (const auto& [name, jg] : config.at("groupings").items()) {
      Grouping g;
      g.name = name;
      g.class_names = jg.at("classes").get<std::vector<std::string>>();
      const auto parts = jg.at("parts").get<std::vector<std::string>>();
      if (parts.size() != model.tree.parts.size()) config_error("grouping '" + name + "' has wrong size");
      for (const std::string& cls : parts) {
        int found = -1;
        for (int c = 0; c < g.num_classes(); ++c) {
          if (g.class_names[c] == cls) found = c;
        }
        if (found < 0) config_error("grouping '" + name + "' uses unknown class '" + cls + "'");
        g.part_to_class.push_back(found);
      }
      model.groupings.push_back(std::move(g));
    }
    if (config.contains("eval_joints_17")) {
      model.eval_joints = config.at("eval_joints_17").get<std::vector<std::string>>();
    }
  } catch (const nlohmann::json::exception& e) {
    config_error(e.what());
  }
  model.shape.num_lengths = static_cast<int>(model.mean_lengths.size());
  model.shape.num_thicknesses = static_cast<int>(model.mean_thicknesses.size());
  validate_tree(model.tree);
  for (const ShapeRow& row : model.shape.rows) {
    if (row.length_index < 0 || row.length_index >= model.shape.num_lengths ||
        row.thick1_index < 0 || row.thick1_index >= model.shape.num_thicknesses ||
        row.thick2_index < 0 || row.thick2_index >= model.shape.num_thicknesses) {
      config_error("shape index out of range");
    }
  }
  for (const std::string& j : model.eval_joints) {
    if (model.tree.joint_index(j) < 0) config_error("unknown evaluation joint '" + j + "'");
  }
  return model;
}

const nlohmann::json& default_body_config() {
  static const nlohmann::json config = nlohmann::json::parse(kDefaultBodyConfig);
  return config;
}

const BodyModel& default_body_model() {
  static const BodyModel model = load_body_model(default_body_config());
  return model;
}

KinematicTree default_tree() { return default_body_model().tree; }

EllipBodyParams mean_params(const BodyModel& model) {
  EllipBodyParams p;
  p.r.assign(model.tree.parts.size(), Vec3::Zero());
  p.l = model.mean_lengths;
  p.t = model.mean_thicknesses;
  p.cam = model.default_camera;
  return p;
}

EllipBodyParams mean_params() { return mean_params(default_body_model()); }

void validate_params(const BodyModel& model, const EllipBodyParams& params) {
  if (params.r.size() != model.tree.parts.size()) {
    throw std::invalid_argument("params: expected " + std::to_string(model.tree.parts.size()) +
                                " rotations, got " + std::to_string(params.r.size()));
  }
  if (static_cast<int>(params.l.size()) != model.shape.num_lengths ||
      static_cast<int>(params.t.size()) != model.shape.num_thicknesses) {
    throw std::invalid_argument("params: wrong number of lengths or thicknesses");
  }
  for (const Vec3& r : params.r) {
    if (!r.allFinite()) throw std::invalid_argument("params: non-finite rotation");
  }
  for (double v : params.l) {
    if (!(v > 0.0) || !std::isfinite(v)) throw std::invalid_argument("params: lengths must be positive");
  }
  for (double v : params.t) {
    if (!(v > 0.0) || !std::isfinite(v)) throw std::invalid_argument("params: thicknesses must be positive");
  }
  if (!params.root_translation.allFinite()) throw std::invalid_argument("params: non-finite root");
  validate_camera(params.cam);
}

Mat3 rest_frame(const Vec3& offset) {
  const Vec3 x = offset.normalized();
  const Vec3 ref = std::abs(x.z()) < 0.9 ? Vec3::UnitZ() : Vec3::UnitY();
  const Vec3 z = (ref - ref.dot(x) * x).normalized();
  Mat3 frame;
  frame.col(0) = x;
  frame.col(1) = z.cross(x);
  frame.col(2) = z;
  return frame;
}

Pose forward_kinematics(const KinematicTree& tree, const std::vector<Vec3>& r,
                        const std::vector<double>& part_lengths,
                        const Vec3& root_translation) {
  const int n = tree.num_parts();
  if (static_cast<int>(r.size()) != n || static_cast<int>(part_lengths.size()) != n) {
    throw std::invalid_argument("forward_kinematics: parameter count mismatch");
  }
  Pose pose;
  pose.rotations.resize(n);
  pose.joints.assign(tree.num_joints(), Vec3::Zero());
  pose.joints[tree.root_joint] = root_translation;
  for (int i = 0; i < n; ++i) {
    const PartDef& part = tree.parts[i];
    const Mat3 local = axis_angle_to_matrix(r[i]);
    pose.rotations[i] = part.parent < 0 ? local : Mat3(pose.rotations[part.parent] * local);
    pose.joints[part.joint_to] =
        pose.joints[part.joint_from] + pose.rotations[i] * (part_lengths[i] * part.offset);
  }
  return pose;
}

std::vector<EllipsoidSpec> part_ellipsoids(const BodyModel& model,
                                           const EllipBodyParams& params,
                                           const Pose& pose) {
  std::vector<EllipsoidSpec> out;
  out.reserve(model.tree.parts.size());
  for (std::size_t i = 0; i < model.tree.parts.size(); ++i) {
    const PartDef& part = model.tree.parts[i];
    const ShapeRow& row = model.shape.rows[i];
    EllipsoidSpec spec;
    spec.rotation = pose.rotations[i] * rest_frame(part.offset);
    spec.center = 0.5 * (pose.joints[part.joint_from] + pose.joints[part.joint_to]);
    spec.length = params.l[row.length_index];
    spec.thickness1 = params.t[row.thick1_index];
    spec.thickness2 = params.t[row.thick2_index];
    out.push_back(spec);
  }
  return out;
}

PartSet build(const BodyModel& model, const EllipBodyParams& params,
              const TriMesh& unit_sphere, const Grouping& grouping) {
  validate_params(model, params);
  const Pose pose = forward_kinematics(model.tree, params.r, model.part_lengths(params.l),
                                       params.root_translation);
  PartSet set;
  set.ellipsoids = part_ellipsoids(model, params, pose);
  set.parts.reserve(set.ellipsoids.size());
  for (const EllipsoidSpec& spec : set.ellipsoids) {
    set.parts.push_back(deform_ellipsoid(spec, unit_sphere));
  }
  set.skeleton = pose.joints;
  set.part_to_class = grouping.part_to_class;
  set.num_classes = grouping.num_classes();
  return set;
}

PartSet build(const BodyModel& model, const EllipBodyParams& params, int subdivision,
              std::string_view grouping) {
  return build(model, params, icosphere(subdivision), model.grouping(grouping));
}

PartSet build(const EllipBodyParams& params, int subdivision) {
  return build(default_body_model(), params, subdivision);
}

BodyGradient build_backward(const BodyModel& model, const EllipBodyParams& params,
                            const TriMesh& unit_sphere,
                            const std::vector<std::vector<Vec3>>& vertex_grads,
                            const std::vector<Vec3>& joint_grads) {
  const KinematicTree& tree = model.tree;
  const int n = tree.num_parts();
  const std::vector<double> lengths = model.part_lengths(params.l);
  const Pose pose = forward_kinematics(tree, params.r, lengths, params.root_translation);

  BodyGradient grad = BodyGradient::zeros_like(params);
  std::vector<Vec3> g_joint(tree.num_joints(), Vec3::Zero());
  if (!joint_grads.empty()) {
    for (int j = 0; j < tree.num_joints(); ++j) g_joint[j] = joint_grads.at(j);
  }
  std::vector<Mat3> g_rot(n, Mat3::Zero());

  // Ellipsoid vertices: v = R_i A_i D u + C_i.
  if (!vertex_grads.empty()) {
    for (int i = 0; i < n; ++i) {
      const ShapeRow& row = model.shape.rows[i];
      const Mat3 frame = rest_frame(tree.parts[i].offset);
      const Mat3 ellipse_rot = pose.rotations[i] * frame;
      const Vec3 semi(0.5 * params.l[row.length_index], 0.5 * params.t[row.thick1_index],
                      0.5 * params.t[row.thick2_index]);
      Vec3 g_center = Vec3::Zero();
      Mat3 g_ellipse_rot = Mat3::Zero();
      Vec3 g_semi = Vec3::Zero();
      const std::vector<Vec3>& gv = vertex_grads.at(i);
      for (std::size_t k = 0; k < gv.size(); ++k) {
        const Vec3& u = unit_sphere.vertices[k];
        g_center += gv[k];
        g_ellipse_rot += gv[k] * semi.cwiseProduct(u).transpose();
        g_semi += (ellipse_rot.transpose() * gv[k]).cwiseProduct(u);
      }
      g_rot[i] += g_ellipse_rot * frame.transpose();
      grad.l[row.length_index] += 0.5 * g_semi.x();
      grad.t[row.thick1_index] += 0.5 * g_semi.y();
      grad.t[row.thick2_index] += 0.5 * g_semi.z();
      g_joint[tree.parts[i].joint_from] += 0.5 * g_center;
      g_joint[tree.parts[i].joint_to] += 0.5 * g_center;
    }
  }

  // Forward kinematics, leaves to root.
  for (int i = n - 1; i >= 0; --i) {
    const PartDef& part = tree.parts[i];
    const ShapeRow& row = model.shape.rows[i];
    const Vec3& g_to = g_joint[part.joint_to];
    const Vec3 bone_local = lengths[i] * part.offset;
    g_joint[part.joint_from] += g_to;
    g_rot[i] += g_to * bone_local.transpose();
    grad.l[row.length_index] += g_to.dot(pose.rotations[i] * part.offset);

    std::array<Mat3, 3> d_local;
    const Mat3 local = axis_angle_to_matrix(params.r[i], &d_local);
    Mat3 g_local;
    if (part.parent < 0) {
      g_local = g_rot[i];
    } else {
      const Mat3& parent_rot = pose.rotations[part.parent];
      g_rot[part.parent] += g_rot[i] * local.transpose();
      g_local = parent_rot.transpose() * g_rot[i];
    }
    for (int c = 0; c < 3; ++c) grad.r[i][c] = g_local.cwiseProduct(d_local[c]).sum();
  }
  grad.root_translation = g_joint[tree.root_joint];
  return grad;
}

TriMesh merge_parts(const PartSet& set) {
  TriMesh out;
  for (const TriMesh& part : set.parts) {
    const auto base = static_cast<int32_t>(out.vertices.size());
    out.vertices.insert(out.vertices.end(), part.vertices.begin(), part.vertices.end());
    for (const Face& f : part.faces) out.faces.push_back({f[0] + base, f[1] + base, f[2] + base});
  }
  return out;
}

TriMesh outer_surface(const PartSet& set, double tolerance) {
  TriMesh out;
  for (std::size_t i = 0; i < set.parts.size(); ++i) {
    const TriMesh& part = set.parts[i];
    std::vector<int32_t> remap(part.vertices.size(), -1);
    for (std::size_t k = 0; k < part.vertices.size(); ++k) {
      bool inside = false;
      for (std::size_t j = 0; j < set.ellipsoids.size() && !inside; ++j) {
        if (j == i) continue;
        inside = ellipsoid_distance(part.vertices[k], set.ellipsoids[j]) < 1.0 - tolerance;
      }
      if (!inside) {
        remap[k] = static_cast<int32_t>(out.vertices.size());
        out.vertices.push_back(part.vertices[k]);
      }
    }
    for (const Face& f : part.faces) {
      if (remap[f[0]] >= 0 && remap[f[1]] >= 0 && remap[f[2]] >= 0) {
        out.faces.push_back({remap[f[0]], remap[f[1]], remap[f[2]]});
      }
    }
  }
  return out;
}

}  // namespace ellipbody
