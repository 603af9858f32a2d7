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

#ifndef ELLIPBODY_BODY_H_
#define ELLIPBODY_BODY_H_

#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "ellipbody/camera.h"
#include "ellipbody/geometry.h"

namespace ellipbody {

inline constexpr int kNumParts = 20;
inline constexpr int kNumLengths = 12;
inline constexpr int kNumThicknesses = 15;

// One ellipsoid of the body. The bone runs from joint `joint_from` to joint
// `joint_to`; at rest it points along `offset`, expressed in the parent
// part's frame.
struct PartDef {
  std::string name;
  int parent = -1;
  int joint_from = 0;
  int joint_to = 0;
  Vec3 offset = Vec3::UnitX();
};

// Parts are stored in topological order (parents before children).
struct KinematicTree {
  std::vector<std::string> joint_names;
  int root_joint = 0;
  std::vector<PartDef> parts;

  int num_parts() const { return static_cast<int>(parts.size()); }
  int num_joints() const { return static_cast<int>(joint_names.size()); }
  int root_part() const;
  int joint_index(std::string_view name) const;
  int part_index(std::string_view name) const;
};

// Parameter sharing: which entries of l and t drive each part.
struct ShapeRow {
  int length_index = 0;
  int thick1_index = 0;
  int thick2_index = 0;

  bool operator==(const ShapeRow&) const = default;
};

struct ShapeTable {
  std::vector<ShapeRow> rows;
  int num_lengths = kNumLengths;
  int num_thicknesses = kNumThicknesses;
};

// Mapping from parts to segmentation classes.
struct Grouping {
  std::string name;
  std::vector<std::string> class_names;
  std::vector<int> part_to_class;

  int num_classes() const { return static_cast<int>(class_names.size()); }
};

struct BodyModel {
  KinematicTree tree;
  ShapeTable shape;
  std::vector<double> mean_lengths;
  std::vector<double> mean_thicknesses;
  WeakPerspectiveCamera default_camera;
  std::vector<Grouping> groupings;
  std::vector<std::string> eval_joints;

  const Grouping& grouping(std::string_view name) const;
  // Length of each part's bone, expanded from the shared l vector.
  std::vector<double> part_lengths(const std::vector<double>& l) const;
};

struct EllipBodyParams {
  std::vector<Vec3> r;          // local axis-angle rotation per part
  std::vector<double> l;        // shared bone lengths
  std::vector<double> t;        // shared thicknesses
  Vec3 root_translation = Vec3::Zero();
  WeakPerspectiveCamera cam;
};

// Gradient with the same layout as EllipBodyParams. `cam` holds
// (d/ds, d/dtx, d/dty).
struct BodyGradient {
  std::vector<Vec3> r;
  std::vector<double> l;
  std::vector<double> t;
  Vec3 root_translation = Vec3::Zero();
  Vec3 cam = Vec3::Zero();

  static BodyGradient zeros_like(const EllipBodyParams& params);
  BodyGradient& operator+=(const BodyGradient& other);
  BodyGradient& operator*=(double k);
};

// Global rotations and joint positions.
struct Pose {
  std::vector<Mat3> rotations;
  std::vector<Vec3> joints;
};

struct PartSet {
  std::vector<TriMesh> parts;
  std::vector<EllipsoidSpec> ellipsoids;
  std::vector<Vec3> skeleton;
  std::vector<int> part_to_class;
  int num_classes = 0;
};

// Parses and validates a model description (see config/ellipbody_v1.json).
BodyModel load_body_model(const nlohmann::json& config);

// The shipped model, parsed once from the embedded default config.
const BodyModel& default_body_model();
const nlohmann::json& default_body_config();

KinematicTree default_tree();
EllipBodyParams mean_params();
EllipBodyParams mean_params(const BodyModel& model);

void validate_tree(const KinematicTree& tree);
void validate_params(const BodyModel& model, const EllipBodyParams& params);

// Rotation taking local x onto `offset` with local z kept as close to world z
// as possible (world y when the offset is along z).
Mat3 rest_frame(const Vec3& offset);

// R_i = R_parent(i) * Rodrigues(r_i); joint_to(i) = joint_from(i) +
// R_i * (length_i * offset_i); the root joint sits at `root_translation`.
Pose forward_kinematics(const KinematicTree& tree, const std::vector<Vec3>& r,
                        const std::vector<double>& part_lengths,
                        const Vec3& root_translation);

// Ellipsoid of each part: center at the midpoint of its two joints, long axis
// along the bone.
std::vector<EllipsoidSpec> part_ellipsoids(const BodyModel& model,
                                           const EllipBodyParams& params,
                                           const Pose& pose);

PartSet build(const BodyModel& model, const EllipBodyParams& params,
              int subdivision, std::string_view grouping = "20");
PartSet build(const BodyModel& model, const EllipBodyParams& params,
              const TriMesh& unit_sphere, const Grouping& grouping);
PartSet build(const EllipBodyParams& params, int subdivision);

// Reverse-mode derivative of build(). `vertex_grads[i][j]` is dL/dv for
// vertex j of part i and `joint_grads[n]` is dL/dS_n (either may be empty).
// Camera entries of the result are left at zero.
BodyGradient build_backward(const BodyModel& model, const EllipBodyParams& params,
                            const TriMesh& unit_sphere,
                            const std::vector<std::vector<Vec3>>& vertex_grads,
                            const std::vector<Vec3>& joint_grads);

// Concatenation of all part meshes.
TriMesh merge_parts(const PartSet& set);

// Vertices of the part meshes that are not strictly inside another part's
// ellipsoid, plus the faces spanned entirely by such vertices.
TriMesh outer_surface(const PartSet& set, double tolerance = 1e-9);

}  // namespace ellipbody

#endif  // ELLIPBODY_BODY_H_
