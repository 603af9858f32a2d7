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

#ifndef ELLIPBODY_IO_H_
#define ELLIPBODY_IO_H_

#include <array>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "ellipbody/body.h"
#include "ellipbody/camera.h"
#include "ellipbody/losses.h"
#include "ellipbody/optim.h"
#include "ellipbody/raster.h"

namespace ellipbody {

// Malformed or missing input. Messages name the offending file or field.
class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

nlohmann::json read_json_file(const std::string& path);
void write_json_file(const nlohmann::json& j, const std::string& path);
void write_text_file(const std::string& text, const std::string& path);

// Wavefront OBJ with `v` and `f` records only; indices are 1-based. Faces
// with more than three corners are fanned.
void write_obj(const TriMesh& mesh, std::ostream& out);
void write_obj(const TriMesh& mesh, const std::string& path);
TriMesh read_obj(std::istream& in);
TriMesh read_obj(const std::string& path);

// {r: [[x, y, z] x P], l: [...], t: [...], root_translation: [x, y, z],
//  cam: {s, tx, ty}}. Sizes are checked against `model`.
nlohmann::json params_to_json(const EllipBodyParams& params);
EllipBodyParams params_from_json(const nlohmann::json& j, const BodyModel& model);

// {s, tx, ty} or {P: [12 numbers, row-major]}.
struct CameraSpec {
  std::optional<WeakPerspectiveCamera> weak;
  std::optional<ProjectionMatrix> full;
};
CameraSpec camera_from_json(const nlohmann::json& j);
nlohmann::json camera_to_json(const WeakPerspectiveCamera& cam);

// [{name, u, v, confidence}, ...] matched to joints by name. Joints that are
// not listed get zero confidence.
Keypoints2D keypoints_from_json(const nlohmann::json& j, const KinematicTree& tree);
nlohmann::json keypoints_to_json(const Keypoints2D& keypoints, const KinematicTree& tree);

// Fixed palette: entry 0 is black, the rest are well-separated colors.
std::array<uint8_t, 3> palette_color(int index);
nlohmann::json palette_json(const Grouping& grouping);
// Checks that a palette file describes `grouping`.
void check_palette(const nlohmann::json& palette, const Grouping& grouping);

// Indexed 8-bit PNG (palette type). Reading also accepts 8-bit grayscale.
void write_label_png(const LabelMap& labels, int num_classes, const std::string& path);
LabelMap read_label_png(const std::string& path);
// Grayscale PNG, 0 or 255.
void write_binary_png(const BinaryMap& map, const std::string& path);

// Everything the CLI reads from --config. Unknown keys are rejected.
struct RunConfig {
  FitConfig fit;
  RegisterConfig reg;
};
void apply_config_json(const nlohmann::json& j, RunConfig* config);
nlohmann::json config_to_json(const RunConfig& config);

void write_trace_csv(const std::vector<TraceRow>& trace, std::ostream& out);
void write_trace_csv(const std::vector<RegisterTraceRow>& trace, std::ostream& out);

}  // namespace ellipbody

#endif  // ELLIPBODY_IO_H_
