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

#include "ellipbody/io.h"

#include <png.h>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <memory>
#include <set>
#include <sstream>

namespace ellipbody {
namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::string& field, const std::string& what) {
  throw InputError(field + ": " + what);
}

double get_number(const json& j, const std::string& field) {
  if (!j.is_number()) fail(field, "expected a number");
  const double v = j.get<double>();
  if (!std::isfinite(v)) fail(field, "expected a finite number");
  return v;
}

const json& member(const json& j, const char* key, const std::string& field) {
  if (!j.is_object()) fail(field, "expected an object");
  const auto it = j.find(key);
  if (it == j.end()) fail(field + "." + key, "missing");
  return *it;
}

std::vector<double> get_numbers(const json& j, const std::string& field, std::size_t expected) {
  if (!j.is_array()) fail(field, "expected an array");
  if (j.size() != expected) {
    fail(field, "expected " + std::to_string(expected) + " entries, got " +
                    std::to_string(j.size()));
  }
  std::vector<double> out;
  for (std::size_t i = 0; i < j.size(); ++i) {
    out.push_back(get_number(j[i], field + "[" + std::to_string(i) + "]"));
  }
  return out;
}

Vec3 get_vec3(const json& j, const std::string& field) {
  const std::vector<double> v = get_numbers(j, field, 3);
  return Vec3(v[0], v[1], v[2]);
}

WeakPerspectiveCamera weak_camera(const json& j, const std::string& field) {
  WeakPerspectiveCamera cam;
  cam.s = get_number(member(j, "s", field), field + ".s");
  cam.tx = get_number(member(j, "tx", field), field + ".tx");
  cam.ty = get_number(member(j, "ty", field), field + ".ty");
  if (!(cam.s > 0.0)) fail(field + ".s", "must be positive");
  return cam;
}

void check_keys(const json& j, const std::set<std::string>& allowed, const std::string& field) {
  if (!j.is_object()) fail(field, "expected an object");
  for (const auto& [key, value] : j.items()) {
    if (!allowed.count(key)) fail(field.empty() ? key : field + "." + key, "unknown key");
  }
}

struct PngWriter {
  png_structp png = nullptr;
  png_infop info = nullptr;
  ~PngWriter() { png_destroy_write_struct(&png, &info); }
};

struct PngReader {
  png_structp png = nullptr;
  png_infop info = nullptr;
  ~PngReader() { png_destroy_read_struct(&png, &info, nullptr); }
};

struct FileCloser {
  void operator()(std::FILE* f) const {
    if (f != nullptr) std::fclose(f);
  }
};

void write_png(const Grid<uint8_t>& map, const std::string& path, bool indexed,
               int num_colors) {
  std::unique_ptr<std::FILE, FileCloser> file(std::fopen(path.c_str(), "wb"));
  if (!file) throw std::runtime_error("cannot open " + path + " for writing");
  PngWriter w;
  w.png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (w.png == nullptr) throw std::runtime_error("png_create_write_struct failed");
  w.info = png_create_info_struct(w.png);
  if (w.info == nullptr) throw std::runtime_error("png_create_info_struct failed");
  if (setjmp(png_jmpbuf(w.png))) throw std::runtime_error("libpng error writing " + path);
  png_init_io(w.png, file.get());
  png_set_IHDR(w.png, w.info, png_uint_32(map.width), png_uint_32(map.height), 8,
               indexed ? PNG_COLOR_TYPE_PALETTE : PNG_COLOR_TYPE_GRAY, PNG_INTERLACE_NONE,
               PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  std::vector<png_color> palette;
  if (indexed) {
    for (int i = 0; i < num_colors; ++i) {
      const auto c = palette_color(i);
      palette.push_back({c[0], c[1], c[2]});
    }
    png_set_PLTE(w.png, w.info, palette.data(), int(palette.size()));
  }
  png_write_info(w.png, w.info);
  for (int y = 0; y < map.height; ++y) {
    png_write_row(w.png, map.data.data() + std::size_t(y) * std::size_t(map.width));
  }
  png_write_end(w.png, nullptr);
}

}  // namespace

json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError(path + ": cannot open file");
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw InputError(path + ": malformed JSON (" + e.what() + ")");
  }
}

void write_text_file(const std::string& text, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  out << text;
  if (!out) throw std::runtime_error("failed writing " + path);
}

void write_json_file(const json& j, const std::string& path) {
  write_text_file(j.dump(2) + "\n", path);
}

void write_obj(const TriMesh& mesh, std::ostream& out) {
  out << std::setprecision(17);
  for (const Vec3& v : mesh.vertices) out << "v " << v.x() << ' ' << v.y() << ' ' << v.z() << '\n';
  for (const Face& f : mesh.faces) {
    out << "f " << f[0] + 1 << ' ' << f[1] + 1 << ' ' << f[2] + 1 << '\n';
  }
}

void write_obj(const TriMesh& mesh, const std::string& path) {
  std::ostringstream s;
  write_obj(mesh, s);
  write_text_file(s.str(), path);
}

TriMesh read_obj(std::istream& in) {
  TriMesh mesh;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::istringstream ls(line);
    std::string tag;
    if (!(ls >> tag) || tag[0] == '#') continue;
    const std::string where = "line " + std::to_string(line_no);
    if (tag == "v") {
      double x, y, z;
      if (!(ls >> x >> y >> z)) fail(where, "bad vertex record");
      mesh.vertices.emplace_back(x, y, z);
    } else if (tag == "f") {
      std::vector<int32_t> ids;
      std::string tok;
      while (ls >> tok) {
        // Accept "i", "i/t", "i/t/n" and "i//n".
        long idx = 0;
        try {
          idx = std::stol(tok.substr(0, tok.find('/')));
        } catch (const std::exception&) {
          fail(where, "bad face index '" + tok + "'");
        }
        if (idx < 0) idx = long(mesh.vertices.size()) + idx + 1;
        if (idx < 1 || idx > long(mesh.vertices.size())) {
          fail(where, "face index " + tok + " out of range");
        }
        ids.push_back(int32_t(idx - 1));
      }
      if (ids.size() < 3) fail(where, "face needs at least three vertices");
      for (std::size_t k = 1; k + 1 < ids.size(); ++k) {
        mesh.faces.push_back({ids[0], ids[k], ids[k + 1]});
      }
    }
  }
  if (mesh.vertices.empty()) throw InputError("OBJ contains no vertices");
  return mesh;
}

TriMesh read_obj(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError(path + ": cannot open file");
  try {
    return read_obj(in);
  } catch (const InputError& e) {
    throw InputError(path + ": " + e.what());
  }
}

json params_to_json(const EllipBodyParams& p) {
  json j;
  j["r"] = json::array();
  for (const Vec3& r : p.r) j["r"].push_back({r.x(), r.y(), r.z()});
  j["l"] = p.l;
  j["t"] = p.t;
  const Vec3& root = p.root_translation;
  j["root_translation"] = {root.x(), root.y(), root.z()};
  j["cam"] = camera_to_json(p.cam);
  return j;
}

EllipBodyParams params_from_json(const json& j, const BodyModel& model) {
  check_keys(j, {"r", "l", "t", "root_translation", "cam"}, "params");
  EllipBodyParams p = mean_params(model);
  if (j.contains("r")) {
    const json& r = j["r"];
    if (!r.is_array() || r.size() != p.r.size()) {
      fail("params.r", "expected " + std::to_string(p.r.size()) + " rotations");
    }
    for (std::size_t i = 0; i < r.size(); ++i) {
      p.r[i] = get_vec3(r[i], "params.r[" + std::to_string(i) + "]");
    }
  }
  if (j.contains("l")) p.l = get_numbers(j["l"], "params.l", p.l.size());
  if (j.contains("t")) p.t = get_numbers(j["t"], "params.t", p.t.size());
  for (std::size_t i = 0; i < p.l.size(); ++i) {
    if (!(p.l[i] > 0.0)) fail("params.l[" + std::to_string(i) + "]", "must be positive");
  }
  for (std::size_t i = 0; i < p.t.size(); ++i) {
    if (!(p.t[i] > 0.0)) fail("params.t[" + std::to_string(i) + "]", "must be positive");
  }
  if (j.contains("root_translation")) {
    p.root_translation = get_vec3(j["root_translation"], "params.root_translation");
  }
  if (j.contains("cam")) p.cam = weak_camera(j["cam"], "params.cam");
  return p;
}

CameraSpec camera_from_json(const json& j) {
  CameraSpec spec;
  if (j.is_object() && j.contains("P")) {
    check_keys(j, {"P"}, "camera");
    const std::vector<double> v = get_numbers(j["P"], "camera.P", 12);
    ProjectionMatrix P;
    for (int r = 0; r < 3; ++r) {
      for (int c = 0; c < 4; ++c) P(r, c) = v[std::size_t(4 * r + c)];
    }
    if (std::abs(P.leftCols<3>().determinant()) < 1e-12) fail("camera.P", "singular 3x3 block");
    spec.full = P;
  } else {
    check_keys(j, {"s", "tx", "ty"}, "camera");
    spec.weak = weak_camera(j, "camera");
  }
  return spec;
}

json camera_to_json(const WeakPerspectiveCamera& cam) {
  return {{"s", cam.s}, {"tx", cam.tx}, {"ty", cam.ty}};
}

Keypoints2D keypoints_from_json(const json& j, const KinematicTree& tree) {
  if (!j.is_array()) fail("keypoints", "expected an array of {name, u, v, confidence}");
  Keypoints2D k;
  k.points.assign(std::size_t(tree.num_joints()), Vec2::Zero());
  k.confidence.assign(std::size_t(tree.num_joints()), 0.0);
  std::set<std::string> seen;
  for (std::size_t i = 0; i < j.size(); ++i) {
    const std::string field = "keypoints[" + std::to_string(i) + "]";
    check_keys(j[i], {"name", "u", "v", "confidence"}, field);
    const json& name = member(j[i], "name", field);
    if (!name.is_string()) fail(field + ".name", "expected a string");
    const std::string n = name.get<std::string>();
    const int idx = tree.joint_index(n);
    if (idx < 0) fail(field + ".name", "unknown joint '" + n + "'");
    if (!seen.insert(n).second) fail(field + ".name", "duplicate joint '" + n + "'");
    k.points[std::size_t(idx)] = Vec2(get_number(member(j[i], "u", field), field + ".u"),
                                      get_number(member(j[i], "v", field), field + ".v"));
    double c = 1.0;
    if (j[i].contains("confidence")) c = get_number(j[i]["confidence"], field + ".confidence");
    if (c < 0.0 || c > 1.0) fail(field + ".confidence", "must be in [0, 1]");
    k.confidence[std::size_t(idx)] = c;
  }
  return k;
}

json keypoints_to_json(const Keypoints2D& k, const KinematicTree& tree) {
  if (k.points.size() != std::size_t(tree.num_joints())) {
    throw std::invalid_argument("keypoints_to_json: one point per joint expected");
  }
  json out = json::array();
  for (std::size_t i = 0; i < k.points.size(); ++i) {
    out.push_back({{"name", tree.joint_names[i]},
                   {"u", k.points[i].x()},
                   {"v", k.points[i].y()},
                   {"confidence", k.confidence.empty() ? 1.0 : k.confidence[i]}});
  }
  return out;
}

std::array<uint8_t, 3> palette_color(int index) {
  if (index <= 0) return {0, 0, 0};
  static constexpr std::array<std::array<uint8_t, 3>, 20> kColors = {{
      {230, 25, 75},  {60, 180, 75},   {255, 225, 25}, {0, 130, 200},  {245, 130, 48},
      {145, 30, 180}, {70, 240, 240},  {240, 50, 230}, {210, 245, 60}, {250, 190, 212},
      {0, 128, 128},  {220, 190, 255}, {170, 110, 40}, {255, 250, 200}, {128, 0, 0},
      {170, 255, 195}, {128, 128, 0},  {255, 215, 180}, {0, 0, 128},   {128, 128, 128},
  }};
  return kColors[std::size_t(index - 1) % kColors.size()];
}

json palette_json(const Grouping& grouping) {
  json classes = json::array();
  classes.push_back({{"index", 0}, {"name", "background"}, {"color", {0, 0, 0}}});
  for (int k = 0; k < grouping.num_classes(); ++k) {
    const auto c = palette_color(k + 1);
    classes.push_back(
        {{"index", k + 1}, {"name", grouping.class_names[std::size_t(k)]}, {"color", c}});
  }
  return {{"grouping", grouping.name}, {"classes", classes}};
}

void check_palette(const json& palette, const Grouping& grouping) {
  const json& classes = member(palette, "classes", "palette");
  if (!classes.is_array() || classes.size() != std::size_t(grouping.num_classes()) + 1) {
    fail("palette.classes", "expected " + std::to_string(grouping.num_classes() + 1) +
                                " entries for grouping " + grouping.name);
  }
  for (std::size_t i = 1; i < classes.size(); ++i) {
    const std::string field = "palette.classes[" + std::to_string(i) + "]";
    const json& name = member(classes[i], "name", field);
    if (!name.is_string() || name.get<std::string>() != grouping.class_names[i - 1]) {
      fail(field + ".name", "expected '" + grouping.class_names[i - 1] + "'");
    }
  }
}

void write_label_png(const LabelMap& labels, int num_classes, const std::string& path) {
  if (num_classes < 1 || num_classes > 255) {
    throw std::invalid_argument("write_label_png: class count must be in [1, 255]");
  }
  for (uint8_t v : labels.data) {
    if (v > num_classes) throw std::invalid_argument("write_label_png: label out of range");
  }
  write_png(labels, path, true, num_classes + 1);
}

void write_binary_png(const BinaryMap& map, const std::string& path) {
  BinaryMap scaled = map;
  for (uint8_t& v : scaled.data) v = v ? 255 : 0;
  write_png(scaled, path, false, 0);
}

LabelMap read_label_png(const std::string& path) {
  std::unique_ptr<std::FILE, FileCloser> file(std::fopen(path.c_str(), "rb"));
  if (!file) throw InputError(path + ": cannot open file");
  png_byte sig[8];
  if (std::fread(sig, 1, 8, file.get()) != 8 || png_sig_cmp(sig, 0, 8) != 0) {
    throw InputError(path + ": not a PNG file");
  }
  PngReader r;
  r.png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (r.png == nullptr) throw std::runtime_error("png_create_read_struct failed");
  r.info = png_create_info_struct(r.png);
  if (r.info == nullptr) throw std::runtime_error("png_create_info_struct failed");
  if (setjmp(png_jmpbuf(r.png))) throw InputError(path + ": corrupt PNG");
  png_init_io(r.png, file.get());
  png_set_sig_bytes(r.png, 8);
  png_read_info(r.png, r.info);
  const int color = png_get_color_type(r.png, r.info);
  const int depth = png_get_bit_depth(r.png, r.info);
  if (depth != 8 || (color != PNG_COLOR_TYPE_PALETTE && color != PNG_COLOR_TYPE_GRAY)) {
    throw InputError(path + ": expected an 8-bit indexed or grayscale PNG");
  }
  if (png_get_interlace_type(r.png, r.info) != PNG_INTERLACE_NONE) {
    throw InputError(path + ": interlaced PNGs are not supported");
  }
  LabelMap map(int(png_get_image_width(r.png, r.info)), int(png_get_image_height(r.png, r.info)));
  for (int y = 0; y < map.height; ++y) {
    png_read_row(r.png, map.data.data() + std::size_t(y) * std::size_t(map.width), nullptr);
  }
  png_read_end(r.png, nullptr);
  return map;
}

void apply_config_json(const json& j, RunConfig* config) {
  static const std::set<std::string> kKeys = {
      "max_iters", "passes",      "learning_rate", "pass_decay",    "weights",       "tolerance",
      "patience",  "subdivision", "width",         "height",        "grouping",
      "lambda_z",  "enable_z",    "push_occluder", "freeze_camera", "freeze_shape",
      "freeze_root", "register"};
  check_keys(j, kKeys, "");
  FitConfig& f = config->fit;
  auto integer = [&](const char* key, int* out) {
    if (!j.contains(key)) return;
    if (!j[key].is_number_integer()) fail(key, "expected an integer");
    *out = j[key].get<int>();
  };
  auto number = [](const json& obj, const char* key, double* out, const std::string& field) {
    if (obj.contains(key)) *out = get_number(obj[key], field);
  };
  auto boolean = [&](const char* key, bool* out) {
    if (!j.contains(key)) return;
    if (!j[key].is_boolean()) fail(key, "expected true or false");
    *out = j[key].get<bool>();
  };
  integer("max_iters", &f.max_iters);
  integer("passes", &f.passes);
  integer("patience", &f.patience);
  integer("subdivision", &f.subdivision);
  integer("width", &f.width);
  integer("height", &f.height);
  number(j, "learning_rate", &f.learning_rate, "learning_rate");
  number(j, "pass_decay", &f.pass_decay, "pass_decay");
  number(j, "tolerance", &f.tolerance, "tolerance");
  number(j, "lambda_z", &f.lambda_z, "lambda_z");
  boolean("enable_z", &f.enable_z);
  boolean("push_occluder", &f.push_occluder);
  boolean("freeze_camera", &f.freeze_camera);
  boolean("freeze_shape", &f.freeze_shape);
  boolean("freeze_root", &f.freeze_root);
  if (j.contains("grouping")) {
    if (!j["grouping"].is_string()) fail("grouping", "expected a string");
    f.grouping = j["grouping"].get<std::string>();
  }
  if (j.contains("weights")) {
    const json& w = j["weights"];
    check_keys(w, {"w3d", "proj", "seg", "l", "t"}, "weights");
    number(w, "w3d", &f.weights.w3d, "weights.w3d");
    number(w, "proj", &f.weights.proj, "weights.proj");
    number(w, "seg", &f.weights.seg, "weights.seg");
    number(w, "l", &f.weights.l, "weights.l");
    number(w, "t", &f.weights.t, "weights.t");
  }
  if (j.contains("register")) {
    const json& r = j["register"];
    check_keys(r, {"max_iters", "w_icp", "w_pen", "w_smooth", "step"}, "register");
    if (r.contains("max_iters")) {
      if (!r["max_iters"].is_number_integer()) fail("register.max_iters", "expected an integer");
      config->reg.max_iters = r["max_iters"].get<int>();
    }
    number(r, "w_icp", &config->reg.w_icp, "register.w_icp");
    number(r, "w_pen", &config->reg.w_pen, "register.w_pen");
    number(r, "w_smooth", &config->reg.w_smooth, "register.w_smooth");
    number(r, "step", &config->reg.step, "register.step");
  }
  try {
    validate_fit_config(f);
  } catch (const std::invalid_argument& e) {
    throw InputError(std::string("config: ") + e.what());
  }
}

json config_to_json(const RunConfig& c) {
  const FitConfig& f = c.fit;
  return {{"max_iters", f.max_iters},
          {"passes", f.passes},
          {"learning_rate", f.learning_rate},
          {"pass_decay", f.pass_decay},
          {"weights",
           {{"w3d", f.weights.w3d},
            {"proj", f.weights.proj},
            {"seg", f.weights.seg},
            {"l", f.weights.l},
            {"t", f.weights.t}}},
          {"tolerance", f.tolerance},
          {"patience", f.patience},
          {"subdivision", f.subdivision},
          {"width", f.width},
          {"height", f.height},
          {"grouping", f.grouping},
          {"lambda_z", f.lambda_z},
          {"enable_z", f.enable_z},
          {"push_occluder", f.push_occluder},
          {"freeze_camera", f.freeze_camera},
          {"freeze_shape", f.freeze_shape},
          {"freeze_root", f.freeze_root},
          {"register",
           {{"max_iters", c.reg.max_iters},
            {"w_icp", c.reg.w_icp},
            {"w_pen", c.reg.w_pen},
            {"w_smooth", c.reg.w_smooth},
            {"step", c.reg.step}}}};
}

void write_trace_csv(const std::vector<TraceRow>& trace, std::ostream& out) {
  out << std::setprecision(12) << "iter,total,seg,proj,l,t,best\n";
  for (const TraceRow& r : trace) {
    out << r.iter << ',' << r.terms.total << ',' << r.terms.seg << ',' << r.terms.proj << ','
        << r.terms.l << ',' << r.terms.t << ',' << r.best << '\n';
  }
}

void write_trace_csv(const std::vector<RegisterTraceRow>& trace, std::ostream& out) {
  out << std::setprecision(12) << "iter,total,icp,pen,smooth,best\n";
  for (const RegisterTraceRow& r : trace) {
    out << r.iter << ',' << r.total << ',' << r.icp << ',' << r.pen << ',' << r.smooth << ','
        << r.best << '\n';
  }
}

}  // namespace ellipbody
