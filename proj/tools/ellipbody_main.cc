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

// Command-line entry points: render, fit, gradcheck, bench, register.
//
// Exit codes: 0 success, 1 a check failed (or the fit diverged), 2 bad input.

#include <algorithm>
#include <cctype>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <random>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "ellipbody/body.h"
#include "ellipbody/gradcheck.h"
#include "ellipbody/io.h"
#include "ellipbody/losses.h"
#include "ellipbody/optim.h"
#include "ellipbody/partdr.h"

namespace ellipbody {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

constexpr int kOk = 0;
constexpr int kCheckFailed = 1;
constexpr int kInputError = 2;

// Options shared by every subcommand. Flags given on the command line win
// over --config.
struct CommonOptions {
  std::string size = "256x256";
  int subdiv = 1;
  double lambda_z = 1.0;
  bool freeze_camera = true;
  std::string grouping = "20";
  uint64_t seed = 0;
  std::string config;
  std::string out;

  CLI::Option* size_opt = nullptr;
  CLI::Option* subdiv_opt = nullptr;
  CLI::Option* lambda_z_opt = nullptr;
  CLI::Option* freeze_camera_opt = nullptr;
  CLI::Option* grouping_opt = nullptr;
};

void add_common(CLI::App* cmd, CommonOptions* o, bool needs_out) {
  o->size_opt = cmd->add_option("--size", o->size, "Image size WxH")->capture_default_str();
  o->subdiv_opt = cmd->add_option("--subdiv", o->subdiv, "Sphere subdivision level")
                      ->check(CLI::Range(0, 6))
                      ->capture_default_str();
  o->lambda_z_opt =
      cmd->add_option("--lambda-z", o->lambda_z, "Occlusion gradient weight")->capture_default_str();
  o->freeze_camera_opt = cmd->add_flag("--freeze-camera,!--no-freeze-camera", o->freeze_camera,
                                       "Keep the camera fixed while fitting (default on)");
  o->grouping_opt = cmd->add_option("--grouping", o->grouping, "Part grouping")
                        ->check(CLI::IsMember({"20", "14"}))
                        ->capture_default_str();
  cmd->add_option("--seed", o->seed, "Random seed")->capture_default_str();
  cmd->add_option("--config", o->config, "JSON file overriding fit/register settings");
  auto* out = cmd->add_option("--out", o->out, "Output directory");
  if (needs_out) out->required();
}

void parse_size(const std::string& text, int* width, int* height) {
  int w = 0;
  int h = 0;
  char x = 0;
  std::istringstream in(text);
  if (!(in >> w >> x >> h) || (x != 'x' && x != 'X') || !in.eof() || w <= 0 || h <= 0 ||
      w > 8192 || h > 8192) {
    throw InputError("--size: expected WxH with positive integers, got '" + text + "'");
  }
  *width = w;
  *height = h;
}

// Applies --config and then the explicit flags.
RunConfig resolve_config(const CommonOptions& o) {
  RunConfig c;
  if (!o.config.empty()) apply_config_json(read_json_file(o.config), &c);
  FitConfig& f = c.fit;
  const bool from_file = !o.config.empty();
  if (o.size_opt->count() > 0 || !from_file) parse_size(o.size, &f.width, &f.height);
  if (o.subdiv_opt->count() > 0 || !from_file) f.subdivision = o.subdiv;
  if (o.lambda_z_opt->count() > 0) f.lambda_z = o.lambda_z;
  if (o.freeze_camera_opt->count() > 0) f.freeze_camera = o.freeze_camera;
  if (o.grouping_opt->count() > 0 || !from_file) f.grouping = o.grouping;
  try {
    validate_fit_config(f);
  } catch (const std::invalid_argument& e) {
    throw InputError(e.what());
  }
  return c;
}

fs::path prepare_out(const std::string& out) {
  std::error_code ec;
  fs::create_directories(out, ec);
  if (ec || !fs::is_directory(out)) throw InputError("--out: cannot create directory " + out);
  return fs::path(out);
}

void require_file(const std::string& path, const char* flag) {
  if (!fs::is_regular_file(path)) throw InputError(std::string(flag) + ": no such file " + path);
}

std::string safe_name(std::string name) {
  for (char& c : name) {
    if (!std::isalnum(static_cast<unsigned char>(c))) c = '_';
  }
  return name;
}

EllipBodyParams load_params(const std::string& path, const BodyModel& model) {
  if (path.empty()) return mean_params(model);
  require_file(path, "--params");
  return params_from_json(read_json_file(path), model);
}

// ---------------------------------------------------------------- render

struct RenderOptions {
  std::string params;
  std::string camera;
};

int cmd_render(const CommonOptions& o, const RenderOptions& r) {
  const BodyModel& model = default_body_model();
  const RunConfig c = resolve_config(o);
  EllipBodyParams params = load_params(r.params, model);
  validate_params(model, params);
  CameraSpec camera;
  if (!r.camera.empty()) {
    require_file(r.camera, "--camera");
    camera = camera_from_json(read_json_file(r.camera));
    if (camera.weak) params.cam = *camera.weak;
  }
  const Grouping& grouping = model.grouping(c.fit.grouping);
  const PartSet set = build(model, params, c.fit.subdivision, c.fit.grouping);
  const RenderResult result = camera.full
                                  ? render(set, *camera.full, c.fit.width, c.fit.height)
                                  : render(set, params.cam, c.fit.width, c.fit.height);

  const fs::path out = prepare_out(o.out);
  write_label_png(result.raster.labels, grouping.num_classes(), (out / "labels.png").string());
  write_json_file(palette_json(grouping), (out / "palette.json").string());
  const fs::path parts = out / "parts";
  fs::create_directories(parts);
  const std::vector<BinaryMap> maps = result.raster.part_maps();
  for (std::size_t k = 0; k < maps.size(); ++k) {
    char prefix[16];
    std::snprintf(prefix, sizeof(prefix), "%02zu_", k + 1);
    write_binary_png(maps[k], (parts / (prefix + safe_name(grouping.class_names[k]) + ".png")).string());
  }
  Keypoints2D joints;
  joints.points = result.joints2d;
  joints.confidence.assign(joints.points.size(), 1.0);
  write_json_file(keypoints_to_json(joints, model.tree), (out / "joints2d.json").string());
  write_json_file(params_to_json(params), (out / "params.json").string());
  write_obj(merge_parts(set), (out / "body.obj").string());
  write_obj(outer_surface(set), (out / "surface.obj").string());

  const long covered = std::count(result.raster.alpha.data.begin(),
                                  result.raster.alpha.data.end(), uint8_t{1});
  std::printf("rendered %dx%d, %d classes, %ld foreground pixels -> %s\n", c.fit.width,
              c.fit.height, grouping.num_classes(), covered, out.string().c_str());
  return kOk;
}

// ------------------------------------------------------------------- fit

struct FitOptions {
  std::string labels;
  std::string palette;
  std::string keypoints;
  std::string init;
  double perturb = 0.0;
};

int cmd_fit(const CommonOptions& o, const FitOptions& f) {
  const BodyModel& model = default_body_model();
  const RunConfig c = resolve_config(o);
  const Grouping& grouping = model.grouping(c.fit.grouping);

  require_file(f.labels, "--labels");
  FitTargets targets;
  targets.part_labels = read_label_png(f.labels);
  if (targets.part_labels.width != c.fit.width || targets.part_labels.height != c.fit.height) {
    throw InputError("--labels: image is " + std::to_string(targets.part_labels.width) + "x" +
                     std::to_string(targets.part_labels.height) + " but the fit runs at " +
                     std::to_string(c.fit.width) + "x" + std::to_string(c.fit.height));
  }
  for (uint8_t v : targets.part_labels.data) {
    if (v > grouping.num_classes()) {
      throw InputError("--labels: label " + std::to_string(v) + " exceeds the " +
                       std::to_string(grouping.num_classes()) + " classes of grouping " +
                       grouping.name);
    }
  }
  if (!f.palette.empty()) {
    require_file(f.palette, "--palette");
    check_palette(read_json_file(f.palette), grouping);
  }
  if (!f.keypoints.empty()) {
    require_file(f.keypoints, "--keypoints");
    targets.keypoints = keypoints_from_json(read_json_file(f.keypoints), model.tree);
  } else {
    targets.keypoints.points.assign(std::size_t(model.tree.num_joints()), Vec2::Zero());
    targets.keypoints.confidence.assign(std::size_t(model.tree.num_joints()), 0.0);
  }

  EllipBodyParams init = load_params(f.init, model);
  if (f.perturb > 0.0) {
    std::mt19937_64 rng(o.seed);
    std::uniform_real_distribution<double> u(-f.perturb, f.perturb);
    for (Vec3& r : init.r) {
      for (int k = 0; k < 3; ++k) r[k] += u(rng);
    }
  }
  validate_params(model, init);

  const fs::path out = prepare_out(o.out);
  const FitContext ctx = FitContext::make(model, c.fit.subdivision, grouping, c.fit.width,
                                          c.fit.height);
  const ObjectiveResult before = fit_objective(init, targets, c.fit.weights, ctx);
  write_label_png(before.render.raster.labels, grouping.num_classes(),
                  (out / "labels_before.png").string());

  const auto start = std::chrono::steady_clock::now();
  FitResult result;
  try {
    result = fit(init, targets, c.fit, model);
  } catch (const FitDiverged& e) {
    std::ofstream trace(out / "trace.csv");
    write_trace_csv(e.trace(), trace);
    std::fprintf(stderr, "fit diverged: %s (trace with %zu rows in %s)\n", e.what(),
                 e.trace().size(), (out / "trace.csv").string().c_str());
    return kCheckFailed;
  }
  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

  const ObjectiveResult after = fit_objective(result.params, targets, c.fit.weights, ctx);
  write_label_png(after.render.raster.labels, grouping.num_classes(),
                  (out / "labels_after.png").string());
  write_json_file(params_to_json(result.params), (out / "fitted_params.json").string());
  {
    std::ofstream trace(out / "trace.csv");
    write_trace_csv(result.trace, trace);
  }
  auto terms = [](const LossTerms& t) {
    return json{{"total", t.total}, {"seg", t.seg}, {"proj", t.proj}, {"l", t.l}, {"t", t.t}};
  };
  write_json_file({{"initial", terms(before.terms)},
                   {"final", terms(after.terms)},
                   {"iterations", result.iterations},
                   {"label_accuracy",
                    label_accuracy(after.render.raster.labels, targets.part_labels)},
                   {"seconds", secs},
                   {"config", config_to_json(c)}},
                  (out / "summary.json").string());
  std::printf("fit: %d iterations, %.2f s; total %.6g -> %.6g; Lseg %.0f -> %.0f; Lproj %.6g -> %.6g\n",
              result.iterations, secs, before.terms.total, after.terms.total, before.terms.seg,
              after.terms.seg, before.terms.proj, after.terms.proj);
  return kOk;
}

// ------------------------------------------------------------- gradcheck

int cmd_gradcheck(const CommonOptions& o, int points) {
  const RunConfig c = resolve_config(o);
  GradCheckOptions opts;
  opts.points = points;
  opts.seed = o.seed;
  opts.subdivision = c.fit.subdivision;
  const std::vector<GradCheckRow> rows = run_gradcheck(opts);
  bool ok = true;
  std::printf("%-18s %6s %12s %12s  %s\n", "check", "points", "max_error", "tolerance", "result");
  for (const GradCheckRow& r : rows) {
    std::printf("%-18s %6d %12.3e %12.3e  %s\n", r.name.c_str(), r.points, r.max_error,
                r.tolerance, r.pass ? "PASS" : "FAIL");
    ok = ok && r.pass;
  }
  if (!o.out.empty()) {
    json report = json::array();
    for (const GradCheckRow& r : rows) {
      report.push_back({{"name", r.name},
                        {"points", r.points},
                        {"max_error", r.max_error},
                        {"tolerance", r.tolerance},
                        {"pass", r.pass}});
    }
    write_json_file(report, (prepare_out(o.out) / "gradcheck.json").string());
  }
  return ok ? kOk : kCheckFailed;
}

// ----------------------------------------------------------------- bench

struct BenchOptions {
  std::vector<int> levels = {0, 1, 2, 3};
  int iters = 5;
};

int cmd_bench(const CommonOptions& o, const BenchOptions& b) {
  const BodyModel& model = default_body_model();
  const RunConfig c = resolve_config(o);
  if (b.iters < 1) throw InputError("--iters: must be at least 1");
  const Grouping& grouping = model.grouping(c.fit.grouping);

  // Target: mean shape in a seeded random pose; start: the mean pose.
  EllipBodyParams truth = mean_params(model);
  std::mt19937_64 rng(o.seed);
  std::uniform_real_distribution<double> u(-0.3, 0.3);
  for (Vec3& r : truth.r) {
    for (int k = 0; k < 3; ++k) r[k] += u(rng);
  }
  const EllipBodyParams start = mean_params(model);

  std::ostringstream csv;
  csv << "level,faces_per_part,total_faces,iters,mean_ms,min_ms\n";
  bool counts_ok = true;
  for (int level : b.levels) {
    FitConfig cfg = c.fit;
    cfg.subdivision = level;
    const FitTargets targets = synthesize_targets(truth, model, cfg);
    const FitContext ctx = FitContext::make(model, level, grouping, cfg.width, cfg.height);
    const PartSet set = build(model, start, level, cfg.grouping);
    const std::size_t expected = std::size_t(20) << (2 * level);
    std::size_t total = 0;
    for (const TriMesh& m : set.parts) {
      counts_ok = counts_ok && m.num_faces() == expected;
      total += m.num_faces();
    }
    double sum = 0.0;
    double best = 1e300;
    fit_objective(start, targets, cfg.weights, ctx);  // warm-up
    for (int i = 0; i < b.iters; ++i) {
      const auto t0 = std::chrono::steady_clock::now();
      fit_objective(start, targets, cfg.weights, ctx);
      const double ms =
          std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
      sum += ms;
      best = std::min(best, ms);
    }
    csv << level << ',' << expected << ',' << total << ',' << b.iters << ',' << sum / b.iters
        << ',' << best << '\n';
  }
  std::fputs(csv.str().c_str(), stdout);
  if (!o.out.empty()) write_text_file(csv.str(), (prepare_out(o.out) / "bench.csv").string());
  if (!counts_ok) {
    std::fprintf(stderr, "bench: face counts do not follow 20 * 4^level per part\n");
    return kCheckFailed;
  }
  return kOk;
}

// -------------------------------------------------------------- register

struct RegisterOptions {
  std::string target;
  std::string params;
};

int cmd_register(const CommonOptions& o, const RegisterOptions& r) {
  const BodyModel& model = default_body_model();
  const RunConfig c = resolve_config(o);
  require_file(r.target, "--target");
  const TriMesh target = read_obj(r.target);
  const EllipBodyParams params = load_params(r.params, model);
  const auto start = std::chrono::steady_clock::now();
  const RegisterResult result = register_mesh(target, model, params, c.fit.subdivision, c.reg);
  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

  const fs::path out = prepare_out(o.out);
  write_obj(result.mesh, (out / "registered.obj").string());
  {
    std::ofstream trace(out / "trace.csv");
    write_trace_csv(result.trace, trace);
  }
  double moved = 0.0;
  for (std::size_t i = 0; i < target.vertices.size(); ++i) {
    moved = std::max(moved, (result.mesh.vertices[i] - target.vertices[i]).norm());
  }
  const RegisterTraceRow& first = result.trace.front();
  const RegisterTraceRow& last = result.final_terms;
  write_json_file({{"initial", {{"icp", first.icp}, {"pen", first.pen}, {"total", first.total}}},
                   {"final",
                    {{"icp", last.icp},
                     {"pen", last.pen},
                     {"smooth", last.smooth},
                     {"total", last.total}}},
                   {"iterations", result.trace.back().iter},
                   {"max_displacement", moved},
                   {"seconds", secs}},
                  (out / "summary.json").string());
  std::printf("register: %zu vertices, %.2f s; L_ICP %.4e -> %.4e; L_PEN %.4e -> %.4e; "
              "max displacement %.3e\n",
              target.vertices.size(), secs, first.icp, last.icp, first.pen, last.pen, moved);
  return kOk;
}

int run(int argc, char** argv) {
  CLI::App app{"EllipBody model and part-level differentiable renderer"};
  app.require_subcommand(1);

  CommonOptions render_common, fit_common, grad_common, bench_common, reg_common;

  RenderOptions render_opts;
  CLI::App* render_cmd = app.add_subcommand("render", "Render label maps, joints and meshes");
  add_common(render_cmd, &render_common, true);
  render_cmd->add_option("--params", render_opts.params, "Parameter JSON (default: mean body)");
  render_cmd->add_option("--camera", render_opts.camera,
                         "Camera JSON: {s, tx, ty} or {P: [12 numbers]}");

  FitOptions fit_opts;
  CLI::App* fit_cmd = app.add_subcommand("fit", "Fit pose and shape to label maps and keypoints");
  add_common(fit_cmd, &fit_common, true);
  fit_cmd->add_option("--labels", fit_opts.labels, "Target label PNG")->required();
  fit_cmd->add_option("--palette", fit_opts.palette, "Palette JSON to check against --grouping");
  fit_cmd->add_option("--keypoints", fit_opts.keypoints, "Keypoint JSON [{name, u, v, confidence}]");
  fit_cmd->add_option("--init", fit_opts.init, "Initial parameter JSON (default: mean body)");
  fit_cmd->add_option("--perturb", fit_opts.perturb,
                      "Add seeded uniform noise of this amplitude to the initial rotations")
      ->check(CLI::NonNegativeNumber);

  int grad_points = 20;
  CLI::App* grad_cmd = app.add_subcommand("gradcheck", "Finite-difference gradient checks");
  add_common(grad_cmd, &grad_common, false);
  grad_cmd->add_option("--points", grad_points, "Random points per smooth term")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();

  BenchOptions bench_opts;
  CLI::App* bench_cmd = app.add_subcommand("bench", "Time one objective evaluation per level");
  add_common(bench_cmd, &bench_common, false);
  bench_cmd->add_option("--levels", bench_opts.levels, "Subdivision levels")
      ->delimiter(',')
      ->check(CLI::Range(0, 3))
      ->capture_default_str();
  bench_cmd->add_option("--iters", bench_opts.iters, "Timed evaluations per level")
      ->capture_default_str();

  RegisterOptions reg_opts;
  CLI::App* reg_cmd = app.add_subcommand("register", "Register a mesh onto a fitted body");
  add_common(reg_cmd, &reg_common, true);
  reg_cmd->add_option("--target", reg_opts.target, "Target OBJ")->required();
  reg_cmd->add_option("--params", reg_opts.params, "Fitted parameter JSON (default: mean body)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kOk : kInputError;
  }

  try {
    if (render_cmd->parsed()) return cmd_render(render_common, render_opts);
    if (fit_cmd->parsed()) return cmd_fit(fit_common, fit_opts);
    if (grad_cmd->parsed()) return cmd_gradcheck(grad_common, grad_points);
    if (bench_cmd->parsed()) return cmd_bench(bench_common, bench_opts);
    if (reg_cmd->parsed()) return cmd_register(reg_common, reg_opts);
  } catch (const InputError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kInputError;
  } catch (const std::invalid_argument& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kInputError;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kCheckFailed;
  }
  return kInputError;
}

}  // namespace
}  // namespace ellipbody

int main(int argc, char** argv) { return ellipbody::run(argc, argv); }
