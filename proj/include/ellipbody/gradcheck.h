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

#ifndef ELLIPBODY_GRADCHECK_H_
#define ELLIPBODY_GRADCHECK_H_

#include <cstdint>
#include <string>
#include <vector>

namespace ellipbody {

struct GradCheckOptions {
  int points = 20;          // random evaluation points per smooth term
  double tolerance = 1e-4;  // relative, smooth terms
  double step = 1e-6;       // central-difference step
  uint64_t seed = 0;
  int subdivision = 1;
};

struct GradCheckRow {
  std::string name;
  int points = 0;
  double max_error = 0.0;  // relative for smooth terms, absolute for fixtures
  double tolerance = 0.0;
  bool pass = false;
};

// Central differences against the analytic gradients of the smooth terms
// (3D joints, 2D projection through the body model and camera, shape priors,
// penetration, fixed-correspondence ICP, and the body Jacobian), followed by
// the surrogate-gradient fixtures: a two-pixel row sweep (0.5), a fully
// hidden part (0), and the unit occlusion case (log 2).
std::vector<GradCheckRow> run_gradcheck(const GradCheckOptions& options = {});

// max |a - b|_inf / max(|a|_inf, |b|_inf, 1e-8)
double relative_error(const std::vector<double>& a, const std::vector<double>& b);

}  // namespace ellipbody

#endif  // ELLIPBODY_GRADCHECK_H_
