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

#ifndef ELLIPBODY_NEAREST_H_
#define ELLIPBODY_NEAREST_H_

#include <cstdint>
#include <span>
#include <vector>

#include "ellipbody/geometry.h"

namespace ellipbody {

// Static 3-d tree for nearest-neighbour queries. Ties go to the lowest point
// index so results match a linear scan.
class PointIndex {
 public:
  explicit PointIndex(std::span<const Vec3> points);

  // Index of the nearest point and its squared distance. The set must be
  // nonempty.
  int32_t nearest(const Vec3& query, double* squared_distance = nullptr) const;
  std::size_t size() const { return points_.size(); }

 private:
  struct Node {
    int32_t point = -1;
    int32_t left = -1;
    int32_t right = -1;
    int axis = 0;
  };

  int32_t build(std::vector<int32_t>& ids, std::size_t begin, std::size_t end, int depth);
  void search(int32_t node, const Vec3& query, int32_t* best, double* best_d2) const;

  std::vector<Vec3> points_;
  std::vector<Node> nodes_;
  int32_t root_ = -1;
};

}  // namespace ellipbody

#endif  // ELLIPBODY_NEAREST_H_
