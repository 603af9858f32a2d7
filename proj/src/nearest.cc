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

#include "ellipbody/nearest.h"

#include <algorithm>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace ellipbody {

PointIndex::PointIndex(std::span<const Vec3> points) : points_(points.begin(), points.end()) {
  std::vector<int32_t> ids(points_.size());
  std::iota(ids.begin(), ids.end(), 0);
  nodes_.reserve(points_.size());
  root_ = build(ids, 0, ids.size(), 0);
}

int32_t PointIndex::build(std::vector<int32_t>& ids, std::size_t begin, std::size_t end,
                          int depth) {
  if (begin >= end) return -1;
  const int axis = depth % 3;
  const std::size_t mid = begin + (end - begin) / 2;
  std::nth_element(ids.begin() + begin, ids.begin() + mid, ids.begin() + end,
                   [&](int32_t a, int32_t b) {
                     const double pa = points_[a][axis];
                     const double pb = points_[b][axis];
                     return pa < pb || (pa == pb && a < b);
                   });
  const auto node = static_cast<int32_t>(nodes_.size());
  nodes_.push_back({ids[mid], -1, -1, axis});
  const int32_t left = build(ids, begin, mid, depth + 1);
  const int32_t right = build(ids, mid + 1, end, depth + 1);
  nodes_[node].left = left;
  nodes_[node].right = right;
  return node;
}

void PointIndex::search(int32_t node, const Vec3& query, int32_t* best, double* best_d2) const {
  if (node < 0) return;
  const Node& n = nodes_[node];
  const Vec3& p = points_[n.point];
  const double d2 = (p - query).squaredNorm();
  if (d2 < *best_d2 || (d2 == *best_d2 && n.point < *best)) {
    *best_d2 = d2;
    *best = n.point;
  }
  const double diff = query[n.axis] - p[n.axis];
  const int32_t near = diff < 0.0 ? n.left : n.right;
  const int32_t far = diff < 0.0 ? n.right : n.left;
  search(near, query, best, best_d2);
  // <= so equal-distance points with lower indices on the far side are seen.
  if (diff * diff <= *best_d2) search(far, query, best, best_d2);
}

int32_t PointIndex::nearest(const Vec3& query, double* squared_distance) const {
  if (root_ < 0) throw std::invalid_argument("nearest: empty point set");
  int32_t best = std::numeric_limits<int32_t>::max();
  double best_d2 = std::numeric_limits<double>::infinity();
  search(root_, query, &best, &best_d2);
  if (squared_distance != nullptr) *squared_distance = best_d2;
  return best;
}

}  // namespace ellipbody
