// Copyright 2026 The chartrole Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "chartrole/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace chartrole {

std::optional<BoundingBox> clamp_bbox(const BoundingBox& raw, ImageDims dims) {
  const double left = std::max(raw.x, 0.0);
  const double top = std::max(raw.y, 0.0);
  const double right = std::min(raw.right(), static_cast<double>(dims.width));
  const double bottom = std::min(raw.bottom(), static_cast<double>(dims.height));
  if (!(right > left) || !(bottom > top)) return std::nullopt;
  return BoundingBox{left, top, right - left, bottom - top};
}

RotationTransform RotationTransform::make(double theta_deg, ImageDims src) {
  RotationTransform t;
  t.theta_deg = theta_deg;
  const double rad = theta_deg * std::numbers::pi / 180.0;
  t.cos_t = std::cos(rad);
  t.sin_t = std::sin(rad);
  t.src_cx = src.width / 2.0;
  t.src_cy = src.height / 2.0;
  const double ac = std::abs(t.cos_t);
  const double as = std::abs(t.sin_t);
  // The epsilon keeps exact multiples of 90 degrees from growing by a pixel.
  t.out_width = static_cast<int>(std::ceil(src.width * ac + src.height * as - 1e-9));
  t.out_height = static_cast<int>(std::ceil(src.width * as + src.height * ac - 1e-9));
  t.out_cx = t.out_width / 2.0;
  t.out_cy = t.out_height / 2.0;
  return t;
}

BoundingBox RotationTransform::map_box(const BoundingBox& box) const {
  const double xs[] = {box.x, box.right(), box.x, box.right()};
  const double ys[] = {box.y, box.y, box.bottom(), box.bottom()};
  double min_u = INFINITY, max_u = -INFINITY, min_v = INFINITY, max_v = -INFINITY;
  for (int i = 0; i < 4; ++i) {
    double u = 0, v = 0;
    forward(xs[i], ys[i], u, v);
    min_u = std::min(min_u, u);
    max_u = std::max(max_u, u);
    min_v = std::min(min_v, v);
    max_v = std::max(max_v, v);
  }
  return {min_u, min_v, max_u - min_u, max_v - min_v};
}

}  // namespace chartrole
