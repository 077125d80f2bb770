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

#pragma once

#include <optional>

namespace chartrole {

/// Axis-aligned text box in pixels, origin at the image's top-left corner.
struct BoundingBox {
  double x = 0;
  double y = 0;
  double width = 0;
  double height = 0;

  double right() const { return x + width; }
  double bottom() const { return y + height; }
  double center_x() const { return x + width / 2; }
  double center_y() const { return y + height / 2; }

  /// True when the pixel centred at (px + 0.5, py + 0.5) falls inside the box.
  bool covers_pixel(int px, int py) const {
    const double cx = px + 0.5;
    const double cy = py + 0.5;
    return cx >= x && cx < right() && cy >= y && cy < bottom();
  }

  bool operator==(const BoundingBox&) const = default;
};

struct ImageDims {
  int width = 0;
  int height = 0;
};

/// Rotation of an image about its centre onto an expanded canvas that holds
/// the whole rotated original. Positive angles turn the content
/// counter-clockwise as displayed (y axis pointing down).
struct RotationTransform {
  double theta_deg = 0;
  double cos_t = 1;
  double sin_t = 0;
  double src_cx = 0;
  double src_cy = 0;
  int out_width = 0;
  int out_height = 0;
  double out_cx = 0;
  double out_cy = 0;

  static RotationTransform make(double theta_deg, ImageDims src);

  /// Source pixel coordinates -> rotated canvas coordinates.
  void forward(double x, double y, double& u, double& v) const {
    const double dx = x - src_cx;
    const double dy = y - src_cy;
    u = out_cx + dx * cos_t + dy * sin_t;
    v = out_cy - dx * sin_t + dy * cos_t;
  }
  /// Rotated canvas coordinates -> source pixel coordinates.
  void inverse(double u, double v, double& x, double& y) const {
    const double du = u - out_cx;
    const double dv = v - out_cy;
    x = src_cx + du * cos_t - dv * sin_t;
    y = src_cy + du * sin_t + dv * cos_t;
  }

  /// Axis-aligned bounds of the four rotated corners (not clamped).
  BoundingBox map_box(const BoundingBox& box) const;
};

/// Sets negative coordinates to zero and clips the far edges to the image,
/// shrinking width/height so the result stays a sub-rectangle of the image.
/// Returns nullopt when nothing of the box is left inside the image.
std::optional<BoundingBox> clamp_bbox(const BoundingBox& raw, ImageDims dims);

}  // namespace chartrole
