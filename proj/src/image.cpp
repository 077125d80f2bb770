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

#include "chartrole/image.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <opencv2/core.hpp>
#include <opencv2/imgcodecs.hpp>

namespace chartrole {

Image::Image(int width, int height, Rgb fill)
    : width_(width), height_(height),
      pixels_(static_cast<std::size_t>(width) * static_cast<std::size_t>(height) * 3) {
  if (width < 0 || height < 0) throw std::invalid_argument("negative image size");
  for (std::size_t i = 0; i < pixels_.size(); i += 3) {
    pixels_[i] = fill[0];
    pixels_[i + 1] = fill[1];
    pixels_[i + 2] = fill[2];
  }
}

std::size_t Mask::count() const {
  return static_cast<std::size_t>(std::count_if(bits.begin(), bits.end(),
                                                [](std::uint8_t b) { return b != 0; }));
}

namespace {

// OpenCV stores BGR; our rasters are RGB.
cv::Mat to_bgr_mat(const Image& image) {
  cv::Mat mat(image.height(), image.width(), CV_8UC3);
  const auto src = image.data();
  for (int y = 0; y < image.height(); ++y) {
    auto* row = mat.ptr<std::uint8_t>(y);
    for (int x = 0; x < image.width(); ++x) {
      const std::size_t o = (static_cast<std::size_t>(y) * image.width() + x) * 3;
      row[x * 3 + 0] = src[o + 2];
      row[x * 3 + 1] = src[o + 1];
      row[x * 3 + 2] = src[o + 0];
    }
  }
  return mat;
}

}  // namespace

Image read_image(const std::filesystem::path& path) {
  cv::Mat mat = cv::imread(path.string(), cv::IMREAD_COLOR);
  if (mat.empty()) throw std::runtime_error("cannot read image " + path.string());
  Image image(mat.cols, mat.rows);
  auto dst = image.data();
  for (int y = 0; y < mat.rows; ++y) {
    const auto* row = mat.ptr<std::uint8_t>(y);
    for (int x = 0; x < mat.cols; ++x) {
      const std::size_t o = (static_cast<std::size_t>(y) * mat.cols + x) * 3;
      dst[o + 0] = row[x * 3 + 2];
      dst[o + 1] = row[x * 3 + 1];
      dst[o + 2] = row[x * 3 + 0];
    }
  }
  return image;
}

void write_png(const Image& image, const std::filesystem::path& path) {
  if (!cv::imwrite(path.string(), to_bgr_mat(image))) {
    throw std::runtime_error("cannot write image " + path.string());
  }
}

std::vector<std::uint8_t> encode_png(const Image& image) {
  std::vector<std::uint8_t> buffer;
  if (!cv::imencode(".png", to_bgr_mat(image), buffer)) {
    throw std::runtime_error("png encoding failed");
  }
  return buffer;
}

Image resize_bilinear(const Image& src, int width, int height) {
  if (src.empty()) throw std::invalid_argument("resize of empty image");
  Image dst(width, height);
  const double sx = static_cast<double>(src.width()) / width;
  const double sy = static_cast<double>(src.height()) / height;
  for (int y = 0; y < height; ++y) {
    const double fy = std::clamp((y + 0.5) * sy - 0.5, 0.0, src.height() - 1.0);
    const int y0 = static_cast<int>(fy);
    const int y1 = std::min(y0 + 1, src.height() - 1);
    const double wy = fy - y0;
    for (int x = 0; x < width; ++x) {
      const double fx = std::clamp((x + 0.5) * sx - 0.5, 0.0, src.width() - 1.0);
      const int x0 = static_cast<int>(fx);
      const int x1 = std::min(x0 + 1, src.width() - 1);
      const double wx = fx - x0;
      const Rgb a = src.at(x0, y0), b = src.at(x1, y0), c = src.at(x0, y1), d = src.at(x1, y1);
      Rgb out;
      for (int ch = 0; ch < 3; ++ch) {
        const double top = a[ch] * (1 - wx) + b[ch] * wx;
        const double bottom = c[ch] * (1 - wx) + d[ch] * wx;
        out[ch] = static_cast<std::uint8_t>(std::lround(top * (1 - wy) + bottom * wy));
      }
      dst.set(x, y, out);
    }
  }
  return dst;
}

Rgb mean_color(const Image& image) {
  std::array<double, 3> sum{0, 0, 0};
  const auto px = image.data();
  for (std::size_t i = 0; i < px.size(); i += 3) {
    sum[0] += px[i];
    sum[1] += px[i + 1];
    sum[2] += px[i + 2];
  }
  const double n = std::max<double>(1, static_cast<double>(px.size() / 3));
  return {static_cast<std::uint8_t>(std::lround(sum[0] / n)),
          static_cast<std::uint8_t>(std::lround(sum[1] / n)),
          static_cast<std::uint8_t>(std::lround(sum[2] / n))};
}

}  // namespace chartrole
