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

#include <cmath>
#include <random>

#include <doctest.h>

#include "chartrole/augmentation.hpp"
#include "chartrole/kernels.hpp"
#include "chartrole/synth.hpp"
#include "checks.hpp"
#include "fixtures.hpp"
#include "oracles.hpp"

using namespace chartrole;

TEST_CASE("zero rotation is the identity") {
  const auto s = generate_chart({}, "c");
  const auto r = rotate_sample(s, 0.0);
  CHECK(r.raster() == s.raster());
  CHECK(r.blocks == s.blocks);
  const auto t = RotationTransform::make(0, s.dims());
  CHECK(kernels::serial::rotate_nearest(s.raster(), t, {255, 255, 255}) == s.raster());
  CHECK(kernels::omp::rotate_nearest(s.raster(), t, {255, 255, 255}) == s.raster());
}

TEST_CASE("rotation canvas and corners match the oracle") {
  for (double theta : {-30.0, -12.5, 7.0, 30.0, 90.0}) {
    const ImageDims d{400, 300};
    const auto t = RotationTransform::make(theta, d);
    const double a = theta * 3.14159265358979323846 / 180.0;
    CHECK(t.out_width == static_cast<int>(std::ceil(400 * std::abs(std::cos(a)) + 300 * std::abs(std::sin(a)) - 1e-9)));
    CHECK(t.out_height == static_cast<int>(std::ceil(400 * std::abs(std::sin(a)) + 300 * std::abs(std::cos(a)) - 1e-9)));
    for (auto [x, y] : {std::pair{0.0, 0.0}, {400.0, 0.0}, {0.0, 300.0}, {123.0, 45.0}}) {
      double u = 0, v = 0, ou = 0, ov = 0;
      t.forward(x, y, u, v);
      oracle::rotate_point(x, y, theta, 200, 150, t.out_cx, t.out_cy, ou, ov);
      CHECK(u == doctest::Approx(ou).epsilon(1e-12));
      CHECK(v == doctest::Approx(ov).epsilon(1e-12));
      double bx = 0, by = 0;
      t.inverse(u, v, bx, by);
      CHECK(bx == doctest::Approx(x).epsilon(1e-9));
      CHECK(by == doctest::Approx(y).epsilon(1e-9));
    }
  }
  // Quarter turn counter-clockwise: the top-right corner becomes the top-left.
  const auto q = RotationTransform::make(90, {100, 50});
  CHECK(q.out_width == 50);
  CHECK(q.out_height == 100);
  double u = 0, v = 0;
  q.forward(100, 0, u, v);
  CHECK(u == doctest::Approx(0).epsilon(1e-9));
  CHECK(v == doctest::Approx(0).epsilon(1e-9));
}

TEST_CASE("rotated boxes are the bounds of the rotated corners") {
  const auto t = RotationTransform::make(25, {300, 200});
  const BoundingBox b{40, 30, 60, 12};
  const auto m = t.map_box(b);
  double xs[4], ys[4];
  int i = 0;
  for (auto [x, y] : {std::pair{b.x, b.y}, {b.right(), b.y}, {b.x, b.bottom()}, {b.right(), b.bottom()}}) {
    oracle::rotate_point(x, y, 25, 150, 100, t.out_cx, t.out_cy, xs[i], ys[i]);
    ++i;
  }
  CHECK(m.x == doctest::Approx(*std::min_element(xs, xs + 4)));
  CHECK(m.right() == doctest::Approx(*std::max_element(xs, xs + 4)));
  CHECK(m.y == doctest::Approx(*std::min_element(ys, ys + 4)));
  CHECK(m.bottom() == doctest::Approx(*std::max_element(ys, ys + 4)));
}

TEST_CASE("every rotated glyph pixel stays inside its rotated box") {
  std::mt19937_64 rng(77);
  const SpecDistribution dist;
  int charts = 0;
  while (charts < 100) {
    auto spec = sample_spec(dist, rng);
    RenderedChart chart;
    try {
      chart = render_chart(spec, "g" + std::to_string(charts));
    } catch (const SpecError&) {
      continue;
    }
    const double theta = std::uniform_int_distribution<int>(-30, 30)(rng);
    const auto rotated = rotate_sample(chart.sample, theta);
    CHECK_MESSAGE(checks::escaped_pixels(chart, theta, rotated) == 0, "theta " << theta << ", chart " << charts);
    CHECK(validate_sample(rotated).empty());
    ++charts;
  }
}

TEST_CASE("serial and parallel rotation warps agree bit for bit") {
  const auto s = generate_chart({}, "c");
  for (double theta : {-30.0, -3.0, 11.0, 29.5}) {
    const auto t = RotationTransform::make(theta, s.dims());
    CHECK(kernels::serial::rotate_nearest(s.raster(), t, {255, 255, 255}) ==
          kernels::omp::rotate_nearest(s.raster(), t, {255, 255, 255}));
  }
}

TEST_CASE("rotation rejects non-finite angles") {
  const auto s = generate_chart({}, "c");
  CHECK_THROWS_AS(rotate_sample(s, std::nan("")), std::invalid_argument);
}
