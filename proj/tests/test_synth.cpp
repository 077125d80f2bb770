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

#include <random>
#include <set>

#include <doctest.h>

#include "chartrole/synth.hpp"
#include "fixtures.hpp"

using namespace chartrole;

namespace {

RoleHistogram histogram_of(const ChartSample& s) {
  RoleHistogram h{};
  for (const auto& b : s.blocks) ++h[role_index(*b.role)];
  return h;
}

}  // namespace

TEST_CASE("default bar chart spec yields the expected role histogram") {
  ChartSpec spec;  // bar, title, two axis titles, 5 x ticks, 4 y ticks, two legend labels
  const auto s = generate_chart(spec, "bar");
  RoleHistogram want{};
  want[role_index(TextRole::kChartTitle)] = 1;
  want[role_index(TextRole::kAxisTitle)] = 2;
  want[role_index(TextRole::kTickLabel)] = 9;
  want[role_index(TextRole::kLegendLabel)] = 2;
  CHECK(histogram_of(s) == want);
  CHECK(validate_sample(s).empty());
}

TEST_CASE("same chart spec and seed render identically") {
  ChartSpec spec;
  spec.seed = 44;
  spec.chart_type = "line";
  spec.mark_labels = true;
  const auto a = generate_chart(spec, "a");
  const auto b = generate_chart(spec, "a");
  CHECK(a.raster() == b.raster());
  CHECK(a.blocks == b.blocks);
}

TEST_CASE("a chart spec without legend has no legend blocks") {
  ChartSpec spec;
  spec.legend = false;
  spec.legend_title = true;
  const auto h = histogram_of(generate_chart(spec, "nolegend"));
  CHECK(h[role_index(TextRole::kLegendLabel)] == 0);
  CHECK(h[role_index(TextRole::kLegendTitle)] == 0);
}

TEST_CASE("impossible specs are rejected") {
  ChartSpec tiny;
  tiny.width = 60;
  tiny.height = 40;
  CHECK_THROWS_AS(render_chart(tiny), SpecError);
  ChartSpec pie;
  pie.chart_type = "pie";
  CHECK_THROWS_AS(render_chart(pie), SpecError);
}

TEST_CASE("text pixels are exactly the union of the block masks, each inside its box") {
  std::mt19937_64 rng(8);
  const SpecDistribution dist;
  int rendered = 0;
  while (rendered < 40) {
    RenderedChart chart;
    try {
      chart = render_chart(sample_spec(dist, rng), "m");
    } catch (const SpecError&) {
      continue;
    }
    ++rendered;
    const auto& img = chart.sample.raster();
    REQUIRE(chart.text_masks.size() == chart.sample.blocks.size());
    std::vector<int> owners(static_cast<std::size_t>(img.width()) * img.height(), 0);
    for (std::size_t b = 0; b < chart.text_masks.size(); ++b) {
      const auto& m = chart.text_masks[b];
      const auto& box = chart.sample.blocks[b].bbox;
      CHECK(m.count() > 0);
      for (int y = 0; y < img.height(); ++y) {
        for (int x = 0; x < img.width(); ++x) {
          if (!m.at(x, y)) continue;
          CHECK(box.covers_pixel(x, y));
          ++owners[static_cast<std::size_t>(y) * img.width() + x];
        }
      }
    }
    for (int y = 0; y < img.height(); ++y) {
      for (int x = 0; x < img.width(); ++x) {
        const int owner = owners[static_cast<std::size_t>(y) * img.width() + x];
        const bool text_colored = img.at(x, y) == Rgb{20, 20, 20};
        REQUIRE(owner <= 1);
        REQUIRE((owner == 1) == text_colored);
      }
    }
    // Boxes never overlap.
    for (std::size_t i = 0; i < chart.sample.blocks.size(); ++i) {
      for (std::size_t j = i + 1; j < chart.sample.blocks.size(); ++j) {
        const auto& a = chart.sample.blocks[i].bbox;
        const auto& b = chart.sample.blocks[j].bbox;
        CHECK_FALSE((a.x < b.right() && b.x < a.right() && a.y < b.bottom() && b.y < a.bottom()));
      }
    }
  }
}

TEST_CASE("generated corpora") {
  const auto corpus = generate_corpus(200, {}, 1);
  REQUIRE(corpus.size() == 200);
  CHECK(corpus.samples[0].sample_id == "synth-0000");
  CHECK(corpus.samples[199].sample_id == "synth-0199");
  const auto h = class_distribution(corpus);
  for (std::size_t c = 0; c < kNumRoles; ++c) CHECK(h[c] > 0);
  for (const auto& s : corpus.samples) {
    CHECK(validate_sample(s).empty());
    for (const auto& b : s.blocks) CHECK(b.role.has_value());
  }
  CHECK(generate_corpus(1, {}, 1).size() == 1);

  const auto other = generate_corpus(5, {}, 2);
  const auto same = generate_corpus(5, {}, 1);
  CHECK(other.samples[0].raster() != same.samples[0].raster());
  for (std::size_t i = 0; i < 5; ++i) {
    CHECK(same.samples[i].raster() == corpus.samples[i].raster());
    CHECK(same.samples[i].blocks == corpus.samples[i].blocks);
  }
}

TEST_CASE("generated corpora round-trip through export and load") {
  fixtures::TempDir dir("synth");
  const auto corpus = generate_corpus(8, {}, 77);
  export_annotations(corpus, dir.path());
  const auto back = load_corpus(dir.path(), AnnotationFormat::kNative);
  CHECK(back.report.skipped.empty());
  REQUIRE(back.corpus.size() == corpus.size());
  for (const auto& s : corpus.samples) {
    const auto* t = back.corpus.find(s.sample_id);
    REQUIRE(t);
    CHECK(t->blocks == s.blocks);
    CHECK(t->chart_type == s.chart_type);
    CHECK(t->raster() == s.raster());
  }
}

TEST_CASE("text extent matches drawn boxes") {
  Image img(200, 100);
  const auto box = draw_text(img, "Hello", 10, 20, {0, 0, 0}, 2);
  const auto [w, h] = text_extent("Hello", 2);
  CHECK(box.width == w);
  CHECK(box.height == h);
  const auto [vw, vh] = text_extent("Hello", 1, true);
  CHECK(vw == text_extent("Hello").second);
  CHECK(vh == text_extent("Hello").first);
}
