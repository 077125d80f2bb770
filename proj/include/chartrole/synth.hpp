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

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "chartrole/corpus.hpp"
#include "chartrole/rng.hpp"

namespace chartrole {

/// What to draw. Every text element drawn becomes a labeled block whose box is
/// the exact extent of its glyph cells.
struct ChartSpec {
  std::string chart_type = "bar";  // bar | line | scatter
  int series = 2;
  int x_ticks = 5;
  int y_ticks = 4;
  bool chart_title = true;
  bool axis_titles = true;
  bool legend = true;
  bool legend_title = false;
  bool tick_grouping = false;
  bool mark_labels = false;
  bool value_labels = false;
  bool other = false;
  int width = 400;
  int height = 300;
  int font_scale = 1;
  std::uint64_t seed = 0;
};

class SpecError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct RenderedChart {
  ChartSample sample;
  std::vector<Mask> text_masks;  // glyph pixels of each block, parallel to sample.blocks
};

/// Renders a chart; throws SpecError if the spec is invalid or the requested
/// elements do not fit on the canvas.
RenderedChart render_chart(const ChartSpec& spec, const std::string& sample_id = "synth");
ChartSample generate_chart(const ChartSpec& spec, const std::string& sample_id = "synth");

/// Probabilities and ranges from which generate_corpus draws chart specs.
struct SpecDistribution {
  double p_bar = 0.4;
  double p_line = 0.35;  // remainder is scatter
  int min_width = 360, max_width = 480;
  int min_height = 260, max_height = 340;
  int max_series = 3;
  int min_ticks = 3, max_ticks = 6;
  double p_chart_title = 0.8;
  double p_axis_titles = 0.85;
  double p_legend = 0.65;
  double p_legend_title = 0.4;   // given a legend
  double p_tick_grouping = 0.3;  // bar charts only
  double p_mark_labels = 0.4;    // line and scatter charts
  double p_value_labels = 0.4;
  double p_other = 0.4;
};

ChartSpec sample_spec(const SpecDistribution& dist, Rng& rng);

/// n charts with ids "synth-0000", ... ; specs that do not fit are redrawn.
Corpus generate_corpus(int n, const SpecDistribution& dist, std::uint64_t seed,
                       const std::string& name = "synth");

/// Draws `text` with the bundled 6x11 font (scaled) at (x, y); vertical text
/// runs bottom-to-top. Returns the cell box. Glyph pixels are also set in
/// `mask` when given.
BoundingBox draw_text(Image& image, const std::string& text, int x, int y, Rgb color,
                      int scale = 1, bool vertical = false, Mask* mask = nullptr);

/// Width and height of the cell box draw_text would use.
std::pair<int, int> text_extent(const std::string& text, int scale = 1, bool vertical = false);

}  // namespace chartrole
