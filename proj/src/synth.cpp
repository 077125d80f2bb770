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

#include "chartrole/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "font_data.inc"

namespace chartrole {

namespace {

const std::vector<std::string> kTitleSubjects = {
    "Sales", "Revenue", "Growth", "Accuracy", "Temperature", "Population",
    "Response", "Yield", "Error Rate", "Usage", "Output", "Survival"};
const std::vector<std::string> kTitleQualifiers = {
    "by Region", "over Time", "per Year", "by Group", "per Month", "by Method", "vs Dose", "by Site"};
const std::vector<std::string> kXAxisTitles = {
    "Year", "Time (s)", "Dose (mg)", "Month", "Region", "Group", "Age", "Week"};
const std::vector<std::string> kYAxisTitles = {
    "Value", "Count", "Percent", "Score", "Rate (%)", "Mean", "Level", "Amount"};
const std::vector<std::string> kSeriesNames = {
    "Control", "Treated", "Model A", "Model B", "Baseline", "Group 1", "Group 2", "Male", "Female", "Test"};
const std::vector<std::string> kLegendTitles = {"Legend", "Series", "Method", "Condition", "Cohort", "Type"};
const std::vector<std::string> kCategories = {
    "A", "B", "C", "D", "E", "F", "G", "H", "North", "South", "East", "West",
    "Q1", "Q2", "Q3", "Q4", "Mon", "Tue", "Wed", "Thu"};
const std::vector<std::string> kGroupNames = {
    "Group A", "Group B", "Phase 1", "Phase 2", "Early", "Late", "Set 1", "Set 2"};
const std::vector<std::string> kMarkLabels = {"trend", "fit", "mean", "peak", "target", "limit", "median", "max"};
const std::vector<std::string> kOtherBottom = {
    "Source: survey", "Source: WHO", "Data: 2019", "* p < 0.05", "n = 120", "Note: estimates"};
const std::vector<std::string> kOtherCorner = {"(a)", "(b)", "(c)", "Fig. 2", "Fig. 4"};

const std::vector<Rgb> kPalette = {{31, 119, 180}, {255, 127, 14}, {44, 160, 44},
                                   {214, 39, 40},  {148, 103, 189}, {140, 86, 75}};
constexpr Rgb kTextColor{20, 20, 20};
constexpr Rgb kAxisColor{110, 110, 110};
constexpr Rgb kBackground{255, 255, 255};

template <typename T>
const T& pick(const std::vector<T>& v, Rng& rng) {
  return v[std::uniform_int_distribution<std::size_t>(0, v.size() - 1)(rng)];
}

int uniform_int(Rng& rng, int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); }
double uniform_real(Rng& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}
bool coin(Rng& rng, double p) { return uniform_real(rng, 0.0, 1.0) < p; }

std::string format_number(double v, int decimals) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.*f", decimals, v);
  return buf;
}

void fill_rect(Image& img, int x0, int y0, int x1, int y1, Rgb c) {
  for (int y = std::max(0, y0); y < std::min(img.height(), y1); ++y) {
    for (int x = std::max(0, x0); x < std::min(img.width(), x1); ++x) img.set(x, y, c);
  }
}

void draw_line(Image& img, int x0, int y0, int x1, int y1, Rgb c) {
  const int dx = std::abs(x1 - x0), sx = x0 < x1 ? 1 : -1;
  const int dy = -std::abs(y1 - y0), sy = y0 < y1 ? 1 : -1;
  int err = dx + dy;
  while (true) {
    if (img.contains(x0, y0)) img.set(x0, y0, c);
    if (img.contains(x0, y0 + 1)) img.set(x0, y0 + 1, c);
    if (x0 == x1 && y0 == y1) break;
    const int e2 = 2 * err;
    if (e2 >= dy) {
      err += dy;
      x0 += sx;
    }
    if (e2 <= dx) {
      err += dx;
      y0 += sy;
    }
  }
}

struct PlannedText {
  std::string text;
  int x;
  int y;
  bool vertical;
  TextRole role;
};

bool overlaps(const BoundingBox& a, const BoundingBox& b) {
  return a.x < b.right() && b.x < a.right() && a.y < b.bottom() && b.y < a.bottom();
}

}  // namespace

std::pair<int, int> text_extent(const std::string& text, int scale, bool vertical) {
  const int along = static_cast<int>(text.size()) * font_data::kGlyphWidth * scale;
  const int across = font_data::kGlyphHeight * scale;
  return vertical ? std::pair{across, along} : std::pair{along, across};
}

BoundingBox draw_text(Image& image, const std::string& text, int x, int y, Rgb color, int scale,
                      bool vertical, Mask* mask) {
  const int gw = font_data::kGlyphWidth;
  const int gh = font_data::kGlyphHeight;
  const int n = static_cast<int>(text.size());
  for (int i = 0; i < n; ++i) {
    unsigned char ch = static_cast<unsigned char>(text[i]);
    if (ch < font_data::kFirstGlyph || ch > font_data::kLastGlyph) ch = '?';
    const auto& glyph = font_data::kGlyphs[ch - font_data::kFirstGlyph];
    for (int gy = 0; gy < gh; ++gy) {
      for (int gx = 0; gx < gw; ++gx) {
        if (!((glyph[gy] >> (gw - 1 - gx)) & 1)) continue;
        for (int sy = 0; sy < scale; ++sy) {
          for (int sx = 0; sx < scale; ++sx) {
            int px = 0, py = 0;
            if (!vertical) {
              px = x + (i * gw + gx) * scale + sx;
              py = y + gy * scale + sy;
            } else {
              // Rotated 90 degrees counter-clockwise, reading bottom to top.
              px = x + gy * scale + sy;
              py = y + (n * gw - 1 - (i * gw + gx)) * scale + (scale - 1 - sx);
            }
            if (!image.contains(px, py)) continue;
            image.set(px, py, color);
            if (mask) mask->set(px, py);
          }
        }
      }
    }
  }
  const auto [w, h] = text_extent(text, scale, vertical);
  return {static_cast<double>(x), static_cast<double>(y), static_cast<double>(w),
          static_cast<double>(h)};
}

RenderedChart render_chart(const ChartSpec& spec, const std::string& sample_id) {
  const bool bar = spec.chart_type == "bar";
  const bool line = spec.chart_type == "line";
  const bool scatter = spec.chart_type == "scatter";
  if (!bar && !line && !scatter) throw SpecError("unsupported chart type '" + spec.chart_type + "'");
  if (spec.series < 1 || spec.series > 6) throw SpecError("series must be in [1, 6]");
  if (spec.x_ticks < 2 || spec.y_ticks < 2) throw SpecError("tick counts must be at least 2");
  if (spec.font_scale < 1 || spec.font_scale > 4) throw SpecError("font scale must be in [1, 4]");
  if (spec.width < 120 || spec.height < 100) throw SpecError("canvas too small");

  Rng rng(spec.seed);
  const int s = spec.font_scale;
  const int line_h = font_data::kGlyphHeight * s;
  const int pad = 6;
  const int W = spec.width;
  const int H = spec.height;
  auto width_of = [&](const std::string& t) { return text_extent(t, s).first; };

  std::vector<PlannedText> texts;
  Image image(W, H, kBackground);

  // Top band: title and an optional panel label in the corner.
  int top = pad;
  std::string other_text;
  bool other_in_corner = false;
  if (spec.other) {
    other_in_corner = coin(rng, 0.4);
    other_text = other_in_corner ? pick(kOtherCorner, rng) : pick(kOtherBottom, rng);
  }
  if (spec.chart_title) {
    const std::string title = pick(kTitleSubjects, rng) + " " + pick(kTitleQualifiers, rng);
    texts.push_back({title, (W - width_of(title)) / 2, top, false, TextRole::kChartTitle});
    top += line_h + 6;
  }
  if (spec.other && other_in_corner) {
    texts.push_back({other_text, pad, spec.chart_title ? top : pad, false, TextRole::kOther});
    top = (spec.chart_title ? top : pad) + line_h + 4;
  }

  // Bottom band, from the canvas edge upwards.
  int bottom = H - pad;
  if (spec.other && !other_in_corner) {
    bottom -= line_h;
    texts.push_back({other_text, pad, bottom, false, TextRole::kOther});
    bottom -= 4;
  }
  int x_title_y = 0;
  std::string x_title;
  if (spec.axis_titles) {
    bottom -= line_h;
    x_title_y = bottom;
    x_title = pick(kXAxisTitles, rng);
    bottom -= 4;
  }
  int grouping_y = 0;
  if (spec.tick_grouping) {
    bottom -= line_h;
    grouping_y = bottom;
    bottom -= 3;
  }
  bottom -= line_h;
  const int x_tick_y = bottom;
  const int plot_bottom = bottom - 4;

  // Y scale and left band.
  static const double kSteps[] = {0.5, 1, 2, 5, 10, 20, 25, 50, 100, 200};
  const double step = kSteps[uniform_int(rng, 0, 9)];
  const int y_decimals = step < 1 ? 1 : 0;
  std::vector<std::string> y_labels;
  int y_label_w = 0;
  for (int k = 0; k < spec.y_ticks; ++k) {
    y_labels.push_back(format_number(k * step, y_decimals));
    y_label_w = std::max(y_label_w, width_of(y_labels.back()));
  }
  const double y_top_value = step * (spec.y_ticks - 1);

  int left = pad;
  std::string y_title;
  int y_title_x = 0;
  if (spec.axis_titles) {
    y_title = pick(kYAxisTitles, rng);
    y_title_x = left;
    left += line_h + 4;
  }
  const int y_tick_right = left + y_label_w;
  const int plot_left = y_tick_right + 5;

  // Legend column on the right.
  int right = W - pad;
  std::vector<std::string> series_names;
  {
    std::vector<std::string> pool = kSeriesNames;
    std::shuffle(pool.begin(), pool.end(), rng);
    series_names.assign(pool.begin(), pool.begin() + spec.series);
  }
  std::string legend_title;
  int legend_x = 0;
  if (spec.legend) {
    int legend_w = 0;
    for (const auto& n : series_names) legend_w = std::max(legend_w, 11 + width_of(n));
    if (spec.legend_title) {
      legend_title = pick(kLegendTitles, rng);
      legend_w = std::max(legend_w, width_of(legend_title));
    }
    legend_x = right - legend_w;
    right = legend_x - 10;
  }
  const int plot_right = right;
  const int plot_top = top + (spec.value_labels ? line_h + 4 : 4);
  if (plot_right - plot_left < 60 || plot_bottom - plot_top < 50) {
    throw SpecError("canvas too small for the requested elements");
  }
  const int plot_h = plot_bottom - plot_top;
  if (static_cast<double>(plot_h) / (spec.y_ticks - 1) < line_h + 2) {
    throw SpecError("canvas too small for the requested y ticks");
  }

  // Data region; line/scatter leave room on the right for mark labels.
  std::vector<std::string> mark_texts;
  int mark_w = 0;
  if (spec.mark_labels && !bar) {
    std::vector<std::string> pool = kMarkLabels;
    std::shuffle(pool.begin(), pool.end(), rng);
    mark_texts.assign(pool.begin(), pool.begin() + std::min<int>(spec.series, 8));
    for (const auto& m : mark_texts) mark_w = std::max(mark_w, width_of(m));
  }
  const int data_right = plot_right - (mark_w > 0 ? mark_w + 6 : 0);
  if (data_right - plot_left < 40) throw SpecError("canvas too small for mark labels");

  auto y_of = [&](double value) {
    return static_cast<int>(std::lround(plot_bottom - value / y_top_value * plot_h));
  };

  // X positions and tick labels.
  std::vector<int> x_pos;
  std::vector<std::string> x_labels;
  double slot = 0;
  if (bar) {
    slot = static_cast<double>(data_right - plot_left) / spec.x_ticks;
    std::vector<std::string> pool = kCategories;
    std::shuffle(pool.begin(), pool.end(), rng);
    for (int i = 0; i < spec.x_ticks; ++i) {
      x_pos.push_back(static_cast<int>(std::lround(plot_left + (i + 0.5) * slot)));
      x_labels.push_back(pool[static_cast<std::size_t>(i) % pool.size()]);
    }
  } else {
    static const int kStarts[] = {0, 1990, 2000, 2010};
    static const int kXSteps[] = {1, 2, 5, 10};
    const int start = kStarts[uniform_int(rng, 0, 3)];
    const int xstep = kXSteps[uniform_int(rng, 0, 3)];
    slot = static_cast<double>(data_right - plot_left - 16) / (spec.x_ticks - 1);
    for (int i = 0; i < spec.x_ticks; ++i) {
      x_pos.push_back(static_cast<int>(std::lround(plot_left + 8 + i * slot)));
      x_labels.push_back(std::to_string(start + i * xstep));
    }
  }
  for (const auto& l : x_labels) {
    if (width_of(l) + 3 > slot) throw SpecError("canvas too small for the requested x ticks");
  }

  // Data values per series and position.
  std::vector<std::vector<double>> values(spec.series);
  for (auto& row : values) {
    for (int i = 0; i < spec.x_ticks; ++i) row.push_back(y_top_value * uniform_real(rng, 0.15, 0.95));
  }

  // Marks.
  const int axis_x = plot_left - 1;
  draw_line(image, axis_x, plot_top, axis_x, plot_bottom, kAxisColor);
  draw_line(image, axis_x, plot_bottom, plot_right, plot_bottom, kAxisColor);
  for (int k = 0; k < spec.y_ticks; ++k) {
    const int ty = y_of(k * step);
    fill_rect(image, axis_x - 3, ty, axis_x, ty + 1, kAxisColor);
  }
  std::vector<std::vector<std::pair<int, int>>> points(spec.series);
  if (bar) {
    const double group_w = slot * 0.7;
    const double bar_w = group_w / spec.series;
    for (int i = 0; i < spec.x_ticks; ++i) {
      for (int sidx = 0; sidx < spec.series; ++sidx) {
        const int x0 = static_cast<int>(std::lround(x_pos[i] - group_w / 2 + sidx * bar_w));
        const int x1 = static_cast<int>(std::lround(x_pos[i] - group_w / 2 + (sidx + 1) * bar_w)) - 1;
        const int y0 = y_of(values[sidx][i]);
        fill_rect(image, x0, y0, std::max(x0 + 1, x1), plot_bottom, kPalette[sidx % kPalette.size()]);
        points[sidx].push_back({(x0 + x1) / 2, y0});
      }
    }
  } else {
    for (int sidx = 0; sidx < spec.series; ++sidx) {
      const Rgb color = kPalette[sidx % kPalette.size()];
      for (int i = 0; i < spec.x_ticks; ++i) {
        const int px = x_pos[i];
        const int py = y_of(values[sidx][i]);
        points[sidx].push_back({px, py});
        if (scatter) {
          fill_rect(image, px - 1, py - 1, px + 2, py + 2, color);
        } else if (i > 0) {
          draw_line(image, points[sidx][i - 1].first, points[sidx][i - 1].second, px, py, color);
        }
      }
    }
  }

  // Axis titles and tick labels.
  for (int k = 0; k < spec.y_ticks; ++k) {
    const auto& l = y_labels[k];
    texts.push_back({l, y_tick_right - width_of(l), y_of(k * step) - line_h / 2, false, TextRole::kTickLabel});
  }
  for (int i = 0; i < spec.x_ticks; ++i) {
    texts.push_back({x_labels[i], x_pos[i] - width_of(x_labels[i]) / 2, x_tick_y, false, TextRole::kTickLabel});
  }
  if (spec.tick_grouping) {
    const int groups = spec.x_ticks >= 4 ? 2 : 1;
    std::vector<std::string> pool = kGroupNames;
    std::shuffle(pool.begin(), pool.end(), rng);
    const int per = (spec.x_ticks + groups - 1) / groups;
    for (int g = 0; g < groups; ++g) {
      const int first = g * per;
      const int last = std::min(spec.x_ticks, first + per) - 1;
      const auto& name = pool[static_cast<std::size_t>(g)];
      const int span = static_cast<int>((last - first + 1) * slot);
      if (width_of(name) + 2 > span) throw SpecError("canvas too small for tick groupings");
      const int cx = (x_pos[first] + x_pos[last]) / 2;
      texts.push_back({name, cx - width_of(name) / 2, grouping_y, false, TextRole::kTickGrouping});
    }
  }
  if (spec.axis_titles) {
    texts.push_back({x_title, (plot_left + plot_right - width_of(x_title)) / 2, x_title_y, false,
                     TextRole::kAxisTitle});
    const int vh = text_extent(y_title, s, true).second;
    texts.push_back({y_title, y_title_x, (plot_top + plot_bottom - vh) / 2, true, TextRole::kAxisTitle});
  }

  // Legend.
  if (spec.legend) {
    int ly = plot_top;
    if (spec.legend_title) {
      texts.push_back({legend_title, legend_x, ly, false, TextRole::kLegendTitle});
      ly += line_h + 4;
    }
    for (int sidx = 0; sidx < spec.series; ++sidx) {
      fill_rect(image, legend_x, ly + (line_h - 8) / 2, legend_x + 8, ly + (line_h - 8) / 2 + 8,
                kPalette[sidx % kPalette.size()]);
      texts.push_back({series_names[sidx], legend_x + 11, ly, false, TextRole::kLegendLabel});
      ly += line_h + 3;
    }
    if (ly > plot_bottom) throw SpecError("canvas too small for the legend");
  }

  // Value labels above the first series.
  if (spec.value_labels) {
    const int decimals = coin(rng, 0.5) ? 0 : 1;
    for (int i = 0; i < spec.x_ticks; ++i) {
      const auto l = format_number(values[0][i], decimals);
      const auto [px, py] = points[0][i];
      texts.push_back({l, px - width_of(l) / 2, py - line_h - 3, false, TextRole::kValueLabel});
    }
  }

  // Mark labels at the right end of each series, pushed apart vertically.
  if (!mark_texts.empty()) {
    std::vector<std::pair<int, int>> order;  // (end y, series)
    for (int sidx = 0; sidx < static_cast<int>(mark_texts.size()); ++sidx) {
      order.push_back({points[sidx].back().second, sidx});
    }
    std::sort(order.begin(), order.end());
    int next_free = plot_top;
    for (const auto& [end_y, sidx] : order) {
      int ty = std::clamp(end_y - line_h / 2, next_free, plot_bottom - line_h);
      next_free = ty + line_h + 1;
      texts.push_back({mark_texts[sidx], data_right + 4, ty, false, TextRole::kMarkLabel});
    }
  }

  // Check the layout before drawing any text.
  std::vector<BoundingBox> boxes;
  for (const auto& t : texts) {
    const auto [w, h] = text_extent(t.text, s, t.vertical);
    BoundingBox box{static_cast<double>(t.x), static_cast<double>(t.y), static_cast<double>(w),
                    static_cast<double>(h)};
    if (box.x < 0 || box.y < 0 || box.right() > W || box.bottom() > H) {
      throw SpecError("text '" + t.text + "' does not fit on the canvas");
    }
    for (const auto& other : boxes) {
      if (overlaps(box, other)) throw SpecError("text elements overlap; canvas too small");
    }
    boxes.push_back(box);
  }

  RenderedChart out;
  out.sample.sample_id = sample_id;
  out.sample.chart_type = spec.chart_type;
  out.sample.provenance = "synth";
  for (std::size_t i = 0; i < texts.size(); ++i) {
    const auto& t = texts[i];
    Mask mask(W, H);
    const auto box = draw_text(image, t.text, t.x, t.y, kTextColor, s, t.vertical, &mask);
    out.sample.blocks.push_back({static_cast<int>(i), t.text, box, t.role});
    out.text_masks.push_back(std::move(mask));
  }
  out.sample.image = std::make_shared<const Image>(std::move(image));
  return out;
}

ChartSample generate_chart(const ChartSpec& spec, const std::string& sample_id) {
  return render_chart(spec, sample_id).sample;
}

ChartSpec sample_spec(const SpecDistribution& d, Rng& rng) {
  ChartSpec spec;
  const double u = uniform_real(rng, 0.0, 1.0);
  spec.chart_type = u < d.p_bar ? "bar" : (u < d.p_bar + d.p_line ? "line" : "scatter");
  spec.width = uniform_int(rng, d.min_width, d.max_width);
  spec.height = uniform_int(rng, d.min_height, d.max_height);
  spec.series = uniform_int(rng, 1, d.max_series);
  spec.x_ticks = uniform_int(rng, d.min_ticks, d.max_ticks);
  spec.y_ticks = uniform_int(rng, d.min_ticks, d.max_ticks);
  spec.chart_title = coin(rng, d.p_chart_title);
  spec.axis_titles = coin(rng, d.p_axis_titles);
  spec.legend = coin(rng, d.p_legend);
  spec.legend_title = spec.legend && coin(rng, d.p_legend_title);
  spec.tick_grouping = spec.chart_type == "bar" && coin(rng, d.p_tick_grouping);
  spec.mark_labels = spec.chart_type != "bar" && coin(rng, d.p_mark_labels);
  spec.value_labels = coin(rng, d.p_value_labels);
  spec.other = coin(rng, d.p_other);
  spec.seed = rng();
  return spec;
}

Corpus generate_corpus(int n, const SpecDistribution& dist, std::uint64_t seed,
                       const std::string& name) {
  if (n <= 0) throw std::invalid_argument("generate_corpus needs n > 0");
  Corpus corpus;
  corpus.name = name;
  for (int i = 0; i < n; ++i) {
    char id[32];
    std::snprintf(id, sizeof id, "%s-%04d", name.c_str(), i);
    Rng rng = make_rng(seed, id);
    for (int attempt = 0;; ++attempt) {
      try {
        auto sample = generate_chart(sample_spec(dist, rng), id);
        sample.provenance = name;
        corpus.samples.push_back(std::move(sample));
        break;
      } catch (const SpecError&) {
        if (attempt >= 100) throw;
      }
    }
  }
  return corpus;
}

}  // namespace chartrole
