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

#include "chartrole/balancing.hpp"
#include "chartrole/synth.hpp"
#include "checks.hpp"
#include "fixtures.hpp"
#include "oracles.hpp"

using namespace chartrole;
using fixtures::block;
using fixtures::make_sample;

TEST_CASE("class weights") {
  RoleHistogram uniform;
  uniform.fill(10);
  for (double w : class_weights(uniform)) CHECK(w == doctest::Approx(1.0));

  RoleHistogram two{};
  two[0] = 90;
  two[1] = 10;
  const auto w = class_weights(two);
  CHECK(w[0] == doctest::Approx(100.0 / 180));
  CHECK(w[1] == doctest::Approx(5.0));
  for (std::size_t c = 2; c < kNumRoles; ++c) CHECK(w[c] == doctest::Approx(5.0));

  const auto h = fixtures::icpr22_histogram();
  const auto wi = class_weights(h);
  CHECK(wi[role_index(TextRole::kTickLabel)] < wi[role_index(TextRole::kLegendTitle)]);
  for (std::size_t a = 0; a < kNumRoles; ++a) {
    for (std::size_t b = 0; b < kNumRoles; ++b) {
      if (h[a] < h[b]) CHECK(wi[a] > wi[b]);
    }
  }
  CHECK_THROWS_AS(class_weights(RoleHistogram{}), std::invalid_argument);
}

TEST_CASE("weighted cross-entropy against the scalar oracle") {
  std::mt19937_64 rng(4);
  std::normal_distribution<double> z(0, 3);
  for (int trial = 0; trial < 200; ++trial) {
    const int n = 1 + static_cast<int>(rng() % 20);
    std::vector<RoleLogits> logits(static_cast<std::size_t>(n));
    std::vector<TextRole> labels;
    for (auto& l : logits) {
      for (auto& v : l) v = z(rng);
      labels.push_back(role_at(rng() % kNumRoles));
    }
    double plain = 0;
    for (int i = 0; i < n; ++i) plain += oracle::softmax_ce(logits[i], role_index(labels[i]));
    plain /= n;
    CHECK(std::abs(weighted_cross_entropy(logits, labels, unit_weights()) - plain) <= 1e-12);
  }

  // Two blocks, hand-set weights.
  RoleLogits a{}, b{};
  a[0] = 2;
  a[1] = 1;
  b[4] = 3;
  ClassWeights w = unit_weights();
  w[0] = 2.0;
  w[4] = 0.5;
  const std::vector<RoleLogits> logits{a, b};
  const std::vector<TextRole> labels{TextRole::kChartTitle, TextRole::kTickLabel};
  const double la = -(2 - std::log(std::exp(2.0) + std::exp(1.0) + 7.0));
  const double lb = -(3 - std::log(std::exp(3.0) + 8.0));
  CHECK(weighted_cross_entropy(logits, labels, w) == doctest::Approx((2.0 * la + 0.5 * lb) / 2).epsilon(1e-12));

  RoleLogits sat{};
  sat[3] = 1e6;
  const std::vector<RoleLogits> one{sat};
  const std::vector<TextRole> lab{TextRole::kAxisTitle};
  CHECK(weighted_cross_entropy(one, lab, unit_weights()) == doctest::Approx(0.0));
}

TEST_CASE("weighted cross-entropy gradient matches finite differences") {
  std::mt19937_64 rng(8);
  std::normal_distribution<double> z(0, 2);
  std::vector<RoleLogits> logits(4);
  for (auto& l : logits) {
    for (auto& v : l) v = z(rng);
  }
  const std::vector<TextRole> labels{TextRole::kOther, TextRole::kTickLabel, TextRole::kOther, TextRole::kMarkLabel};
  const auto w = class_weights(fixtures::icpr22_histogram());
  std::vector<RoleLogits> grad;
  weighted_cross_entropy(logits, labels, w, &grad);
  for (std::size_t i = 0; i < logits.size(); ++i) {
    for (std::size_t c = 0; c < kNumRoles; ++c) {
      const double num = oracle::central_difference(
          [&] { return weighted_cross_entropy(logits, labels, w); }, logits[i][c], 1e-6);
      CHECK(std::abs(num - grad[i][c]) <= 1e-7 + 1e-5 * std::abs(num));
    }
  }
}

TEST_CASE("cutout class frequencies follow the corpus histogram") {
  const auto sample = fixtures::all_roles_sample();
  const auto h = fixtures::icpr22_histogram();
  std::vector<std::size_t> counts(kNumRoles, 0);
  Rng rng(2026);
  for (int i = 0; i < 10000; ++i) {
    ++counts[role_index(draw_cutout_class(sample, h, rng, CutoutSampling::kProportional))];
  }
  std::vector<double> expected(h.begin(), h.end());
  const auto chi = oracle::chi_square(counts, expected);
  CHECK(chi.dof == 8);
  CHECK(chi.p_value > 0.01);
  CHECK(counts[role_index(TextRole::kTickLabel)] / 10000.0 == doctest::Approx(95430.0 / 135786).epsilon(0.02));
}

TEST_CASE("cutout draws only classes present in the sample") {
  const auto h = fixtures::icpr22_histogram();
  const auto only = make_sample("o", 60, 30, {block(0, "x", 1, 1, 5, 5, TextRole::kAxisTitle),
                                               block(1, "y", 20, 1, 5, 5, TextRole::kAxisTitle)});
  Rng rng(1);
  for (int i = 0; i < 200; ++i) CHECK(draw_cutout_class(only, h, rng, CutoutSampling::kProportional) == TextRole::kAxisTitle);

  // Two present classes: proportional to their corpus counts.
  const auto pair = make_sample("p", 60, 30, {block(0, "x", 1, 1, 5, 5, TextRole::kLegendTitle),
                                               block(1, "y", 20, 1, 5, 5, TextRole::kChartTitle)});
  std::vector<std::size_t> counts(2, 0);
  for (int i = 0; i < 10000; ++i) {
    counts[draw_cutout_class(pair, h, rng, CutoutSampling::kProportional) == TextRole::kChartTitle]++;
  }
  CHECK(oracle::chi_square(counts, {190.0, 493.0}).p_value > 0.01);

  std::fill(counts.begin(), counts.end(), 0);
  for (int i = 0; i < 10000; ++i) {
    counts[draw_cutout_class(pair, h, rng, CutoutSampling::kInverse) == TextRole::kChartTitle]++;
  }
  CHECK(oracle::chi_square(counts, {1.0 / 190, 1.0 / 493}).p_value > 0.01);
}

TEST_CASE("cutout masks exactly the planned boxes") {
  const auto corpus = generate_corpus(50, {}, 31);
  const auto h = class_distribution(corpus);
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    const auto& s = corpus.samples[i];
    const auto cut = cutout_sample(s, h, 100 + i);
    CHECK(cut.plan.n_masks == static_cast<int>(cut.plan.masked_block_ids.size()));
    CHECK(cut.plan.n_masks >= 1);
    for (int id : cut.plan.masked_block_ids) {
      const auto it = std::find_if(s.blocks.begin(), s.blocks.end(), [&](const TextBlock& b) { return b.block_id == id; });
      REQUIRE(it != s.blocks.end());
      CHECK(it->role == cut.plan.target_class);
    }
    CHECK(cut.sample.blocks == s.blocks);
    CHECK(cut.plan.mask_color == mean_color(s.raster()));
    CHECK(checks::mask_exact(s, cut));
  }
}

TEST_CASE("ten tick-label masks on a bar chart") {
  ChartSpec spec;
  spec.x_ticks = 6;
  spec.y_ticks = 4;
  spec.chart_title = false;
  spec.axis_titles = false;
  spec.legend = false;
  const auto s = generate_chart(spec, "bar10");
  const auto ticks = std::count_if(s.blocks.begin(), s.blocks.end(),
                                   [](const TextBlock& b) { return b.role == TextRole::kTickLabel; });
  REQUIRE(ticks == 10);
  bool found = false;
  for (std::uint64_t seed = 0; seed < 500 && !found; ++seed) {
    const auto cut = cutout_sample(s, class_distribution(Corpus{"c", {s}, {}}), seed);
    if (cut.plan.n_masks != 10) continue;
    found = true;
    CHECK(cut.plan.target_class == TextRole::kTickLabel);
    CHECK(checks::mask_exact(s, cut));
  }
  CHECK(found);
}

TEST_CASE("cutout is deterministic and rejects unlabeled samples") {
  const auto s = generate_chart({}, "c");
  const auto h = class_distribution(Corpus{"c", {s}, {}});
  const auto a = cutout_sample(s, h, 9), b = cutout_sample(s, h, 9);
  CHECK(a.sample.raster() == b.sample.raster());
  CHECK(a.plan.masked_block_ids == b.plan.masked_block_ids);
  const auto bare = make_sample("u", 20, 20, {block(0, "x", 1, 1, 5, 5, std::nullopt)});
  CHECK_THROWS_AS(cutout_sample(bare, h, 1), std::invalid_argument);
  CutoutOptions black;
  black.mask_color = Rgb{0, 0, 0};
  CHECK(cutout_sample(s, h, 9, black).plan.mask_color == Rgb{0, 0, 0});
}

TEST_CASE("cutout corpus survives export and load") {
  fixtures::TempDir dir("cutout");
  const auto corpus = generate_corpus(5, {}, 12);
  const auto cut = cutout_corpus(corpus, 4);
  CHECK(cut.size() == 10);
  export_annotations(cut, dir.path());
  const auto back = load_corpus(dir.path(), AnnotationFormat::kNative).corpus;
  REQUIRE(back.size() == cut.size());
  for (const auto& s : cut.samples) {
    const auto* t = back.find(s.sample_id);
    REQUIRE(t);
    CHECK(t->blocks == s.blocks);
    CHECK(t->raster() == s.raster());
  }
}
