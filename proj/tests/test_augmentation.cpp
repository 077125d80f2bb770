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
#include "chartrole/synth.hpp"
#include "fixtures.hpp"
#include "oracles.hpp"

using namespace chartrole;
using fixtures::block;
using fixtures::make_sample;

namespace {

ChartSample uniform_sample(int w, int h, Rgb c) {
  auto s = make_sample("u", w, h, {block(0, "text", 1, 1, 10, 5)});
  s.image = std::make_shared<const Image>(w, h, c);
  return s;
}

bool is_subsequence(const std::string& small, const std::string& big) {
  std::size_t j = 0;
  for (char c : big) {
    if (j < small.size() && small[j] == c) ++j;
  }
  return j == small.size();
}

void expect_labels_kept(const ChartSample& a, const ChartSample& b) {
  REQUIRE(a.blocks.size() == b.blocks.size());
  for (std::size_t i = 0; i < a.blocks.size(); ++i) {
    CHECK(a.blocks[i].block_id == b.blocks[i].block_id);
    CHECK(a.blocks[i].role == b.blocks[i].role);
  }
}

}  // namespace

TEST_CASE("quarter-turn box matches the corner oracle") {
  const auto s = make_sample("q", 100, 100, {block(0, "ab", 10, 10, 20, 10)});
  const auto r = rotate_sample(s, 90);
  double xs[4], ys[4];
  int i = 0;
  for (auto [x, y] : {std::pair{10.0, 10.0}, {30.0, 10.0}, {10.0, 20.0}, {30.0, 20.0}}) {
    oracle::rotate_point(x, y, 90, 50, 50, 50, 50, xs[i], ys[i]);
    ++i;
  }
  const auto& b = r.blocks[0].bbox;
  CHECK(b.x == doctest::Approx(*std::min_element(xs, xs + 4)));
  CHECK(b.y == doctest::Approx(*std::min_element(ys, ys + 4)));
  CHECK(b.right() == doctest::Approx(*std::max_element(xs, xs + 4)));
  CHECK(b.bottom() == doctest::Approx(*std::max_element(ys, ys + 4)));
  CHECK(b.width == doctest::Approx(10));
  CHECK(b.height == doctest::Approx(20));
}

TEST_CASE("rotating forth and back restores box centres") {
  const auto s = generate_chart({}, "c");
  for (double theta : {-30.0, -8.0, 17.0, 30.0}) {
    const auto there = rotate_sample(s, theta);
    const auto back = rotate_sample(there, -theta);
    const double dx = back.raster().width() / 2.0 - s.raster().width() / 2.0;
    const double dy = back.raster().height() / 2.0 - s.raster().height() / 2.0;
    for (std::size_t i = 0; i < s.blocks.size(); ++i) {
      CHECK(std::abs(back.blocks[i].bbox.center_x() - dx - s.blocks[i].bbox.center_x()) <= 0.5);
      CHECK(std::abs(back.blocks[i].bbox.center_y() - dy - s.blocks[i].bbox.center_y()) <= 0.5);
    }
    expect_labels_kept(s, there);
  }
}

TEST_CASE("salt and pepper corrupts the expected share of pixels") {
  const auto s = uniform_sample(100, 100, {128, 128, 128});
  const auto out = apply_image_noise(s, AugmentationMethod::kSaltPepperNoise, 0.02, 5);
  int changed = 0;
  for (int y = 0; y < 100; ++y) {
    for (int x = 0; x < 100; ++x) changed += out.raster().at(x, y) != s.raster().at(x, y);
  }
  const double sigma = std::sqrt(1e4 * 0.02 * 0.98);
  CHECK(std::abs(changed - 200.0) <= 3 * sigma);
  CHECK(out.blocks == s.blocks);
  CHECK(apply_image_noise(s, AugmentationMethod::kSaltPepperNoise, 0.02, 5).raster() == out.raster());
  CHECK(apply_image_noise(s, AugmentationMethod::kSaltPepperNoise, 0.02, 6).raster() != out.raster());
  CHECK_THROWS_AS(apply_image_noise(s, AugmentationMethod::kSaltPepperNoise, 0.2, 1), std::invalid_argument);
  CHECK_THROWS_AS(apply_image_noise(s, AugmentationMethod::kSaltPepperNoise, 0.0, 1), std::invalid_argument);
}

TEST_CASE("vanishing gaussian noise leaves intensities within one level") {
  const auto s = generate_chart({}, "c");
  const auto out = apply_image_noise(s, AugmentationMethod::kGaussianNoise, 1e-9, 3);
  const auto a = s.raster().data(), b = out.raster().data();
  for (std::size_t i = 0; i < a.size(); ++i) REQUIRE(std::abs(int(a[i]) - int(b[i])) <= 1);
  CHECK_THROWS_AS(apply_image_noise(s, AugmentationMethod::kGaussianNoise, 26, 1), std::invalid_argument);
}

TEST_CASE("photometric adjustment") {
  const auto s = uniform_sample(20, 10, {128, 128, 128});
  const auto dark = adjust_photometry(s, AugmentationMethod::kBrightness, 0.5);
  for (int y = 0; y < 10; ++y) {
    for (int x = 0; x < 20; ++x) CHECK(dark.raster().at(x, y) == Rgb{64, 64, 64});
  }
  const auto chart = generate_chart({}, "c");
  CHECK(adjust_photometry(chart, AugmentationMethod::kBrightness, 1.0).raster() == chart.raster());
  CHECK(adjust_photometry(chart, AugmentationMethod::kColor, 1.0).raster() == chart.raster());
  CHECK_THROWS_AS(adjust_photometry(chart, AugmentationMethod::kColor, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(adjust_photometry(chart, AugmentationMethod::kBrightness, 1.6), std::invalid_argument);
  // Grey pixels carry no saturation to scale.
  CHECK(adjust_photometry(s, AugmentationMethod::kColor, 1.5).raster() == s.raster());
}

TEST_CASE("character insertion adds exactly one character") {
  std::mt19937_64 rng(9);
  for (int i = 0; i < 500; ++i) {
    std::string t;
    const int n = std::uniform_int_distribution<int>(1, 20)(rng);
    for (int k = 0; k < n; ++k) t += static_cast<char>('a' + rng() % 26);
    const auto out = char_insert(t, rng());
    CHECK(out.size() == t.size() + 1);
    CHECK(is_subsequence(t, out));
  }
  const auto ab = char_insert("ab", 42);
  CHECK(ab.size() == 3);
  CHECK((ab.substr(1) == "ab" || (ab[0] == 'a' && ab[2] == 'b') || ab.substr(0, 2) == "ab"));
  CHECK(char_insert("ab", 42) == ab);
}

TEST_CASE("character substitution changes exactly one position") {
  std::mt19937_64 rng(10);
  for (int i = 0; i < 500; ++i) {
    std::string t;
    const int n = std::uniform_int_distribution<int>(1, 20)(rng);
    for (int k = 0; k < n; ++k) t += static_cast<char>('A' + rng() % 26);
    const auto out = char_substitute(t, rng());
    REQUIRE(out.size() == t.size());
    int hamming = 0;
    for (std::size_t k = 0; k < t.size(); ++k) hamming += t[k] != out[k];
    CHECK(hamming == 1);
  }
  CHECK(char_substitute("A", 1) != "A");
  CHECK(char_substitute("A", 1) == char_substitute("A", 1));
}

TEST_CASE("prefix deletion") {
  CHECK(delete_prefix("French controls from general population", 3) == "nch controls from general population");
  CHECK(char_delete_prefix("tick", 5) == "tick");
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    const auto out = char_delete_prefix("abcdefghij", seed);
    CHECK(out.size() >= 5);
    CHECK(out.size() <= 9);
    CHECK(std::string("abcdefghij").ends_with(out));
  }
}

TEST_CASE("recipes round-trip through JSON and validate") {
  for (auto m : {AugmentationMethod::kSaltPepperNoise, AugmentationMethod::kGaussianNoise,
                 AugmentationMethod::kBrightness, AugmentationMethod::kColor, AugmentationMethod::kRotation,
                 AugmentationMethod::kCharInsert}) {
    const auto r = sample_recipe(m, 17);
    CHECK(recipe_from_json(recipe_to_json(r)) == r);
    CHECK_NOTHROW(validate_recipe(r));
  }
  for (std::uint64_t seed = 0; seed < 300; ++seed) {
    const double theta = sample_recipe(AugmentationMethod::kRotation, seed).params.at("theta");
    CHECK(theta >= -30);
    CHECK(theta <= 30);
  }
  CHECK_THROWS_AS(recipe_from_json(R"({"recipe":{"method":"warp"}})"), std::invalid_argument);
  CHECK_THROWS_AS(recipe_from_json("nope"), std::invalid_argument);
  AugmentationRecipe bad{AugmentationMethod::kColor, {{"factor", 3.0}}, 0};
  CHECK_THROWS_AS(validate_recipe(bad), std::invalid_argument);
}

TEST_CASE("method lists") {
  const auto noise = parse_method_list("noise,char_delete_prefix,char_insert");
  CHECK(noise == default_training_methods());
  CHECK(default_training_methods() ==
        std::vector<AugmentationMethod>{AugmentationMethod::kSaltPepperNoise, AugmentationMethod::kGaussianNoise,
                                        AugmentationMethod::kCharDeletePrefix, AugmentationMethod::kCharInsert});
  CHECK(noisy_pool().size() == 8);
  CHECK_THROWS(parse_method_list("noise,bogus"));
}

TEST_CASE("noisy pool methods are drawn uniformly") {
  std::vector<std::size_t> counts(noisy_pool().size(), 0);
  for (int i = 0; i < 10000; ++i) {
    const auto r = noisy_recipe_for("s" + std::to_string(i), 1234);
    const auto it = std::find(noisy_pool().begin(), noisy_pool().end(), r.method);
    REQUIRE(it != noisy_pool().end());
    ++counts[static_cast<std::size_t>(it - noisy_pool().begin())];
  }
  const auto chi = oracle::chi_square(counts, std::vector<double>(counts.size(), 1.0));
  CHECK(chi.p_value > 0.01);
}

TEST_CASE("noisy corpus keeps ids, size and labels") {
  const auto corpus = generate_corpus(12, {}, 3);
  const auto noisy = make_noisy_corpus(corpus, 5);
  REQUIRE(noisy.corpus.size() == corpus.size());
  REQUIRE(noisy.recipes.size() == corpus.size());
  CHECK(class_distribution(noisy.corpus) == class_distribution(corpus));
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    CHECK(noisy.corpus.samples[i].sample_id == corpus.samples[i].sample_id);
    CHECK(noisy.corpus.samples[i].provenance.ends_with("-N"));
    expect_labels_kept(corpus.samples[i], noisy.corpus.samples[i]);
    CHECK(noisy.recipes[i] == noisy_recipe_for(corpus.samples[i].sample_id, 5));
  }
  const auto again = make_noisy_corpus(corpus, 5);
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    CHECK(again.corpus.samples[i].raster() == noisy.corpus.samples[i].raster());
    CHECK(again.corpus.samples[i].blocks == noisy.corpus.samples[i].blocks);
  }
}

TEST_CASE("augment_corpus concatenates one copy per sample") {
  const auto corpus = generate_corpus(10, {}, 4);
  const auto out = augment_corpus(corpus, {AugmentationMethod::kGaussianNoise}, 2);
  REQUIRE(out.size() == 20);
  for (std::size_t i = 0; i < 10; ++i) {
    CHECK(out.samples[i].raster() == corpus.samples[i].raster());
    const auto& aug = out.samples[10 + i];
    CHECK(aug.sample_id == corpus.samples[i].sample_id + "~aug");
    CHECK(aug.raster() != corpus.samples[i].raster());
    expect_labels_kept(corpus.samples[i], aug);
  }
  const auto again = augment_corpus(corpus, {AugmentationMethod::kGaussianNoise}, 2);
  for (std::size_t i = 0; i < 20; ++i) CHECK(again.samples[i].raster() == out.samples[i].raster());
  CHECK(augment_corpus(Corpus{}, default_training_methods(), 1).empty());
  CHECK_THROWS_AS(augment_corpus(corpus, {}, 1), std::invalid_argument);
}
