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
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "chartrole/corpus.hpp"

namespace chartrole {

enum class AugmentationMethod {
  kSaltPepperNoise,
  kGaussianNoise,
  kBrightness,
  kColor,
  kRotation,
  kCharInsert,
  kCharSubstitute,
  kCharDeletePrefix,
  kCutout,
};

std::string_view method_name(AugmentationMethod m);
std::optional<AugmentationMethod> parse_method(std::string_view name);

/// Comma-separated method names; "noise" expands to both noise methods.
/// Throws std::invalid_argument on unknown names or an empty list.
std::vector<AugmentationMethod> parse_method_list(std::string_view list);

/// Every method except cutout, which is a balancing method.
const std::vector<AugmentationMethod>& noisy_pool();

/// Methods used for training-time augmentation unless configured otherwise:
/// noise, prefix deletion and character insertion.
const std::vector<AugmentationMethod>& default_training_methods();

/// Parameter ranges of the built-in sampler. Explicit recipes are validated
/// against the hard limits instead (see validate_recipe).
struct SamplerRanges {
  double salt_pepper_min = 0.005;
  double salt_pepper_max = 0.05;
  double gaussian_sigma_min = 5.0;
  double gaussian_sigma_max = 25.0;
  double factor_min = 0.5;
  double factor_max = 1.5;
  double theta_max = 30.0;
};

/// Hard parameter limits.
inline constexpr double kMaxSaltPepperAmount = 0.1;
inline constexpr double kMaxGaussianSigma = 25.0;
inline constexpr double kMinPhotometricFactor = 0.5;
inline constexpr double kMaxPhotometricFactor = 1.5;

/// One augmentation with its parameters: "amount" (salt/pepper), "sigma"
/// (gaussian), "factor" (brightness/color), "theta" degrees (rotation).
struct AugmentationRecipe {
  AugmentationMethod method = AugmentationMethod::kGaussianNoise;
  std::map<std::string, double> params;
  std::uint64_t seed = 0;

  bool operator==(const AugmentationRecipe&) const = default;
};

/// Throws std::invalid_argument when a parameter is missing or out of range.
void validate_recipe(const AugmentationRecipe& recipe);

/// Serialized as {"recipe": {"method": ..., "params": {...}, "seed": N}}.
std::string recipe_to_json(const AugmentationRecipe& recipe);
AugmentationRecipe recipe_from_json(std::string_view text);

/// Draws a method's parameters uniformly within `ranges`.
AugmentationRecipe sample_recipe(AugmentationMethod method, std::uint64_t seed,
                                 const SamplerRanges& ranges = {});

// Image operations. All leave the block list untouched except rotation,
// which re-projects the boxes.

ChartSample rotate_sample(const ChartSample& sample, double theta_deg);

/// `strength` is the corrupted-pixel fraction for salt/pepper and the
/// standard deviation (0-255 scale) for gaussian noise.
ChartSample apply_image_noise(const ChartSample& sample, AugmentationMethod method,
                              double strength, std::uint64_t seed);

/// Brightness scales all channels; color scales saturation around the
/// per-pixel luma. Factor must lie in [0.5, 1.5].
ChartSample adjust_photometry(const ChartSample& sample, AugmentationMethod method,
                              double factor);

// Text operations on UTF-8 strings; lengths count code points.

/// Characters used for insertion and substitution: ASCII letters, digits, space.
std::u32string_view augmentation_alphabet();

std::string char_insert(const std::string& text, std::uint64_t seed);
std::string char_substitute(const std::string& text, std::uint64_t seed);
/// Removes k in [1, 5] leading characters from texts of 10 or more characters.
std::string char_delete_prefix(const std::string& text, std::uint64_t seed);
/// Deterministic core of char_delete_prefix.
std::string delete_prefix(const std::string& text, std::size_t k);

/// Applies one recipe to a sample. Text methods touch every block, each with
/// its own seed derived from the recipe seed and the block id. Cutout is not
/// handled here (it needs the corpus histogram; see balancing.hpp).
ChartSample apply_recipe(const ChartSample& sample, const AugmentationRecipe& recipe);

struct NoisyCorpus {
  Corpus corpus;
  std::vector<AugmentationRecipe> recipes;  // one per sample, corpus order
};

/// Robustness test set: every sample receives exactly one augmentation drawn
/// uniformly from noisy_pool(). Ids are kept; name/provenance gain "-N".
NoisyCorpus make_noisy_corpus(const Corpus& corpus, std::uint64_t seed,
                              const SamplerRanges& ranges = {});

/// The recipe make_noisy_corpus uses for one sample.
AugmentationRecipe noisy_recipe_for(const std::string& sample_id, std::uint64_t seed,
                                    const SamplerRanges& ranges = {});

/// Original samples followed by one augmented copy per sample, each using a
/// method drawn uniformly from `methods`. Copies get the id suffix "~aug" and
/// join the split of their source sample.
Corpus augment_corpus(const Corpus& corpus, const std::vector<AugmentationMethod>& methods,
                      std::uint64_t seed, const SamplerRanges& ranges = {});

}  // namespace chartrole
