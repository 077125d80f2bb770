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
#include <optional>
#include <span>
#include <vector>

#include "chartrole/corpus.hpp"
#include "chartrole/rng.hpp"

namespace chartrole {

using ClassWeights = std::array<double, kNumRoles>;

/// Inverse-frequency weights w_c = N / (K * n_c), where N is the total count
/// and K the number of classes seen. Unseen classes get the largest weight.
/// Throws std::invalid_argument for an all-zero histogram.
ClassWeights class_weights(const RoleHistogram& histogram);

inline ClassWeights unit_weights() {
  ClassWeights w;
  w.fill(1.0);
  return w;
}

/// Mean over blocks of w[label] * -log softmax(logits)[label]. When `grad` is
/// given it receives d(loss)/d(logits), one row per block.
double weighted_cross_entropy(std::span<const RoleLogits> logits, std::span<const TextRole> labels,
                              const ClassWeights& weights,
                              std::vector<RoleLogits>* grad = nullptr);

/// How the cutout target class is drawn from the corpus histogram.
enum class CutoutSampling {
  kProportional,  // p(c) ∝ n_c, among classes present in the sample
  kInverse,       // p(c) ∝ 1 / n_c
};

struct CutoutOptions {
  CutoutSampling sampling = CutoutSampling::kProportional;
  std::optional<Rgb> mask_color;  // default: mean color of the sample image
};

struct CutoutPlan {
  TextRole target_class = TextRole::kOther;
  int n_masks = 0;
  std::vector<int> masked_block_ids;
  Rgb mask_color{0, 0, 0};
};

struct CutoutResult {
  ChartSample sample;
  CutoutPlan plan;
};

/// Masks the boxes of a random number of blocks of one sampled class. Labels,
/// blocks and boxes are unchanged; only the pixels under the chosen boxes are
/// overwritten. Requires at least one labeled block.
CutoutResult cutout_sample(const ChartSample& sample, const RoleHistogram& corpus_histogram,
                           std::uint64_t seed, const CutoutOptions& options = {});

/// Draws only the target class (the first step of cutout_sample).
TextRole draw_cutout_class(const ChartSample& sample, const RoleHistogram& corpus_histogram,
                           Rng& rng, CutoutSampling sampling);

/// Original samples followed by one cutout copy ("~cut") per sample that has
/// labeled blocks, using the corpus' own histogram.
Corpus cutout_corpus(const Corpus& corpus, std::uint64_t seed, const CutoutOptions& options = {});

}  // namespace chartrole
