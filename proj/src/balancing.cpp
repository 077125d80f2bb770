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

#include "chartrole/balancing.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <stdexcept>

namespace chartrole {

ClassWeights class_weights(const RoleHistogram& histogram) {
  const auto total = static_cast<double>(histogram_total(histogram));
  if (total == 0) throw std::invalid_argument("class_weights needs a non-empty histogram");
  const auto present = static_cast<double>(
      std::count_if(histogram.begin(), histogram.end(), [](std::size_t n) { return n > 0; }));
  ClassWeights w{};
  double max_w = 0;
  for (std::size_t c = 0; c < kNumRoles; ++c) {
    if (histogram[c] == 0) continue;
    w[c] = total / (present * static_cast<double>(histogram[c]));
    max_w = std::max(max_w, w[c]);
  }
  for (std::size_t c = 0; c < kNumRoles; ++c) {
    if (histogram[c] == 0) w[c] = max_w;
  }
  return w;
}

double weighted_cross_entropy(std::span<const RoleLogits> logits, std::span<const TextRole> labels,
                              const ClassWeights& weights, std::vector<RoleLogits>* grad) {
  if (logits.size() != labels.size()) throw std::invalid_argument("one label per logit row required");
  if (grad) grad->assign(logits.size(), RoleLogits{});
  if (logits.empty()) return 0;
  const double inv_n = 1.0 / static_cast<double>(logits.size());
  double loss = 0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    const auto& z = logits[i];
    const double zmax = *std::max_element(z.begin(), z.end());
    double denom = 0;
    for (double v : z) denom += std::exp(v - zmax);
    const double log_denom = std::log(denom) + zmax;
    const auto y = role_index(labels[i]);
    const double w = weights[y];
    loss += w * (log_denom - z[y]);
    if (grad) {
      auto& g = (*grad)[i];
      for (std::size_t c = 0; c < kNumRoles; ++c) {
        const double p = std::exp(z[c] - log_denom);
        g[c] = w * inv_n * (p - (c == y ? 1.0 : 0.0));
      }
    }
  }
  return loss * inv_n;
}

TextRole draw_cutout_class(const ChartSample& sample, const RoleHistogram& corpus_histogram,
                           Rng& rng, CutoutSampling sampling) {
  std::array<bool, kNumRoles> present{};
  bool any = false;
  for (const auto& b : sample.blocks) {
    if (b.role) {
      present[role_index(*b.role)] = true;
      any = true;
    }
  }
  if (!any) throw std::invalid_argument("cutout needs at least one labeled block");
  std::array<double, kNumRoles> mass{};
  double total = 0;
  for (std::size_t c = 0; c < kNumRoles; ++c) {
    if (!present[c]) continue;
    const double n = static_cast<double>(corpus_histogram[c]);
    mass[c] = sampling == CutoutSampling::kProportional ? n : 1.0 / std::max(n, 1.0);
    total += mass[c];
  }
  if (total == 0) {
    // Classes of this sample never occur in the histogram: fall back to uniform.
    for (std::size_t c = 0; c < kNumRoles; ++c) mass[c] = present[c] ? 1.0 : 0.0;
    total = static_cast<double>(std::count(present.begin(), present.end(), true));
  }
  const double u = std::uniform_real_distribution<double>(0.0, total)(rng);
  double acc = 0;
  std::size_t last = 0;
  for (std::size_t c = 0; c < kNumRoles; ++c) {
    if (mass[c] == 0) continue;
    acc += mass[c];
    last = c;
    if (u < acc) return role_at(c);
  }
  return role_at(last);
}

CutoutResult cutout_sample(const ChartSample& sample, const RoleHistogram& corpus_histogram,
                           std::uint64_t seed, const CutoutOptions& options) {
  Rng rng(seed);
  CutoutPlan plan;
  plan.target_class = draw_cutout_class(sample, corpus_histogram, rng, options.sampling);

  std::vector<int> candidates;
  for (const auto& b : sample.blocks) {
    if (b.role == plan.target_class) candidates.push_back(b.block_id);
  }
  plan.n_masks = std::uniform_int_distribution<int>(1, static_cast<int>(candidates.size()))(rng);
  std::shuffle(candidates.begin(), candidates.end(), rng);
  candidates.resize(static_cast<std::size_t>(plan.n_masks));
  std::sort(candidates.begin(), candidates.end());
  plan.masked_block_ids = candidates;
  plan.mask_color = options.mask_color.value_or(mean_color(sample.raster()));

  Image image = sample.raster();
  for (const auto& b : sample.blocks) {
    if (!std::binary_search(candidates.begin(), candidates.end(), b.block_id)) continue;
    const int x0 = std::max(0, static_cast<int>(std::floor(b.bbox.x)) - 1);
    const int y0 = std::max(0, static_cast<int>(std::floor(b.bbox.y)) - 1);
    const int x1 = std::min(image.width(), static_cast<int>(std::ceil(b.bbox.right())) + 1);
    const int y1 = std::min(image.height(), static_cast<int>(std::ceil(b.bbox.bottom())) + 1);
    for (int y = y0; y < y1; ++y) {
      for (int x = x0; x < x1; ++x) {
        if (b.bbox.covers_pixel(x, y)) image.set(x, y, plan.mask_color);
      }
    }
  }
  CutoutResult result{sample, std::move(plan)};
  result.sample.image = std::make_shared<const Image>(std::move(image));
  return result;
}

Corpus cutout_corpus(const Corpus& corpus, std::uint64_t seed, const CutoutOptions& options) {
  const auto histogram = class_distribution(corpus);
  Corpus out = corpus;
  std::map<std::string, std::string> split_of;
  for (const auto& [split, ids] : corpus.splits) {
    for (const auto& id : ids) split_of[id] = split;
  }
  for (const auto& s : corpus.samples) {
    const bool labeled = std::any_of(s.blocks.begin(), s.blocks.end(),
                                     [](const TextBlock& b) { return b.role.has_value(); });
    if (!labeled) continue;
    auto result = cutout_sample(s, histogram, derive_seed(seed, s.sample_id), options);
    result.sample.sample_id = s.sample_id + "~cut";
    if (auto it = split_of.find(s.sample_id); it != split_of.end()) {
      out.splits[it->second].push_back(result.sample.sample_id);
    }
    out.samples.push_back(std::move(result.sample));
  }
  return out;
}

}  // namespace chartrole
