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

#include "chartrole/augmentation.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "chartrole/kernels.hpp"
#include "chartrole/rng.hpp"
#include "json.hpp"
#include "utf8.hpp"

namespace chartrole {

namespace {

constexpr std::array<std::string_view, 9> kMethodNames = {
    "salt_pepper_noise", "gaussian_noise", "brightness",         "color", "rotation",
    "char_insert",       "char_substitute", "char_delete_prefix", "cutout",
};

constexpr std::u32string_view kAlphabet =
    U"ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789 ";

double uniform(Rng& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

std::size_t uniform_index(Rng& rng, std::size_t n) {
  return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng);
}

double require_param(const AugmentationRecipe& r, const std::string& key) {
  auto it = r.params.find(key);
  if (it == r.params.end()) {
    throw std::invalid_argument(std::string(method_name(r.method)) + " recipe needs '" + key + "'");
  }
  return it->second;
}

std::uint8_t to_byte(double v) {
  return static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L));
}

ChartSample with_image(const ChartSample& sample, Image image) {
  ChartSample out = sample;
  out.image = std::make_shared<const Image>(std::move(image));
  return out;
}

}  // namespace

std::string_view method_name(AugmentationMethod m) {
  return kMethodNames.at(static_cast<std::size_t>(m));
}

std::optional<AugmentationMethod> parse_method(std::string_view name) {
  for (std::size_t i = 0; i < kMethodNames.size(); ++i) {
    if (kMethodNames[i] == name) return static_cast<AugmentationMethod>(i);
  }
  return std::nullopt;
}

std::vector<AugmentationMethod> parse_method_list(std::string_view list) {
  std::vector<AugmentationMethod> out;
  auto add = [&](AugmentationMethod m) {
    if (std::find(out.begin(), out.end(), m) == out.end()) out.push_back(m);
  };
  std::size_t start = 0;
  while (start <= list.size()) {
    auto end = list.find(',', start);
    if (end == std::string_view::npos) end = list.size();
    auto item = list.substr(start, end - start);
    while (!item.empty() && item.front() == ' ') item.remove_prefix(1);
    while (!item.empty() && item.back() == ' ') item.remove_suffix(1);
    if (!item.empty()) {
      if (item == "noise") {
        add(AugmentationMethod::kSaltPepperNoise);
        add(AugmentationMethod::kGaussianNoise);
      } else if (auto m = parse_method(item)) {
        add(*m);
      } else {
        throw std::invalid_argument("unknown augmentation method '" + std::string(item) + "'");
      }
    }
    start = end + 1;
  }
  if (out.empty()) throw std::invalid_argument("empty augmentation method list");
  return out;
}

const std::vector<AugmentationMethod>& noisy_pool() {
  static const std::vector<AugmentationMethod> pool = {
      AugmentationMethod::kSaltPepperNoise, AugmentationMethod::kGaussianNoise,
      AugmentationMethod::kBrightness,      AugmentationMethod::kColor,
      AugmentationMethod::kRotation,        AugmentationMethod::kCharInsert,
      AugmentationMethod::kCharSubstitute,  AugmentationMethod::kCharDeletePrefix,
  };
  return pool;
}

const std::vector<AugmentationMethod>& default_training_methods() {
  static const std::vector<AugmentationMethod> methods = {
      AugmentationMethod::kSaltPepperNoise, AugmentationMethod::kGaussianNoise,
      AugmentationMethod::kCharDeletePrefix, AugmentationMethod::kCharInsert,
  };
  return methods;
}

void validate_recipe(const AugmentationRecipe& recipe) {
  switch (recipe.method) {
    case AugmentationMethod::kSaltPepperNoise: {
      const double a = require_param(recipe, "amount");
      if (!(a > 0 && a <= kMaxSaltPepperAmount)) {
        throw std::invalid_argument("salt/pepper amount must lie in (0, 0.1]");
      }
      break;
    }
    case AugmentationMethod::kGaussianNoise: {
      const double s = require_param(recipe, "sigma");
      if (!(s > 0 && s <= kMaxGaussianSigma)) {
        throw std::invalid_argument("gaussian sigma must lie in (0, 25]");
      }
      break;
    }
    case AugmentationMethod::kBrightness:
    case AugmentationMethod::kColor: {
      const double f = require_param(recipe, "factor");
      if (!(f >= kMinPhotometricFactor && f <= kMaxPhotometricFactor)) {
        throw std::invalid_argument("photometric factor must lie in [0.5, 1.5]");
      }
      break;
    }
    case AugmentationMethod::kRotation: {
      if (!std::isfinite(require_param(recipe, "theta"))) {
        throw std::invalid_argument("rotation angle must be finite");
      }
      break;
    }
    default:
      break;
  }
}

std::string recipe_to_json(const AugmentationRecipe& recipe) {
  nlohmann::json params = nlohmann::json::object();
  for (const auto& [k, v] : recipe.params) params[k] = v;
  nlohmann::json doc = {{"recipe",
                         {{"method", std::string(method_name(recipe.method))},
                          {"params", params},
                          {"seed", recipe.seed}}}};
  return doc.dump();
}

AugmentationRecipe recipe_from_json(std::string_view text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument(std::string("recipe is not valid JSON: ") + e.what());
  }
  const auto& r = doc.contains("recipe") ? doc["recipe"] : doc;
  if (!r.is_object() || !r.contains("method") || !r["method"].is_string()) {
    throw std::invalid_argument("recipe needs a 'method' string");
  }
  AugmentationRecipe recipe;
  auto method = parse_method(r["method"].get<std::string>());
  if (!method) throw std::invalid_argument("unknown augmentation method " + r["method"].dump());
  recipe.method = *method;
  if (r.contains("params")) {
    if (!r["params"].is_object()) throw std::invalid_argument("recipe params must be an object");
    for (const auto& [k, v] : r["params"].items()) {
      if (!v.is_number()) throw std::invalid_argument("recipe param '" + k + "' must be a number");
      recipe.params[k] = v.get<double>();
    }
  }
  if (r.contains("seed")) {
    if (!r["seed"].is_number_unsigned()) throw std::invalid_argument("recipe seed must be unsigned");
    recipe.seed = r["seed"].get<std::uint64_t>();
  }
  validate_recipe(recipe);
  return recipe;
}

AugmentationRecipe sample_recipe(AugmentationMethod method, std::uint64_t seed,
                                 const SamplerRanges& ranges) {
  Rng rng(seed);
  AugmentationRecipe r;
  r.method = method;
  switch (method) {
    case AugmentationMethod::kSaltPepperNoise:
      r.params["amount"] = uniform(rng, ranges.salt_pepper_min, ranges.salt_pepper_max);
      break;
    case AugmentationMethod::kGaussianNoise:
      r.params["sigma"] = uniform(rng, ranges.gaussian_sigma_min, ranges.gaussian_sigma_max);
      break;
    case AugmentationMethod::kBrightness:
    case AugmentationMethod::kColor:
      r.params["factor"] = uniform(rng, ranges.factor_min, ranges.factor_max);
      break;
    case AugmentationMethod::kRotation:
      r.params["theta"] = uniform(rng, -ranges.theta_max, ranges.theta_max);
      break;
    default:
      break;
  }
  r.seed = rng();
  return r;
}

ChartSample rotate_sample(const ChartSample& sample, double theta_deg) {
  if (!std::isfinite(theta_deg)) throw std::invalid_argument("rotation angle must be finite");
  if (theta_deg == 0) return sample;
  const auto t = RotationTransform::make(theta_deg, sample.dims());
  ChartSample out =
      with_image(sample, kernels::omp::rotate_nearest(sample.raster(), t, {255, 255, 255}));
  const ImageDims dims{t.out_width, t.out_height};
  for (auto& b : out.blocks) {
    // The rotated box always overlaps the expanded canvas.
    b.bbox = clamp_bbox(t.map_box(b.bbox), dims).value_or(b.bbox);
  }
  return out;
}

ChartSample apply_image_noise(const ChartSample& sample, AugmentationMethod method,
                              double strength, std::uint64_t seed) {
  Image image = sample.raster();
  Rng rng(seed);
  auto px = image.data();
  if (method == AugmentationMethod::kSaltPepperNoise) {
    if (!(strength > 0 && strength <= kMaxSaltPepperAmount)) {
      throw std::invalid_argument("salt/pepper amount must lie in (0, 0.1]");
    }
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    for (std::size_t i = 0; i < px.size(); i += 3) {
      const bool hit = unit(rng) < strength;
      const bool salt = unit(rng) < 0.5;
      if (hit) {
        const std::uint8_t v = salt ? 255 : 0;
        px[i] = px[i + 1] = px[i + 2] = v;
      }
    }
  } else if (method == AugmentationMethod::kGaussianNoise) {
    if (!(strength > 0 && strength <= kMaxGaussianSigma)) {
      throw std::invalid_argument("gaussian sigma must lie in (0, 25]");
    }
    std::normal_distribution<double> noise(0.0, strength);
    for (auto& v : px) v = to_byte(v + noise(rng));
  } else {
    throw std::invalid_argument("not a noise method: " + std::string(method_name(method)));
  }
  return with_image(sample, std::move(image));
}

ChartSample adjust_photometry(const ChartSample& sample, AugmentationMethod method,
                              double factor) {
  if (!(factor >= kMinPhotometricFactor && factor <= kMaxPhotometricFactor)) {
    throw std::invalid_argument("photometric factor must lie in [0.5, 1.5]");
  }
  if (method != AugmentationMethod::kBrightness && method != AugmentationMethod::kColor) {
    throw std::invalid_argument("not a photometric method: " + std::string(method_name(method)));
  }
  if (factor == 1.0) return sample;
  Image image = sample.raster();
  auto px = image.data();
  if (method == AugmentationMethod::kBrightness) {
    for (auto& v : px) v = to_byte(v * factor);
  } else {
    for (std::size_t i = 0; i < px.size(); i += 3) {
      const double luma = 0.299 * px[i] + 0.587 * px[i + 1] + 0.114 * px[i + 2];
      for (int c = 0; c < 3; ++c) px[i + c] = to_byte(luma + factor * (px[i + c] - luma));
    }
  }
  return with_image(sample, std::move(image));
}

std::u32string_view augmentation_alphabet() { return kAlphabet; }

std::string char_insert(const std::string& text, std::uint64_t seed) {
  Rng rng(seed);
  auto cps = utf8::decode(text);
  const auto pos = uniform_index(rng, cps.size() + 1);
  const auto ch = kAlphabet[uniform_index(rng, kAlphabet.size())];
  cps.insert(cps.begin() + static_cast<std::ptrdiff_t>(pos), ch);
  return utf8::encode(cps);
}

std::string char_substitute(const std::string& text, std::uint64_t seed) {
  auto cps = utf8::decode(text);
  if (cps.empty()) return text;
  Rng rng(seed);
  const auto pos = uniform_index(rng, cps.size());
  // Draw from the alphabet minus the current character.
  std::u32string choices;
  for (char32_t c : kAlphabet) {
    if (c != cps[pos]) choices.push_back(c);
  }
  cps[pos] = choices[uniform_index(rng, choices.size())];
  return utf8::encode(cps);
}

std::string delete_prefix(const std::string& text, std::size_t k) {
  auto cps = utf8::decode(text);
  cps.erase(0, std::min(k, cps.size()));
  return utf8::encode(cps);
}

std::string char_delete_prefix(const std::string& text, std::uint64_t seed) {
  if (utf8::decode(text).size() < 10) return text;
  Rng rng(seed);
  const std::size_t k = 1 + uniform_index(rng, 5);
  return delete_prefix(text, k);
}

ChartSample apply_recipe(const ChartSample& sample, const AugmentationRecipe& recipe) {
  validate_recipe(recipe);
  auto text_op = [&](auto&& op) {
    ChartSample out = sample;
    for (auto& b : out.blocks) {
      b.text = op(b.text, derive_seed(recipe.seed, "block:" + std::to_string(b.block_id)));
    }
    return out;
  };
  switch (recipe.method) {
    case AugmentationMethod::kSaltPepperNoise:
      return apply_image_noise(sample, recipe.method, recipe.params.at("amount"), recipe.seed);
    case AugmentationMethod::kGaussianNoise:
      return apply_image_noise(sample, recipe.method, recipe.params.at("sigma"), recipe.seed);
    case AugmentationMethod::kBrightness:
    case AugmentationMethod::kColor:
      return adjust_photometry(sample, recipe.method, recipe.params.at("factor"));
    case AugmentationMethod::kRotation:
      return rotate_sample(sample, recipe.params.at("theta"));
    case AugmentationMethod::kCharInsert:
      return text_op(char_insert);
    case AugmentationMethod::kCharSubstitute:
      return text_op(char_substitute);
    case AugmentationMethod::kCharDeletePrefix:
      return text_op(char_delete_prefix);
    case AugmentationMethod::kCutout:
      break;
  }
  throw std::invalid_argument("cutout is applied through cutout_sample, not apply_recipe");
}

AugmentationRecipe noisy_recipe_for(const std::string& sample_id, std::uint64_t seed,
                                    const SamplerRanges& ranges) {
  Rng rng = make_rng(seed, sample_id);
  const auto& pool = noisy_pool();
  const auto method = pool[uniform_index(rng, pool.size())];
  return sample_recipe(method, rng(), ranges);
}

NoisyCorpus make_noisy_corpus(const Corpus& corpus, std::uint64_t seed,
                              const SamplerRanges& ranges) {
  NoisyCorpus out;
  out.corpus.name = corpus.name + "-N";
  out.corpus.splits = corpus.splits;
  for (const auto& s : corpus.samples) {
    auto recipe = noisy_recipe_for(s.sample_id, seed, ranges);
    ChartSample noisy = apply_recipe(s, recipe);
    noisy.provenance = s.provenance + "-N";
    out.corpus.samples.push_back(std::move(noisy));
    out.recipes.push_back(std::move(recipe));
  }
  return out;
}

Corpus augment_corpus(const Corpus& corpus, const std::vector<AugmentationMethod>& methods,
                      std::uint64_t seed, const SamplerRanges& ranges) {
  if (methods.empty()) throw std::invalid_argument("augment_corpus needs at least one method");
  for (auto m : methods) {
    if (m == AugmentationMethod::kCutout) {
      throw std::invalid_argument("cutout copies come from the balancing module");
    }
  }
  Corpus out = corpus;
  std::map<std::string, std::string> split_of;
  for (const auto& [split, ids] : corpus.splits) {
    for (const auto& id : ids) split_of[id] = split;
  }
  for (const auto& s : corpus.samples) {
    Rng rng = make_rng(seed, s.sample_id);
    const auto method = methods[uniform_index(rng, methods.size())];
    ChartSample aug = apply_recipe(s, sample_recipe(method, rng(), ranges));
    aug.sample_id = s.sample_id + "~aug";
    if (auto it = split_of.find(s.sample_id); it != split_of.end()) {
      out.splits[it->second].push_back(aug.sample_id);
    }
    out.samples.push_back(std::move(aug));
  }
  return out;
}

}  // namespace chartrole
