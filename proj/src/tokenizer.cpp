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

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <json.hpp>

#include "chartrole/encoder.hpp"
#include "utf8.hpp"

namespace chartrole {

using nlohmann::json;

namespace {

bool is_ascii_alpha(char32_t c) { return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z'); }
bool is_space(char32_t c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == 0xA0; }

std::string char_token(char32_t c) { return "##" + utf8::encode(std::u32string(1, c)); }

// Alphabetic runs and single other characters, whitespace dropped.
std::vector<std::u32string> pieces(const std::string& text) {
  std::vector<std::u32string> out;
  const auto cps = utf8::decode(text);
  std::size_t i = 0;
  while (i < cps.size()) {
    if (is_space(cps[i])) {
      ++i;
    } else if (is_ascii_alpha(cps[i])) {
      std::size_t j = i;
      while (j < cps.size() && is_ascii_alpha(cps[j])) ++j;
      out.push_back(cps.substr(i, j - i));
      i = j;
    } else {
      out.push_back(cps.substr(i, 1));
      ++i;
    }
  }
  return out;
}

}  // namespace

std::string_view scheme_name(FusionScheme s) {
  return s == FusionScheme::kConcat ? "concat_fusion" : "layout_induced";
}

FusionScheme parse_scheme(std::string_view name) {
  if (name == "concat_fusion" || name == "A") return FusionScheme::kConcat;
  if (name == "layout_induced" || name == "B") return FusionScheme::kLayoutInduced;
  throw std::invalid_argument("unknown fusion scheme '" + std::string(name) + "'");
}

void EncoderConfig::validate() const {
  auto fail = [](const std::string& m) { throw std::invalid_argument("encoder config: " + m); };
  if (layers < 1) fail("layers must be >= 1");
  if (heads < 1 || hidden_size < 1) fail("heads and hidden_size must be >= 1");
  if (hidden_size % heads != 0) fail("hidden_size must be divisible by heads");
  if (ffn_size < 1) fail("ffn_size must be >= 1");
  if (patch_size < 1 || image_size < patch_size || image_size % patch_size != 0) {
    fail("patch_size must divide image_size");
  }
  if (max_sequence <= num_patches()) fail("max_sequence must exceed the patch count");
  if (position_bins < 2) fail("position_bins must be >= 2");
  if (fourier_frequencies < 1) fail("fourier_frequencies must be >= 1");
  if (vocab_size < 0) fail("vocab_size must be >= 0");
  if (!(init_std > 0)) fail("init_std must be > 0");
}

EncoderConfig EncoderConfig::toy(FusionScheme scheme) {
  EncoderConfig c;
  c.scheme = scheme;
  return c;
}

EncoderConfig EncoderConfig::full(FusionScheme scheme) {
  EncoderConfig c;
  c.scheme = scheme;
  if (scheme == FusionScheme::kConcat) {
    c.layers = 12;
    c.heads = 12;
    c.hidden_size = 768;
    c.ffn_size = 3072;
  } else {
    c.layers = 24;
    c.heads = 16;
    c.hidden_size = 1024;
    c.ffn_size = 4096;
  }
  c.max_sequence = 512 + c.num_patches();
  return c;
}

EncoderConfig EncoderConfig::desk(FusionScheme scheme) {
  EncoderConfig c;
  c.scheme = scheme;
  c.layers = 2;
  c.heads = 4;
  c.hidden_size = 64;
  c.ffn_size = 128;
  c.image_size = 64;
  c.patch_size = 16;
  c.max_sequence = 256;
  return c;
}

std::string encoder_config_to_json(const EncoderConfig& c) {
  json j = {{"scheme", scheme_name(c.scheme)},
            {"layers", c.layers},
            {"heads", c.heads},
            {"hidden_size", c.hidden_size},
            {"ffn_size", c.ffn_size},
            {"patch_size", c.patch_size},
            {"image_size", c.image_size},
            {"max_sequence", c.max_sequence},
            {"vocab_size", c.vocab_size},
            {"position_bins", c.position_bins},
            {"fourier_frequencies", c.fourier_frequencies},
            {"pooling", c.pooling == BlockPooling::kMean ? "mean" : "first"},
            {"init_std", c.init_std}};
  return j.dump(2);
}

EncoderConfig encoder_config_from_json(const std::string& text) {
  const json j = json::parse(text);
  if (!j.is_object()) throw std::invalid_argument("encoder config must be an object");
  EncoderConfig c;
  if (j.contains("scheme")) c = EncoderConfig::toy(parse_scheme(j.at("scheme").get<std::string>()));
  for (const auto& [key, value] : j.items()) {
    if (key == "scheme") continue;
    else if (key == "layers") c.layers = value.get<int>();
    else if (key == "heads") c.heads = value.get<int>();
    else if (key == "hidden_size") c.hidden_size = value.get<int>();
    else if (key == "ffn_size") c.ffn_size = value.get<int>();
    else if (key == "patch_size") c.patch_size = value.get<int>();
    else if (key == "image_size") c.image_size = value.get<int>();
    else if (key == "max_sequence") c.max_sequence = value.get<int>();
    else if (key == "vocab_size") c.vocab_size = value.get<int>();
    else if (key == "position_bins") c.position_bins = value.get<int>();
    else if (key == "fourier_frequencies") c.fourier_frequencies = value.get<int>();
    else if (key == "init_std") c.init_std = value.get<double>();
    else if (key == "pooling") {
      const auto p = value.get<std::string>();
      if (p == "mean") c.pooling = BlockPooling::kMean;
      else if (p == "first") c.pooling = BlockPooling::kFirst;
      else throw std::invalid_argument("unknown pooling '" + p + "'");
    } else {
      throw std::invalid_argument("unknown encoder config field '" + key + "'");
    }
  }
  c.validate();
  return c;
}

// ---------------------------------------------------------------------------
// Vocabulary

Vocab::Vocab() {
  add("[PAD]");
  add("[UNK]");
  for (char32_t c = 33; c < 127; ++c) add(char_token(c));
}

int Vocab::add(const std::string& token) {
  auto [it, inserted] = index_.emplace(token, static_cast<int>(tokens_.size()));
  if (inserted) tokens_.push_back(token);
  return it->second;
}

int Vocab::id(const std::string& token) const {
  auto it = index_.find(token);
  return it == index_.end() ? kUnk : it->second;
}

Vocab Vocab::build(const Corpus& corpus, int min_count, std::size_t max_words) {
  std::map<std::string, int> words;
  std::map<std::string, int> chars;
  for (const auto& s : corpus.samples) {
    for (const auto& b : s.blocks) {
      for (const auto& p : pieces(b.text)) {
        if (is_ascii_alpha(p[0])) {
          ++words[utf8::encode(p)];
        } else if (p[0] >= 127) {
          ++chars[char_token(p[0])];
        }
      }
    }
  }
  std::vector<std::pair<std::string, int>> ranked;
  for (const auto& [w, n] : words) {
    if (n >= min_count) ranked.emplace_back(w, n);
  }
  std::stable_sort(ranked.begin(), ranked.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });
  if (ranked.size() > max_words) ranked.resize(max_words);

  Vocab v;
  for (const auto& [c, n] : chars) v.add(c);
  for (const auto& [w, n] : ranked) v.add(w);
  return v;
}

std::vector<int> Vocab::encode(const std::string& text) const {
  std::vector<int> ids;
  for (const auto& p : pieces(text)) {
    if (is_ascii_alpha(p[0])) {
      auto it = index_.find(utf8::encode(p));
      if (it != index_.end()) {
        ids.push_back(it->second);
        continue;
      }
    }
    for (char32_t c : p) ids.push_back(id(char_token(c)));
  }
  return ids;
}

std::string Vocab::to_json() const { return json{{"tokens", tokens_}}.dump(); }

Vocab Vocab::from_json(const std::string& text) {
  const json j = json::parse(text);
  Vocab v;
  v.tokens_.clear();
  v.index_.clear();
  for (const auto& t : j.at("tokens")) {
    const auto s = t.get<std::string>();
    if (!v.index_.emplace(s, static_cast<int>(v.tokens_.size())).second) {
      throw std::runtime_error("duplicate vocabulary token '" + s + "'");
    }
    v.tokens_.push_back(s);
  }
  if (v.tokens_.size() < 2 || v.tokens_[kPad] != "[PAD]" || v.tokens_[kUnk] != "[UNK]") {
    throw std::runtime_error("vocabulary lacks the special tokens");
  }
  return v;
}

// ---------------------------------------------------------------------------
// Tokenization and patches

int quantize_coordinate(double v, double extent, int bins) {
  if (!(extent > 0)) throw std::invalid_argument("extent must be positive");
  const double b = std::floor(v / extent * bins);
  return static_cast<int>(std::clamp(b, 0.0, static_cast<double>(bins - 1)));
}

std::size_t text_budget(const EncoderConfig& config) {
  return static_cast<std::size_t>(config.max_sequence - config.num_patches());
}

TokenizedSample tokenize_blocks(const ChartSample& sample, const Vocab& vocab,
                                const EncoderConfig& config, std::size_t max_tokens) {
  TokenizedSample out;
  if (sample.blocks.empty()) return out;
  const double W = sample.image ? sample.image->width() : 0;
  const double H = sample.image ? sample.image->height() : 0;
  if (!(W > 0 && H > 0)) throw std::invalid_argument("sample '" + sample.sample_id + "' has no image");

  std::vector<const TextBlock*> order;
  for (const auto& b : sample.blocks) order.push_back(&b);
  std::sort(order.begin(), order.end(), [](const TextBlock* a, const TextBlock* b) {
    if (a->bbox.y != b->bbox.y) return a->bbox.y < b->bbox.y;
    if (a->bbox.x != b->bbox.x) return a->bbox.x < b->bbox.x;
    return a->block_id < b->block_id;
  });

  const int bins = config.position_bins;
  const double sx = config.image_size / W;
  const double sy = config.image_size / H;
  bool truncating = false;
  for (const TextBlock* b : order) {
    out.block_order.push_back(b->block_id);
    auto ids = vocab.encode(b->text);
    if (ids.empty()) ids.push_back(Vocab::kUnk);
    if (truncating || out.token_ids.size() + ids.size() > max_tokens) {
      truncating = true;
      out.dropped_blocks.push_back(b->block_id);
      continue;
    }
    const std::array<int, 4> box = {
        quantize_coordinate(b->bbox.x, W, bins), quantize_coordinate(b->bbox.y, H, bins),
        quantize_coordinate(b->bbox.right(), W, bins), quantize_coordinate(b->bbox.bottom(), H, bins)};
    const std::array<double, 2> center = {b->bbox.center_x() * sx, b->bbox.center_y() * sy};
    BlockSpan span{b->block_id, out.token_ids.size(), out.token_ids.size() + ids.size()};
    for (int id : ids) {
      out.positions.push_back(static_cast<int>(out.token_ids.size()));
      out.token_ids.push_back(id);
      out.boxes.push_back(box);
      out.centers.push_back(center);
    }
    out.spans.push_back(span);
  }
  return out;
}

PatchGrid patchify(const Image& image, int patch_size) {
  if (patch_size < 1 || image.width() % patch_size != 0 || image.height() % patch_size != 0) {
    throw std::invalid_argument("patch size must divide the image size");
  }
  PatchGrid g;
  g.rows = image.height() / patch_size;
  g.cols = image.width() / patch_size;
  g.dim = patch_size * patch_size * 3;
  g.values.resize(g.count() * static_cast<std::size_t>(g.dim));
  for (int r = 0; r < g.rows; ++r) {
    for (int c = 0; c < g.cols; ++c) {
      double* dst = &g.values[(static_cast<std::size_t>(r) * g.cols + c) * g.dim];
      for (int py = 0; py < patch_size; ++py) {
        for (int px = 0; px < patch_size; ++px) {
          const Rgb rgb = image.at(c * patch_size + px, r * patch_size + py);
          for (int ch = 0; ch < 3; ++ch) *dst++ = rgb[ch] / 255.0;
        }
      }
    }
  }
  return g;
}

std::pair<int, int> patch_of_center(double cx, double cy, int patch_size, int rows, int cols) {
  const int r = static_cast<int>(std::floor(cy / patch_size));
  const int c = static_cast<int>(std::floor(cx / patch_size));
  return {std::clamp(r, 0, rows - 1), std::clamp(c, 0, cols - 1)};
}

FusionPlan plan_fusion(const TokenizedSample& tokens, const PatchGrid& patches,
                       FusionScheme scheme, int patch_size) {
  FusionPlan plan;
  plan.scheme = scheme;
  plan.n_tokens = tokens.size();
  const int n_patches = static_cast<int>(patches.count());
  if (scheme == FusionScheme::kConcat) {
    plan.token_patch.assign(tokens.size(), -1);
    for (int p = 0; p < n_patches; ++p) plan.plain_patches.push_back(p);
    return plan;
  }
  std::vector<bool> has_text(static_cast<std::size_t>(n_patches), false);
  for (const auto& c : tokens.centers) {
    const auto [r, col] = patch_of_center(c[0], c[1], patch_size, patches.rows, patches.cols);
    const int p = r * patches.cols + col;
    plan.token_patch.push_back(p);
    has_text[static_cast<std::size_t>(p)] = true;
  }
  for (int p = 0; p < n_patches; ++p) {
    if (!has_text[static_cast<std::size_t>(p)]) plan.plain_patches.push_back(p);
  }
  return plan;
}

ModelInput prepare_input(const ChartSample& sample, const Vocab& vocab, const EncoderConfig& config) {
  ModelInput in;
  in.tokens = tokenize_blocks(sample, vocab, config, text_budget(config));
  const Image& img = sample.raster();
  if (img.width() == config.image_size && img.height() == config.image_size) {
    in.patches = patchify(img, config.patch_size);
  } else {
    in.patches = patchify(resize_bilinear(img, config.image_size, config.image_size), config.patch_size);
  }
  in.plan = plan_fusion(in.tokens, in.patches, config.scheme, config.patch_size);
  return in;
}

}  // namespace chartrole
