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

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "chartrole/corpus.hpp"
#include "chartrole/roles.hpp"

namespace chartrole {

enum class FusionScheme {
  kConcat,          // patches concatenated after text tokens
  kLayoutInduced,   // tokens added to the patch holding their box center
};

std::string_view scheme_name(FusionScheme s);   // "concat_fusion" | "layout_induced"
FusionScheme parse_scheme(std::string_view name);

enum class BlockPooling { kMean, kFirst };

struct EncoderConfig {
  FusionScheme scheme = FusionScheme::kConcat;
  int layers = 4;
  int heads = 4;
  int hidden_size = 128;
  int ffn_size = 512;
  int patch_size = 16;
  int image_size = 224;  // working resolution, square
  int max_sequence = 512;
  int vocab_size = 0;  // filled in from the vocabulary
  int position_bins = 1000;
  int fourier_frequencies = 8;
  BlockPooling pooling = BlockPooling::kMean;
  double init_std = 0.02;

  int grid() const { return image_size / patch_size; }
  int num_patches() const { return grid() * grid(); }
  int patch_dim() const { return patch_size * patch_size * 3; }
  int head_dim() const { return hidden_size / heads; }

  /// Throws std::invalid_argument when an invariant is violated.
  void validate() const;

  /// Toy default: 4 layers, 4 heads, D=128, ffn 512, 224 px, p=16.
  static EncoderConfig toy(FusionScheme scheme);
  /// Reference sizes of the full models; documented, not trained here.
  static EncoderConfig full(FusionScheme scheme);
  /// Smallest setting used for the end-to-end runs on one CPU core.
  static EncoderConfig desk(FusionScheme scheme);

  bool operator==(const EncoderConfig&) const = default;
};

std::string encoder_config_to_json(const EncoderConfig& c);
EncoderConfig encoder_config_from_json(const std::string& text);

/// Word and character vocabulary. Text is split into alphabetic runs and
/// single other characters; runs found in the vocabulary become one token,
/// anything else falls back to one token per character.
class Vocab {
 public:
  static constexpr int kPad = 0;
  static constexpr int kUnk = 1;

  /// Specials plus every printable ASCII character.
  Vocab();

  /// Adds words (alphabetic runs) seen at least `min_count` times, and any
  /// non-ASCII characters of the corpus.
  static Vocab build(const Corpus& corpus, int min_count = 2, std::size_t max_words = 8000);

  int size() const { return static_cast<int>(tokens_.size()); }
  int id(const std::string& token) const;
  const std::string& token(int id) const { return tokens_.at(static_cast<std::size_t>(id)); }

  /// Token ids for one text.
  std::vector<int> encode(const std::string& text) const;

  std::string to_json() const;
  static Vocab from_json(const std::string& text);

  bool operator==(const Vocab& o) const { return tokens_ == o.tokens_; }

 private:
  int add(const std::string& token);

  std::vector<std::string> tokens_;
  std::unordered_map<std::string, int> index_;
};

struct BlockSpan {
  int block_id = 0;
  std::size_t begin = 0;  // token range [begin, end)
  std::size_t end = 0;
};

struct TokenizedSample {
  std::vector<int> token_ids;
  std::vector<int> positions;                // 1D position in reading order
  std::vector<std::array<int, 4>> boxes;     // quantized x0, y0, x1, y1 per token
  std::vector<std::array<double, 2>> centers;  // box center in working-resolution pixels
  std::vector<BlockSpan> spans;              // reading order
  std::vector<int> dropped_blocks;           // cut by truncation, reading order
  std::vector<int> block_order;              // every block id, reading order

  std::size_t size() const { return token_ids.size(); }
};

/// Bin of coordinate v in [0, extent]: min(bins - 1, floor(v / extent * bins)).
int quantize_coordinate(double v, double extent, int bins);

/// Tokenizes blocks in reading order (top to bottom, then left to right).
/// Every token carries its block's quantized box. When the token count
/// would exceed `max_tokens`, whole blocks are dropped from the tail.
TokenizedSample tokenize_blocks(const ChartSample& sample, const Vocab& vocab,
                                const EncoderConfig& config, std::size_t max_tokens);

/// Text budget so that text plus all patches fits max_sequence.
std::size_t text_budget(const EncoderConfig& config);

/// Flattened patches of an image already at the working resolution,
/// row-major; each patch vector is its pixels (row-major, RGB) scaled to [0,1].
struct PatchGrid {
  int rows = 0;
  int cols = 0;
  int dim = 0;
  std::vector<double> values;  // (rows*cols) x dim

  std::size_t count() const { return static_cast<std::size_t>(rows) * cols; }
};

PatchGrid patchify(const Image& image, int patch_size);

/// (row, col) of the patch containing point (cx, cy): floor division,
/// clamped to the grid.
std::pair<int, int> patch_of_center(double cx, double cy, int patch_size, int rows, int cols);

/// Composition of the encoder input sequence: the first n_tokens rows are
/// text tokens (plus, in the layout-induced scheme, their patch), followed
/// by the listed plain patches.
struct FusionPlan {
  FusionScheme scheme = FusionScheme::kConcat;
  std::size_t n_tokens = 0;
  std::vector<int> token_patch;   // patch added to each token; -1 for concat
  std::vector<int> plain_patches;  // patch indices appended after the tokens

  std::size_t length() const { return n_tokens + plain_patches.size(); }
};

FusionPlan plan_fusion(const TokenizedSample& tokens, const PatchGrid& patches,
                       FusionScheme scheme, int patch_size);

/// Everything the model consumes for one sample.
struct ModelInput {
  TokenizedSample tokens;
  PatchGrid patches;
  FusionPlan plan;
};

ModelInput prepare_input(const ChartSample& sample, const Vocab& vocab, const EncoderConfig& config);

/// One named parameter tensor inside the flat parameter vector.
struct ParamTensor {
  std::string name;
  std::size_t offset = 0;
  std::size_t rows = 0;
  std::size_t cols = 0;
  bool decay = false;  // weight decay applies (matrices, not biases or norms)

  std::size_t size() const { return rows * cols; }
};

class EncoderModel;

/// Activations kept by forward() for backward().
struct ForwardCache {
  struct Layer {
    std::vector<double> x, ln1, mean1, rstd1, q, k, v, probs, attn, h, ln2, mean2, rstd2, f1, g;
  };
  std::vector<double> x0;
  std::vector<Layer> layers;
  std::vector<double> xl, lnf, meanf, rstdf;
  std::size_t n = 0;
};

/// Transformer encoder with a per-block linear classifier. All parameters
/// live in one flat vector; gradients use the same layout.
class EncoderModel {
 public:
  EncoderModel(const EncoderConfig& config, std::uint64_t seed);
  EncoderModel(const EncoderConfig& config, std::vector<double> weights);

  const EncoderConfig& config() const { return config_; }
  const std::vector<ParamTensor>& tensors() const { return tensors_; }
  const ParamTensor& tensor(const std::string& name) const;
  std::span<double> params() { return params_; }
  std::span<const double> params() const { return params_; }
  std::size_t param_count() const { return params_.size(); }

  /// Input sequence (plan.length() x D) for either scheme.
  std::vector<double> embed(const ModelInput& input) const;

  /// Block logits in input.tokens.spans order.
  std::vector<RoleLogits> forward(const ModelInput& input, ForwardCache* cache = nullptr) const;

  /// Accumulates d(loss)/d(params) into grad given d(loss)/d(block logits).
  void backward(const ModelInput& input, const ForwardCache& cache,
                std::span<const RoleLogits> d_logits, std::span<double> grad) const;

  /// Parameter layout for a config (used to size checkpoints).
  static std::vector<ParamTensor> layout(const EncoderConfig& config);

 private:
  EncoderConfig config_;
  std::vector<ParamTensor> tensors_;
  std::map<std::string, std::size_t> by_name_;
  std::vector<double> params_;
};

struct BlockPrediction {
  int block_id = 0;
  RoleLogits logits{};
  bool truncated = false;  // dropped before encoding; logits are zero
};

struct TrainingMetadata {
  long steps = 0;
  std::uint64_t seed = 0;
  std::string corpus_fingerprint;
  double final_loss = 0;
};

struct Checkpoint {
  EncoderConfig config;
  Vocab vocab;
  std::vector<double> weights;
  TrainingMetadata metadata;
};

inline constexpr const char* kCheckpointFormat = "chartrole-ckpt-v1";

/// Directory with config.json, vocab.json, weights.bin and metadata.json.
void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& dir);
/// Throws std::runtime_error on a wrong format tag or a weight count that
/// does not match the config.
Checkpoint load_checkpoint(const std::filesystem::path& dir);

/// One logit vector per block of the sample, in the sample's block order.
std::vector<BlockPrediction> encode_classify(const ChartSample& sample, const Checkpoint& ckpt);
std::vector<BlockPrediction> encode_classify(const ChartSample& sample, const Vocab& vocab,
                                             const EncoderModel& model);

}  // namespace chartrole
