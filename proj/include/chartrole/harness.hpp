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
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "chartrole/augmentation.hpp"
#include "chartrole/balancing.hpp"
#include "chartrole/encoder.hpp"
#include "chartrole/metrics.hpp"

namespace chartrole {

/// Data augmentation and balancing switches for one training run.
struct DabConfig {
  bool augment = false;
  std::vector<AugmentationMethod> methods = default_training_methods();
  bool cutout = false;
  bool weighted_ce = false;

  bool any() const { return augment || cutout || weighted_ce; }
  bool operator==(const DabConfig&) const = default;
};

/// The augmentation and balancing set carried into the final setup:
/// noise, prefix deletion, insertion, and cutout.
DabConfig selected_dab();

struct TrainConfig {
  EncoderConfig encoder = EncoderConfig::toy(FusionScheme::kConcat);
  int batch_size = 8;
  double learning_rate = 1e-3;
  int warmup_steps = 0;
  double weight_decay = 0.0;
  long max_steps = 500;
  std::array<double, 2> adam_betas{0.9, 0.98};
  double adam_epsilon = 1e-8;
  std::uint64_t seed = 0;
  DabConfig dab;

  /// Throws std::invalid_argument when a field is out of range.
  void validate() const;

  /// Final full-scale finetuning settings per scheme.
  static TrainConfig paper_preset(FusionScheme scheme);
  /// Settings used for the one-core end-to-end runs.
  static TrainConfig desk_preset(FusionScheme scheme);

  bool operator==(const TrainConfig&) const = default;
};

std::string train_config_to_json(const TrainConfig& config);
/// Field names mirror TrainConfig. A "balancing" object with weighted_ce and
/// cutout is accepted as well as "dab". Unknown fields are rejected.
TrainConfig train_config_from_json(const std::string& text);

struct CurvePoint {
  long step = 0;
  double loss = 0;
  double learning_rate = 0;
  std::optional<double> val_f1_macro;
};

struct TrainOptions {
  /// When set, a run directory named after the config hash is created below
  /// it holding the config, the checkpoint, the curve and any diagnostics.
  std::filesystem::path runs_root;
  int log_every = 50;
  int eval_every = 0;  // validation F1 every n steps (needs a validation corpus)
  std::function<void(const CurvePoint&)> on_log;
};

struct TrainResult {
  Checkpoint checkpoint;
  std::vector<CurvePoint> curve;  // one point per step
  std::filesystem::path run_dir;
  std::size_t train_samples = 0;  // after augmentation and balancing
};

/// Thrown when the loss becomes non-finite; names the offending batch.
class TrainingError : public std::runtime_error {
 public:
  TrainingError(long step, std::vector<std::string> sample_ids);
  long step() const { return step_; }
  const std::vector<std::string>& sample_ids() const { return sample_ids_; }

 private:
  long step_;
  std::vector<std::string> sample_ids_;
};

/// Original samples, one augmented copy per sample when dab.augment, and one
/// cutout copy per sample when dab.cutout.
Corpus expand_dab(const Corpus& corpus, const DabConfig& dab, std::uint64_t seed);

/// Hash of every sample's id, image bytes, and annotations.
std::string corpus_fingerprint(const Corpus& corpus);

/// AdamW with linear warmup then a constant rate; optional weighted CE and
/// DAB expansion. Deterministic given (config, corpus) on one machine.
TrainResult train(const TrainConfig& config, const Corpus& train_corpus,
                  const Corpus* val_corpus = nullptr, const TrainOptions& options = {});

/// Learning rate at a 0-based step.
double scheduled_rate(const TrainConfig& config, long step);

/// Anything that produces one logit vector per block.
class BlockClassifier {
 public:
  virtual ~BlockClassifier() = default;
  virtual std::vector<BlockPrediction> classify(const ChartSample& sample) const = 0;
};

class EncoderClassifier : public BlockClassifier {
 public:
  explicit EncoderClassifier(Checkpoint checkpoint);
  std::vector<BlockPrediction> classify(const ChartSample& sample) const override;
  const Checkpoint& checkpoint() const { return ckpt_; }

 private:
  Checkpoint ckpt_;
  EncoderModel model_;
};

struct Evaluation {
  EvalReport report;
  std::vector<Prediction> predictions;  // corpus order, then block order
};

/// Scores every labeled block of a split (argmax, ties to the lower class
/// index). Throws std::out_of_range for an unknown split and
/// std::invalid_argument when the split has no labeled blocks.
Evaluation evaluate(const BlockClassifier& classifier, const Corpus& corpus,
                    const std::string& split = "all",
                    MacroAverage averaging = MacroAverage::kPresentInGold);

TextRole argmax_role(const RoleLogits& logits);

}  // namespace chartrole
