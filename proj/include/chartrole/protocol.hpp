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

#include <filesystem>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "chartrole/harness.hpp"
#include "chartrole/synth.hpp"

namespace chartrole {

namespace datasets {
inline constexpr const char* kIcpr22 = "ICPR22";
inline constexpr const char* kIcpr22Noisy = "ICPR22-N";
inline constexpr const char* kChimeR = "CHIME-R";
inline constexpr const char* kDeGruyter = "DeGruyter";
inline constexpr const char* kEconBiz = "EconBiz";
}  // namespace datasets

/// Report columns, in table order.
const std::vector<std::string>& dataset_columns();

/// Corpora by name. ICPR22 must carry "train" and "test" splits; ICPR22-N is
/// the noisy copy of the ICPR22 test set; the three small corpora are used
/// whole or split 0.7/0.3.
class DatasetRegistry {
 public:
  void add(Corpus corpus);
  bool contains(const std::string& name) const { return corpora_.count(name) > 0; }
  const Corpus& at(const std::string& name) const;
  std::vector<std::string> names() const;

 private:
  std::map<std::string, Corpus> corpora_;
};

struct TrainSource {
  std::string corpus;
  std::string split;
};

struct EvalTarget {
  std::string column;
  std::string corpus;
  std::string split;  // "all" = full corpus
};

struct StagePlan {
  int stage = 1;
  std::vector<TrainSource> train_sources;
  bool dab = false;
  std::vector<EvalTarget> eval_targets;
};

/// Stage 1: ICPR22 train split, every test set in full. Stage 2: as 1 with
/// DAB. Stage 3: train splits of all four training corpora, evaluation on
/// test splits. Stage 4: as 3 with DAB.
StagePlan make_stage_plan(int stage);

/// Throws std::invalid_argument if the plan trains on the noisy corpus, or
/// if its sources or DAB flag contradict its stage number.
void validate_stage_plan(const StagePlan& plan);

/// Row label of a stage in the results table.
std::string stage_label(int stage);

class MissingCorporaError : public std::runtime_error {
 public:
  explicit MissingCorporaError(std::vector<std::string> missing);
  const std::vector<std::string>& missing() const { return missing_; }

 private:
  std::vector<std::string> missing_;
};

struct ProtocolOptions {
  double icpr_train_fraction = 0.9;   // of the ICPR22 train split; the rest is validation
  double small_train_fraction = 0.7;  // of each small corpus
  std::uint64_t split_seed = 0;
  SplitRemainder remainder = SplitRemainder::kLast;
  DabConfig dab = selected_dab();  // used by stages 2 and 4
  std::filesystem::path out_dir;   // predictions and reports, when set
  TrainOptions train;
};

/// Registry with the derived splits the stages refer to: ICPR22 "train" is
/// replaced by its 0.9 part (the 0.1 part becomes "val"); each small corpus
/// gains "train"/"test". Throws MissingCorporaError listing absent corpora.
DatasetRegistry prepare_protocol_data(const DatasetRegistry& registry, const ProtocolOptions& options);

/// Concatenation of the listed splits.
Corpus assemble_training_set(const StagePlan& plan, const DatasetRegistry& prepared);

struct StageReport {
  StagePlan plan;
  std::size_t train_samples = 0;  // before augmentation
  std::map<std::string, EvalReport> results;  // by column
  std::filesystem::path run_dir;
};

/// Trains once per the plan and evaluates every target. The registry is the
/// raw one; prepare_protocol_data is applied internally.
StageReport run_stage(const StagePlan& plan, const TrainConfig& base, const DatasetRegistry& registry,
                      const ProtocolOptions& options = {});

/// Rows = stages, columns = the five test sets, cells "macro | micro".
std::string results_table(const std::vector<StageReport>& stages, const std::string& model = "");

/// Synthetic stand-ins for all five datasets; the small corpora use shifted
/// chart distributions.
struct StandinSizes {
  int icpr_train = 240;
  int icpr_test = 60;
  int chime_r = 40;
  int degruyter = 40;
  int econbiz = 40;
};
DatasetRegistry synthetic_registry(const StandinSizes& sizes, std::uint64_t seed);

// ---------------------------------------------------------------------------
// Hyperparameter sweeps

struct SweepPoint {
  int batch_size = 16;
  int warmup_steps = 0;
  double learning_rate = 1e-5;
  double weight_decay = 0;
  long max_steps = 0;

  bool operator==(const SweepPoint&) const = default;
};

struct SweepGrid {
  std::vector<int> batch_sizes;
  std::vector<int> warmup_steps{0};
  std::vector<double> learning_rates;
  std::vector<double> weight_decays{0.0};
  /// Steps per trial = sample_budget / batch_size, so every trial sees the
  /// same number of samples (320,000: 20,000 steps at 16, 10,000 at 32).
  long sample_budget = 320000;

  long steps_for(int batch_size) const;
  /// Batch outermost, then warmup, weight decay, learning rate.
  std::vector<SweepPoint> points() const;

  static SweepGrid scheme_a();
  static SweepGrid scheme_b();
};

std::string sweep_grid_to_json(const SweepGrid& grid);
SweepGrid sweep_grid_from_json(const std::string& text);

struct Trial {
  SweepPoint point;
  EvalReport validation;
  int rank = 0;  // 1 = best
};

/// Ranks by validation F1-macro (ties: F1-micro, then grid order) and sets
/// Trial::rank. Returns trial indices, best first.
std::vector<std::size_t> rank_trials(std::vector<Trial>& trials);

struct SweepResult {
  FusionScheme scheme = FusionScheme::kConcat;
  std::vector<Trial> trials;  // grid order
  std::vector<std::size_t> ranking;

  const Trial& best() const { return trials.at(ranking.at(0)); }
  /// Appendix-style table in grid order; the best row is marked.
  std::string table() const;
};

SweepResult sweep(const SweepGrid& grid, const TrainConfig& base, const Corpus& train_corpus,
                  const Corpus& val_corpus, const TrainOptions& options = {});

// ---------------------------------------------------------------------------
// Augmentation and balancing ablation

enum class DabKind { kControl, kAugmentation, kBalancer };

struct AblationEntry {
  std::string label;
  DabKind kind = DabKind::kAugmentation;
  DabConfig dab;
};

/// The eight single-method rows: six augmentations (color adjustment covers
/// brightness and color), then cutout and weighted cross-entropy.
std::vector<AblationEntry> standard_ablation_entries();
/// Row with DAB disabled, for comparison.
AblationEntry control_ablation_entry();

struct AblationRow {
  AblationEntry entry;
  EvalReport report;
  bool selected = false;
};

/// Marks the best `augmentations` augmentation rows and the best `balancers`
/// balancer rows by F1-macro, and returns the combined DAB config.
DabConfig select_dab(std::vector<AblationRow>& rows, int augmentations = 3, int balancers = 1);

/// One training run per entry on `train_corpus`, scored on `test_corpus`.
std::vector<AblationRow> ablate_dab(const std::vector<AblationEntry>& entries, const TrainConfig& base,
                                    const Corpus& train_corpus, const Corpus& test_corpus,
                                    const TrainOptions& options = {});

std::string ablation_table(const std::vector<AblationRow>& rows);

}  // namespace chartrole
