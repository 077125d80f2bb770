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
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "chartrole/roles.hpp"

namespace chartrole {

/// Which classes enter the macro average.
enum class MacroAverage {
  kPresentInGold,  // classes with at least one gold instance
  kAllClasses,     // all nine, absent ones scoring 0
};

struct ClassScore {
  double precision = 0;  // percent
  double recall = 0;
  double f1 = 0;
  std::size_t support = 0;    // gold count
  std::size_t predicted = 0;  // predicted count
  std::size_t true_positive = 0;
};

struct EvalReport {
  std::array<ClassScore, kNumRoles> per_class{};
  double f1_macro = 0;  // percent
  double f1_micro = 0;  // percent; equals accuracy
  std::size_t n = 0;
  MacroAverage averaging = MacroAverage::kPresentInGold;
  std::map<std::string, std::string> metadata;

  /// "82.87 | 93.99"
  std::string cell() const;
  std::string to_json() const;
};

/// Per-class precision/recall/F1 (zero division scores 0), macro and micro
/// F1, all in percent. Throws std::invalid_argument on empty or mismatched
/// inputs.
EvalReport f1_scores(std::span<const TextRole> gold, std::span<const TextRole> pred,
                     MacroAverage averaging = MacroAverage::kPresentInGold);

/// One scored block.
struct Prediction {
  std::string sample_id;
  int block_id = 0;
  TextRole predicted = TextRole::kOther;
  TextRole gold = TextRole::kOther;

  bool operator==(const Prediction&) const = default;
};

/// Tab-separated: sample_id, block_id, predicted, gold, with a header line.
void write_predictions(const std::filesystem::path& path, std::span<const Prediction> predictions);
std::string format_predictions(std::span<const Prediction> predictions);
std::vector<Prediction> read_predictions(const std::filesystem::path& path);

EvalReport score_predictions(std::span<const Prediction> predictions,
                             MacroAverage averaging = MacroAverage::kPresentInGold);

}  // namespace chartrole
