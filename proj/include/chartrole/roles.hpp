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
#include <cstddef>
#include <optional>
#include <string>
#include <string_view>

namespace chartrole {

/// Semantic role of a text element in a chart. The enumerator order is the
/// canonical class order used for logits, histograms and the labeling key map.
enum class TextRole : int {
  kChartTitle = 0,
  kLegendTitle,
  kLegendLabel,
  kAxisTitle,
  kTickLabel,
  kTickGrouping,
  kMarkLabel,
  kValueLabel,
  kOther,
};

inline constexpr std::size_t kNumRoles = 9;

inline constexpr std::array<TextRole, kNumRoles> kAllRoles = {
    TextRole::kChartTitle, TextRole::kLegendTitle, TextRole::kLegendLabel,
    TextRole::kAxisTitle,  TextRole::kTickLabel,   TextRole::kTickGrouping,
    TextRole::kMarkLabel,  TextRole::kValueLabel,  TextRole::kOther,
};

/// Stable serialization name, e.g. "tick_label".
std::string_view role_name(TextRole role);

/// Inverse of role_name; nullopt for anything that is not one of the nine names.
std::optional<TextRole> parse_role(std::string_view name);

constexpr std::size_t role_index(TextRole role) {
  return static_cast<std::size_t>(role);
}

constexpr TextRole role_at(std::size_t index) { return kAllRoles.at(index); }

/// One score per role, indexed by role_index.
using RoleLogits = std::array<double, kNumRoles>;

/// Per-class counts indexed by role_index.
using RoleHistogram = std::array<std::size_t, kNumRoles>;

inline std::size_t histogram_total(const RoleHistogram& h) {
  std::size_t total = 0;
  for (auto n : h) total += n;
  return total;
}

}  // namespace chartrole
