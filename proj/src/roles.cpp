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

#include "chartrole/roles.hpp"

namespace chartrole {
namespace {

constexpr std::array<std::string_view, kNumRoles> kRoleNames = {
    "chart_title", "legend_title", "legend_label", "axis_title", "tick_label",
    "tick_grouping", "mark_label", "value_label", "other",
};

}  // namespace

std::string_view role_name(TextRole role) { return kRoleNames.at(role_index(role)); }

std::optional<TextRole> parse_role(std::string_view name) {
  for (std::size_t i = 0; i < kNumRoles; ++i) {
    if (kRoleNames[i] == name) return kAllRoles[i];
  }
  return std::nullopt;
}

}  // namespace chartrole
