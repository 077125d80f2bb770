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

// Small hand-built samples and temporary directories shared by the tests.

#include <atomic>
#include <filesystem>
#include <memory>
#include <random>
#include <string>
#include <vector>

#include <unistd.h>

#include "chartrole/corpus.hpp"

namespace fixtures {

/// Deletes itself on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag = "t") {
    static std::atomic<int> counter{0};
    path_ = std::filesystem::temp_directory_path() /
            ("chartrole-" + tag + "-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

inline chartrole::ChartSample make_sample(const std::string& id, int w, int h,
                                          std::vector<chartrole::TextBlock> blocks,
                                          const std::string& chart_type = "bar") {
  chartrole::ChartSample s;
  s.sample_id = id;
  s.image = std::make_shared<const chartrole::Image>(w, h);
  s.chart_type = chart_type;
  s.blocks = std::move(blocks);
  return s;
}

inline chartrole::TextBlock block(int id, const std::string& text, double x, double y, double w, double h,
                                  std::optional<chartrole::TextRole> role = chartrole::TextRole::kTickLabel) {
  return {id, text, {x, y, w, h}, role};
}

/// Blank canvas of random size with up to 25 random labeled boxes.
inline chartrole::ChartSample random_sample(std::mt19937_64& rng, int index) {
  const int w = std::uniform_int_distribution<int>(80, 500)(rng);
  const int h = std::uniform_int_distribution<int>(80, 400)(rng);
  const int n = std::uniform_int_distribution<int>(0, 25)(rng);
  std::vector<chartrole::TextBlock> blocks;
  static const char* words[] = {"Day 1", "Revenue", "2019", "x", "Total (%)", "Group B", "0.5", "Legend"};
  for (int i = 0; i < n; ++i) {
    const double bw = std::uniform_real_distribution<double>(2, w / 3.0)(rng);
    const double bh = std::uniform_real_distribution<double>(2, h / 5.0)(rng);
    const double x = std::uniform_real_distribution<double>(0, w - bw)(rng);
    const double y = std::uniform_real_distribution<double>(0, h - bh)(rng);
    blocks.push_back(block(i, words[rng() % 8], x, y, bw, bh, chartrole::role_at(rng() % chartrole::kNumRoles)));
  }
  return make_sample("r" + std::to_string(index), w, h, blocks);
}

// ICPR22 train+val counts per class, in role order.
inline chartrole::RoleHistogram icpr22_histogram() {
  chartrole::RoleHistogram h{};
  h[chartrole::role_index(chartrole::TextRole::kLegendTitle)] = 190;
  h[chartrole::role_index(chartrole::TextRole::kChartTitle)] = 493;
  h[chartrole::role_index(chartrole::TextRole::kTickGrouping)] = 792;
  h[chartrole::role_index(chartrole::TextRole::kMarkLabel)] = 1920;
  h[chartrole::role_index(chartrole::TextRole::kValueLabel)] = 7649;
  h[chartrole::role_index(chartrole::TextRole::kAxisTitle)] = 10721;
  h[chartrole::role_index(chartrole::TextRole::kLegendLabel)] = 12286;
  h[chartrole::role_index(chartrole::TextRole::kTickLabel)] = 95430;
  h[chartrole::role_index(chartrole::TextRole::kOther)] = 6305;
  return h;
}

// One block per role in a row.
inline chartrole::ChartSample all_roles_sample() {
  std::vector<chartrole::TextBlock> blocks;
  for (std::size_t c = 0; c < chartrole::kNumRoles; ++c) {
    blocks.push_back(block(static_cast<int>(c), "t", 2.0 + 10 * c, 2, 8, 6, chartrole::role_at(c)));
  }
  return make_sample("all", 120, 20, blocks);
}

}  // namespace fixtures
