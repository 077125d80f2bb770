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

#include "chartrole/metrics.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace chartrole {

namespace {

double ratio(std::size_t num, std::size_t den) {
  return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
}

}  // namespace

std::string EvalReport::cell() const {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.2f | %.2f", f1_macro, f1_micro);
  return buf;
}

std::string EvalReport::to_json() const {
  nlohmann::json classes = nlohmann::json::object();
  for (std::size_t c = 0; c < kNumRoles; ++c) {
    const auto& s = per_class[c];
    classes[std::string(role_name(role_at(c)))] = {{"precision", s.precision},
                                                   {"recall", s.recall},
                                                   {"f1", s.f1},
                                                   {"support", s.support},
                                                   {"predicted", s.predicted}};
  }
  nlohmann::json j = {{"f1_macro", f1_macro},
                      {"f1_micro", f1_micro},
                      {"n", n},
                      {"averaging", averaging == MacroAverage::kAllClasses ? "all" : "present"},
                      {"per_class", classes},
                      {"metadata", metadata}};
  return j.dump(2);
}

EvalReport f1_scores(std::span<const TextRole> gold, std::span<const TextRole> pred,
                     MacroAverage averaging) {
  if (gold.size() != pred.size()) {
    throw std::invalid_argument("gold and predicted lists differ in length (" +
                                std::to_string(gold.size()) + " vs " + std::to_string(pred.size()) + ")");
  }
  if (gold.empty()) throw std::invalid_argument("cannot score an empty prediction list");

  EvalReport r;
  r.n = gold.size();
  r.averaging = averaging;
  std::size_t correct = 0;
  for (std::size_t i = 0; i < gold.size(); ++i) {
    auto& g = r.per_class[role_index(gold[i])];
    auto& p = r.per_class[role_index(pred[i])];
    ++g.support;
    ++p.predicted;
    if (gold[i] == pred[i]) {
      ++g.true_positive;
      ++correct;
    }
  }
  double sum = 0;
  std::size_t counted = 0;
  for (auto& s : r.per_class) {
    const double p = ratio(s.true_positive, s.predicted);
    const double rc = ratio(s.true_positive, s.support);
    const double f = p + rc > 0 ? 2 * p * rc / (p + rc) : 0.0;
    s.precision = 100 * p;
    s.recall = 100 * rc;
    s.f1 = 100 * f;
    if (averaging == MacroAverage::kAllClasses || s.support > 0) {
      sum += s.f1;
      ++counted;
    }
  }
  r.f1_macro = sum / static_cast<double>(counted);
  r.f1_micro = 100 * ratio(correct, r.n);
  return r;
}

std::string format_predictions(std::span<const Prediction> predictions) {
  std::ostringstream out;
  out << "sample_id\tblock_id\tpredicted\tgold\n";
  for (const auto& p : predictions) {
    out << p.sample_id << '\t' << p.block_id << '\t' << role_name(p.predicted) << '\t'
        << role_name(p.gold) << '\n';
  }
  return out.str();
}

void write_predictions(const std::filesystem::path& path, std::span<const Prediction> predictions) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  out << format_predictions(predictions);
  if (!out) throw std::runtime_error("cannot write " + path.string());
}

std::vector<Prediction> read_predictions(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  std::vector<Prediction> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || (lineno == 1 && line.rfind("sample_id", 0) == 0)) continue;
    std::istringstream fields(line);
    std::string id, block, pred, gold;
    if (!std::getline(fields, id, '\t') || !std::getline(fields, block, '\t') ||
        !std::getline(fields, pred, '\t') || !std::getline(fields, gold, '\t')) {
      throw std::runtime_error(path.string() + ":" + std::to_string(lineno) + ": expected 4 fields");
    }
    const auto p = parse_role(pred);
    const auto g = parse_role(gold);
    if (!p || !g) throw std::runtime_error(path.string() + ":" + std::to_string(lineno) + ": unknown role");
    out.push_back({id, std::stoi(block), *p, *g});
  }
  return out;
}

EvalReport score_predictions(std::span<const Prediction> predictions, MacroAverage averaging) {
  std::vector<TextRole> gold, pred;
  gold.reserve(predictions.size());
  pred.reserve(predictions.size());
  for (const auto& p : predictions) {
    gold.push_back(p.gold);
    pred.push_back(p.predicted);
  }
  return f1_scores(gold, pred, averaging);
}

}  // namespace chartrole
