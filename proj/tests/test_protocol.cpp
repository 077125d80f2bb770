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

#include <set>
#include <sstream>

#include <doctest.h>

#include "chartrole/protocol.hpp"
#include "fixtures.hpp"

using namespace chartrole;
using fixtures::block;
using fixtures::make_sample;

namespace {

EvalReport scores(double macro, double micro) {
  EvalReport r;
  r.f1_macro = macro;
  r.f1_micro = micro;
  return r;
}

Corpus blank_corpus(const std::string& name, int n) {
  Corpus c;
  c.name = name;
  for (int i = 0; i < n; ++i) {
    c.samples.push_back(make_sample(name + "-" + std::to_string(i), 8, 8, {block(0, "1", 1, 1, 3, 3)}));
  }
  return c;
}

DatasetRegistry blank_registry(int icpr_train, int icpr_test, int small) {
  DatasetRegistry reg;
  Corpus icpr = blank_corpus(datasets::kIcpr22, icpr_train + icpr_test);
  for (int i = 0; i < icpr_train + icpr_test; ++i) {
    icpr.splits[i < icpr_train ? "train" : "test"].push_back(icpr.samples[static_cast<std::size_t>(i)].sample_id);
  }
  reg.add(icpr);
  reg.add(blank_corpus(datasets::kIcpr22Noisy, icpr_test));
  for (const char* n : {datasets::kChimeR, datasets::kDeGruyter, datasets::kEconBiz}) reg.add(blank_corpus(n, small));
  return reg;
}

TrainConfig tiny_config() {
  TrainConfig c;
  c.encoder = EncoderConfig::desk(FusionScheme::kConcat);
  c.encoder.layers = 1;
  c.encoder.heads = 2;
  c.encoder.hidden_size = 16;
  c.encoder.ffn_size = 32;
  c.encoder.image_size = 32;
  c.batch_size = 4;
  c.max_steps = 4;
  return c;
}

}  // namespace

TEST_CASE("stage plans") {
  for (int stage = 1; stage <= 4; ++stage) {
    const auto p = make_stage_plan(stage);
    CHECK_NOTHROW(validate_stage_plan(p));
    CHECK(p.dab == (stage == 2 || stage == 4));
    CHECK(p.train_sources.size() == (stage <= 2 ? 1u : 4u));
    REQUIRE(p.eval_targets.size() == 5);
    for (std::size_t i = 0; i < 5; ++i) CHECK(p.eval_targets[i].column == dataset_columns()[i]);
    for (const auto& s : p.train_sources) {
      CHECK(s.corpus != datasets::kIcpr22Noisy);
      CHECK(s.split == "train");
    }
    CHECK(p.eval_targets[0].split == "test");
    CHECK(p.eval_targets[1].split == "all");
    CHECK(p.eval_targets[2].split == (stage <= 2 ? "all" : "test"));
  }
  CHECK_THROWS_AS(make_stage_plan(0), std::invalid_argument);
  CHECK_THROWS_AS(make_stage_plan(5), std::invalid_argument);

  auto noisy = make_stage_plan(3);
  noisy.train_sources.push_back({datasets::kIcpr22Noisy, "all"});
  CHECK_THROWS_AS(validate_stage_plan(noisy), std::invalid_argument);
  auto leak = make_stage_plan(1);
  leak.train_sources[0].split = "test";
  CHECK_THROWS_AS(validate_stage_plan(leak), std::invalid_argument);
  auto dab = make_stage_plan(1);
  dab.dab = true;
  CHECK_THROWS_AS(validate_stage_plan(dab), std::invalid_argument);
  auto small = make_stage_plan(2);
  small.train_sources.push_back({datasets::kChimeR, "train"});
  CHECK_THROWS_AS(validate_stage_plan(small), std::invalid_argument);
  auto score = make_stage_plan(4);
  score.eval_targets[2].split = "all";
  CHECK_THROWS_AS(validate_stage_plan(score), std::invalid_argument);

  CHECK(stage_label(1) == "ICPR22");
  CHECK(stage_label(2) == "ICPR22 with DAB");
  CHECK(stage_label(3) == "All datasets");
  CHECK(stage_label(4) == "All datasets with DAB");
}

TEST_CASE("protocol data preparation") {
  const auto prepared = prepare_protocol_data(blank_registry(100, 20, 115), {});
  const auto& icpr = prepared.at(datasets::kIcpr22);
  CHECK(icpr.splits.at("train").size() == 90);
  CHECK(icpr.splits.at("val").size() == 10);
  CHECK(icpr.splits.at("test").size() == 20);
  std::set<std::string> train(icpr.splits.at("train").begin(), icpr.splits.at("train").end());
  for (const auto& id : icpr.splits.at("val")) CHECK_FALSE(train.count(id));
  for (const auto& id : icpr.splits.at("test")) CHECK_FALSE(train.count(id));
  for (const char* n : {datasets::kChimeR, datasets::kDeGruyter, datasets::kEconBiz}) {
    CHECK(prepared.at(n).splits.at("train").size() == 80);
    CHECK(prepared.at(n).splits.at("test").size() == 35);
  }
  const auto again = prepare_protocol_data(blank_registry(100, 20, 115), {});
  CHECK(again.at(datasets::kChimeR).splits == prepared.at(datasets::kChimeR).splits);

  const auto big = prepare_protocol_data(blank_registry(100, 20, 121), {});
  CHECK(big.at(datasets::kEconBiz).splits.at("test").size() == 37);

  auto reg = blank_registry(10, 5, 10);
  DatasetRegistry partial;
  partial.add(reg.at(datasets::kIcpr22));
  partial.add(reg.at(datasets::kChimeR));
  try {
    prepare_protocol_data(partial, {});
    FAIL("expected MissingCorporaError");
  } catch (const MissingCorporaError& e) {
    CHECK(e.missing() == std::vector<std::string>{datasets::kIcpr22Noisy, datasets::kDeGruyter, datasets::kEconBiz});
  }

  const auto set3 = assemble_training_set(make_stage_plan(3), prepared);
  CHECK(set3.size() == 90 + 3 * 80);
  for (const auto& s : set3.samples) CHECK(s.sample_id.rfind(datasets::kIcpr22Noisy, 0) != 0);
  CHECK(assemble_training_set(make_stage_plan(1), prepared).size() == 90);
}

TEST_CASE("results table layout") {
  StageReport s1;
  s1.plan = make_stage_plan(1);
  for (const auto& c : dataset_columns()) s1.results[c] = scores(82.87, 93.99);
  StageReport s4;
  s4.plan = make_stage_plan(4);
  s4.results[datasets::kIcpr22] = scores(80.0, 90.0);
  const auto table = results_table({s1, s4}, "LayoutLMv3");
  std::istringstream in(table);
  std::string header, rule, row1, row4;
  std::getline(in, header);
  std::getline(in, rule);
  std::getline(in, row1);
  std::getline(in, row4);
  CHECK(header == "| Model | Train data \\ Test data | ICPR22 | ICPR22-N | CHIME-R | DeGruyter | EconBiz |");
  CHECK(rule == "|---|---|---|---|---|---|---|");
  CHECK(row1 == R"(| LayoutLMv3 | ICPR22 | 82.87 \| 93.99 | 82.87 \| 93.99 | 82.87 \| 93.99 | 82.87 \| 93.99 | 82.87 \| 93.99 |)");
  CHECK(row4 == R"(| LayoutLMv3 | All datasets with DAB | 80.00 \| 90.00 | - | - | - | - |)");
}

TEST_CASE("sweep grids follow the table order") {
  const auto a = SweepGrid::scheme_a().points();
  REQUIRE(a.size() == 15);
  CHECK(a[0] == SweepPoint{16, 0, 1e-5, 0, 20000});
  CHECK(a[6] == SweepPoint{32, 0, 2e-5, 0, 10000});
  CHECK(a[14] == SweepPoint{64, 0, 5e-5, 0, 5000});
  const auto b = SweepGrid::scheme_b().points();
  REQUIRE(b.size() == 30);
  CHECK(b[0] == SweepPoint{16, 1000, 1e-4, 1e-2, 20000});
  CHECK(b[1] == SweepPoint{16, 1000, 2e-4, 1e-2, 20000});
  CHECK(b[5] == SweepPoint{16, 1000, 1e-4, 1e-3, 20000});
  CHECK(b[15] == SweepPoint{16, 5000, 1e-4, 1e-2, 20000});
  CHECK(b[29] == SweepPoint{16, 5000, 5e-4, 1e-4, 20000});

  const auto round = sweep_grid_from_json(sweep_grid_to_json(SweepGrid::scheme_b()));
  CHECK(round.points() == b);
  CHECK(sweep_grid_from_json(R"({"preset": "A", "sample_budget": 640})").points()[0].max_steps == 40);
  CHECK_THROWS_AS(sweep_grid_from_json(R"({"batch": [1]})"), std::invalid_argument);
  CHECK_THROWS_AS(sweep_grid_from_json(R"({"batch_sizes": []})"), std::invalid_argument);
}

TEST_CASE("ranking reproduces the reported best trials") {
  const std::vector<std::pair<double, double>> a_scores = {
      {84.77, 95.77}, {83.18, 95.65}, {84.42, 95.27}, {78.72, 94.00}, {78.14, 93.98},
      {83.54, 95.83}, {87.24, 96.64}, {85.24, 96.49}, {81.18, 94.63}, {82.22, 94.37},
      {83.41, 94.37}, {80.08, 94.04}, {81.41, 94.62}, {84.30, 94.98}, {82.61, 94.62}};
  SweepResult ra;
  ra.scheme = FusionScheme::kConcat;
  const auto pa = SweepGrid::scheme_a().points();
  for (std::size_t i = 0; i < pa.size(); ++i) ra.trials.push_back({pa[i], scores(a_scores[i].first, a_scores[i].second)});
  ra.ranking = rank_trials(ra.trials);
  CHECK(ra.best().point == SweepPoint{32, 0, 2e-5, 0, 10000});
  CHECK(ra.trials[5].rank == 6);
  CHECK(ra.table().find("| *32* | 10,000 | 2e-5 | 87.24 | 96.64 |") != std::string::npos);

  const std::vector<std::pair<double, double>> b_scores = {
      {74.72, 91.31}, {81.05, 93.95}, {75.86, 91.65}, {76.36, 91.75}, {75.93, 92.98},
      {75.33, 92.54}, {77.30, 91.76}, {79.79, 92.57}, {77.30, 91.76}, {72.14, 91.41},
      {74.44, 91.91}, {80.33, 93.55}, {77.42, 92.15}, {77.22, 92.65}, {77.18, 93.00},
      {72.97, 91.80}, {80.49, 93.49}, {75.75, 93.31}, {73.87, 91.93}, {73.81, 92.57},
      {75.08, 92.17}, {80.78, 93.88}, {71.15, 91.81}, {78.41, 92.05}, {76.18, 92.50},
      {77.90, 92.79}, {78.88, 92.62}, {76.48, 92.58}, {74.11, 91.91}, {76.35, 93.22}};
  SweepResult rb;
  rb.scheme = FusionScheme::kLayoutInduced;
  const auto pb = SweepGrid::scheme_b().points();
  for (std::size_t i = 0; i < pb.size(); ++i) rb.trials.push_back({pb[i], scores(b_scores[i].first, b_scores[i].second)});
  rb.ranking = rank_trials(rb.trials);
  CHECK(rb.best().point == SweepPoint{16, 1000, 2e-4, 1e-2, 20000});
  CHECK(rb.table().find("| *16* | 1,000 | 20,000 | 2e-4 | 1e-2 | 81.05 | 93.95 |") != std::string::npos);
  // Equal macro scores fall back to micro, then to grid order.
  CHECK(rb.trials[6].rank < rb.trials[8].rank);
}

TEST_CASE("ablation selects the reported combination") {
  const std::vector<std::pair<double, double>> reported = {{79.95, 93.17}, {81.87, 93.65}, {79.10, 92.89},
                                                           {82.29, 93.58}, {81.24, 93.94}, {80.85, 93.77},
                                                           {81.84, 94.18}, {78.68, 93.49}};
  const auto entries = standard_ablation_entries();
  REQUIRE(entries.size() == reported.size());
  std::vector<AblationRow> rows;
  rows.push_back({control_ablation_entry(), scores(80.0, 93.0), false});
  for (std::size_t i = 0; i < entries.size(); ++i) {
    rows.push_back({entries[i], scores(reported[i].first, reported[i].second), false});
  }
  const auto dab = select_dab(rows);
  const std::set<AugmentationMethod> got(dab.methods.begin(), dab.methods.end());
  const std::set<AugmentationMethod> want(default_training_methods().begin(), default_training_methods().end());
  CHECK(got == want);
  CHECK(got == std::set<AugmentationMethod>{AugmentationMethod::kSaltPepperNoise, AugmentationMethod::kGaussianNoise,
                                            AugmentationMethod::kCharDeletePrefix, AugmentationMethod::kCharInsert});
  CHECK(dab.augment);
  CHECK(dab.cutout);
  CHECK_FALSE(dab.weighted_ce);
  CHECK(dab.augment == selected_dab().augment);
  CHECK(dab.cutout == selected_dab().cutout);
  CHECK_FALSE(rows[0].selected);
  int selected = 0;
  for (const auto& r : rows) selected += r.selected;
  CHECK(selected == 4);
  CHECK(ablation_table(rows).find("| Cutout augmentation | 81.84 | 94.18 | yes |") != std::string::npos);
}

TEST_CASE("a short stage run scores every column") {
  fixtures::TempDir dir("stage");
  StandinSizes sizes{16, 8, 10, 10, 10};
  const auto reg = synthetic_registry(sizes, 3);
  CHECK(reg.at(datasets::kIcpr22Noisy).size() == 8);
  ProtocolOptions options;
  options.out_dir = dir.path();
  std::vector<StageReport> reports;
  for (int stage : {1, 4}) {
    reports.push_back(run_stage(make_stage_plan(stage), tiny_config(), reg, options));
    const auto& r = reports.back();
    CHECK(r.results.size() == 5);
    for (const auto& c : dataset_columns()) {
      CHECK(std::filesystem::exists(dir.path() / ("stage" + std::to_string(stage)) / (c + ".tsv")));
    }
  }
  CHECK(reports[0].train_samples == 14);
  CHECK(reports[1].train_samples == 14 + 3 * 7);
  CHECK(reports[0].results.at(datasets::kChimeR).n > reports[1].results.at(datasets::kChimeR).n);
  CHECK(results_table(reports).find("All datasets with DAB") != std::string::npos);
}
