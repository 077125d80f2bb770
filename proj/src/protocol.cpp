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

#include "chartrole/protocol.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>

#include <json.hpp>

namespace chartrole {

using nlohmann::json;

const std::vector<std::string>& dataset_columns() {
  static const std::vector<std::string> cols = {datasets::kIcpr22, datasets::kIcpr22Noisy, datasets::kChimeR,
                                                datasets::kDeGruyter, datasets::kEconBiz};
  return cols;
}

void DatasetRegistry::add(Corpus corpus) {
  if (corpus.name.empty()) throw std::invalid_argument("registered corpora need a name");
  const std::string name = corpus.name;
  corpora_[name] = std::move(corpus);
}

const Corpus& DatasetRegistry::at(const std::string& name) const {
  auto it = corpora_.find(name);
  if (it == corpora_.end()) throw MissingCorporaError({name});
  return it->second;
}

std::vector<std::string> DatasetRegistry::names() const {
  std::vector<std::string> out;
  for (const auto& [n, c] : corpora_) out.push_back(n);
  return out;
}

MissingCorporaError::MissingCorporaError(std::vector<std::string> missing)
    : std::runtime_error([&] {
        std::string m = "missing corpora:";
        for (const auto& n : missing) m += " " + n;
        return m;
      }()),
      missing_(std::move(missing)) {}

// ---------------------------------------------------------------------------
// Stages

namespace {

bool is_small_corpus(const std::string& name) {
  return name == datasets::kChimeR || name == datasets::kDeGruyter || name == datasets::kEconBiz;
}

}  // namespace

StagePlan make_stage_plan(int stage) {
  if (stage < 1 || stage > 4) throw std::invalid_argument("stage must be 1, 2, 3 or 4");
  StagePlan plan;
  plan.stage = stage;
  plan.dab = stage == 2 || stage == 4;
  const bool all = stage >= 3;
  plan.train_sources.push_back({datasets::kIcpr22, "train"});
  if (all) {
    for (const char* c : {datasets::kChimeR, datasets::kDeGruyter, datasets::kEconBiz}) {
      plan.train_sources.push_back({c, "train"});
    }
  }
  plan.eval_targets.push_back({datasets::kIcpr22, datasets::kIcpr22, "test"});
  plan.eval_targets.push_back({datasets::kIcpr22Noisy, datasets::kIcpr22Noisy, "all"});
  for (const char* c : {datasets::kChimeR, datasets::kDeGruyter, datasets::kEconBiz}) {
    plan.eval_targets.push_back({c, c, all ? "test" : "all"});
  }
  return plan;
}

void validate_stage_plan(const StagePlan& plan) {
  auto fail = [&](const std::string& m) {
    throw std::invalid_argument("stage " + std::to_string(plan.stage) + " plan: " + m);
  };
  if (plan.stage < 1 || plan.stage > 4) fail("stage must be 1..4");
  if (plan.train_sources.empty()) fail("no training source");
  for (const auto& s : plan.train_sources) {
    if (s.corpus == datasets::kIcpr22Noisy) fail("the noisy corpus is test-only");
    if (s.corpus == datasets::kIcpr22 && s.split != "train") fail("ICPR22 trains on its train split only");
    if (plan.stage <= 2 && s.corpus != datasets::kIcpr22) fail("stages 1 and 2 train on ICPR22 only");
    if (plan.stage >= 3 && s.split != "train") fail("stages 3 and 4 train on train splits only");
  }
  if (plan.dab != (plan.stage == 2 || plan.stage == 4)) fail("DAB must be on exactly in stages 2 and 4");
  for (const auto& t : plan.eval_targets) {
    if (t.corpus == datasets::kIcpr22 && t.split != "test") fail("ICPR22 is scored on its test split");
    if (is_small_corpus(t.corpus)) {
      const std::string expected = plan.stage <= 2 ? "all" : "test";
      if (t.split != expected) fail(t.corpus + " must be scored on split '" + expected + "'");
    }
  }
}

std::string stage_label(int stage) {
  switch (stage) {
    case 1: return "ICPR22";
    case 2: return "ICPR22 with DAB";
    case 3: return "All datasets";
    case 4: return "All datasets with DAB";
  }
  throw std::invalid_argument("stage must be 1..4");
}

DatasetRegistry prepare_protocol_data(const DatasetRegistry& registry, const ProtocolOptions& options) {
  std::vector<std::string> missing;
  for (const auto& name : dataset_columns()) {
    if (!registry.contains(name)) missing.push_back(name);
  }
  if (!missing.empty()) throw MissingCorporaError(missing);

  DatasetRegistry out;
  Corpus icpr = registry.at(datasets::kIcpr22);
  if (!icpr.splits.count("train") || !icpr.splits.count("test")) {
    throw std::invalid_argument("ICPR22 needs 'train' and 'test' splits");
  }
  const auto parts = split_corpus(icpr.split_view("train"),
                                  {options.icpr_train_fraction, 1.0 - options.icpr_train_fraction},
                                  derive_seed(options.split_seed, "icpr22"), options.remainder);
  const auto test_ids = icpr.splits.at("test");
  icpr.splits.clear();
  for (const auto& s : parts[0].samples) icpr.splits["train"].push_back(s.sample_id);
  for (const auto& s : parts[1].samples) icpr.splits["val"].push_back(s.sample_id);
  icpr.splits["test"] = test_ids;
  out.add(std::move(icpr));
  out.add(registry.at(datasets::kIcpr22Noisy));
  for (const char* name : {datasets::kChimeR, datasets::kDeGruyter, datasets::kEconBiz}) {
    out.add(assign_splits(registry.at(name),
                          {options.small_train_fraction, 1.0 - options.small_train_fraction},
                          {"train", "test"}, derive_seed(options.split_seed, name), options.remainder));
  }
  return out;
}

Corpus assemble_training_set(const StagePlan& plan, const DatasetRegistry& prepared) {
  Corpus out;
  out.name = "stage" + std::to_string(plan.stage) + "-train";
  for (const auto& src : plan.train_sources) {
    for (auto s : prepared.at(src.corpus).split_view(src.split).samples) {
      s.sample_id = src.corpus + "/" + s.sample_id;
      out.samples.push_back(std::move(s));
    }
  }
  return out;
}

StageReport run_stage(const StagePlan& plan, const TrainConfig& base, const DatasetRegistry& registry,
                      const ProtocolOptions& options) {
  validate_stage_plan(plan);
  const DatasetRegistry prepared = prepare_protocol_data(registry, options);
  const Corpus train_set = assemble_training_set(plan, prepared);

  TrainConfig config = base;
  config.dab = plan.dab ? options.dab : DabConfig{};
  const TrainResult trained = train(config, train_set, nullptr, options.train);
  const EncoderClassifier classifier(trained.checkpoint);

  StageReport report;
  report.plan = plan;
  report.train_samples = train_set.size();
  report.run_dir = trained.run_dir;
  const std::filesystem::path dir =
      options.out_dir.empty() ? std::filesystem::path{} : options.out_dir / ("stage" + std::to_string(plan.stage));
  for (const auto& target : plan.eval_targets) {
    auto ev = evaluate(classifier, prepared.at(target.corpus), target.split);
    ev.report.metadata["stage"] = std::to_string(plan.stage);
    if (!dir.empty()) {
      write_predictions(dir / (target.column + ".tsv"), ev.predictions);
      std::ofstream(dir / (target.column + ".json")) << ev.report.to_json() << '\n';
    }
    report.results[target.column] = std::move(ev.report);
  }
  return report;
}

std::string results_table(const std::vector<StageReport>& stages, const std::string& model) {
  std::ostringstream out;
  out << "| Model | Train data \\ Test data |";
  for (const auto& c : dataset_columns()) out << ' ' << c << " |";
  out << "\n|---|---|";
  for (std::size_t i = 0; i < dataset_columns().size(); ++i) out << "---|";
  out << '\n';
  for (const auto& s : stages) {
    out << "| " << model << " | " << stage_label(s.plan.stage) << " |";
    for (const auto& c : dataset_columns()) {
      auto it = s.results.find(c);
      // The pipe between macro and micro is escaped so the cell stays one column.
      std::string cell = it == s.results.end() ? "-" : it->second.cell();
      if (const auto bar = cell.find(" | "); bar != std::string::npos) cell.replace(bar, 3, " \\| ");
      out << ' ' << cell << " |";
    }
    out << '\n';
  }
  return out.str();
}

DatasetRegistry synthetic_registry(const StandinSizes& sizes, std::uint64_t seed) {
  DatasetRegistry reg;

  Corpus icpr = generate_corpus(sizes.icpr_train + sizes.icpr_test, SpecDistribution{},
                                derive_seed(seed, datasets::kIcpr22), datasets::kIcpr22);
  for (int i = 0; i < static_cast<int>(icpr.size()); ++i) {
    icpr.splits[i < sizes.icpr_train ? "train" : "test"].push_back(icpr.samples[static_cast<std::size_t>(i)].sample_id);
  }
  Corpus noisy = make_noisy_corpus(icpr.split_view("test"), derive_seed(seed, datasets::kIcpr22Noisy)).corpus;
  noisy.name = datasets::kIcpr22Noisy;
  noisy.splits.clear();
  reg.add(std::move(icpr));
  reg.add(std::move(noisy));

  SpecDistribution chime;  // mostly bar charts, sparse extras
  chime.p_bar = 0.7;
  chime.p_line = 0.2;
  chime.p_value_labels = 0.6;
  chime.p_other = 0.2;
  reg.add(generate_corpus(sizes.chime_r, chime, derive_seed(seed, datasets::kChimeR), datasets::kChimeR));

  SpecDistribution degruyter;  // wider canvases, more annotations
  degruyter.min_width = 440;
  degruyter.max_width = 560;
  degruyter.p_other = 0.7;
  degruyter.p_tick_grouping = 0.6;
  degruyter.p_legend_title = 0.7;
  reg.add(generate_corpus(sizes.degruyter, degruyter, derive_seed(seed, datasets::kDeGruyter),
                          datasets::kDeGruyter));

  SpecDistribution econbiz;  // line-heavy
  econbiz.p_bar = 0.2;
  econbiz.p_line = 0.6;
  econbiz.p_mark_labels = 0.6;
  reg.add(generate_corpus(sizes.econbiz, econbiz, derive_seed(seed, datasets::kEconBiz), datasets::kEconBiz));
  return reg;
}

// ---------------------------------------------------------------------------
// Sweeps

long SweepGrid::steps_for(int batch_size) const {
  if (batch_size <= 0) throw std::invalid_argument("batch size must be > 0");
  return std::max<long>(1, sample_budget / batch_size);
}

std::vector<SweepPoint> SweepGrid::points() const {
  std::vector<SweepPoint> out;
  for (int b : batch_sizes) {
    for (int w : warmup_steps) {
      for (double wd : weight_decays) {
        for (double lr : learning_rates) out.push_back({b, w, lr, wd, steps_for(b)});
      }
    }
  }
  return out;
}

SweepGrid SweepGrid::scheme_a() {
  SweepGrid g;
  g.batch_sizes = {16, 32, 64};
  g.learning_rates = {1e-5, 2e-5, 3e-5, 4e-5, 5e-5};
  return g;
}

SweepGrid SweepGrid::scheme_b() {
  SweepGrid g;
  g.batch_sizes = {16};
  g.warmup_steps = {1000, 5000};
  g.learning_rates = {1e-4, 2e-4, 3e-4, 4e-4, 5e-4};
  g.weight_decays = {1e-2, 1e-3, 1e-4};
  return g;
}

std::string sweep_grid_to_json(const SweepGrid& g) {
  return json{{"batch_sizes", g.batch_sizes},
              {"warmup_steps", g.warmup_steps},
              {"learning_rates", g.learning_rates},
              {"weight_decays", g.weight_decays},
              {"sample_budget", g.sample_budget}}
      .dump(2);
}

SweepGrid sweep_grid_from_json(const std::string& text) {
  const json j = json::parse(text);
  SweepGrid g;
  if (j.contains("preset")) {
    const auto p = j.at("preset").get<std::string>();
    if (p == "A" || p == "concat_fusion") g = SweepGrid::scheme_a();
    else if (p == "B" || p == "layout_induced") g = SweepGrid::scheme_b();
    else throw std::invalid_argument("unknown sweep preset '" + p + "'");
  }
  for (const auto& [key, value] : j.items()) {
    if (key == "preset") continue;
    else if (key == "batch_sizes") g.batch_sizes = value.get<std::vector<int>>();
    else if (key == "warmup_steps") g.warmup_steps = value.get<std::vector<int>>();
    else if (key == "learning_rates") g.learning_rates = value.get<std::vector<double>>();
    else if (key == "weight_decays") g.weight_decays = value.get<std::vector<double>>();
    else if (key == "sample_budget") g.sample_budget = value.get<long>();
    else throw std::invalid_argument("unknown sweep grid field '" + key + "'");
  }
  if (g.points().empty()) throw std::invalid_argument("sweep grid is empty");
  return g;
}

std::vector<std::size_t> rank_trials(std::vector<Trial>& trials) {
  std::vector<std::size_t> idx(trials.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
    const auto& ra = trials[a].validation;
    const auto& rb = trials[b].validation;
    if (ra.f1_macro != rb.f1_macro) return ra.f1_macro > rb.f1_macro;
    return ra.f1_micro > rb.f1_micro;
  });
  for (std::size_t r = 0; r < idx.size(); ++r) trials[idx[r]].rank = static_cast<int>(r) + 1;
  return idx;
}

namespace {

std::string sci(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.0e", v);
  std::string s = buf;
  // 1e-05 -> 1e-5
  const auto e = s.find("e-0");
  if (e != std::string::npos) s.erase(e + 2, 1);
  return s;
}

std::string two(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

std::string grouped(long v) {
  std::string s = std::to_string(v);
  for (int i = static_cast<int>(s.size()) - 3; i > 0; i -= 3) s.insert(static_cast<std::size_t>(i), ",");
  return s;
}

}  // namespace

std::string SweepResult::table() const {
  std::ostringstream out;
  const bool b = scheme == FusionScheme::kLayoutInduced;
  if (b) {
    out << "| Batch Size | Warmup Steps | Training Steps | Learning Rate | Weight Decay | F1-macro | F1-micro |\n"
        << "|---|---|---|---|---|---|---|\n";
  } else {
    out << "| Batch Size | Training Steps | LR | F1-macro | F1-micro |\n|---|---|---|---|---|\n";
  }
  for (const auto& t : trials) {
    const std::string mark = t.rank == 1 ? "*" : "";
    out << "| " << mark << t.point.batch_size << mark << " | ";
    if (b) out << grouped(t.point.warmup_steps) << " | ";
    out << grouped(t.point.max_steps) << " | " << sci(t.point.learning_rate) << " | ";
    if (b) out << sci(t.point.weight_decay) << " | ";
    out << two(t.validation.f1_macro) << " | " << two(t.validation.f1_micro) << " |\n";
  }
  return out.str();
}

SweepResult sweep(const SweepGrid& grid, const TrainConfig& base, const Corpus& train_corpus,
                  const Corpus& val_corpus, const TrainOptions& options) {
  const auto points = grid.points();
  if (points.empty()) throw std::invalid_argument("sweep grid is empty");
  SweepResult result;
  result.scheme = base.encoder.scheme;
  for (const auto& p : points) {
    TrainConfig c = base;
    c.batch_size = p.batch_size;
    c.learning_rate = p.learning_rate;
    c.warmup_steps = p.warmup_steps;
    c.weight_decay = p.weight_decay;
    c.max_steps = p.max_steps;
    const auto trained = train(c, train_corpus, nullptr, options);
    Trial t;
    t.point = p;
    t.validation = evaluate(EncoderClassifier(trained.checkpoint), val_corpus).report;
    result.trials.push_back(std::move(t));
  }
  result.ranking = rank_trials(result.trials);
  return result;
}

// ---------------------------------------------------------------------------
// Ablation

std::vector<AblationEntry> standard_ablation_entries() {
  using M = AugmentationMethod;
  auto aug = [](std::string label, std::vector<M> methods) {
    AblationEntry e{std::move(label), DabKind::kAugmentation, {}};
    e.dab.augment = true;
    e.dab.methods = std::move(methods);
    return e;
  };
  std::vector<AblationEntry> out = {
      aug("Color adjustment", {M::kBrightness, M::kColor}),
      aug("Noise adjustment", {M::kSaltPepperNoise, M::kGaussianNoise}),
      aug("Rotation", {M::kRotation}),
      aug("Character deletion", {M::kCharDeletePrefix}),
      aug("Character insertion", {M::kCharInsert}),
      aug("Character substitution", {M::kCharSubstitute}),
  };
  AblationEntry cutout{"Cutout augmentation", DabKind::kBalancer, {}};
  cutout.dab.cutout = true;
  out.push_back(cutout);
  AblationEntry wce{"Weighted cross-entropy loss", DabKind::kBalancer, {}};
  wce.dab.weighted_ce = true;
  out.push_back(wce);
  return out;
}

AblationEntry control_ablation_entry() { return {"None", DabKind::kControl, DabConfig{}}; }

DabConfig select_dab(std::vector<AblationRow>& rows, int augmentations, int balancers) {
  auto pick = [&](DabKind kind, int count) {
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < rows.size(); ++i) {
      if (rows[i].entry.kind == kind) idx.push_back(i);
    }
    std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
      if (rows[a].report.f1_macro != rows[b].report.f1_macro) {
        return rows[a].report.f1_macro > rows[b].report.f1_macro;
      }
      return rows[a].report.f1_micro > rows[b].report.f1_micro;
    });
    for (std::size_t k = 0; k < idx.size() && static_cast<int>(k) < count; ++k) rows[idx[k]].selected = true;
  };
  for (auto& r : rows) r.selected = false;
  pick(DabKind::kAugmentation, augmentations);
  pick(DabKind::kBalancer, balancers);

  DabConfig out;
  out.methods.clear();
  for (const auto& r : rows) {
    if (!r.selected) continue;
    if (r.entry.dab.augment) {
      out.augment = true;
      for (auto m : r.entry.dab.methods) {
        if (std::find(out.methods.begin(), out.methods.end(), m) == out.methods.end()) out.methods.push_back(m);
      }
    }
    out.cutout = out.cutout || r.entry.dab.cutout;
    out.weighted_ce = out.weighted_ce || r.entry.dab.weighted_ce;
  }
  if (!out.augment) out.methods = default_training_methods();
  return out;
}

std::vector<AblationRow> ablate_dab(const std::vector<AblationEntry>& entries, const TrainConfig& base,
                                    const Corpus& train_corpus, const Corpus& test_corpus,
                                    const TrainOptions& options) {
  if (entries.empty()) throw std::invalid_argument("ablation needs at least one entry");
  std::vector<AblationRow> rows;
  for (const auto& e : entries) {
    TrainConfig c = base;
    c.dab = e.dab;
    const auto trained = train(c, train_corpus, nullptr, options);
    AblationRow row{e, evaluate(EncoderClassifier(trained.checkpoint), test_corpus).report, false};
    row.report.metadata["entry"] = e.label;
    rows.push_back(std::move(row));
  }
  select_dab(rows);
  return rows;
}

std::string ablation_table(const std::vector<AblationRow>& rows) {
  std::ostringstream out;
  out << "| Data Augmentation and Balancing | F1-macro | F1-micro | Selected |\n|---|---|---|---|\n";
  for (const auto& r : rows) {
    out << "| " << r.entry.label << " | " << two(r.report.f1_macro) << " | " << two(r.report.f1_micro) << " | "
        << (r.selected ? "yes" : "") << " |\n";
  }
  return out.str();
}

}  // namespace chartrole
