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

// Command-line front end: corpus handling, augmentation, training, evaluation,
// the four-stage protocol, sweeps, ablation, and the annotation service.

#include <csignal>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "chartrole/augmentation.hpp"
#include "chartrole/balancing.hpp"
#include "chartrole/harness.hpp"
#include "chartrole/protocol.hpp"
#include "chartrole/service.hpp"
#include "chartrole/synth.hpp"

namespace fs = std::filesystem;
using namespace chartrole;

namespace {

std::string read_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void print_load_report(const LoadReport& report) {
  for (const auto& s : report.skipped) {
    std::cerr << "skipped " << s.sample_id << " (" << s.path.string() << "): " << s.reason << "\n";
  }
  for (const auto& n : report.notes) {
    std::cerr << "note " << n.sample_id << "/" << n.block_id << ": " << n.note << "\n";
  }
}

// A corpus is a manifest file, a directory holding corpus.manifest, or a
// directory in the native layout.
Corpus load_any(const fs::path& path, bool require_roles = true, const std::string& name = "") {
  LoadOptions opts;
  opts.require_roles = require_roles;
  opts.name = name;
  LoadResult loaded;
  if (fs::is_regular_file(path)) {
    loaded = load_manifest(path, opts);
  } else if (fs::is_regular_file(path / "corpus.manifest")) {
    loaded = load_manifest(path / "corpus.manifest", opts);
  } else {
    loaded = load_corpus(path, AnnotationFormat::kNative, opts);
  }
  print_load_report(loaded.report);
  if (loaded.corpus.empty()) throw std::runtime_error("no usable samples in " + path.string());
  return loaded.corpus;
}

std::vector<double> parse_ratios(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(std::stod(item));
  return out;
}

std::vector<std::string> parse_names(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(item);
  return out;
}

TrainConfig load_train_config(const std::string& path) {
  if (path.empty()) return TrainConfig::desk_preset(FusionScheme::kConcat);
  return train_config_from_json(read_file(path));
}

MacroAverage parse_averaging(const std::string& s) {
  if (s == "present") return MacroAverage::kPresentInGold;
  if (s == "all") return MacroAverage::kAllClasses;
  throw std::invalid_argument("averaging must be 'present' or 'all'");
}

TrainOptions train_options(const std::string& runs) {
  TrainOptions o;
  o.runs_root = runs;
  o.on_log = [](const CurvePoint& p) {
    std::cerr << "step " << p.step << " loss " << p.loss << " lr " << p.learning_rate;
    if (p.val_f1_macro) std::cerr << " val_f1_macro " << *p.val_f1_macro;
    std::cerr << "\n";
  };
  return o;
}

DatasetRegistry load_registry(const std::string& data_dir, bool standins, std::uint64_t seed) {
  if (standins) return synthetic_registry({}, seed);
  if (data_dir.empty()) throw std::invalid_argument("give --data DIR or --standins");
  DatasetRegistry reg;
  for (const auto& name : dataset_columns()) {
    const fs::path dir = fs::path(data_dir) / name;
    if (fs::exists(dir)) reg.add(load_any(dir, true, name));
  }
  return reg;
}

AnnotationServer* g_server = nullptr;

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Text role classification in charts"};
  app.require_subcommand(1);

  // ingest
  auto* ingest = app.add_subcommand("ingest", "Load a corpus directory and write a manifest");
  std::string ingest_root, ingest_format = "native", ingest_out = "corpus.manifest", ingest_name;
  ingest->add_option("--root", ingest_root, "Corpus directory")->required();
  ingest->add_option("--format", ingest_format, "icpr22 or native");
  ingest->add_option("--out", ingest_out, "Manifest path");
  ingest->add_option("--name", ingest_name, "Corpus name (default: directory name)");

  // split
  auto* split = app.add_subcommand("split", "Assign named splits to a manifest");
  std::string split_in, split_out, split_ratios = "0.7,0.3", split_names = "train,test", split_remainder = "last";
  std::uint64_t split_seed = 0;
  split->add_option("--manifest", split_in, "Input manifest or corpus directory")->required();
  split->add_option("--ratios", split_ratios, "Comma-separated ratios");
  split->add_option("--names", split_names, "Comma-separated split names");
  split->add_option("--seed", split_seed);
  split->add_option("--remainder", split_remainder, "Partition receiving the rounding remainder: first or last");
  split->add_option("--out", split_out, "Output manifest (default: overwrite input)");

  // synth
  auto* synth = app.add_subcommand("synth", "Generate a synthetic corpus in the native layout");
  int synth_n = 200;
  std::uint64_t synth_seed = 1;
  std::string synth_out;
  bool synth_standins = false;
  synth->add_option("--n", synth_n, "Number of charts");
  synth->add_option("--seed", synth_seed);
  synth->add_option("--out", synth_out)->required();
  synth->add_flag("--standins", synth_standins, "Write stand-ins for all five datasets under OUT/<name>");

  // augment
  auto* augment = app.add_subcommand("augment", "Write one augmented copy of every sample");
  std::string aug_corpus, aug_methods = "noise,char_delete_prefix,char_insert", aug_out;
  std::uint64_t aug_seed = 0;
  augment->add_option("--corpus", aug_corpus)->required();
  augment->add_option("--methods", aug_methods, "Comma-separated methods; 'noise' covers both noise kinds");
  augment->add_option("--seed", aug_seed);
  augment->add_option("--out", aug_out)->required();

  // noisy-set
  auto* noisy = app.add_subcommand("noisy-set", "Build the noisy copy of a test corpus");
  std::string noisy_corpus, noisy_out;
  std::uint64_t noisy_seed = 0;
  noisy->add_option("--corpus", noisy_corpus)->required();
  noisy->add_option("--seed", noisy_seed);
  noisy->add_option("--out", noisy_out)->required();

  // cutout
  auto* cutout = app.add_subcommand("cutout", "Write one cutout copy of every sample");
  std::string cut_corpus, cut_out, cut_sampling = "proportional";
  std::uint64_t cut_seed = 0;
  cutout->add_option("--corpus", cut_corpus)->required();
  cutout->add_option("--seed", cut_seed);
  cutout->add_option("--sampling", cut_sampling, "proportional or inverse");
  cutout->add_option("--out", cut_out)->required();

  // train
  auto* trainc = app.add_subcommand("train", "Train a classifier");
  std::string tr_config, tr_corpus, tr_split = "all", tr_val, tr_val_split = "all", tr_runs = "runs", tr_ckpt;
  trainc->add_option("--config", tr_config, "TrainConfig file (default: desk preset, scheme A)");
  trainc->add_option("--corpus", tr_corpus)->required();
  trainc->add_option("--split", tr_split);
  trainc->add_option("--val", tr_val, "Validation corpus");
  trainc->add_option("--val-split", tr_val_split);
  trainc->add_option("--runs", tr_runs, "Run directory root");
  trainc->add_option("--ckpt", tr_ckpt, "Also save the checkpoint here");

  // eval
  auto* evalc = app.add_subcommand("eval", "Classify a corpus and write predictions");
  std::string ev_ckpt, ev_corpus, ev_split = "test", ev_out = "predictions.tsv", ev_avg = "present";
  evalc->add_option("--ckpt", ev_ckpt)->required();
  evalc->add_option("--corpus", ev_corpus)->required();
  evalc->add_option("--split", ev_split);
  evalc->add_option("--out", ev_out);
  evalc->add_option("--averaging", ev_avg, "present or all");

  // score
  auto* score = app.add_subcommand("score", "Score a prediction file");
  std::string sc_in, sc_avg = "present";
  score->add_option("--predictions", sc_in)->required();
  score->add_option("--averaging", sc_avg, "present or all");

  // stage
  auto* stage = app.add_subcommand("stage", "Run protocol stages");
  std::vector<int> st_n;
  std::string st_data, st_config, st_out = "protocol", st_runs = "runs";
  bool st_standins = false;
  std::uint64_t st_seed = 0;
  stage->add_option("--n", st_n, "Stage numbers 1..4")->required()->check(CLI::Range(1, 4));
  stage->add_option("--data", st_data, "Directory with one subdirectory per dataset");
  stage->add_flag("--standins", st_standins, "Use synthetic stand-ins");
  stage->add_option("--config", st_config);
  stage->add_option("--seed", st_seed, "Split and stand-in seed");
  stage->add_option("--out", st_out);
  stage->add_option("--runs", st_runs);

  // sweep
  auto* sweepc = app.add_subcommand("sweep", "Hyperparameter sweep");
  std::string sw_grid, sw_config, sw_train, sw_val, sw_runs = "runs", sw_out;
  sweepc->add_option("--grid", sw_grid)->required();
  sweepc->add_option("--config", sw_config);
  sweepc->add_option("--train", sw_train)->required();
  sweepc->add_option("--val", sw_val)->required();
  sweepc->add_option("--runs", sw_runs);
  sweepc->add_option("--out", sw_out, "Write the table here");

  // ablate
  auto* ablate = app.add_subcommand("ablate", "Single-method DAB ablation");
  std::string ab_config, ab_train, ab_test, ab_runs = "runs", ab_out;
  bool ab_control = false;
  ablate->add_option("--config", ab_config);
  ablate->add_option("--train", ab_train)->required();
  ablate->add_option("--test", ab_test)->required();
  ablate->add_flag("--control", ab_control, "Add a row without DAB");
  ablate->add_option("--runs", ab_runs);
  ablate->add_option("--out", ab_out, "Write the table here");

  // serve
  auto* serve = app.add_subcommand("serve", "Run the annotation service");
  int sv_port = 8040;
  std::string sv_host = "127.0.0.1", sv_log = "annotations.jsonl", sv_exports = "exports", sv_static;
  std::vector<std::string> sv_corpora;
  serve->add_option("--port", sv_port);
  serve->add_option("--host", sv_host);
  serve->add_option("--corpus", sv_corpora, "Corpus directory (repeatable)")->required();
  serve->add_option("--log", sv_log, "Event log");
  serve->add_option("--exports", sv_exports, "Export root");
  serve->add_option("--static", sv_static, "UI asset directory");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*ingest) {
      LoadOptions opts;
      opts.name = ingest_name;
      const auto format = parse_annotation_format(ingest_format);
      const auto loaded = load_corpus(ingest_root, format, opts);
      print_load_report(loaded.report);
      write_manifest(make_manifest(loaded, format), ingest_out);
      std::cout << loaded.corpus.size() << " samples, " << loaded.report.skipped.size() << " skipped -> "
                << ingest_out << "\n";
    } else if (*split) {
      const fs::path in = fs::is_directory(split_in) ? fs::path(split_in) / "corpus.manifest" : fs::path(split_in);
      const auto manifest = read_manifest(in);
      LoadOptions opts;
      opts.require_roles = false;
      auto loaded = load_manifest(in, opts);
      print_load_report(loaded.report);
      if (split_remainder != "first" && split_remainder != "last") {
        throw std::invalid_argument("--remainder must be 'first' or 'last'");
      }
      loaded.corpus = assign_splits(loaded.corpus, parse_ratios(split_ratios), parse_names(split_names), split_seed,
                                    split_remainder == "first" ? SplitRemainder::kFirst : SplitRemainder::kLast);
      const fs::path out = split_out.empty() ? in : fs::path(split_out);
      write_manifest(make_manifest(loaded, manifest.format), out);
      for (const auto& [name, ids] : loaded.corpus.splits) std::cout << name << "\t" << ids.size() << "\n";
    } else if (*synth) {
      if (synth_standins) {
        const auto reg = synthetic_registry({}, synth_seed);
        for (const auto& name : reg.names()) {
          export_annotations(reg.at(name), fs::path(synth_out) / name);
          std::cout << name << "\t" << reg.at(name).size() << "\n";
        }
      } else {
        const auto corpus = generate_corpus(synth_n, {}, synth_seed);
        export_annotations(corpus, synth_out);
        std::cout << corpus.size() << " charts -> " << synth_out << "\n";
      }
    } else if (*augment) {
      const auto corpus = load_any(aug_corpus);
      const auto out = augment_corpus(corpus, parse_method_list(aug_methods), aug_seed);
      export_annotations(out, aug_out);
      std::cout << out.size() << " augmented samples -> " << aug_out << "\n";
    } else if (*noisy) {
      const auto corpus = load_any(noisy_corpus);
      const auto out = make_noisy_corpus(corpus, noisy_seed);
      export_annotations(out.corpus, noisy_out);
      std::ofstream recipes(fs::path(noisy_out) / "recipes.jsonl");
      for (std::size_t i = 0; i < out.recipes.size(); ++i) {
        recipes << "{\"sample_id\":\"" << out.corpus.samples[i].sample_id << "\","
                << recipe_to_json(out.recipes[i]).substr(1) << "\n";
      }
      std::cout << out.corpus.size() << " noisy samples -> " << noisy_out << "\n";
    } else if (*cutout) {
      CutoutOptions opts;
      if (cut_sampling == "inverse") {
        opts.sampling = CutoutSampling::kInverse;
      } else if (cut_sampling != "proportional") {
        throw std::invalid_argument("--sampling must be 'proportional' or 'inverse'");
      }
      const auto corpus = load_any(cut_corpus);
      const auto out = cutout_corpus(corpus, cut_seed, opts);
      export_annotations(out, cut_out);
      std::cout << out.size() << " cutout samples -> " << cut_out << "\n";
    } else if (*trainc) {
      const auto config = load_train_config(tr_config);
      const auto corpus = load_any(tr_corpus).split_view(tr_split);
      std::optional<Corpus> val;
      if (!tr_val.empty()) val = load_any(tr_val).split_view(tr_val_split);
      auto opts = train_options(tr_runs);
      if (val) opts.eval_every = opts.log_every * 10;
      const auto result = train(config, corpus, val ? &*val : nullptr, opts);
      if (!tr_ckpt.empty()) save_checkpoint(result.checkpoint, tr_ckpt);
      std::cout << "run " << result.run_dir.string() << "\n";
    } else if (*evalc) {
      const auto classifier = EncoderClassifier(load_checkpoint(ev_ckpt));
      const auto corpus = load_any(ev_corpus);
      const auto ev = evaluate(classifier, corpus, ev_split, parse_averaging(ev_avg));
      write_predictions(ev_out, ev.predictions);
      std::cout << ev.report.to_json() << "\n";
    } else if (*score) {
      const auto preds = read_predictions(sc_in);
      std::cout << score_predictions(preds, parse_averaging(sc_avg)).to_json() << "\n";
    } else if (*stage) {
      const auto config = load_train_config(st_config);
      const auto reg = load_registry(st_data, st_standins, st_seed);
      ProtocolOptions opts;
      opts.split_seed = st_seed;
      opts.out_dir = st_out;
      opts.train = train_options(st_runs);
      std::vector<StageReport> reports;
      for (int n : st_n) reports.push_back(run_stage(make_stage_plan(n), config, reg, opts));
      const auto table = results_table(reports, std::string(scheme_name(config.encoder.scheme)));
      fs::create_directories(st_out);
      std::ofstream(fs::path(st_out) / "results.md") << table;
      std::cout << table;
    } else if (*sweepc) {
      const auto grid = sweep_grid_from_json(read_file(sw_grid));
      const auto config = load_train_config(sw_config);
      const auto result = sweep(grid, config, load_any(sw_train), load_any(sw_val), train_options(sw_runs));
      const auto table = result.table();
      if (!sw_out.empty()) std::ofstream(sw_out) << table;
      std::cout << table;
    } else if (*ablate) {
      auto entries = standard_ablation_entries();
      if (ab_control) entries.insert(entries.begin(), control_ablation_entry());
      const auto config = load_train_config(ab_config);
      auto rows = ablate_dab(entries, config, load_any(ab_train), load_any(ab_test), train_options(ab_runs));
      select_dab(rows);
      const auto table = ablation_table(rows);
      if (!ab_out.empty()) std::ofstream(ab_out) << table;
      std::cout << table;
    } else if (*serve) {
      std::vector<Corpus> corpora;
      for (const auto& dir : sv_corpora) corpora.push_back(load_any(dir, false));
      AnnotationStore store(std::move(corpora), sv_log);
      ServiceConfig cfg;
      cfg.host = sv_host;
      cfg.port = sv_port;
      cfg.export_root = sv_exports;
      cfg.static_dir = sv_static;
      AnnotationServer server(store, cfg);
      g_server = &server;
      std::signal(SIGINT, [](int) {
        if (g_server) g_server->stop();
      });
      std::cerr << "serving on " << sv_host << ":" << sv_port << "\n";
      server.run();
    }
  } catch (const ExportError& e) {
    std::cerr << "error: " << e.what() << "\n";
    for (const auto& o : e.offenders()) std::cerr << "  unlabeled " << o.sample_id << "/" << o.block_id << "\n";
    return 1;
  } catch (const TrainingError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
