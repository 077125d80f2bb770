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

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>

#include <json.hpp>

#include "chartrole/harness.hpp"
#include "chartrole/kernels.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace chartrole {

using nlohmann::json;

DabConfig selected_dab() {
  DabConfig d;
  d.augment = true;
  d.methods = default_training_methods();
  d.cutout = true;
  d.weighted_ce = false;
  return d;
}

// ---------------------------------------------------------------------------
// Config

void TrainConfig::validate() const {
  encoder.validate();
  auto fail = [](const std::string& m) { throw std::invalid_argument("train config: " + m); };
  if (batch_size <= 0) fail("batch_size must be > 0");
  if (max_steps <= 0) fail("max_steps must be > 0");
  if (!(learning_rate > 0)) fail("learning_rate must be > 0");
  if (warmup_steps < 0) fail("warmup_steps must be >= 0");
  if (weight_decay < 0) fail("weight_decay must be >= 0");
  for (double b : adam_betas) {
    if (!(b > 0 && b < 1)) fail("adam betas must lie in (0, 1)");
  }
  if (!(adam_epsilon > 0)) fail("adam_epsilon must be > 0");
  if (dab.augment && dab.methods.empty()) fail("dab.augment needs at least one method");
}

TrainConfig TrainConfig::paper_preset(FusionScheme scheme) {
  TrainConfig c;
  c.encoder = EncoderConfig::full(scheme);
  c.adam_betas = {0.9, 0.98};
  if (scheme == FusionScheme::kConcat) {
    c.batch_size = 32;
    c.learning_rate = 2e-5;
    c.max_steps = 10000;
  } else {
    c.batch_size = 16;
    c.learning_rate = 2e-4;
    c.warmup_steps = 1000;
    c.weight_decay = 1e-2;
    c.max_steps = 20000;
  }
  return c;
}

TrainConfig TrainConfig::desk_preset(FusionScheme scheme) {
  TrainConfig c;
  c.encoder = EncoderConfig::desk(scheme);
  c.batch_size = 8;
  c.learning_rate = 5e-4;
  c.warmup_steps = 50;
  c.weight_decay = 1e-2;
  c.max_steps = 1500;
  return c;
}

namespace {

json dab_to_json(const DabConfig& d) {
  std::vector<std::string> names;
  for (auto m : d.methods) names.emplace_back(method_name(m));
  return {{"augment", d.augment}, {"methods", names}, {"cutout", d.cutout}, {"weighted_ce", d.weighted_ce}};
}

void dab_from_json(const json& j, DabConfig& d, bool balancing_only) {
  for (const auto& [key, value] : j.items()) {
    if (key == "weighted_ce") d.weighted_ce = value.get<bool>();
    else if (key == "cutout") d.cutout = value.get<bool>();
    else if (!balancing_only && key == "augment") d.augment = value.get<bool>();
    else if (!balancing_only && key == "methods") {
      d.methods.clear();
      for (const auto& m : value) {
        const auto s = m.get<std::string>();
        for (auto parsed : parse_method_list(s)) {
          if (parsed == AugmentationMethod::kCutout) d.cutout = true;
          else d.methods.push_back(parsed);
        }
      }
    } else {
      throw std::invalid_argument("unknown " + std::string(balancing_only ? "balancing" : "dab") +
                                  " field '" + key + "'");
    }
  }
}

}  // namespace

std::string train_config_to_json(const TrainConfig& c) {
  json j = {{"encoder", json::parse(encoder_config_to_json(c.encoder))},
            {"batch_size", c.batch_size},
            {"learning_rate", c.learning_rate},
            {"warmup_steps", c.warmup_steps},
            {"weight_decay", c.weight_decay},
            {"max_steps", c.max_steps},
            {"adam_betas", c.adam_betas},
            {"adam_epsilon", c.adam_epsilon},
            {"seed", c.seed},
            {"dab", dab_to_json(c.dab)}};
  return j.dump(2);
}

TrainConfig train_config_from_json(const std::string& text) {
  const json j = json::parse(text);
  if (!j.is_object()) throw std::invalid_argument("train config must be an object");
  TrainConfig c;
  for (const auto& [key, value] : j.items()) {
    if (key == "encoder") {
      if (value.is_string()) {
        // preset name: "toy:A", "desk:B", "full:A"
        const auto s = value.get<std::string>();
        const auto colon = s.find(':');
        const auto scheme = parse_scheme(colon == std::string::npos ? "A" : s.substr(colon + 1));
        const auto kind = s.substr(0, colon);
        if (kind == "toy") c.encoder = EncoderConfig::toy(scheme);
        else if (kind == "desk") c.encoder = EncoderConfig::desk(scheme);
        else if (kind == "full") c.encoder = EncoderConfig::full(scheme);
        else throw std::invalid_argument("unknown encoder preset '" + s + "'");
      } else {
        c.encoder = encoder_config_from_json(value.dump());
      }
    } else if (key == "batch_size") c.batch_size = value.get<int>();
    else if (key == "learning_rate") c.learning_rate = value.get<double>();
    else if (key == "warmup_steps") c.warmup_steps = value.get<int>();
    else if (key == "weight_decay") c.weight_decay = value.get<double>();
    else if (key == "max_steps") c.max_steps = value.get<long>();
    else if (key == "adam_betas") {
      if (!value.is_array() || value.size() != 2) throw std::invalid_argument("adam_betas needs two values");
      c.adam_betas = {value[0].get<double>(), value[1].get<double>()};
    } else if (key == "adam_epsilon") c.adam_epsilon = value.get<double>();
    else if (key == "seed") c.seed = value.get<std::uint64_t>();
    else if (key == "dab") dab_from_json(value, c.dab, false);
    else if (key == "balancing") dab_from_json(value, c.dab, true);
    else throw std::invalid_argument("unknown train config field '" + key + "'");
  }
  c.validate();
  return c;
}

// ---------------------------------------------------------------------------
// Data

Corpus expand_dab(const Corpus& corpus, const DabConfig& dab, std::uint64_t seed) {
  Corpus out = corpus;
  auto append_extra = [&out, n = corpus.size()](const Corpus& grown) {
    for (std::size_t i = n; i < grown.samples.size(); ++i) out.samples.push_back(grown.samples[i]);
    for (const auto& [split, ids] : grown.splits) {
      auto& dst = out.splits[split];
      for (const auto& id : ids) {
        if (id.find('~') != std::string::npos) dst.push_back(id);
      }
    }
  };
  if (dab.augment) append_extra(augment_corpus(corpus, dab.methods, derive_seed(seed, "augment")));
  if (dab.cutout) append_extra(cutout_corpus(corpus, derive_seed(seed, "cutout")));
  return out;
}

std::string corpus_fingerprint(const Corpus& corpus) {
  std::uint64_t h = fnv1a(corpus.name);
  auto mix = [&h](std::string_view s) { h = fnv1a(s, h ^ 0x9e37); };
  for (const auto& s : corpus.samples) {
    mix(s.sample_id);
    mix(s.chart_type);
    if (s.image) {
      const auto px = s.image->data();
      mix(std::string_view(reinterpret_cast<const char*>(px.data()), px.size()));
    }
    for (const auto& b : s.blocks) {
      char buf[128];
      std::snprintf(buf, sizeof buf, "%d|%.6f|%.6f|%.6f|%.6f|%d", b.block_id, b.bbox.x, b.bbox.y,
                    b.bbox.width, b.bbox.height, b.role ? static_cast<int>(*b.role) : -1);
      mix(buf);
      mix(b.text);
    }
  }
  char out[17];
  std::snprintf(out, sizeof out, "%016llx", static_cast<unsigned long long>(h));
  return out;
}

double scheduled_rate(const TrainConfig& config, long step) {
  if (config.warmup_steps <= 0) return config.learning_rate;
  return config.learning_rate * std::min(1.0, static_cast<double>(step + 1) / config.warmup_steps);
}

TrainingError::TrainingError(long step, std::vector<std::string> sample_ids)
    : std::runtime_error("non-finite loss at step " + std::to_string(step)),
      step_(step),
      sample_ids_(std::move(sample_ids)) {}

namespace {

struct Example {
  ModelInput input;
  std::vector<std::optional<TextRole>> labels;  // per span
  std::size_t labeled = 0;
  std::string sample_id;
};

std::filesystem::path fresh_run_dir(const std::filesystem::path& root, const std::string& key) {
  std::filesystem::path dir = root / key;
  for (int i = 1; std::filesystem::exists(dir); ++i) dir = root / (key + "." + std::to_string(i));
  std::filesystem::create_directories(dir);
  return dir;
}

void write_text(const std::filesystem::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  out << text;
}

// Exceptions may not leave an OpenMP region; loops park them here.
class ErrorSlot {
 public:
  template <typename F>
  void run(F&& f) {
    try {
      f();
    } catch (...) {
#pragma omp critical(chartrole_error_slot)
      if (!error_) error_ = std::current_exception();
    }
  }
  void rethrow() const {
    if (error_) std::rethrow_exception(error_);
  }

 private:
  std::exception_ptr error_;
};

int thread_count() {
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

int thread_id() {
#ifdef _OPENMP
  return omp_get_thread_num();
#else
  return 0;
#endif
}

}  // namespace

TrainResult train(const TrainConfig& config_in, const Corpus& train_corpus, const Corpus* val_corpus,
                  const TrainOptions& options) {
  config_in.validate();
  if (train_corpus.empty()) throw std::invalid_argument("training corpus is empty");
  if (options.eval_every > 0 && !val_corpus) {
    throw std::invalid_argument("eval_every needs a validation corpus");
  }
  TrainConfig config = config_in;
  const std::uint64_t seed = config.seed;

  const Corpus data = expand_dab(train_corpus, config.dab, seed);
  const Vocab vocab = Vocab::build(data);
  config.encoder.vocab_size = vocab.size();
  EncoderModel model(config.encoder, derive_seed(seed, "init"));

  std::vector<Example> examples(data.samples.size());
  ErrorSlot prep_error;
#pragma omp parallel for schedule(dynamic)
  for (std::size_t i = 0; i < data.samples.size(); ++i) prep_error.run([&] {
    const auto& s = data.samples[i];
    Example& e = examples[i];
    e.sample_id = s.sample_id;
    e.input = prepare_input(s, vocab, config.encoder);
    std::map<int, std::optional<TextRole>> role_of;
    for (const auto& b : s.blocks) role_of[b.block_id] = b.role;
    for (const auto& span : e.input.tokens.spans) {
      e.labels.push_back(role_of[span.block_id]);
      if (e.labels.back()) ++e.labeled;
    }
  });
  prep_error.rethrow();
  std::erase_if(examples, [](const Example& e) { return e.labeled == 0; });
  if (examples.empty()) throw std::invalid_argument("training corpus has no labeled blocks");

  const ClassWeights weights =
      config.dab.weighted_ce ? class_weights(class_distribution(data)) : unit_weights();

  TrainResult result;
  result.train_samples = data.size();
  const std::string fingerprint = corpus_fingerprint(train_corpus);
  if (!options.runs_root.empty()) {
    const std::string key = std::to_string(fnv1a(train_config_to_json(config_in) + fingerprint));
    result.run_dir = fresh_run_dir(options.runs_root, key);
    write_text(result.run_dir / "train_config.json", train_config_to_json(config_in) + "\n");
  }

  const std::size_t n_params = model.param_count();
  std::vector<double> m(n_params, 0.0), v(n_params, 0.0), grad(n_params);
  std::vector<char> decay(n_params, 0);
  for (const auto& t : model.tensors()) {
    if (t.decay) std::fill_n(decay.begin() + static_cast<std::ptrdiff_t>(t.offset), t.size(), 1);
  }
  const int threads = thread_count();
  std::vector<std::vector<double>> thread_grad(static_cast<std::size_t>(threads),
                                               std::vector<double>(n_params));
  std::vector<double> sample_loss;

  Rng order_rng = make_rng(seed, "order");
  std::vector<std::size_t> order(examples.size());
  std::iota(order.begin(), order.end(), 0);
  std::size_t cursor = order.size();
  const double b1 = config.adam_betas[0], b2 = config.adam_betas[1];
  double b1t = 1, b2t = 1;

  for (long step = 0; step < config.max_steps; ++step) {
    std::vector<std::size_t> batch;
    while (batch.size() < static_cast<std::size_t>(config.batch_size)) {
      if (cursor == order.size()) {
        std::shuffle(order.begin(), order.end(), order_rng);
        cursor = 0;
      }
      batch.push_back(order[cursor++]);
    }
    std::size_t blocks = 0;
    for (auto i : batch) blocks += examples[i].labeled;

    for (auto& g : thread_grad) std::fill(g.begin(), g.end(), 0.0);
    sample_loss.assign(batch.size(), 0.0);
    ErrorSlot step_error;
#pragma omp parallel for schedule(static)
    for (std::size_t bi = 0; bi < batch.size(); ++bi) step_error.run([&] {
      const Example& e = examples[batch[bi]];
      ForwardCache cache;
      const auto logits = model.forward(e.input, &cache);
      std::vector<RoleLogits> lg;
      std::vector<TextRole> labels;
      for (std::size_t s = 0; s < logits.size(); ++s) {
        if (!e.labels[s]) continue;
        lg.push_back(logits[s]);
        labels.push_back(*e.labels[s]);
      }
      std::vector<RoleLogits> d;
      const double share = static_cast<double>(e.labeled) / static_cast<double>(blocks);
      sample_loss[bi] = weighted_cross_entropy(lg, labels, weights, &d) * share;
      std::vector<RoleLogits> d_all(logits.size(), RoleLogits{});
      for (std::size_t s = 0, k = 0; s < logits.size(); ++s) {
        if (!e.labels[s]) continue;
        for (std::size_t j = 0; j < kNumRoles; ++j) d_all[s][j] = d[k][j] * share;
        ++k;
      }
      model.backward(e.input, cache, d_all, thread_grad[static_cast<std::size_t>(thread_id())]);
    });
    step_error.rethrow();
    double loss = 0;
    for (double l : sample_loss) loss += l;
    if (!std::isfinite(loss)) {
      std::vector<std::string> ids;
      for (auto i : batch) ids.push_back(examples[i].sample_id);
      if (!result.run_dir.empty()) {
        write_text(result.run_dir / "diagnostics.json",
                   json{{"step", step}, {"loss", std::to_string(loss)}, {"batch", ids}}.dump(2) + "\n");
      }
      throw TrainingError(step, ids);
    }
    std::copy(thread_grad[0].begin(), thread_grad[0].end(), grad.begin());
    for (std::size_t t = 1; t < thread_grad.size(); ++t) {
      for (std::size_t i = 0; i < n_params; ++i) grad[i] += thread_grad[t][i];
    }

    const double lr = scheduled_rate(config, step);
    b1t *= b1;
    b2t *= b2;
    auto p = model.params();
    for (std::size_t i = 0; i < n_params; ++i) {
      m[i] = b1 * m[i] + (1 - b1) * grad[i];
      v[i] = b2 * v[i] + (1 - b2) * grad[i] * grad[i];
      const double mhat = m[i] / (1 - b1t);
      const double vhat = v[i] / (1 - b2t);
      double update = mhat / (std::sqrt(vhat) + config.adam_epsilon);
      if (decay[i]) update += config.weight_decay * p[i];
      p[i] -= lr * update;
    }

    CurvePoint point{step + 1, loss, lr, std::nullopt};
    if (options.eval_every > 0 && (step + 1) % options.eval_every == 0) {
      Checkpoint snap{config.encoder, vocab, {p.begin(), p.end()}, {}};
      point.val_f1_macro = evaluate(EncoderClassifier(std::move(snap)), *val_corpus).report.f1_macro;
    }
    result.curve.push_back(point);
    if (options.on_log && options.log_every > 0 &&
        ((step + 1) % options.log_every == 0 || step + 1 == config.max_steps)) {
      options.on_log(point);
    }
  }

  result.checkpoint.config = config.encoder;
  result.checkpoint.vocab = vocab;
  result.checkpoint.weights.assign(model.params().begin(), model.params().end());
  result.checkpoint.metadata = {config.max_steps, seed, fingerprint, result.curve.back().loss};

  if (!result.run_dir.empty()) {
    save_checkpoint(result.checkpoint, result.run_dir / "checkpoint");
    std::ofstream curve(result.run_dir / "curve.tsv");
    curve << "step\tloss\tlearning_rate\tval_f1_macro\n";
    for (const auto& c : result.curve) {
      curve << c.step << '\t' << c.loss << '\t' << c.learning_rate << '\t';
      if (c.val_f1_macro) curve << *c.val_f1_macro;
      curve << '\n';
    }
  }
  return result;
}

// ---------------------------------------------------------------------------
// Evaluation

EncoderClassifier::EncoderClassifier(Checkpoint checkpoint)
    : ckpt_(std::move(checkpoint)), model_(ckpt_.config, ckpt_.weights) {}

std::vector<BlockPrediction> EncoderClassifier::classify(const ChartSample& sample) const {
  return encode_classify(sample, ckpt_.vocab, model_);
}

TextRole argmax_role(const RoleLogits& logits) {
  return role_at(static_cast<std::size_t>(std::max_element(logits.begin(), logits.end()) - logits.begin()));
}

Evaluation evaluate(const BlockClassifier& classifier, const Corpus& corpus, const std::string& split,
                    MacroAverage averaging) {
  const Corpus view = corpus.split_view(split);
  std::vector<std::vector<Prediction>> per_sample(view.samples.size());
  ErrorSlot error;
#pragma omp parallel for schedule(dynamic)
  for (std::size_t i = 0; i < view.samples.size(); ++i) error.run([&] {
    const auto& s = view.samples[i];
    const auto preds = classifier.classify(s);
    if (preds.size() != s.blocks.size()) throw std::logic_error("classifier returned the wrong block count");
    for (std::size_t b = 0; b < s.blocks.size(); ++b) {
      if (!s.blocks[b].role) continue;
      per_sample[i].push_back({s.sample_id, s.blocks[b].block_id, argmax_role(preds[b].logits), *s.blocks[b].role});
    }
  });
  error.rethrow();
  Evaluation ev;
  for (auto& p : per_sample) ev.predictions.insert(ev.predictions.end(), p.begin(), p.end());
  if (ev.predictions.empty()) {
    throw std::invalid_argument("split '" + split + "' of corpus '" + corpus.name + "' has no labeled blocks");
  }
  ev.report = score_predictions(ev.predictions, averaging);
  ev.report.metadata["corpus"] = corpus.name;
  ev.report.metadata["split"] = split.empty() ? "all" : split;
  return ev;
}

}  // namespace chartrole
