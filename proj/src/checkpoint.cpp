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

#include <cstring>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "chartrole/encoder.hpp"

namespace chartrole {

using nlohmann::json;

namespace {

constexpr char kWeightsMagic[8] = {'C', 'R', 'W', 'T', 'S', '0', '0', '1'};

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + p.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void spit(const std::filesystem::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  out << text;
  if (!out) throw std::runtime_error("cannot write " + p.string());
}

std::size_t expected_weights(const EncoderConfig& config) {
  std::size_t n = 0;
  for (const auto& t : EncoderModel::layout(config)) n += t.size();
  return n;
}

}  // namespace

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& dir) {
  ckpt.config.validate();
  if (ckpt.vocab.size() != ckpt.config.vocab_size) {
    throw std::invalid_argument("checkpoint vocabulary size does not match its config");
  }
  if (ckpt.weights.size() != expected_weights(ckpt.config)) {
    throw std::invalid_argument("checkpoint holds " + std::to_string(ckpt.weights.size()) +
                                " weights, config needs " + std::to_string(expected_weights(ckpt.config)));
  }
  std::filesystem::create_directories(dir);
  json cfg = json::parse(encoder_config_to_json(ckpt.config));
  spit(dir / "config.json", json{{"format", kCheckpointFormat}, {"encoder", cfg}}.dump(2) + "\n");
  spit(dir / "vocab.json", ckpt.vocab.to_json() + "\n");
  const json meta = {{"steps", ckpt.metadata.steps},
                     {"seed", ckpt.metadata.seed},
                     {"corpus_fingerprint", ckpt.metadata.corpus_fingerprint},
                     {"final_loss", ckpt.metadata.final_loss},
                     {"parameters", ckpt.weights.size()}};
  spit(dir / "metadata.json", meta.dump(2) + "\n");

  std::ofstream out(dir / "weights.bin", std::ios::binary);
  const std::uint64_t count = ckpt.weights.size();
  out.write(kWeightsMagic, sizeof kWeightsMagic);
  out.write(reinterpret_cast<const char*>(&count), sizeof count);
  out.write(reinterpret_cast<const char*>(ckpt.weights.data()),
            static_cast<std::streamsize>(count * sizeof(double)));
  if (!out) throw std::runtime_error("cannot write " + (dir / "weights.bin").string());
}

Checkpoint load_checkpoint(const std::filesystem::path& dir) {
  const json cfg = json::parse(slurp(dir / "config.json"));
  if (cfg.value("format", "") != kCheckpointFormat) {
    throw std::runtime_error("unsupported checkpoint format in " + dir.string());
  }
  Checkpoint ckpt;
  ckpt.config = encoder_config_from_json(cfg.at("encoder").dump());
  ckpt.vocab = Vocab::from_json(slurp(dir / "vocab.json"));
  if (ckpt.vocab.size() != ckpt.config.vocab_size) {
    throw std::runtime_error("vocabulary size does not match the checkpoint config");
  }
  const json meta = json::parse(slurp(dir / "metadata.json"));
  ckpt.metadata.steps = meta.at("steps").get<long>();
  ckpt.metadata.seed = meta.at("seed").get<std::uint64_t>();
  ckpt.metadata.corpus_fingerprint = meta.at("corpus_fingerprint").get<std::string>();
  ckpt.metadata.final_loss = meta.at("final_loss").get<double>();

  const std::string blob = slurp(dir / "weights.bin");
  std::uint64_t count = 0;
  if (blob.size() < sizeof kWeightsMagic + sizeof count ||
      std::memcmp(blob.data(), kWeightsMagic, sizeof kWeightsMagic) != 0) {
    throw std::runtime_error("weights.bin is not a chartrole weight blob");
  }
  std::memcpy(&count, blob.data() + sizeof kWeightsMagic, sizeof count);
  if (blob.size() != sizeof kWeightsMagic + sizeof count + count * sizeof(double)) {
    throw std::runtime_error("weights.bin is truncated");
  }
  const std::size_t expected = expected_weights(ckpt.config);
  if (count != expected) {
    throw std::runtime_error("checkpoint holds " + std::to_string(count) + " weights, config needs " +
                             std::to_string(expected));
  }
  ckpt.weights.resize(count);
  std::memcpy(ckpt.weights.data(), blob.data() + sizeof kWeightsMagic + sizeof count,
              count * sizeof(double));
  return ckpt;
}

}  // namespace chartrole
