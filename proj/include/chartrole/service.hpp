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

#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <shared_mutex>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "chartrole/corpus.hpp"

namespace chartrole {

struct AnnotationEvent {
  std::string sample_id;
  int block_id = 0;
  TextRole role = TextRole::kOther;
  std::string annotator;
  std::string timestamp;  // ISO 8601, UTC
  long revision = 0;      // per block, starting at 1

  bool operator==(const AnnotationEvent&) const = default;
};

std::string event_to_json(const AnnotationEvent& e);
AnnotationEvent event_from_json(const std::string& line);

/// Error with the HTTP status it maps to.
class AnnotationError : public std::runtime_error {
 public:
  AnnotationError(int status, const std::string& message) : std::runtime_error(message), status_(status) {}
  int status() const { return status_; }

 private:
  int status_;
};

struct CorpusProgress {
  std::string corpus;
  std::size_t labeled = 0;
  std::size_t total = 0;
};

/// Corpora plus the role assignments made on them. Every assignment is
/// appended to a JSON-lines event log before the in-memory view changes;
/// opening a store replays the existing log.
class AnnotationStore {
 public:
  /// Sample ids must be unique across all corpora.
  AnnotationStore(std::vector<Corpus> corpora, std::filesystem::path log_path);

  std::vector<CorpusProgress> corpora() const;
  CorpusProgress progress(const std::string& corpus) const;

  /// Current view of one corpus; throws AnnotationError(404) when unknown.
  Corpus corpus(const std::string& name) const;
  /// Current view of one sample and the name of its corpus.
  std::pair<ChartSample, std::string> sample(const std::string& sample_id) const;
  long revision(const std::string& sample_id, int block_id) const;

  /// Validates, logs, and applies one assignment. 404 for an unknown
  /// sample or block, 422 for an invalid role name.
  AnnotationEvent assign(const std::string& sample_id, int block_id, const std::string& role,
                         const std::string& annotator);

  std::vector<AnnotationEvent> events() const;
  const std::filesystem::path& log_path() const { return log_path_; }

  /// The view obtained by applying `events` in order to `base`.
  static std::vector<Corpus> replay(std::vector<Corpus> base, const std::vector<AnnotationEvent>& events);
  static std::vector<AnnotationEvent> read_log(const std::filesystem::path& path);

 private:
  struct Where {
    std::size_t corpus;
    std::size_t sample;
  };
  void apply(const AnnotationEvent& e);
  const Where& locate(const std::string& sample_id) const;

  mutable std::shared_mutex mutex_;
  std::vector<Corpus> corpora_;
  std::map<std::string, Where> index_;
  std::map<std::pair<std::string, int>, long> revisions_;
  std::vector<AnnotationEvent> events_;
  std::filesystem::path log_path_;
};

struct ServiceConfig {
  std::string host = "127.0.0.1";
  int port = 8040;  // 0 picks a free port
  std::filesystem::path export_root = "exports";
  std::filesystem::path static_dir;  // UI assets served at /, when set
};

/// HTTP front end of an AnnotationStore.
class AnnotationServer {
 public:
  AnnotationServer(AnnotationStore& store, ServiceConfig config);
  ~AnnotationServer();

  /// Binds and serves on a background thread. Throws std::runtime_error
  /// when the port cannot be bound.
  void start();
  /// Binds and serves on the calling thread until stop().
  void run();
  void stop();
  int port() const { return port_; }

 private:
  void bind();
  struct Impl;
  std::unique_ptr<Impl> impl_;
  AnnotationStore& store_;
  ServiceConfig config_;
  int port_ = 0;
  std::thread thread_;
};

}  // namespace chartrole
