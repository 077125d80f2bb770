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

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "chartrole/geometry.hpp"
#include "chartrole/image.hpp"
#include "chartrole/roles.hpp"

namespace chartrole {

struct TextBlock {
  int block_id = 0;
  std::string text;
  BoundingBox bbox;
  std::optional<TextRole> role;

  bool operator==(const TextBlock&) const = default;
};

struct ChartSample {
  std::string sample_id;
  std::shared_ptr<const Image> image;
  std::string chart_type;
  std::vector<TextBlock> blocks;
  std::string provenance;

  const Image& raster() const { return *image; }
  ImageDims dims() const { return {image->width(), image->height()}; }
};

/// Ordered sample collection with named, disjoint splits of sample ids.
/// Samples share their rasters, so copying a corpus is cheap.
struct Corpus {
  std::string name;
  std::vector<ChartSample> samples;
  std::map<std::string, std::vector<std::string>> splits;

  std::size_t size() const { return samples.size(); }
  bool empty() const { return samples.empty(); }

  const ChartSample* find(const std::string& sample_id) const;

  /// Samples of one split in corpus order; "all" (or an empty name) selects
  /// every sample. Throws std::out_of_range for an unknown split.
  Corpus split_view(const std::string& split) const;
};

/// Checks the ChartSample invariants; returns an empty string when valid.
std::string validate_sample(const ChartSample& sample);

enum class AnnotationFormat { kNative, kIcpr22 };

AnnotationFormat parse_annotation_format(const std::string& tag);

struct SkippedSample {
  std::string sample_id;
  std::filesystem::path path;
  std::string reason;
};

/// Per-block notes that do not cause a skip (e.g. a box that was clipped).
struct LoadNote {
  std::string sample_id;
  int block_id = 0;
  std::string note;
};

struct LoadReport {
  std::vector<SkippedSample> skipped;
  std::vector<LoadNote> notes;
};

struct ManifestEntry {
  std::string sample_id;
  std::filesystem::path image;
  std::filesystem::path annotation;
  std::string split;
};

struct LoadResult {
  Corpus corpus;
  LoadReport report;
  std::vector<ManifestEntry> files;  // one per loaded sample, corpus order
};

struct LoadOptions {
  std::string name;  // defaults to the root directory name
  // When false, blocks without a role are kept (used when loading a corpus
  // for manual labeling).
  bool require_roles = true;
};

/// Loads every usable sample below `root`, ordered by sample id. Unusable
/// samples are skipped and listed in the report, never silently dropped.
LoadResult load_corpus(const std::filesystem::path& root, AnnotationFormat format,
                       const LoadOptions& options = {});

/// Parses one native annotation document. Throws std::runtime_error when the
/// document is malformed.
struct ParsedAnnotation {
  std::string chart_type;
  std::vector<TextBlock> blocks;
};
ParsedAnnotation parse_native_annotation(const std::string& json_text);
ParsedAnnotation parse_icpr22_annotation(const std::string& json_text);
std::string serialize_native_annotation(const ChartSample& sample);

class ExportError : public std::runtime_error {
 public:
  struct Offender {
    std::string sample_id;
    int block_id;
  };
  explicit ExportError(std::vector<Offender> offenders);
  const std::vector<Offender>& offenders() const { return offenders_; }

 private:
  std::vector<Offender> offenders_;
};

/// Writes `<id>.png` and `<id>.json` per sample into `root` in the native
/// layout, plus a manifest. Refuses (ExportError) if any block is unlabeled.
void export_annotations(const Corpus& corpus, const std::filesystem::path& root);

enum class SplitRemainder {
  kFirst,  // leftover samples after flooring go to the first partition
  kLast,
};

/// Seeded shuffle, then floor(n * ratio) samples per partition with the
/// rounding remainder assigned per `remainder`. Partitions are returned as
/// standalone corpora named "<name>/<index>".
std::vector<Corpus> split_corpus(const Corpus& corpus, const std::vector<double>& ratios,
                                 std::uint64_t seed,
                                 SplitRemainder remainder = SplitRemainder::kFirst);

/// Partition sizes only; exposed so size rules can be checked in isolation.
std::vector<std::size_t> split_sizes(std::size_t n, const std::vector<double>& ratios,
                                     SplitRemainder remainder = SplitRemainder::kFirst);

/// Like split_corpus but records the partitions as named splits of a copy of
/// the input corpus instead of returning separate corpora.
Corpus assign_splits(const Corpus& corpus, const std::vector<double>& ratios,
                     const std::vector<std::string>& names, std::uint64_t seed,
                     SplitRemainder remainder = SplitRemainder::kFirst);

/// Role histogram over all labeled blocks of a split ("all" = whole corpus).
RoleHistogram class_distribution(const Corpus& corpus, const std::string& split = "all");

/// Manifest: one entry per sample with paths and split membership.
struct Manifest {
  std::string corpus;
  AnnotationFormat format = AnnotationFormat::kNative;
  std::vector<ManifestEntry> entries;
};

void write_manifest(const Manifest& manifest, const std::filesystem::path& path);
Manifest read_manifest(const std::filesystem::path& path);

/// Loads the samples listed in a manifest; split membership is restored.
LoadResult load_manifest(const std::filesystem::path& path, const LoadOptions& options = {});

/// Manifest for a loaded corpus; split names are taken from corpus.splits.
Manifest make_manifest(const LoadResult& loaded, AnnotationFormat format);

}  // namespace chartrole
