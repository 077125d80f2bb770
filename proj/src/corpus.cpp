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

#include "chartrole/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>

#include "chartrole/rng.hpp"
#include "json.hpp"

namespace chartrole {

namespace fs = std::filesystem;
using nlohmann::json;

const ChartSample* Corpus::find(const std::string& sample_id) const {
  for (const auto& s : samples) {
    if (s.sample_id == sample_id) return &s;
  }
  return nullptr;
}

Corpus Corpus::split_view(const std::string& split) const {
  if (split.empty() || split == "all") return *this;
  auto it = splits.find(split);
  if (it == splits.end()) throw std::out_of_range("unknown split '" + split + "' in " + name);
  const std::set<std::string> wanted(it->second.begin(), it->second.end());
  Corpus view;
  view.name = name + "/" + split;
  for (const auto& s : samples) {
    if (wanted.count(s.sample_id)) view.samples.push_back(s);
  }
  return view;
}

std::string validate_sample(const ChartSample& sample) {
  if (sample.sample_id.empty()) return "empty sample id";
  if (!sample.image || sample.image->empty()) return "missing image";
  if (sample.chart_type.empty()) return "empty chart type";
  std::set<int> ids;
  const auto dims = sample.dims();
  for (const auto& b : sample.blocks) {
    if (!ids.insert(b.block_id).second) return "duplicate block id " + std::to_string(b.block_id);
    if (b.text.empty()) return "block " + std::to_string(b.block_id) + " has empty text";
    const auto& r = b.bbox;
    if (!(r.x >= 0 && r.y >= 0 && r.width > 0 && r.height > 0 && r.right() <= dims.width &&
          r.bottom() <= dims.height)) {
      return "block " + std::to_string(b.block_id) + " bbox outside image";
    }
  }
  return {};
}

AnnotationFormat parse_annotation_format(const std::string& tag) {
  if (tag == "native") return AnnotationFormat::kNative;
  if (tag == "icpr22") return AnnotationFormat::kIcpr22;
  throw std::invalid_argument("unknown annotation format '" + tag + "'");
}

namespace {

std::string format_tag(AnnotationFormat f) {
  return f == AnnotationFormat::kNative ? "native" : "icpr22";
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
}

std::optional<TextRole> role_from_json(const json& j, int block_id) {
  if (j.is_null()) return std::nullopt;
  if (!j.is_string()) throw std::runtime_error("role of block " + std::to_string(block_id) + " is not a string");
  auto role = parse_role(j.get<std::string>());
  if (!role) {
    throw std::runtime_error("unknown role '" + j.get<std::string>() + "' on block " +
                             std::to_string(block_id));
  }
  return role;
}

bool is_image_extension(const fs::path& p) {
  auto ext = p.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
  return ext == ".png" || ext == ".jpg" || ext == ".jpeg" || ext == ".bmp";
}

// Turns parsed annotation + image into a sample, applying clamping and the
// usability checks. Returns nullopt and records a skip on failure.
std::optional<ChartSample> assemble_sample(const std::string& id, const fs::path& image_path,
                                           const fs::path& annotation_path,
                                           AnnotationFormat format, bool require_roles,
                                           const std::string& provenance, LoadReport& report) {
  auto skip = [&](const fs::path& where, std::string reason) {
    report.skipped.push_back({id, where, std::move(reason)});
    return std::nullopt;
  };
  ParsedAnnotation parsed;
  std::string source;
  try {
    const auto text = read_text(annotation_path);
    if (format == AnnotationFormat::kNative) {
      parsed = parse_native_annotation(text);
      const auto j = json::parse(text);
      if (j.contains("source") && j["source"].is_string()) source = j["source"];
    } else {
      parsed = parse_icpr22_annotation(text);
    }
  } catch (const std::exception& e) {
    return skip(annotation_path, std::string("malformed annotation: ") + e.what());
  }
  if (parsed.chart_type.empty()) return skip(annotation_path, "malformed annotation: empty chart_type");

  std::shared_ptr<const Image> image;
  try {
    image = std::make_shared<const Image>(read_image(image_path));
  } catch (const std::exception& e) {
    return skip(image_path, std::string("unreadable image: ") + e.what());
  }

  ChartSample sample;
  sample.sample_id = id;
  sample.image = image;
  sample.chart_type = parsed.chart_type;
  sample.provenance = source.empty() ? provenance : source;
  const ImageDims dims{image->width(), image->height()};
  std::set<int> seen;
  for (auto& b : parsed.blocks) {
    if (!seen.insert(b.block_id).second) {
      return skip(annotation_path, "duplicate block id " + std::to_string(b.block_id));
    }
    if (b.text.empty()) {
      report.notes.push_back({id, b.block_id, "empty text, block dropped"});
      continue;
    }
    if (require_roles && !b.role) {
      return skip(annotation_path, "block " + std::to_string(b.block_id) + " has no role label");
    }
    if (!(b.bbox.width > 0 && b.bbox.height > 0)) {
      return skip(annotation_path, "block " + std::to_string(b.block_id) + " has a degenerate bbox");
    }
    auto clamped = clamp_bbox(b.bbox, dims);
    if (!clamped) {
      return skip(annotation_path, "block " + std::to_string(b.block_id) + " lies outside the image");
    }
    if (!(*clamped == b.bbox)) report.notes.push_back({id, b.block_id, "bbox clamped to image"});
    b.bbox = *clamped;
    sample.blocks.push_back(std::move(b));
  }
  if (require_roles && sample.blocks.empty()) return skip(annotation_path, "no text blocks");
  return sample;
}

}  // namespace

ParsedAnnotation parse_native_annotation(const std::string& json_text) {
  const auto j = json::parse(json_text);
  const auto& task = j.at("task");
  ParsedAnnotation out;
  out.chart_type = task.at("chart_type").get<std::string>();
  for (const auto& tb : task.at("text_blocks")) {
    TextBlock b;
    b.block_id = tb.at("id").get<int>();
    b.text = tb.at("text").get<std::string>();
    const auto& bb = tb.at("bbox");
    b.bbox = {bb.at("x").get<double>(), bb.at("y").get<double>(), bb.at("width").get<double>(),
              bb.at("height").get<double>()};
    b.role = role_from_json(tb.contains("role") ? tb.at("role") : json(), b.block_id);
    out.blocks.push_back(std::move(b));
  }
  return out;
}

ParsedAnnotation parse_icpr22_annotation(const std::string& json_text) {
  const auto j = json::parse(json_text);
  ParsedAnnotation out;
  out.chart_type = j.at("task1").at("output").at("chart_type").get<std::string>();
  std::map<int, TextRole> roles;
  if (j.contains("task3") && j["task3"].is_object() && j["task3"].contains("output") &&
      j["task3"]["output"].is_object()) {
    for (const auto& r : j["task3"]["output"].at("text_roles")) {
      const int id = r.at("id").get<int>();
      auto role = role_from_json(r.at("role"), id);
      if (role) roles[id] = *role;
    }
  }
  for (const auto& tb : j.at("task2").at("output").at("text_blocks")) {
    TextBlock b;
    b.block_id = tb.at("id").get<int>();
    b.text = tb.value("text", std::string());
    if (tb.contains("polygon")) {
      const auto& p = tb["polygon"];
      const double xs[] = {p.at("x0"), p.at("x1"), p.at("x2"), p.at("x3")};
      const double ys[] = {p.at("y0"), p.at("y1"), p.at("y2"), p.at("y3")};
      const auto [xmin, xmax] = std::minmax_element(std::begin(xs), std::end(xs));
      const auto [ymin, ymax] = std::minmax_element(std::begin(ys), std::end(ys));
      b.bbox = {*xmin, *ymin, *xmax - *xmin, *ymax - *ymin};
    } else {
      const auto& bb = tb.at("bb");
      b.bbox = {bb.at("x0").get<double>(), bb.at("y0").get<double>(),
                bb.at("width").get<double>(), bb.at("height").get<double>()};
    }
    if (auto it = roles.find(b.block_id); it != roles.end()) b.role = it->second;
    out.blocks.push_back(std::move(b));
  }
  return out;
}

std::string serialize_native_annotation(const ChartSample& sample) {
  json blocks = json::array();
  for (const auto& b : sample.blocks) {
    blocks.push_back({
        {"id", b.block_id},
        {"text", b.text},
        {"bbox", {{"x", b.bbox.x}, {"y", b.bbox.y}, {"width", b.bbox.width}, {"height", b.bbox.height}}},
        {"role", b.role ? json(std::string(role_name(*b.role))) : json(nullptr)},
    });
  }
  json doc = {{"task", {{"chart_type", sample.chart_type}, {"text_blocks", blocks}}}};
  if (!sample.provenance.empty()) doc["source"] = sample.provenance;
  return doc.dump(2) + "\n";
}

LoadResult load_corpus(const fs::path& root, AnnotationFormat format, const LoadOptions& options) {
  LoadResult result;
  result.corpus.name = options.name.empty() ? root.filename().string() : options.name;
  if (!fs::exists(root)) throw std::runtime_error("corpus root does not exist: " + root.string());

  std::map<std::string, fs::path> annotations;
  std::map<std::string, fs::path> images;
  std::vector<std::pair<std::string, fs::path>> duplicates;
  std::vector<fs::path> files;
  for (const auto& entry : fs::recursive_directory_iterator(root)) {
    if (entry.is_regular_file()) files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  for (const auto& p : files) {
    const auto stem = p.stem().string();
    if (p.extension() == ".json") {
      if (!annotations.emplace(stem, p).second) duplicates.emplace_back(stem, p);
    } else if (is_image_extension(p)) {
      if (format == AnnotationFormat::kNative) {
        // Native layout keeps image and annotation side by side.
        images.emplace(p.parent_path().string() + "/" + stem, p);
      } else if (!images.emplace(stem, p).second) {
        duplicates.emplace_back(stem, p);
      }
    }
  }
  for (const auto& [stem, path] : duplicates) {
    result.report.skipped.push_back({stem, path, "duplicate sample id"});
  }

  std::set<std::string> matched_images;
  for (const auto& [id, ann] : annotations) {
    const std::string key =
        format == AnnotationFormat::kNative ? ann.parent_path().string() + "/" + id : id;
    auto img = images.find(key);
    if (img == images.end()) {
      result.report.skipped.push_back({id, ann, "missing image"});
      continue;
    }
    matched_images.insert(key);
    auto sample = assemble_sample(id, img->second, ann, format, options.require_roles,
                                  result.corpus.name, result.report);
    if (sample) {
      result.files.push_back({id, img->second, ann, ""});
      result.corpus.samples.push_back(std::move(*sample));
    }
  }
  for (const auto& [key, path] : images) {
    if (!matched_images.count(key)) {
      result.report.skipped.push_back({path.stem().string(), path, "missing annotation file"});
    }
  }
  return result;
}

ExportError::ExportError(std::vector<Offender> offenders)
    : std::runtime_error([&] {
        std::string msg = "export refused, unlabeled blocks:";
        for (const auto& o : offenders) msg += " " + o.sample_id + "#" + std::to_string(o.block_id);
        return msg;
      }()),
      offenders_(std::move(offenders)) {}

void export_annotations(const Corpus& corpus, const fs::path& root) {
  std::vector<ExportError::Offender> offenders;
  for (const auto& s : corpus.samples) {
    for (const auto& b : s.blocks) {
      if (!b.role) offenders.push_back({s.sample_id, b.block_id});
    }
  }
  if (!offenders.empty()) throw ExportError(std::move(offenders));

  fs::create_directories(root);
  std::map<std::string, std::string> split_of;
  for (const auto& [split, ids] : corpus.splits) {
    for (const auto& id : ids) split_of[id] = split;
  }
  Manifest manifest;
  manifest.corpus = corpus.name;
  manifest.format = AnnotationFormat::kNative;
  for (const auto& s : corpus.samples) {
    const auto image_path = root / (s.sample_id + ".png");
    const auto annotation_path = root / (s.sample_id + ".json");
    write_png(s.raster(), image_path);
    write_text(annotation_path, serialize_native_annotation(s));
    manifest.entries.push_back({s.sample_id, image_path.filename(), annotation_path.filename(),
                                split_of.count(s.sample_id) ? split_of[s.sample_id] : ""});
  }
  write_manifest(manifest, root / "corpus.manifest");
}

std::vector<std::size_t> split_sizes(std::size_t n, const std::vector<double>& ratios,
                                     SplitRemainder remainder) {
  if (ratios.empty()) throw std::invalid_argument("no split ratios");
  double sum = 0;
  for (double r : ratios) {
    if (!(r > 0)) throw std::invalid_argument("split ratios must be positive");
    sum += r;
  }
  if (std::abs(sum - 1.0) > 1e-9) throw std::invalid_argument("split ratios must sum to 1");
  std::vector<std::size_t> sizes;
  std::size_t used = 0;
  for (double r : ratios) {
    sizes.push_back(static_cast<std::size_t>(std::floor(static_cast<double>(n) * r + 1e-9)));
    used += sizes.back();
  }
  const std::size_t left = n - std::min(n, used);
  if (remainder == SplitRemainder::kFirst) {
    sizes.front() += left;
  } else {
    sizes.back() += left;
  }
  return sizes;
}

namespace {

std::vector<std::vector<std::size_t>> partition_indices(std::size_t n,
                                                        const std::vector<double>& ratios,
                                                        std::uint64_t seed,
                                                        SplitRemainder remainder) {
  const auto sizes = split_sizes(n, ratios, remainder);
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  Rng rng(seed);
  std::shuffle(order.begin(), order.end(), rng);
  std::vector<std::vector<std::size_t>> parts;
  std::size_t pos = 0;
  for (auto size : sizes) {
    std::vector<std::size_t> part(order.begin() + static_cast<std::ptrdiff_t>(pos),
                                  order.begin() + static_cast<std::ptrdiff_t>(pos + size));
    std::sort(part.begin(), part.end());
    parts.push_back(std::move(part));
    pos += size;
  }
  return parts;
}

}  // namespace

std::vector<Corpus> split_corpus(const Corpus& corpus, const std::vector<double>& ratios,
                                 std::uint64_t seed, SplitRemainder remainder) {
  if (corpus.empty()) throw std::invalid_argument("cannot split an empty corpus");
  std::vector<Corpus> out;
  const auto parts = partition_indices(corpus.size(), ratios, seed, remainder);
  for (std::size_t p = 0; p < parts.size(); ++p) {
    Corpus c;
    c.name = corpus.name + "/" + std::to_string(p);
    for (auto i : parts[p]) c.samples.push_back(corpus.samples[i]);
    out.push_back(std::move(c));
  }
  return out;
}

Corpus assign_splits(const Corpus& corpus, const std::vector<double>& ratios,
                     const std::vector<std::string>& names, std::uint64_t seed,
                     SplitRemainder remainder) {
  if (names.size() != ratios.size()) throw std::invalid_argument("one split name per ratio required");
  if (corpus.empty()) throw std::invalid_argument("cannot split an empty corpus");
  Corpus out = corpus;
  out.splits.clear();
  const auto parts = partition_indices(corpus.size(), ratios, seed, remainder);
  for (std::size_t p = 0; p < parts.size(); ++p) {
    auto& ids = out.splits[names[p]];
    for (auto i : parts[p]) ids.push_back(corpus.samples[i].sample_id);
  }
  return out;
}

RoleHistogram class_distribution(const Corpus& corpus, const std::string& split) {
  RoleHistogram h{};
  for (const auto& s : corpus.split_view(split).samples) {
    for (const auto& b : s.blocks) {
      if (b.role) ++h[role_index(*b.role)];
    }
  }
  return h;
}

void write_manifest(const Manifest& manifest, const fs::path& path) {
  json entries = json::array();
  for (const auto& e : manifest.entries) {
    entries.push_back({{"sample_id", e.sample_id},
                       {"image", e.image.generic_string()},
                       {"annotation", e.annotation.generic_string()},
                       {"split", e.split}});
  }
  json doc = {{"corpus", manifest.corpus}, {"format", format_tag(manifest.format)}, {"entries", entries}};
  write_text(path, doc.dump(2) + "\n");
}

Manifest read_manifest(const fs::path& path) {
  const auto j = json::parse(read_text(path));
  Manifest m;
  m.corpus = j.at("corpus").get<std::string>();
  m.format = parse_annotation_format(j.at("format").get<std::string>());
  const auto base = path.parent_path();
  for (const auto& e : j.at("entries")) {
    ManifestEntry entry;
    entry.sample_id = e.at("sample_id").get<std::string>();
    entry.image = e.at("image").get<std::string>();
    entry.annotation = e.at("annotation").get<std::string>();
    entry.split = e.value("split", std::string());
    if (entry.image.is_relative()) entry.image = base / entry.image;
    if (entry.annotation.is_relative()) entry.annotation = base / entry.annotation;
    m.entries.push_back(std::move(entry));
  }
  return m;
}

LoadResult load_manifest(const fs::path& path, const LoadOptions& options) {
  const auto manifest = read_manifest(path);
  LoadResult result;
  result.corpus.name = options.name.empty() ? manifest.corpus : options.name;
  std::set<std::string> ids;
  for (const auto& e : manifest.entries) {
    if (!ids.insert(e.sample_id).second) {
      result.report.skipped.push_back({e.sample_id, e.annotation, "duplicate sample id"});
      continue;
    }
    auto sample = assemble_sample(e.sample_id, e.image, e.annotation, manifest.format,
                                  options.require_roles, result.corpus.name, result.report);
    if (!sample) continue;
    if (!e.split.empty()) result.corpus.splits[e.split].push_back(e.sample_id);
    result.files.push_back(e);
    result.corpus.samples.push_back(std::move(*sample));
  }
  return result;
}

Manifest make_manifest(const LoadResult& loaded, AnnotationFormat format) {
  Manifest m;
  m.corpus = loaded.corpus.name;
  m.format = format;
  std::map<std::string, std::string> split_of;
  for (const auto& [split, ids] : loaded.corpus.splits) {
    for (const auto& id : ids) split_of[id] = split;
  }
  for (auto e : loaded.files) {
    e.image = fs::absolute(e.image);
    e.annotation = fs::absolute(e.annotation);
    e.split = split_of.count(e.sample_id) ? split_of[e.sample_id] : "";
    m.entries.push_back(std::move(e));
  }
  return m;
}

}  // namespace chartrole
