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

#include "chartrole/service.hpp"

#include <algorithm>
#include <chrono>
#include <ctime>
#include <fstream>
#include <mutex>

#include <httplib.h>
#include <json.hpp>

#include "chartrole/augmentation.hpp"
#include "chartrole/balancing.hpp"

namespace chartrole {

using nlohmann::json;

namespace {

std::string now_iso8601() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  const auto ms = std::chrono::duration_cast<std::chrono::milliseconds>(now.time_since_epoch()).count() % 1000;
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[40];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%S", &tm);
  char out[48];
  std::snprintf(out, sizeof out, "%s.%03lldZ", buf, static_cast<long long>(ms));
  return out;
}

std::string base64(const std::vector<std::uint8_t>& bytes) {
  return httplib::detail::base64_encode(std::string(bytes.begin(), bytes.end()));
}

json block_json(const TextBlock& b) {
  return {{"block_id", b.block_id},
          {"text", b.text},
          {"bbox", {{"x", b.bbox.x}, {"y", b.bbox.y}, {"width", b.bbox.width}, {"height", b.bbox.height}}},
          {"role", b.role ? json(std::string(role_name(*b.role))) : json(nullptr)}};
}

std::size_t labeled_blocks(const ChartSample& s) {
  std::size_t n = 0;
  for (const auto& b : s.blocks) n += b.role.has_value();
  return n;
}

}  // namespace

std::string event_to_json(const AnnotationEvent& e) {
  return json{{"sample_id", e.sample_id},
              {"block_id", e.block_id},
              {"role", std::string(role_name(e.role))},
              {"annotator", e.annotator},
              {"timestamp", e.timestamp},
              {"revision", e.revision}}
      .dump();
}

AnnotationEvent event_from_json(const std::string& line) {
  const json j = json::parse(line);
  AnnotationEvent e;
  e.sample_id = j.at("sample_id").get<std::string>();
  e.block_id = j.at("block_id").get<int>();
  const auto role = parse_role(j.at("role").get<std::string>());
  if (!role) throw std::runtime_error("event log holds an unknown role");
  e.role = *role;
  e.annotator = j.value("annotator", "");
  e.timestamp = j.value("timestamp", "");
  e.revision = j.at("revision").get<long>();
  return e;
}

// ---------------------------------------------------------------------------
// Store

AnnotationStore::AnnotationStore(std::vector<Corpus> corpora, std::filesystem::path log_path)
    : corpora_(std::move(corpora)), log_path_(std::move(log_path)) {
  if (corpora_.empty()) throw std::invalid_argument("the annotation store needs at least one corpus");
  for (std::size_t c = 0; c < corpora_.size(); ++c) {
    for (std::size_t s = 0; s < corpora_[c].samples.size(); ++s) {
      if (!index_.emplace(corpora_[c].samples[s].sample_id, Where{c, s}).second) {
        throw std::invalid_argument("sample id '" + corpora_[c].samples[s].sample_id + "' is not unique");
      }
    }
  }
  if (std::filesystem::exists(log_path_)) {
    for (const auto& e : read_log(log_path_)) apply(e);
  } else if (log_path_.has_parent_path()) {
    std::filesystem::create_directories(log_path_.parent_path());
  }
}

std::vector<AnnotationEvent> AnnotationStore::read_log(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read event log " + path.string());
  std::vector<AnnotationEvent> out;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty()) out.push_back(event_from_json(line));
  }
  return out;
}

const AnnotationStore::Where& AnnotationStore::locate(const std::string& sample_id) const {
  auto it = index_.find(sample_id);
  if (it == index_.end()) throw AnnotationError(404, "unknown sample '" + sample_id + "'");
  return it->second;
}

void AnnotationStore::apply(const AnnotationEvent& e) {
  const Where& w = locate(e.sample_id);
  auto& blocks = corpora_[w.corpus].samples[w.sample].blocks;
  auto it = std::find_if(blocks.begin(), blocks.end(), [&](const TextBlock& b) { return b.block_id == e.block_id; });
  if (it == blocks.end()) {
    throw AnnotationError(404, "sample '" + e.sample_id + "' has no block " + std::to_string(e.block_id));
  }
  long& rev = revisions_[{e.sample_id, e.block_id}];
  if (e.revision <= rev) {
    throw std::runtime_error("event log revision for " + e.sample_id + "/" + std::to_string(e.block_id) +
                             " does not increase");
  }
  rev = e.revision;
  it->role = e.role;
  events_.push_back(e);
}

AnnotationEvent AnnotationStore::assign(const std::string& sample_id, int block_id, const std::string& role,
                                        const std::string& annotator) {
  const auto parsed = parse_role(role);
  if (!parsed) throw AnnotationError(422, "invalid role '" + role + "'");
  std::unique_lock lock(mutex_);
  const Where& w = locate(sample_id);
  const auto& blocks = corpora_[w.corpus].samples[w.sample].blocks;
  if (std::none_of(blocks.begin(), blocks.end(), [&](const TextBlock& b) { return b.block_id == block_id; })) {
    throw AnnotationError(404, "sample '" + sample_id + "' has no block " + std::to_string(block_id));
  }
  AnnotationEvent e{sample_id, block_id, *parsed, annotator, now_iso8601(), 1};
  if (auto it = revisions_.find({sample_id, block_id}); it != revisions_.end()) e.revision = it->second + 1;
  {
    std::ofstream log(log_path_, std::ios::app);
    log << event_to_json(e) << '\n';
    log.flush();
    if (!log) throw AnnotationError(500, "cannot append to the event log");
  }
  apply(e);
  return e;
}

std::vector<Corpus> AnnotationStore::replay(std::vector<Corpus> base, const std::vector<AnnotationEvent>& events) {
  std::map<std::string, std::pair<std::size_t, std::size_t>> where;
  for (std::size_t c = 0; c < base.size(); ++c) {
    for (std::size_t s = 0; s < base[c].samples.size(); ++s) where[base[c].samples[s].sample_id] = {c, s};
  }
  for (const auto& e : events) {
    const auto [c, s] = where.at(e.sample_id);
    for (auto& b : base[c].samples[s].blocks) {
      if (b.block_id == e.block_id) b.role = e.role;
    }
  }
  return base;
}

std::vector<CorpusProgress> AnnotationStore::corpora() const {
  std::shared_lock lock(mutex_);
  std::vector<CorpusProgress> out;
  for (const auto& c : corpora_) {
    CorpusProgress p{c.name, 0, 0};
    for (const auto& s : c.samples) {
      p.total += s.blocks.size();
      p.labeled += labeled_blocks(s);
    }
    out.push_back(p);
  }
  return out;
}

CorpusProgress AnnotationStore::progress(const std::string& corpus) const {
  for (const auto& p : corpora()) {
    if (p.corpus == corpus) return p;
  }
  throw AnnotationError(404, "unknown corpus '" + corpus + "'");
}

Corpus AnnotationStore::corpus(const std::string& name) const {
  std::shared_lock lock(mutex_);
  for (const auto& c : corpora_) {
    if (c.name == name) return c;
  }
  throw AnnotationError(404, "unknown corpus '" + name + "'");
}

std::pair<ChartSample, std::string> AnnotationStore::sample(const std::string& sample_id) const {
  std::shared_lock lock(mutex_);
  const Where& w = locate(sample_id);
  return {corpora_[w.corpus].samples[w.sample], corpora_[w.corpus].name};
}

long AnnotationStore::revision(const std::string& sample_id, int block_id) const {
  std::shared_lock lock(mutex_);
  auto it = revisions_.find({sample_id, block_id});
  return it == revisions_.end() ? 0 : it->second;
}

std::vector<AnnotationEvent> AnnotationStore::events() const {
  std::shared_lock lock(mutex_);
  return events_;
}

// ---------------------------------------------------------------------------
// HTTP

struct AnnotationServer::Impl {
  httplib::Server server;
};

namespace {

void send_json(httplib::Response& res, const json& body, int status = 200) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

void send_error(httplib::Response& res, int status, const std::string& message, json extra = json::object()) {
  extra["error"] = message;
  send_json(res, extra, status);
}

template <typename F>
void guarded(httplib::Response& res, F&& f) {
  try {
    f();
  } catch (const AnnotationError& e) {
    send_error(res, e.status(), e.what());
  } catch (const ExportError& e) {
    json offenders = json::array();
    for (const auto& o : e.offenders()) offenders.push_back({{"sample_id", o.sample_id}, {"block_id", o.block_id}});
    send_error(res, 409, e.what(), {{"unlabeled", offenders}});
  } catch (const json::exception& e) {
    send_error(res, 400, std::string("malformed request: ") + e.what());
  } catch (const std::invalid_argument& e) {
    send_error(res, 422, e.what());
  } catch (const std::exception& e) {
    send_error(res, 500, e.what());
  }
}

}  // namespace

AnnotationServer::AnnotationServer(AnnotationStore& store, ServiceConfig config)
    : impl_(std::make_unique<Impl>()), store_(store), config_(std::move(config)) {
  auto& svr = impl_->server;
  // SO_REUSEADDR only: the httplib default adds SO_REUSEPORT, which lets a
  // second server bind a busy port and steal half the requests.
  svr.set_socket_options([](socket_t sock) {
    int yes = 1;
    setsockopt(sock, SOL_SOCKET, SO_REUSEADDR, reinterpret_cast<const char*>(&yes), sizeof(yes));
  });
  AnnotationStore& st = store_;
  const ServiceConfig cfg = config_;

  svr.Get("/corpora", [&st](const httplib::Request&, httplib::Response& res) {
    guarded(res, [&] {
      json out = json::array();
      for (const auto& p : st.corpora()) {
        out.push_back({{"name", p.corpus}, {"samples", st.corpus(p.corpus).size()},
                       {"labeled", p.labeled}, {"total", p.total}});
      }
      send_json(res, out);
    });
  });

  svr.Get(R"(/corpora/([^/]+)/samples)", [&st](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] {
      const std::string split = req.has_param("split") ? req.get_param_value("split") : "all";
      const Corpus c = st.corpus(req.matches[1]);
      Corpus view;
      try {
        view = c.split_view(split);
      } catch (const std::out_of_range& e) {
        throw AnnotationError(404, e.what());
      }
      json samples = json::array();
      for (const auto& s : view.samples) {
        samples.push_back({{"sample_id", s.sample_id}, {"chart_type", s.chart_type},
                           {"blocks", s.blocks.size()}, {"labeled", labeled_blocks(s)}});
      }
      send_json(res, {{"corpus", c.name}, {"split", split}, {"samples", samples}});
    });
  });

  svr.Get(R"(/samples/([^/]+)/image)", [&st](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] {
      const auto [s, corpus] = st.sample(req.matches[1]);
      const auto png = encode_png(s.raster());
      res.set_content(std::string(png.begin(), png.end()), "image/png");
    });
  });

  svr.Get(R"(/samples/([^/]+))", [&st](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] {
      const auto [s, corpus] = st.sample(req.matches[1]);
      json blocks = json::array();
      for (const auto& b : s.blocks) {
        json j = block_json(b);
        j["revision"] = st.revision(s.sample_id, b.block_id);
        blocks.push_back(j);
      }
      send_json(res, {{"sample_id", s.sample_id}, {"corpus", corpus}, {"chart_type", s.chart_type},
                      {"image", "/samples/" + s.sample_id + "/image"}, {"width", s.raster().width()},
                      {"height", s.raster().height()}, {"blocks", blocks}});
    });
  });

  svr.Put(R"(/samples/([^/]+)/blocks/(-?\d+)/role)", [&st](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] {
      const json body = json::parse(req.body);
      const auto role = body.at("role").get<std::string>();
      const auto annotator = body.value("annotator", "");
      const auto e = st.assign(req.matches[1], std::stoi(req.matches[2]), role, annotator);
      send_json(res, json::parse(event_to_json(e)));
    });
  });

  svr.Post("/preview", [&st](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] {
      const json body = json::parse(req.body);
      const auto [s, corpus] = st.sample(body.at("sample_id").get<std::string>());
      const json& r = body.at("recipe");
      json out;
      ChartSample result;
      if (r.at("method").get<std::string>() == "cutout") {
        const Corpus c = st.corpus(corpus);
        auto cut = cutout_sample(s, class_distribution(c), r.value("seed", std::uint64_t{0}));
        result = std::move(cut.sample);
        json ids = cut.plan.masked_block_ids;
        out["plan"] = {{"target_class", std::string(role_name(cut.plan.target_class))},
                       {"n_masks", cut.plan.n_masks},
                       {"masked_block_ids", ids},
                       {"mask_color", cut.plan.mask_color}};
      } else {
        const auto recipe = recipe_from_json(json{{"recipe", r}}.dump());
        validate_recipe(recipe);
        result = apply_recipe(s, recipe);
        out["recipe"] = json::parse(recipe_to_json(recipe)).at("recipe");
      }
      json blocks = json::array();
      for (const auto& b : result.blocks) blocks.push_back(block_json(b));
      out["sample_id"] = s.sample_id;
      out["width"] = result.raster().width();
      out["height"] = result.raster().height();
      out["blocks"] = blocks;
      out["image_png_base64"] = base64(encode_png(result.raster()));
      send_json(res, out);
    });
  });

  svr.Post("/export", [&st, cfg](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] {
      const json body = json::parse(req.body);
      const auto name = body.at("corpus").get<std::string>();
      const Corpus c = st.corpus(name);
      const std::filesystem::path dir = cfg.export_root / name;
      export_annotations(c, dir);
      send_json(res, {{"corpus", name}, {"path", std::filesystem::absolute(dir).string()}, {"samples", c.size()}});
    });
  });

  svr.Get(R"(/progress/([^/]+))", [&st](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] {
      const auto p = st.progress(req.matches[1]);
      send_json(res, {{"corpus", p.corpus}, {"labeled", p.labeled}, {"total", p.total}});
    });
  });

  if (!config_.static_dir.empty()) svr.set_mount_point("/", config_.static_dir.string());
}

AnnotationServer::~AnnotationServer() { stop(); }

void AnnotationServer::bind() {
  auto& svr = impl_->server;
  if (config_.port == 0) {
    port_ = svr.bind_to_any_port(config_.host);
    if (port_ <= 0) throw std::runtime_error("cannot bind to " + config_.host);
  } else {
    if (!svr.bind_to_port(config_.host, config_.port)) {
      throw std::runtime_error("cannot bind to " + config_.host + ":" + std::to_string(config_.port) +
                               " (port busy?)");
    }
    port_ = config_.port;
  }
}

void AnnotationServer::start() {
  bind();
  thread_ = std::thread([this] { impl_->server.listen_after_bind(); });
  impl_->server.wait_until_ready();
}

void AnnotationServer::run() {
  bind();
  impl_->server.listen_after_bind();
}

void AnnotationServer::stop() {
  if (impl_) impl_->server.stop();
  if (thread_.joinable()) thread_.join();
}

}  // namespace chartrole
