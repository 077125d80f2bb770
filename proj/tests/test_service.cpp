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

#include <fstream>

#include <doctest.h>
#include <httplib.h>
#include <json.hpp>

#include "chartrole/augmentation.hpp"
#include "chartrole/balancing.hpp"
#include "chartrole/service.hpp"
#include "chartrole/synth.hpp"
#include "fixtures.hpp"

using namespace chartrole;
using fixtures::block;
using fixtures::make_sample;
using json = nlohmann::json;

namespace {

// Two corpora: a labeled synthetic one and a partly unlabeled hand-built one.
std::vector<Corpus> base_corpora() {
  Corpus synth = assign_splits(generate_corpus(4, {}, 6), {0.5, 0.5}, {"train", "test"}, 2);
  synth.name = "synth";
  Corpus raw{"raw",
             {make_sample("r0", 40, 30, {block(0, "Title", 1, 1, 20, 6, std::nullopt), block(1, "10", 1, 10, 8, 6)}),
              make_sample("r1", 40, 30, {block(0, "x", 1, 1, 5, 5, std::nullopt)})},
             {}};
  return {synth, raw};
}

std::string b64(const std::vector<std::uint8_t>& bytes) {
  return httplib::detail::base64_encode(std::string(bytes.begin(), bytes.end()));
}

}  // namespace

TEST_CASE("event JSON round-trips") {
  const AnnotationEvent e{"s", -1, TextRole::kLegendTitle, "ann", "2026-01-02T03:04:05.006Z", 3};
  CHECK(event_from_json(event_to_json(e)) == e);
  CHECK_THROWS(event_from_json("{\"sample_id\": 1}"));
}

TEST_CASE("store assignments, revisions and errors") {
  fixtures::TempDir dir("store");
  AnnotationStore store(base_corpora(), dir / "log" / "events.jsonl");
  const auto p = store.progress("raw");
  CHECK(p.labeled == 1);
  CHECK(p.total == 3);

  const auto e1 = store.assign("r0", 0, "chart_title", "amy");
  CHECK(e1.revision == 1);
  CHECK(store.assign("r0", 0, "axis_title", "bo").revision == 2);
  CHECK(store.revision("r0", 0) == 2);
  CHECK(store.revision("r0", 1) == 0);
  CHECK(store.sample("r0").first.blocks[0].role == TextRole::kAxisTitle);
  CHECK(store.sample("r0").second == "raw");
  CHECK(store.progress("raw").labeled == 2);

  auto status = [&](auto f) {
    try {
      f();
    } catch (const AnnotationError& e) {
      return e.status();
    }
    return 0;
  };
  CHECK(status([&] { store.assign("nope", 0, "other", ""); }) == 404);
  CHECK(status([&] { store.assign("r0", 7, "other", ""); }) == 404);
  CHECK(status([&] { store.assign("r0", 0, "headline", ""); }) == 422);
  CHECK(status([&] { store.corpus("missing"); }) == 404);
  CHECK(store.events().size() == 2);

  CHECK_THROWS_AS(AnnotationStore({base_corpora()[0], base_corpora()[0]}, dir / "dup.jsonl"), std::invalid_argument);
}

TEST_CASE("replaying the log reproduces the view") {
  fixtures::TempDir dir("replay");
  const auto log = dir / "events.jsonl";
  std::vector<Corpus> view;
  {
    AnnotationStore store(base_corpora(), log);
    store.assign("r0", 0, "chart_title", "a");
    store.assign("r1", 0, "other", "a");
    store.assign("r1", 0, "mark_label", "b");
    const auto s = store.corpus("synth").samples[0];
    store.assign(s.sample_id, s.blocks[0].block_id, "other", "c");
    view = {store.corpus("synth"), store.corpus("raw")};
  }
  const auto events = AnnotationStore::read_log(log);
  CHECK(events.size() == 4);
  const auto replayed = AnnotationStore::replay(base_corpora(), events);
  AnnotationStore reopened(base_corpora(), log);
  for (std::size_t c = 0; c < 2; ++c) {
    REQUIRE(replayed[c].size() == view[c].size());
    for (std::size_t i = 0; i < view[c].size(); ++i) {
      CHECK(replayed[c].samples[i].blocks == view[c].samples[i].blocks);
      CHECK(reopened.corpus(view[c].name).samples[i].blocks == view[c].samples[i].blocks);
    }
  }
  CHECK(reopened.revision("r1", 0) == 2);
  CHECK(reopened.assign("r1", 0, "other", "d").revision == 3);
}

TEST_CASE("HTTP endpoints") {
  fixtures::TempDir dir("http");
  AnnotationStore store(base_corpora(), dir / "events.jsonl");
  ServiceConfig config;
  config.port = 0;
  config.export_root = dir / "exports";
  AnnotationServer server(store, config);
  server.start();
  REQUIRE(server.port() > 0);
  httplib::Client cli("127.0.0.1", server.port());

  auto res = cli.Get("/corpora");
  REQUIRE(res);
  CHECK(res->status == 200);
  const auto corpora = json::parse(res->body);
  REQUIRE(corpora.size() == 2);
  CHECK(corpora[1]["name"] == "raw");
  CHECK(corpora[1]["labeled"] == 1);
  CHECK(corpora[1]["total"] == 3);

  res = cli.Get("/corpora/synth/samples?split=train");
  REQUIRE(res);
  CHECK(json::parse(res->body)["samples"].size() == 2);
  CHECK(cli.Get("/corpora/synth/samples?split=val")->status == 404);
  CHECK(cli.Get("/corpora/none/samples")->status == 404);

  res = cli.Get("/samples/r0");
  REQUIRE(res);
  const auto sample = json::parse(res->body);
  CHECK(sample["corpus"] == "raw");
  CHECK(sample["width"] == 40);
  CHECK(sample["blocks"][0]["role"].is_null());
  CHECK(sample["blocks"][1]["role"] == "tick_label");
  CHECK(cli.Get("/samples/zzz")->status == 404);

  res = cli.Get("/samples/r0/image");
  REQUIRE(res);
  CHECK(res->get_header_value("Content-Type") == "image/png");
  const auto png = encode_png(store.sample("r0").first.raster());
  CHECK(res->body == std::string(png.begin(), png.end()));

  res = cli.Put("/samples/r0/blocks/0/role", R"({"role": "chart_title", "annotator": "amy"})", "application/json");
  REQUIRE(res);
  CHECK(res->status == 200);
  CHECK(json::parse(res->body)["revision"] == 1);
  CHECK(cli.Put("/samples/r0/blocks/0/role", R"({"role": "banner"})", "application/json")->status == 422);
  CHECK(cli.Put("/samples/r0/blocks/9/role", R"({"role": "other"})", "application/json")->status == 404);
  CHECK(cli.Put("/samples/r0/blocks/0/role", "{oops", "application/json")->status == 400);
  CHECK(json::parse(cli.Get("/progress/raw")->body)["labeled"] == 2);
  CHECK(cli.Get("/progress/none")->status == 404);

  // Preview: the response image equals the library result.
  const auto s = store.corpus("synth").samples[0];
  AugmentationRecipe recipe{AugmentationMethod::kRotation, {{"theta", 12.0}}, 5};
  json body = {{"sample_id", s.sample_id}, {"recipe", json::parse(recipe_to_json(recipe))["recipe"]}};
  res = cli.Post("/preview", body.dump(), "application/json");
  REQUIRE(res);
  CHECK(res->status == 200);
  const auto preview = json::parse(res->body);
  const auto local = apply_recipe(s, recipe);
  CHECK(preview["image_png_base64"] == b64(encode_png(local.raster())));
  CHECK(preview["width"] == local.raster().width());
  CHECK(preview["blocks"].size() == local.blocks.size());
  CHECK(cli.Post("/preview", body.dump(), "application/json")->body == res->body);
  body["recipe"]["params"] = json::object();
  CHECK(cli.Post("/preview", body.dump(), "application/json")->status == 422);

  json cut_body = {{"sample_id", s.sample_id}, {"recipe", {{"method", "cutout"}, {"seed", 3}}}};
  res = cli.Post("/preview", cut_body.dump(), "application/json");
  REQUIRE(res);
  const auto cut = json::parse(res->body);
  const auto expected = cutout_sample(s, class_distribution(store.corpus("synth")), 3);
  CHECK(cut["plan"]["n_masks"] == expected.plan.n_masks);
  CHECK(cut["plan"]["target_class"] == std::string(role_name(expected.plan.target_class)));
  CHECK(cut["plan"]["masked_block_ids"].get<std::vector<int>>() == expected.plan.masked_block_ids);
  CHECK(cut["image_png_base64"] == b64(encode_png(expected.sample.raster())));

  // Export refuses unlabeled blocks, then succeeds once all are labeled.
  res = cli.Post("/export", R"({"corpus": "raw"})", "application/json");
  REQUIRE(res);
  CHECK(res->status == 409);
  const auto conflict = json::parse(res->body);
  REQUIRE(conflict["unlabeled"].size() == 1);
  CHECK(conflict["unlabeled"][0]["sample_id"] == "r1");
  CHECK(cli.Put("/samples/r1/blocks/0/role", R"({"role": "other"})", "application/json")->status == 200);
  res = cli.Post("/export", R"({"corpus": "raw"})", "application/json");
  REQUIRE(res);
  CHECK(res->status == 200);
  const auto loaded = load_corpus(dir / "exports" / "raw", AnnotationFormat::kNative).corpus;
  REQUIRE(loaded.size() == 2);
  CHECK(loaded.find("r0")->blocks == store.sample("r0").first.blocks);
  CHECK(loaded.find("r1")->blocks[0].role == TextRole::kOther);

  // A second server cannot bind the same port.
  ServiceConfig clash = config;
  clash.port = server.port();
  AnnotationServer second(store, clash);
  CHECK_THROWS_AS(second.start(), std::runtime_error);
  server.stop();
}
