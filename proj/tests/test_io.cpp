#include <catch2/catch_amalgamated.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>
#include <string>

#include "mvf/config.hpp"
#include "mvf/serialize.hpp"

using namespace mvf;
using nlohmann::json;

namespace {

std::string temp_path(const char* stem) {
  return (std::filesystem::temp_directory_path() / stem).string();
}

std::string slurp(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  REQUIRE(is.good());
  return std::string(std::istreambuf_iterator<char>(is),
                     std::istreambuf_iterator<char>());
}

void spit(const std::string& path, const std::string& bytes) {
  std::ofstream os(path, std::ios::binary);
  os.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

WeightMap<float> sample_map() {
  WeightMap<float> w;
  w["a.w"] = {{2, 3}, {1.0f, -2.5f, 0.0f, 4.0f, 1e-30f, -0.125f}};
  w["b.bias"] = {{4}, {0.5f, 0.25f, -0.75f, 3.0f}};
  return w;
}

NetworkSpec tiny_spec() {
  NetworkSpec s;
  s.backbone = "tiny";
  s.frames = 4;
  s.mvf.alpha = 0.5;
  s.mvf_stages = {"res2"};
  s.classes = 8;
  s.input_resolution = 16;
  s.in_channels = 1;
  return s;
}

}  // namespace

TEST_CASE("weight files round-trip byte for byte") {
  const std::string p1 = temp_path("io_rt1.mvfw");
  const std::string p2 = temp_path("io_rt2.mvfw");
  WeightMap<float> w = sample_map();
  save_weights(p1, w);
  WeightMap<float> r = load_weights<float>(p1);
  REQUIRE(r.size() == w.size());
  for (const auto& [name, entry] : w) {
    REQUIRE(r.count(name) == 1u);
    REQUIRE(r.at(name).dims == entry.dims);
    REQUIRE(r.at(name).data == entry.data);
  }
  save_weights(p2, r);
  REQUIRE(slurp(p1) == slurp(p2));
  std::remove(p1.c_str());
  std::remove(p2.c_str());
}

TEST_CASE("weight file header and payload validation") {
  const std::string p = temp_path("io_bad.mvfw");
  WeightMap<float> w = sample_map();
  save_weights(p, w);
  const std::string bytes = slurp(p);

  SECTION("dtype mismatch on load") {
    REQUIRE_THROWS_AS(load_weights<double>(p), WeightFileError);
  }
  SECTION("bad magic") {
    std::string corrupt = bytes;
    corrupt[0] = 'X';
    spit(p, corrupt);
    REQUIRE_THROWS_AS(load_weights<float>(p), WeightFileError);
  }
  SECTION("unsupported version") {
    std::string corrupt = bytes;
    corrupt[4] = 9;
    spit(p, corrupt);
    REQUIRE_THROWS_AS(load_weights<float>(p), WeightFileError);
  }
  SECTION("truncated payload") {
    spit(p, bytes.substr(0, bytes.size() - 3));
    REQUIRE_THROWS_AS(load_weights<float>(p), WeightFileError);
  }
  SECTION("truncated header") {
    spit(p, bytes.substr(0, 6));
    REQUIRE_THROWS_AS(load_weights<float>(p), WeightFileError);
  }
  SECTION("dims/payload mismatch rejected at save") {
    WeightMap<float> broken = w;
    broken["a.w"].dims = {5};
    REQUIRE_THROWS_AS(save_weights(p, broken), WeightFileError);
  }
  SECTION("missing file") {
    REQUIRE_THROWS_AS(load_weights<float>(temp_path("io_nope.mvfw")),
                      WeightFileError);
  }
  std::remove(p.c_str());
}

TEST_CASE("network snapshot and strict restore") {
  NetworkSpec spec = tiny_spec();
  Network<float> a(spec, 11);
  Network<float> b(spec, 99);

  std::mt19937_64 rng(12);
  VideoTensor<float> x = random_normal<float>(1, 1, 4, 16, 16, 1.0f, rng);
  VideoTensor<float> before = a.forward(x, NormMode::Eval);
  VideoTensor<float> other = b.forward(x, NormMode::Eval);
  REQUIRE(max_abs_diff(before, other) > 0.0f);

  WeightMap<float> snap = snapshot_weights<float>(a);

  SECTION("restore transplants the exact eval function") {
    restore_weights<float>(b, snap);
    REQUIRE(max_abs_diff(b.forward(x, NormMode::Eval), before) == 0.0f);
  }
  SECTION("restore survives a disk round trip") {
    const std::string p = temp_path("io_net.mvfw");
    save_weights(p, snap);
    restore_weights<float>(b, load_weights<float>(p));
    REQUIRE(max_abs_diff(b.forward(x, NormMode::Eval), before) == 0.0f);
    std::remove(p.c_str());
  }
  SECTION("missing entry") {
    snap.erase("fc.w");
    REQUIRE_THROWS_AS(restore_weights<float>(b, snap), WeightFileError);
  }
  SECTION("size mismatch") {
    snap.at("fc.b").data.push_back(0.0f);
    REQUIRE_THROWS_AS(restore_weights<float>(b, snap), WeightFileError);
  }
  SECTION("extra entry") {
    snap["not.a.tensor"] = {{1}, {0.0f}};
    REQUIRE_THROWS_AS(restore_weights<float>(b, snap), WeightFileError);
  }
}

TEST_CASE("config defaults") {
  ConfigDocument cfg = parse_config(json::object());
  REQUIRE(cfg.network.backbone == "tiny");
  REQUIRE(cfg.network.mvf.alpha == 0.5);
  REQUIRE(cfg.network.mvf_stages.empty());
  REQUIRE(cfg.train.base_lr == 0.01);
  REQUIRE(cfg.train.epochs == 30u);
  REQUIRE(cfg.train.decay_epochs == std::vector<std::size_t>{20, 26});
  REQUIRE(cfg.eval.crops == CropMode::Center1);
  REQUIRE(cfg.task.kind == TaskKind::FullEight);
  REQUIRE(cfg.train_clips == 2000u);
  REQUIRE(cfg.val_clips == 400u);
  // head geometry follows the task
  REQUIRE(cfg.network.classes == 8u);
  REQUIRE(cfg.network.frames == 8u);
  REQUIRE(cfg.network.input_resolution == 32u);
}

TEST_CASE("config parsing is strict about keys and values") {
  SECTION("unknown root key") {
    REQUIRE_THROWS_AS(parse_config({{"nets", json::object()}}), ConfigError);
  }
  SECTION("unknown section keys") {
    REQUIRE_THROWS_AS(parse_config({{"network", {{"layers", 3}}}}),
                      ConfigError);
    REQUIRE_THROWS_AS(parse_config({{"mvf", {{"gamma", 1.0}}}}), ConfigError);
    REQUIRE_THROWS_AS(parse_config({{"train", {{"lr", 0.1}}}}), ConfigError);
    REQUIRE_THROWS_AS(parse_config({{"eval", {{"tencrop", true}}}}),
                      ConfigError);
    REQUIRE_THROWS_AS(parse_config({{"task", {{"shape", "disk"}}}}),
                      ConfigError);
  }
  SECTION("bad enum strings") {
    REQUIRE_THROWS_AS(parse_config({{"mvf", {{"activation", "tanh"}}}}),
                      ConfigError);
    REQUIRE_THROWS_AS(parse_config({{"task", {{"kind", "kinetics"}}}}),
                      ConfigError);
    REQUIRE_THROWS_AS(parse_config({{"eval", {{"crops", "ten"}}}}),
                      ConfigError);
  }
  SECTION("bad value type") {
    REQUIRE_THROWS_AS(parse_config({{"train", {{"base_lr", "fast"}}}}),
                      ConfigError);
  }
  SECTION("invalid train schedule rejected by validation") {
    REQUIRE_THROWS_AS(
        parse_config({{"train", {{"decay_epochs", {5, 5}}}}}), ConfigError);
  }
}

TEST_CASE("config values land in the right structs") {
  json doc = {
      {"network", {{"backbone", "r50"}, {"mvf_stages", {"res4", "res5"}}}},
      {"mvf",
       {{"alpha", 0.125},
        {"beta_h", 0.0},
        {"activation", "identity"},
        {"init_std", 0.5}}},
      {"train", {{"epochs", 2}, {"batch", 4}, {"train_clips", 64}}},
      {"eval", {{"crops", "three"}, {"resolution", 24}}},
      {"task", {{"kind", "direction_lr"}, {"frames", 4}, {"resolution", 28}}},
  };
  ConfigDocument cfg = parse_config(doc);
  REQUIRE(cfg.network.backbone == "r50");
  REQUIRE(cfg.network.mvf_stages == std::set<std::string>{"res4", "res5"});
  REQUIRE(cfg.network.mvf.alpha == 0.125);
  REQUIRE(cfg.network.mvf.beta_h == 0.0);
  REQUIRE(cfg.network.mvf.beta_t == 1.0);
  REQUIRE(cfg.network.mvf.activation == Activation::Identity);
  REQUIRE(cfg.network.mvf_init_std == 0.5);
  REQUIRE(cfg.train.epochs == 2u);
  REQUIRE(cfg.train.batch == 4u);
  REQUIRE(cfg.train_clips == 64u);
  REQUIRE(cfg.eval.crops == CropMode::Three);
  REQUIRE(cfg.eval.resolution == 24u);
  REQUIRE(cfg.task.kind == TaskKind::DirectionLR);
  // task geometry propagates to the network
  REQUIRE(cfg.network.classes == 2u);
  REQUIRE(cfg.network.frames == 4u);
  REQUIRE(cfg.network.input_resolution == 28u);
}

TEST_CASE("load_config reads files and rejects bad JSON") {
  const std::string p = temp_path("io_cfg.json");
  spit(p, R"({"task": {"kind": "temporal_order"}})");
  ConfigDocument cfg = load_config(p);
  REQUIRE(cfg.task.kind == TaskKind::TemporalOrder);
  REQUIRE(cfg.network.classes == 2u);

  spit(p, "{not json");
  REQUIRE_THROWS_AS(load_config(p), ConfigError);
  std::remove(p.c_str());
  REQUIRE_THROWS_AS(load_config(p), ConfigError);
}

TEST_CASE("json emission shapes") {
  SECTION("cost report") {
    NetworkSpec s;
    s.backbone = "r50";
    s.frames = 8;
    s.mvf.alpha = 0.5;
    s.mvf_stages = {"res4", "res5"};
    s.classes = 400;
    s.input_resolution = 224;
    s.in_channels = 3;
    CostReport rep = cost_network(s);
    rep.crops = 3;
    rep.clips = 10;
    json j = cost_report_json(rep);
    for (const char* key :
         {"total_gmacs", "total_mparams", "total_macs", "total_params",
          "crops", "clips", "protocol_gmacs", "per_layer"})
      REQUIRE(j.contains(key));
    REQUIRE(j.at("total_macs").get<std::uint64_t>() == rep.total_macs());
    REQUIRE(j.at("per_layer").size() == rep.per_layer.size());
    REQUIRE(j.at("per_layer").front().contains("id"));
    // serialization is deterministic for identical reports
    REQUIRE(j.dump() == cost_report_json(rep).dump());
  }
  SECTION("emitted documents conform to the shipped schemas") {
    const auto schema_dir =
        std::filesystem::path(__FILE__).parent_path().parent_path() / "schemas";
    const auto conforms = [&](const json& doc, const char* schema_file) {
      std::ifstream is(schema_dir / schema_file);
      REQUIRE(is.good());
      json schema;
      is >> schema;
      const json& props = schema.at("properties");
      for (auto it = doc.begin(); it != doc.end(); ++it)
        REQUIRE(props.contains(it.key()));
      for (const auto& key : schema.at("required"))
        REQUIRE(doc.contains(key.get<std::string>()));
    };
    CostReport rep = cost_network(parse_config(json::object()).network);
    conforms(cost_report_json(rep), "cost_report.schema.json");
    conforms(history_line_json({0, 0.01, 1.0, 0.5}),
             "history_line.schema.json");
  }
  SECTION("history line") {
    EpochStats st{3, 0.01, 1.25, 0.5};
    json j = history_line_json(st);
    REQUIRE(j.at("epoch").get<std::size_t>() == 3u);
    REQUIRE(j.at("lr").get<double>() == 0.01);
    REQUIRE(j.at("train_loss").get<double>() == 1.25);
    REQUIRE(j.at("val_acc").get<double>() == 0.5);
  }
}
