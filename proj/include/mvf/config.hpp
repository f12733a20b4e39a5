#pragma once

#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "mvf/cost.hpp"
#include "mvf/data.hpp"
#include "mvf/net.hpp"
#include "mvf/train.hpp"

namespace mvf {

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Parsed configuration document.  Parsing is strict: any key outside the
/// documented schema is rejected so ablation scripts fail loudly.
struct ConfigDocument {
  NetworkSpec network;
  TrainConfig train;
  EvalProtocol eval;
  SyntheticTask task;
  std::size_t train_clips = 2000;
  std::size_t val_clips = 400;
};

namespace detail {

using nlohmann::json;

inline void check_keys(const json& obj, const std::string& section,
                       const std::set<std::string>& allowed) {
  for (auto it = obj.begin(); it != obj.end(); ++it)
    if (!allowed.count(it.key()))
      throw ConfigError("unknown key '" + it.key() + "' in section '" +
                        section + "'");
}

template <typename T>
T get_or(const json& obj, const std::string& key, T fallback) {
  if (!obj.contains(key)) return fallback;
  try {
    return obj.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError("bad value for '" + key + "': " + e.what());
  }
}

inline Activation parse_activation(const std::string& s) {
  if (s == "relu") return Activation::ReLU;
  if (s == "identity") return Activation::Identity;
  throw ConfigError("unknown activation '" + s + "'");
}

inline TaskKind parse_task_kind(const std::string& s) {
  if (s == "direction_lr") return TaskKind::DirectionLR;
  if (s == "direction_ud") return TaskKind::DirectionUD;
  if (s == "temporal_order") return TaskKind::TemporalOrder;
  if (s == "full_eight") return TaskKind::FullEight;
  throw ConfigError("unknown task kind '" + s + "'");
}

inline CropMode parse_crops(const std::string& s) {
  if (s == "center1") return CropMode::Center1;
  if (s == "three") return CropMode::Three;
  throw ConfigError("unknown crop mode '" + s + "'");
}

}  // namespace detail

inline ConfigDocument parse_config(const nlohmann::json& doc) {
  using detail::check_keys;
  using detail::get_or;
  ConfigDocument cfg;
  check_keys(doc, "<root>", {"network", "mvf", "train", "eval", "task"});

  if (doc.contains("network")) {
    const auto& n = doc.at("network");
    check_keys(n, "network",
               {"backbone", "frames", "mvf_stages", "classes",
                "input_resolution", "in_channels"});
    cfg.network.backbone = get_or<std::string>(n, "backbone", "tiny");
    cfg.network.frames = get_or<std::size_t>(n, "frames", 8);
    cfg.network.classes = get_or<std::size_t>(n, "classes", 8);
    cfg.network.input_resolution =
        get_or<std::size_t>(n, "input_resolution", 32);
    cfg.network.in_channels = get_or<std::size_t>(n, "in_channels", 1);
    if (n.contains("mvf_stages"))
      for (const auto& s : n.at("mvf_stages"))
        cfg.network.mvf_stages.insert(s.get<std::string>());
  } else {
    cfg.network.classes = 8;
    cfg.network.input_resolution = 32;
    cfg.network.in_channels = 1;
  }

  if (doc.contains("mvf")) {
    const auto& m = doc.at("mvf");
    check_keys(m, "mvf",
               {"alpha", "beta_t", "beta_h", "beta_w", "activation",
                "learnable_beta", "init_std"});
    cfg.network.mvf.alpha = get_or<double>(m, "alpha", 0.5);
    cfg.network.mvf.beta_t = get_or<double>(m, "beta_t", 1.0);
    cfg.network.mvf.beta_h = get_or<double>(m, "beta_h", 1.0);
    cfg.network.mvf.beta_w = get_or<double>(m, "beta_w", 1.0);
    cfg.network.mvf.activation = detail::parse_activation(
        get_or<std::string>(m, "activation", "relu"));
    cfg.network.mvf.learnable_beta = get_or<bool>(m, "learnable_beta", false);
    cfg.network.mvf_init_std = get_or<double>(m, "init_std", 0.01);
  }

  if (doc.contains("train")) {
    const auto& t = doc.at("train");
    check_keys(t, "train",
               {"base_lr", "momentum", "weight_decay", "epochs",
                "decay_epochs", "decay_factor", "batch", "seed", "train_clips",
                "val_clips"});
    cfg.train.base_lr = get_or<double>(t, "base_lr", 0.01);
    cfg.train.momentum = get_or<double>(t, "momentum", 0.9);
    cfg.train.weight_decay = get_or<double>(t, "weight_decay", 1e-4);
    cfg.train.epochs = get_or<std::size_t>(t, "epochs", 30);
    if (t.contains("decay_epochs"))
      cfg.train.decay_epochs =
          t.at("decay_epochs").get<std::vector<std::size_t>>();
    cfg.train.decay_factor = get_or<double>(t, "decay_factor", 10.0);
    cfg.train.batch = get_or<std::size_t>(t, "batch", 8);
    cfg.train.seed = get_or<std::uint64_t>(t, "seed", 0);
    cfg.train_clips = get_or<std::size_t>(t, "train_clips", 2000);
    cfg.val_clips = get_or<std::size_t>(t, "val_clips", 400);
    try {
      cfg.train.validate();
    } catch (const DomainError& e) {
      throw ConfigError(e.what());
    }
  }

  if (doc.contains("eval")) {
    const auto& e = doc.at("eval");
    check_keys(e, "eval", {"clips_per_video", "crops", "resolution"});
    cfg.eval.clips_per_video = get_or<std::size_t>(e, "clips_per_video", 1);
    cfg.eval.crops =
        detail::parse_crops(get_or<std::string>(e, "crops", "center1"));
    cfg.eval.resolution = get_or<std::size_t>(e, "resolution", 32);
  }

  if (doc.contains("task")) {
    const auto& t = doc.at("task");
    check_keys(t, "task",
               {"kind", "resolution", "frames", "min_size", "max_size",
                "min_speed", "max_speed", "noise_std"});
    cfg.task.kind = detail::parse_task_kind(
        get_or<std::string>(t, "kind", "full_eight"));
    cfg.task.resolution = get_or<std::size_t>(t, "resolution", 32);
    cfg.task.frames = get_or<std::size_t>(t, "frames", 8);
    cfg.task.min_size = get_or<std::size_t>(t, "min_size", 4);
    cfg.task.max_size = get_or<std::size_t>(t, "max_size", 8);
    cfg.task.min_speed = get_or<std::size_t>(t, "min_speed", 1);
    cfg.task.max_speed = get_or<std::size_t>(t, "max_speed", 3);
    cfg.task.noise_std = get_or<double>(t, "noise_std", 0.05);
  }

  // Keep the network head and task in agreement.
  cfg.network.classes = cfg.task.num_classes();
  cfg.network.frames = cfg.task.frames;
  cfg.network.input_resolution = cfg.task.resolution;
  return cfg;
}

inline ConfigDocument load_config(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("cannot open config '" + path + "'");
  nlohmann::json doc;
  try {
    is >> doc;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("invalid JSON in '" + path + "': " + e.what());
  }
  return parse_config(doc);
}

// JSON emission ------------------------------------------------------------

inline nlohmann::json cost_report_json(const CostReport& rep) {
  nlohmann::json layers = nlohmann::json::array();
  for (const auto& e : rep.per_layer)
    layers.push_back({{"id", e.id}, {"macs", e.macs}, {"params", e.params}});
  return {
      {"total_gmacs", rep.total_gmacs()},
      {"total_mparams", rep.total_mparams()},
      {"total_macs", rep.total_macs()},
      {"total_params", rep.total_params()},
      {"crops", rep.crops},
      {"clips", rep.clips},
      {"protocol_gmacs", rep.protocol_total()},
      {"per_layer", layers},
  };
}

inline nlohmann::json history_line_json(const EpochStats& st) {
  return {{"epoch", st.epoch},
          {"lr", st.lr},
          {"train_loss", st.train_loss},
          {"val_acc", st.val_acc}};
}

}  // namespace mvf
