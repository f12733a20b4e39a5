// Command-line front end: cost reports, gradient checks, specialization
// equivalence suites, and desk-scale train/eval on synthetic clips.
//
// Exit codes: 0 pass, 1 check failure, 2 usage, 3 config, 4 weights.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "mvf/checks.hpp"
#include "mvf/config.hpp"
#include "mvf/cost.hpp"
#include "mvf/serialize.hpp"
#include "mvf/train.hpp"

namespace {

constexpr int kExitPass = 0;
constexpr int kExitCheckFail = 1;
constexpr int kExitUsage = 2;
constexpr int kExitConfig = 3;
constexpr int kExitWeights = 4;

std::set<std::string> parse_stage_list(const std::string& s) {
  std::set<std::string> out;
  if (s.empty() || s == "none") return out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.insert(item);
  }
  return out;
}

int run_cost(const std::string& backbone, std::size_t frames, double alpha,
             const std::string& stages, std::size_t classes,
             std::size_t resolution, std::size_t in_channels,
             std::size_t crops, std::size_t clips, bool json) {
  mvf::NetworkSpec spec;
  spec.backbone = backbone;
  spec.frames = frames;
  spec.mvf.alpha = alpha;
  spec.mvf_stages = parse_stage_list(stages);
  spec.classes = classes;
  spec.input_resolution = resolution;
  spec.in_channels = in_channels;
  mvf::CostReport rep = mvf::cost_network(spec);
  mvf::cost_protocol(rep, crops, clips);
  if (json) {
    std::cout << mvf::cost_report_json(rep).dump(2) << "\n";
    return kExitPass;
  }
  std::printf("backbone=%s frames=%zu alpha=%g stages=%s classes=%zu\n",
              backbone.c_str(), frames, alpha,
              stages.empty() ? "none" : stages.c_str(), classes);
  std::printf("total: %.2f GMACs, %.2fM params\n", rep.total_gmacs(),
              rep.total_mparams());
  if (crops * clips > 1)
    std::printf("protocol: %.1fG x %zu (crops x clips) = %.1fG\n",
                rep.total_gmacs(), crops * clips, rep.protocol_total());
  std::printf("%-24s %14s %12s\n", "layer", "macs", "params");
  for (const auto& e : rep.per_layer)
    std::printf("%-24s %14llu %12llu\n", e.id.c_str(),
                static_cast<unsigned long long>(e.macs),
                static_cast<unsigned long long>(e.params));
  return kExitPass;
}

int run_gradcheck(const std::string& target, std::uint64_t seed,
                  bool corrupt) {
  const auto lines = mvf::gradcheck_target(target, seed, corrupt);
  bool all_pass = true;
  for (const auto& l : lines) {
    const bool ok = l.max_rel_err < 1e-5;
    all_pass = all_pass && ok;
    std::printf("%-18s max_rel_err=%.3e  %s\n", l.name.c_str(), l.max_rel_err,
                ok ? "PASS" : "FAIL");
  }
  return all_pass ? kExitPass : kExitCheckFail;
}

int run_equiv(const std::string& which, std::size_t trials,
              std::uint64_t seed) {
  double dev = 0.0;
  if (which == "tsm")
    dev = mvf::equiv_tsm(trials, seed);
  else if (which == "c2d")
    dev = mvf::equiv_c2d(trials, seed);
  else if (which == "slowonly")
    dev = mvf::equiv_slowonly(trials, seed);
  else
    throw mvf::DomainError("unknown equivalence suite '" + which + "'");
  const bool ok = dev == 0.0;
  std::printf("%s: max abs deviation = %.17g over %zu trials  %s\n",
              which.c_str(), dev, trials, ok ? "PASS" : "FAIL");
  return ok ? kExitPass : kExitCheckFail;
}

int run_train(const std::string& config_path, const std::string& out_path,
              const std::string& history_path) {
  mvf::ConfigDocument cfg = mvf::load_config(config_path);
  std::printf("training %s on %s: %zu clips, %zu epochs, batch %zu, seed %llu\n",
              cfg.network.backbone.c_str(), mvf::task_kind_name(cfg.task.kind),
              cfg.train_clips, cfg.train.epochs, cfg.train.batch,
              static_cast<unsigned long long>(cfg.train.seed));
  mvf::TrainResult<float> res = mvf::train<float>(
      cfg.network, cfg.task, cfg.train, cfg.train_clips, cfg.val_clips);
  std::ofstream hist(history_path.empty() ? out_path + ".history.jsonl"
                                          : history_path);
  for (const auto& st : res.history) {
    hist << mvf::history_line_json(st).dump() << "\n";
    std::printf("epoch %2zu  lr %.5f  loss %.4f  val_acc %.4f\n", st.epoch,
                st.lr, st.train_loss, st.val_acc);
  }
  mvf::save_weights(out_path, mvf::snapshot_weights<float>(res.net));
  std::printf("final val_acc %.4f; weights -> %s\n",
              res.history.back().val_acc, out_path.c_str());
  return kExitPass;
}

int run_eval(const std::string& config_path, const std::string& weights_path) {
  mvf::ConfigDocument cfg = mvf::load_config(config_path);
  mvf::Network<float> net(cfg.network, cfg.train.seed);
  mvf::restore_weights<float>(net, mvf::load_weights<float>(weights_path));
  mvf::Dataset<float> val =
      mvf::make_dataset<float>(cfg.task, cfg.val_clips, cfg.train.seed + 0x5EED);
  std::printf("protocol: %zu clip(s) x %s crop(s), resolution %zu\n",
              cfg.eval.clips_per_video,
              cfg.eval.crops == mvf::CropMode::Three ? "3" : "1",
              cfg.eval.resolution);
  std::size_t correct = 0;
  for (std::size_t i = 0; i < val.size(); ++i) {
    std::vector<std::vector<float>> per_view;
    for (std::size_t rep = 0; rep < cfg.eval.clips_per_video; ++rep) {
      for (const auto& view : mvf::crop_views(val.clips[i], cfg.eval)) {
        mvf::VideoTensor<float> logits =
            net.forward(view, mvf::NormMode::Eval, false);
        std::vector<float> row(logits.c());
        for (std::size_t k = 0; k < logits.c(); ++k)
          row[k] = logits.at(0, k, 0, 0, 0);
        per_view.push_back(std::move(row));
      }
    }
    if (mvf::clip_consensus(per_view) == val.labels[i]) ++correct;
  }
  std::printf("consensus accuracy: %.4f (%zu/%zu)\n",
              static_cast<double>(correct) / static_cast<double>(val.size()),
              correct, val.size());
  if (cfg.task.kind == mvf::TaskKind::FullEight ||
      cfg.task.kind == mvf::TaskKind::TemporalOrder) {
    const double pair = mvf::evaluate_pair_accuracy(net, val);
    std::printf("reversed-pair accuracy: %.4f\n", pair);
  }
  return kExitPass;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"spatiotemporal multi-view fusion toolkit"};
  app.require_subcommand(1);

  // cost
  auto* cost = app.add_subcommand("cost", "analytic MACs/params report");
  std::string backbone = "r50", stages = "none";
  std::size_t frames = 8, classes = 400, resolution = 224, in_channels = 3;
  std::size_t crops = 1, clips = 1;
  double alpha = 0.0;
  bool as_json = false;
  cost->add_option("--backbone", backbone, "r50 | r101 | mobilenet_v2 | tiny");
  cost->add_option("--frames", frames, "clip length T");
  cost->add_option("--alpha", alpha, "multi-view channel fraction");
  cost->add_option("--stages", stages, "comma list of stages, or 'none'");
  cost->add_option("--classes", classes, "classifier width");
  cost->add_option("--resolution", resolution, "input spatial resolution");
  cost->add_option("--in-channels", in_channels, "input channels");
  cost->add_option("--crops", crops, "spatial crops per clip");
  cost->add_option("--clips", clips, "clips per video");
  cost->add_flag("--json", as_json, "machine-readable output");

  // gradcheck
  auto* gc = app.add_subcommand("gradcheck", "finite-difference verification");
  std::string target;
  std::uint64_t seed = 0;
  bool corrupt = false;
  gc->add_option("--target", target, "ops | mvf | block | tiny-net")
      ->required()
      ->check(CLI::IsMember({"ops", "mvf", "block", "tiny-net"}));
  gc->add_option("--seed", seed, "rng seed");
  gc->add_flag("--corrupt", corrupt, "negative-control hook: perturb one gradient")
      ->group("");  // hidden

  // equiv
  auto* eq = app.add_subcommand("equiv", "specialization equivalence suites");
  std::string which;
  std::size_t trials = 120;
  std::uint64_t eq_seed = 0;
  eq->add_option("--which", which, "tsm | c2d | slowonly")
      ->required()
      ->check(CLI::IsMember({"tsm", "c2d", "slowonly"}));
  eq->add_option("--trials", trials, "random trials");
  eq->add_option("--seed", eq_seed, "rng seed");

  // train
  auto* tr = app.add_subcommand("train", "train on synthetic clips");
  std::string tr_config, tr_out, tr_history;
  tr->add_option("config", tr_config, "JSON config path")->required();
  tr->add_option("--out", tr_out, "output weight file")->required();
  tr->add_option("--history", tr_history, "history JSONL path");

  // eval
  auto* ev = app.add_subcommand("eval", "evaluate saved weights");
  std::string ev_config, ev_weights;
  ev->add_option("config", ev_config, "JSON config path")->required();
  ev->add_option("weights", ev_weights, "weight file path")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (*cost)
      return run_cost(backbone, frames, alpha, stages, classes, resolution,
                      in_channels, crops, clips, as_json);
    if (*gc) return run_gradcheck(target, seed, corrupt);
    if (*eq) return run_equiv(which, trials, eq_seed);
    if (*tr) return run_train(tr_config, tr_out, tr_history);
    if (*ev) return run_eval(ev_config, ev_weights);
  } catch (const mvf::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const mvf::WeightFileError& e) {
    std::cerr << "weight error: " << e.what() << "\n";
    return kExitWeights;
  } catch (const mvf::TrainDivergence& e) {
    std::cerr << e.what() << "\n";
    return kExitCheckFail;
  } catch (const mvf::DomainError& e) {
    std::cerr << "argument error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const mvf::ShapeError& e) {
    std::cerr << "shape error: " << e.what() << "\n";
    return kExitUsage;
  }
  return kExitUsage;
}
