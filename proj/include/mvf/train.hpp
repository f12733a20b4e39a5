#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "mvf/data.hpp"
#include "mvf/net.hpp"

namespace mvf {

struct TrainConfig {
  double base_lr = 0.01;
  double momentum = 0.9;
  double weight_decay = 1e-4;
  std::size_t epochs = 30;
  std::vector<std::size_t> decay_epochs = {20, 26};
  double decay_factor = 10.0;
  std::size_t batch = 8;  // linear lr scaling: base_lr * batch / 8
  std::uint64_t seed = 0;

  void validate() const {
    if (base_lr <= 0 || momentum < 0 || weight_decay < 0 || decay_factor <= 0)
      throw DomainError("TrainConfig: non-positive hyperparameter");
    for (std::size_t i = 1; i < decay_epochs.size(); ++i)
      if (decay_epochs[i] <= decay_epochs[i - 1])
        throw DomainError("TrainConfig: decay epochs must be increasing");
  }
};

inline double lr_at(const TrainConfig& cfg, std::size_t epoch) {
  double lr = cfg.base_lr * (static_cast<double>(cfg.batch) / 8.0);
  for (std::size_t e : cfg.decay_epochs)
    if (e <= epoch) lr /= cfg.decay_factor;
  return lr;
}

/// SGD with momentum; velocity buffers keyed by parameter order.
///   v <- m*v + g + wd*w   (wd only for decaying params)
///   w <- w - lr*v
template <typename T>
class SgdOptimizer {
 public:
  explicit SgdOptimizer(const TrainConfig& cfg) : cfg_(cfg) {}

  void step(ParamLists<T>& pl, double lr) {
    if (velocity_.empty()) {
      velocity_.resize(pl.params.size());
      for (std::size_t i = 0; i < pl.params.size(); ++i)
        velocity_[i].assign(pl.params[i].value->size(), T(0));
    }
    for (std::size_t i = 0; i < pl.params.size(); ++i) {
      auto& p = pl.params[i];
      auto& v = velocity_[i];
      const T wd = p.decay ? static_cast<T>(cfg_.weight_decay) : T(0);
      const T m = static_cast<T>(cfg_.momentum);
      const T step_lr = static_cast<T>(lr);
      for (std::size_t j = 0; j < v.size(); ++j) {
        v[j] = m * v[j] + (*p.grad)[j] + wd * (*p.value)[j];
        (*p.value)[j] -= step_lr * v[j];
      }
    }
  }

 private:
  TrainConfig cfg_;
  std::vector<std::vector<T>> velocity_;
};

// ---------------------------------------------------------------------------
// Inference protocol.

enum class CropMode { Center1, Three };

struct EvalProtocol {
  std::size_t clips_per_video = 1;
  CropMode crops = CropMode::Center1;
  std::size_t resolution = 32;
};

/// Spatial crops of one clip.  Center1 takes a single centered square;
/// Three places squares at the start, middle and end of the longer side.
template <typename T>
std::vector<VideoTensor<T>> crop_views(const VideoTensor<T>& frames,
                                       const EvalProtocol& proto) {
  const std::size_t s = proto.resolution;
  if (s > frames.h() || s > frames.w())
    throw DomainError("crop_views: crop larger than frame");
  const auto crop = [&](std::size_t y0, std::size_t x0) {
    VideoTensor<T> out(frames.n(), frames.c(), frames.t(), s, s);
    for (std::size_t n = 0; n < frames.n(); ++n)
      for (std::size_t c = 0; c < frames.c(); ++c)
        for (std::size_t t = 0; t < frames.t(); ++t)
          for (std::size_t y = 0; y < s; ++y)
            for (std::size_t x = 0; x < s; ++x)
              out.at(n, c, t, y, x) = frames.at(n, c, t, y0 + y, x0 + x);
    return out;
  };
  std::vector<VideoTensor<T>> views;
  if (proto.crops == CropMode::Center1) {
    views.push_back(crop((frames.h() - s) / 2, (frames.w() - s) / 2));
  } else {
    if (frames.w() >= frames.h()) {
      const std::size_t span = frames.w() - s;
      const std::size_t y0 = (frames.h() - s) / 2;
      for (std::size_t off : {std::size_t(0), span / 2, span})
        views.push_back(crop(y0, off));
    } else {
      const std::size_t span = frames.h() - s;
      const std::size_t x0 = (frames.w() - s) / 2;
      for (std::size_t off : {std::size_t(0), span / 2, span})
        views.push_back(crop(off, x0));
    }
  }
  return views;
}

/// Average the softmax probabilities of all clips, then argmax; ties break
/// toward the lowest class index.
template <typename T>
std::size_t clip_consensus(const std::vector<std::vector<T>>& per_clip_logits) {
  if (per_clip_logits.empty())
    throw DomainError("clip_consensus: empty clip list");
  const std::size_t k = per_clip_logits.front().size();
  std::vector<T> avg(k, T(0));
  for (const auto& logits : per_clip_logits) {
    if (logits.size() != k)
      throw ShapeError("clip_consensus: inconsistent class counts");
    std::vector<T> p = softmax_row(logits.data(), k);
    for (std::size_t i = 0; i < k; ++i) avg[i] += p[i];
  }
  std::size_t best = 0;
  for (std::size_t i = 1; i < k; ++i)
    if (avg[i] > avg[best]) best = i;
  return best;
}

// ---------------------------------------------------------------------------
// Training loop.

struct EpochStats {
  std::size_t epoch;
  double lr;
  double train_loss;
  double val_acc;
};

struct TrainDivergence : std::runtime_error {
  std::size_t epoch;
  explicit TrainDivergence(std::size_t e)
      : std::runtime_error("training diverged (loss is not finite) at epoch " +
                           std::to_string(e)),
        epoch(e) {}
};

template <typename T>
VideoTensor<T> assemble_batch(const Dataset<T>& ds,
                              const std::vector<std::size_t>& idx,
                              std::vector<std::size_t>& labels_out) {
  const auto& first = ds.clips[idx[0]];
  VideoTensor<T> batch(idx.size(), first.c(), first.t(), first.h(), first.w());
  labels_out.clear();
  for (std::size_t b = 0; b < idx.size(); ++b) {
    std::copy_n(ds.clips[idx[b]].data(), first.size(),
                batch.data() + b * first.size());
    labels_out.push_back(ds.labels[idx[b]]);
  }
  return batch;
}

template <typename T>
double evaluate_accuracy(Network<T>& net, const Dataset<T>& ds,
                         std::size_t batch_size = 16) {
  std::size_t correct = 0;
  for (std::size_t start = 0; start < ds.size(); start += batch_size) {
    std::vector<std::size_t> idx;
    for (std::size_t i = start; i < std::min(start + batch_size, ds.size()); ++i)
      idx.push_back(i);
    std::vector<std::size_t> labels;
    VideoTensor<T> batch = assemble_batch(ds, idx, labels);
    VideoTensor<T> logits = net.forward(batch, NormMode::Eval, false);
    for (std::size_t b = 0; b < idx.size(); ++b) {
      std::vector<T> row(logits.c());
      for (std::size_t i = 0; i < logits.c(); ++i)
        row[i] = logits.at(b, i, 0, 0, 0);
      if (clip_consensus<T>({row}) == labels[b]) ++correct;
    }
  }
  return static_cast<double>(correct) / static_cast<double>(ds.size());
}

/// Accuracy of the forced choice between each clip's class and its
/// time-reversed partner (argmax restricted to the pair).
template <typename T>
double evaluate_pair_accuracy(Network<T>& net, const Dataset<T>& ds,
                              std::size_t batch_size = 16) {
  std::size_t correct = 0;
  for (std::size_t start = 0; start < ds.size(); start += batch_size) {
    std::vector<std::size_t> idx;
    for (std::size_t i = start; i < std::min(start + batch_size, ds.size()); ++i)
      idx.push_back(i);
    std::vector<std::size_t> labels;
    VideoTensor<T> batch = assemble_batch(ds, idx, labels);
    VideoTensor<T> logits = net.forward(batch, NormMode::Eval, false);
    for (std::size_t b = 0; b < idx.size(); ++b) {
      const std::size_t truth = labels[b];
      const std::size_t partner = partner_class(truth);
      const T lt = logits.at(b, truth, 0, 0, 0);
      const T lp = logits.at(b, partner, 0, 0, 0);
      // Tie or win goes to the lower class index, matching consensus rule.
      const std::size_t pick =
          lt == lp ? std::min(truth, partner) : (lt > lp ? truth : partner);
      if (pick == truth) ++correct;
    }
  }
  return static_cast<double>(correct) / static_cast<double>(ds.size());
}

template <typename T>
struct TrainResult {
  Network<T> net;
  std::vector<EpochStats> history;
};

template <typename T>
TrainResult<T> train(const NetworkSpec& netspec, const SyntheticTask& task,
                     const TrainConfig& cfg, std::size_t train_clips,
                     std::size_t val_clips) {
  cfg.validate();
  Network<T> net(netspec, cfg.seed);
  Dataset<T> train_set = make_dataset<T>(task, train_clips, cfg.seed);
  Dataset<T> val_set = make_dataset<T>(task, val_clips, cfg.seed + 0x5EED);
  SgdOptimizer<T> opt(cfg);
  std::vector<EpochStats> history;
  ParamLists<T> pl = net.parameters();
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    const double lr = lr_at(cfg, epoch);
    std::vector<std::size_t> order(train_set.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::mt19937_64 shuffle_rng(cfg.seed * 1000003ULL + epoch);
    std::shuffle(order.begin(), order.end(), shuffle_rng);
    double loss_sum = 0.0;
    std::size_t batches = 0;
    for (std::size_t start = 0; start < order.size(); start += cfg.batch) {
      std::vector<std::size_t> idx(
          order.begin() + start,
          order.begin() + std::min(start + cfg.batch, order.size()));
      std::vector<std::size_t> labels;
      VideoTensor<T> batch = assemble_batch(train_set, idx, labels);
      net.zero_grad();
      VideoTensor<T> logits = net.forward(batch, NormMode::Train, true);
      XentResult<T> xr = softmax_xent(logits, labels);
      if (!std::isfinite(static_cast<double>(xr.loss)))
        throw TrainDivergence(epoch);
      net.backward(xr.d_logits);
      opt.step(pl, lr);
      loss_sum += static_cast<double>(xr.loss);
      ++batches;
    }
    EpochStats st{epoch, lr, loss_sum / static_cast<double>(batches),
                  evaluate_accuracy(net, val_set)};
    history.push_back(st);
  }
  return {std::move(net), std::move(history)};
}

}  // namespace mvf
