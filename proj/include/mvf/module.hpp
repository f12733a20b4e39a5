#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <string>

#include "mvf/ops.hpp"
#include "mvf/tensor.hpp"

namespace mvf {

enum class Activation { ReLU, Identity };

/// Multi-view fusion configuration: channel split ratio, per-view fusion
/// weights, activation, and whether the betas receive gradients.
struct MvfConfig {
  double alpha = 0.5;
  double beta_t = 1.0;
  double beta_h = 1.0;
  double beta_w = 1.0;
  Activation activation = Activation::ReLU;
  bool learnable_beta = false;

  void validate() const {
    if (alpha < 0.0 || alpha > 1.0)
      throw DomainError("MvfConfig: alpha outside [0,1]");
  }
};

/// The three per-channel 3-tap kernels, one per axis, each sized for the
/// multi-view split.
template <typename T>
struct MvfWeights {
  ChannelwiseKernel<T> k_t, k_h, k_w;

  MvfWeights() = default;
  explicit MvfWeights(std::size_t channels)
      : k_t(channels), k_h(channels), k_w(channels) {}
  std::size_t channels() const { return k_t.channels; }
};

/// Intermediate activations of one module application; kept because the
/// backward pass reuses them.
template <typename T>
struct MvfTrace {
  VideoTensor<T> x1;            // multi-view split input
  VideoTensor<T> o_t, o_h, o_w; // per-view responses
  VideoTensor<T> pre;           // weighted sum before activation
  VideoTensor<T> o1;            // fused, activated
  VideoTensor<T> y;             // module output
};

enum class Specialization { C2D, SlowOnlyDW, LearnableTSM, FullMVF };

inline const char* specialization_name(Specialization s) {
  switch (s) {
    case Specialization::C2D: return "C2D";
    case Specialization::SlowOnlyDW: return "SlowOnlyDW";
    case Specialization::LearnableTSM: return "LearnableTSM";
    case Specialization::FullMVF: return "FullMVF";
  }
  return "?";
}

inline Specialization classify_specialization(const MvfConfig& cfg) {
  const auto near = [](double a, double b) { return std::abs(a - b) < 1e-12; };
  if (near(cfg.alpha, 0.0)) return Specialization::C2D;
  const bool spatial_off = near(cfg.beta_h, 0.0) && near(cfg.beta_w, 0.0);
  if (near(cfg.alpha, 1.0) && spatial_off) return Specialization::SlowOnlyDW;
  if (near(cfg.alpha, 0.25) && spatial_off) return Specialization::LearnableTSM;
  return Specialization::FullMVF;
}

/// Forward pass:
///   X1, X2  = split(x, alpha)            (X1 = first round(alpha*C) channels)
///   O_axis  = channel-wise 3-tap conv of X1 along each axis
///   O1      = act(beta_t*O_T + beta_h*O_H + beta_w*O_W)
///   Y       = concat(X2, O1)             (pass-through channels first)
template <typename T>
MvfTrace<T> mvf_forward(const VideoTensor<T>& x, const MvfConfig& cfg,
                        const MvfWeights<T>& w) {
  cfg.validate();
  const std::size_t c1 = split_count(cfg.alpha, x.c());
  if (w.channels() != c1)
    throw ShapeError("mvf_forward: weights sized for " +
                     std::to_string(w.channels()) + " channels, split needs " +
                     std::to_string(c1));
  ChannelSplit<T> split = split_channels(x, cfg.alpha);
  MvfTrace<T> tr;
  tr.x1 = std::move(split.part1);
  tr.o_t = conv1d_channelwise(tr.x1, w.k_t, Axis::Temporal);
  tr.o_h = conv1d_channelwise(tr.x1, w.k_h, Axis::Height);
  tr.o_w = conv1d_channelwise(tr.x1, w.k_w, Axis::Width);
  tr.pre = zeros_like(tr.x1);
  {
    T* p = tr.pre.data();
    const T* pt = tr.o_t.data();
    const T* ph = tr.o_h.data();
    const T* pw = tr.o_w.data();
    const T bt = static_cast<T>(cfg.beta_t);
    const T bh = static_cast<T>(cfg.beta_h);
    const T bw = static_cast<T>(cfg.beta_w);
    for (std::size_t i = 0; i < tr.pre.size(); ++i)
      p[i] = bt * pt[i] + bh * ph[i] + bw * pw[i];
  }
  tr.o1 = cfg.activation == Activation::ReLU ? relu(tr.pre) : tr.pre;
  tr.y = concat_channels(split.part2, tr.o1);
  return tr;
}

template <typename T>
struct MvfGrad {
  VideoTensor<T> d_x;
  MvfWeights<T> d_weights;
  // Populated only when cfg.learnable_beta is set.
  T d_beta_t = T(0), d_beta_h = T(0), d_beta_w = T(0);
};

template <typename T>
MvfGrad<T> mvf_backward(const MvfTrace<T>& tr, const MvfConfig& cfg,
                        const MvfWeights<T>& w, const VideoTensor<T>& d_y) {
  if (!d_y.same_shape(tr.y)) throw ShapeError("mvf_backward: d_y shape mismatch");
  const std::size_t c1 = tr.x1.c();
  const std::size_t c2 = d_y.c() - c1;
  // d_y splits into the pass-through part (first c2 channels) and d_o1.
  VideoTensor<T> d_o1(d_y.n(), c1, d_y.t(), d_y.h(), d_y.w());
  MvfGrad<T> g;
  g.d_x = VideoTensor<T>(d_y.n(), c1 + c2, d_y.t(), d_y.h(), d_y.w());
  const std::size_t vol = d_y.frame_volume();
  for (std::size_t n = 0; n < d_y.n(); ++n) {
    for (std::size_t c = 0; c < c2; ++c)
      std::copy_n(d_y.channel(n, c), vol, g.d_x.channel(n, c1 + c));
    for (std::size_t c = 0; c < c1; ++c)
      std::copy_n(d_y.channel(n, c2 + c), vol, d_o1.channel(n, c));
  }
  // Activation derivative.
  VideoTensor<T> d_pre = cfg.activation == Activation::ReLU
                             ? relu_backward(tr.pre, d_o1)
                             : d_o1;
  if (cfg.learnable_beta) {
    g.d_beta_t = detail::dot(d_pre.size(), d_pre.data(), tr.o_t.data());
    g.d_beta_h = detail::dot(d_pre.size(), d_pre.data(), tr.o_h.data());
    g.d_beta_w = detail::dot(d_pre.size(), d_pre.data(), tr.o_w.data());
  }
  g.d_weights = MvfWeights<T>(c1);
  const struct {
    Axis axis;
    T beta;
    const ChannelwiseKernel<T>* k;
    ChannelwiseKernel<T>* dk;
  } views[3] = {
      {Axis::Temporal, static_cast<T>(cfg.beta_t), &w.k_t, &g.d_weights.k_t},
      {Axis::Height, static_cast<T>(cfg.beta_h), &w.k_h, &g.d_weights.k_h},
      {Axis::Width, static_cast<T>(cfg.beta_w), &w.k_w, &g.d_weights.k_w},
  };
  for (const auto& v : views) {
    VideoTensor<T> d_view = scale(d_pre, v.beta);
    ConvGrad<T> cg = conv1d_channelwise_backward(tr.x1, *v.k, v.axis, d_view);
    *v.dk = std::move(cg.d_weights);
    for (std::size_t n = 0; n < d_y.n(); ++n)
      for (std::size_t c = 0; c < c1; ++c)
        detail::axpy(vol, T(1), cg.d_input.channel(n, c), g.d_x.channel(n, c));
  }
  return g;
}

/// I.i.d. zero-mean Gaussian taps, reproducible from the seed.
template <typename T>
MvfWeights<T> init_gaussian(std::size_t channels, double stddev,
                            std::uint64_t seed) {
  if (stddev <= 0.0) throw DomainError("init_gaussian: std must be positive");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> dist(0.0, stddev);
  MvfWeights<T> w(channels);
  for (auto* k : {&w.k_t, &w.k_h, &w.k_w})
    for (auto& tap : k->taps) tap = static_cast<T>(dist(rng));
  return w;
}

/// Reference temporal shift: the first fraction*c/2 channels move one step
/// forward in time (out[t] = in[t-1]), the next group one step backward,
/// the rest are copied.  Zero fill at clip boundaries.
template <typename T>
VideoTensor<T> tsm_shift(const VideoTensor<T>& x, double fraction) {
  if (fraction < 0.0 || fraction > 1.0)
    throw DomainError("tsm_shift: fraction outside [0,1]");
  const std::size_t shifted = split_count(fraction, x.c());
  if (shifted % 2 != 0)
    throw DomainError("tsm_shift: fraction*c must round to an even count");
  const std::size_t fwd = shifted / 2;
  VideoTensor<T> out = zeros_like(x);
  const std::size_t plane = x.plane();
  for (std::size_t n = 0; n < x.n(); ++n)
    for (std::size_t c = 0; c < x.c(); ++c) {
      const T* src = x.channel(n, c);
      T* dst = out.channel(n, c);
      if (c < fwd) {
        for (std::size_t t = 1; t < x.t(); ++t)
          std::copy_n(src + (t - 1) * plane, plane, dst + t * plane);
      } else if (c < shifted) {
        for (std::size_t t = 0; t + 1 < x.t(); ++t)
          std::copy_n(src + (t + 1) * plane, plane, dst + t * plane);
      } else {
        std::copy_n(src, x.frame_volume(), dst);
      }
    }
  return out;
}

/// Temporal kernels realizing tsm_shift as a channel-wise convolution.
/// Forward shift (out[t] = in[t-1]) is tap vector [1,0,0] in this
/// library's cross-correlation convention; backward shift is [0,0,1].
/// Spatial kernels are set to identity (intended for beta_h = beta_w = 0).
template <typename T>
MvfWeights<T> as_fixed_shift_weights(std::size_t channels, double fraction) {
  const std::size_t shifted = split_count(fraction, channels);
  if (shifted > 0 && channels < 2)
    throw DomainError("as_fixed_shift_weights: need >= 2 channels");
  if (shifted % 2 != 0)
    throw DomainError("as_fixed_shift_weights: fraction*c must be even");
  MvfWeights<T> w(channels);
  w.k_t.set_all(T(0), T(1), T(0));
  w.k_h.set_all(T(0), T(1), T(0));
  w.k_w.set_all(T(0), T(1), T(0));
  const std::size_t fwd = shifted / 2;
  for (std::size_t c = 0; c < fwd; ++c) {
    w.k_t.tap(c, -1) = T(1);
    w.k_t.tap(c, 0) = T(0);
  }
  for (std::size_t c = fwd; c < shifted; ++c) {
    w.k_t.tap(c, +1) = T(1);
    w.k_t.tap(c, 0) = T(0);
  }
  return w;
}

}  // namespace mvf
