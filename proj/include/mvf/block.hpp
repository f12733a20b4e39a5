#pragma once

#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "mvf/module.hpp"
#include "mvf/ops.hpp"
#include "mvf/tensor.hpp"

namespace mvf {

/// Named handle to one trainable parameter vector and its gradient
/// accumulator.  `decay` marks participation in weight decay (conv/fc
/// weights yes, norm affine and biases no).
template <typename T>
struct ParamRef {
  std::string name;
  std::vector<T>* value;
  std::vector<T>* grad;
  bool decay;
};

/// Non-trainable state that still belongs in a checkpoint (running stats).
template <typename T>
struct BufferRef {
  std::string name;
  std::vector<T>* value;
};

template <typename T>
struct ParamLists {
  std::vector<ParamRef<T>> params;
  std::vector<BufferRef<T>> buffers;
};

namespace detail {

template <typename T>
VideoTensor<T> spatial_subsample(const VideoTensor<T>& x, std::size_t stride) {
  if (stride == 1) return x;
  const std::size_t ho = conv2d_out_dim(x.h(), stride);
  const std::size_t wo = conv2d_out_dim(x.w(), stride);
  VideoTensor<T> out(x.n(), x.c(), x.t(), ho, wo);
  for (std::size_t n = 0; n < x.n(); ++n)
    for (std::size_t c = 0; c < x.c(); ++c)
      for (std::size_t f = 0; f < x.t(); ++f)
        for (std::size_t y = 0; y < ho; ++y)
          for (std::size_t xx = 0; xx < wo; ++xx)
            out.at(n, c, f, y, xx) = x.at(n, c, f, y * stride, xx * stride);
  return out;
}

template <typename T>
VideoTensor<T> spatial_subsample_backward(const std::array<std::size_t, 5>& in_dims,
                                          std::size_t stride,
                                          const VideoTensor<T>& d_out) {
  if (stride == 1) return d_out;
  VideoTensor<T> g(in_dims[0], in_dims[1], in_dims[2], in_dims[3], in_dims[4]);
  for (std::size_t n = 0; n < g.n(); ++n)
    for (std::size_t c = 0; c < g.c(); ++c)
      for (std::size_t f = 0; f < g.t(); ++f)
        for (std::size_t y = 0; y < d_out.h(); ++y)
          for (std::size_t xx = 0; xx < d_out.w(); ++xx)
            g.at(n, c, f, y * stride, xx * stride) = d_out.at(n, c, f, y, xx);
  return g;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Layers.  Each caches what its backward needs when `store` is set and
// accumulates weight gradients in place; zero_grad() is driven by the
// optimizer through the registry.

template <typename T>
struct Conv1x1Layer {
  std::size_t c_in = 0, c_out = 0;
  std::size_t stride = 1;  // realized as spatial subsampling before the 1x1
  std::vector<T> w, dw;
  VideoTensor<T> cached_in;  // post-subsample input
  std::array<std::size_t, 5> in_dims{};

  Conv1x1Layer() = default;
  Conv1x1Layer(std::size_t ci, std::size_t co, std::size_t s = 1)
      : c_in(ci), c_out(co), stride(s), w(co * ci, T(0)), dw(co * ci, T(0)) {}

  VideoTensor<T> forward(const VideoTensor<T>& x, bool store) {
    VideoTensor<T> in = detail::spatial_subsample(x, stride);
    VideoTensor<T> y = conv_pointwise(in, c_out, w);
    if (store) {
      in_dims = x.dims();
      cached_in = std::move(in);
    }
    return y;
  }

  VideoTensor<T> backward(const VideoTensor<T>& d_out) {
    PointwiseGrad<T> g = conv_pointwise_backward(cached_in, c_out, w, d_out);
    for (std::size_t i = 0; i < dw.size(); ++i) dw[i] += g.d_weights[i];
    return detail::spatial_subsample_backward(in_dims, stride, g.d_input);
  }

  void collect(ParamLists<T>& out, const std::string& prefix) {
    out.params.push_back({prefix + ".w", &w, &dw, true});
  }
};

template <typename T>
struct Conv3x3Layer {
  std::size_t c_in = 0, c_out = 0, stride = 1;
  std::vector<T> w, dw;
  VideoTensor<T> cached_in;

  Conv3x3Layer() = default;
  Conv3x3Layer(std::size_t ci, std::size_t co, std::size_t s)
      : c_in(ci), c_out(co), stride(s), w(co * ci * 9, T(0)),
        dw(co * ci * 9, T(0)) {}

  VideoTensor<T> forward(const VideoTensor<T>& x, bool store) {
    if (store) cached_in = x;
    return conv2d_spatial(x, c_out, w, stride);
  }

  VideoTensor<T> backward(const VideoTensor<T>& d_out) {
    Conv2dGrad<T> g =
        conv2d_spatial_backward(cached_in, c_out, w, stride, d_out);
    for (std::size_t i = 0; i < dw.size(); ++i) dw[i] += g.d_weights[i];
    return std::move(g.d_input);
  }

  void collect(ParamLists<T>& out, const std::string& prefix) {
    out.params.push_back({prefix + ".w", &w, &dw, true});
  }
};

template <typename T>
struct BatchNormLayer {
  BatchNormState<T> st;
  std::vector<T> d_gamma, d_beta;
  BatchNormCache<T> cache;
  NormMode last_mode = NormMode::Train;

  BatchNormLayer() = default;
  explicit BatchNormLayer(std::size_t c)
      : st(c), d_gamma(c, T(0)), d_beta(c, T(0)) {}

  VideoTensor<T> forward(const VideoTensor<T>& x, NormMode mode, bool store) {
    last_mode = mode;
    return norm_affine(x, st, mode, store ? &cache : nullptr);
  }

  VideoTensor<T> backward(const VideoTensor<T>& d_out) {
    BatchNormGrad<T> g = last_mode == NormMode::Train
                             ? norm_affine_backward(st, cache, d_out)
                             : norm_affine_backward_eval(st, cache, d_out);
    for (std::size_t c = 0; c < d_gamma.size(); ++c) {
      d_gamma[c] += g.d_gamma[c];
      d_beta[c] += g.d_beta[c];
    }
    return std::move(g.d_input);
  }

  void collect(ParamLists<T>& out, const std::string& prefix) {
    out.params.push_back({prefix + ".gamma", &st.gamma, &d_gamma, false});
    out.params.push_back({prefix + ".beta", &st.beta, &d_beta, false});
    out.buffers.push_back({prefix + ".running_mean", &st.running_mean});
    out.buffers.push_back({prefix + ".running_var", &st.running_var});
  }
};

template <typename T>
struct MvfLayer {
  MvfConfig cfg;
  MvfWeights<T> w;
  MvfWeights<T> dw;
  std::vector<T> betas, d_betas;  // (beta_t, beta_h, beta_w), trainable if set
  MvfTrace<T> trace;

  MvfLayer() = default;
  MvfLayer(const MvfConfig& c, std::size_t channels)
      : cfg(c), w(split_count(c.alpha, channels)),
        dw(split_count(c.alpha, channels)),
        betas({static_cast<T>(c.beta_t), static_cast<T>(c.beta_h),
               static_cast<T>(c.beta_w)}),
        d_betas(3, T(0)) {}

  VideoTensor<T> forward(const VideoTensor<T>& x, bool store) {
    MvfConfig c = effective_cfg();
    MvfTrace<T> tr = mvf_forward(x, c, w);
    VideoTensor<T> y = tr.y;
    if (store) trace = std::move(tr);
    return y;
  }

  VideoTensor<T> backward(const VideoTensor<T>& d_out) {
    MvfGrad<T> g = mvf_backward(trace, effective_cfg(), w, d_out);
    accumulate(dw.k_t, g.d_weights.k_t);
    accumulate(dw.k_h, g.d_weights.k_h);
    accumulate(dw.k_w, g.d_weights.k_w);
    if (cfg.learnable_beta) {
      d_betas[0] += g.d_beta_t;
      d_betas[1] += g.d_beta_h;
      d_betas[2] += g.d_beta_w;
    }
    return std::move(g.d_x);
  }

  void collect(ParamLists<T>& out, const std::string& prefix) {
    out.params.push_back({prefix + ".k_t", &w.k_t.taps, &dw.k_t.taps, false});
    out.params.push_back({prefix + ".k_h", &w.k_h.taps, &dw.k_h.taps, false});
    out.params.push_back({prefix + ".k_w", &w.k_w.taps, &dw.k_w.taps, false});
    if (cfg.learnable_beta)
      out.params.push_back({prefix + ".betas", &betas, &d_betas, false});
  }

 private:
  MvfConfig effective_cfg() const {
    MvfConfig c = cfg;
    c.beta_t = static_cast<double>(betas[0]);
    c.beta_h = static_cast<double>(betas[1]);
    c.beta_w = static_cast<double>(betas[2]);
    return c;
  }

  static void accumulate(ChannelwiseKernel<T>& acc,
                         const ChannelwiseKernel<T>& g) {
    for (std::size_t i = 0; i < acc.taps.size(); ++i) acc.taps[i] += g.taps[i];
  }
};

/// Bottleneck residual block with an optional MVF module in front:
///   m = mvf(x)                        (identity when absent)
///   h = relu(bn1(conv1x1_reduce(m)))
///   h = relu(bn2(conv3x3(h)))         (spatial stride lives here)
///   h = bn3(conv1x1_expand(h))
///   s = bn_ds(conv1x1_ds(m))          (projection when shapes change)
///   y = relu(h + s)
template <typename T>
struct BottleneckBlock {
  std::size_t c_in = 0, c_mid = 0, c_out = 0, stride = 1;
  std::optional<MvfLayer<T>> mvf;
  Conv1x1Layer<T> conv1;
  BatchNormLayer<T> bn1;
  Conv3x3Layer<T> conv2;
  BatchNormLayer<T> bn2;
  Conv1x1Layer<T> conv3;
  BatchNormLayer<T> bn3;
  std::optional<Conv1x1Layer<T>> ds_conv;
  std::optional<BatchNormLayer<T>> ds_bn;

  // backward caches
  VideoTensor<T> cached_m, cached_a1, cached_a2, cached_sum;

  BottleneckBlock() = default;
  BottleneckBlock(std::size_t ci, std::size_t cm, std::size_t co,
                  std::size_t s, const std::optional<MvfConfig>& mvf_cfg)
      : c_in(ci), c_mid(cm), c_out(co), stride(s),
        conv1(ci, cm), bn1(cm), conv2(cm, cm, s), bn2(cm), conv3(cm, co),
        bn3(co) {
    if (mvf_cfg) mvf.emplace(*mvf_cfg, ci);
    if (ci != co || s != 1) {
      ds_conv.emplace(ci, co, s);
      ds_bn.emplace(co);
    }
  }

  VideoTensor<T> forward(const VideoTensor<T>& x, NormMode mode, bool store) {
    VideoTensor<T> m = mvf ? mvf->forward(x, store) : x;
    VideoTensor<T> h = bn1.forward(conv1.forward(m, store), mode, store);
    h = relu(h);
    if (store) cached_a1 = h;
    h = bn2.forward(conv2.forward(h, store), mode, store);
    h = relu(h);
    if (store) cached_a2 = h;
    h = bn3.forward(conv3.forward(h, store), mode, store);
    VideoTensor<T> s = ds_conv
                           ? ds_bn->forward(ds_conv->forward(m, store), mode, store)
                           : m;
    VideoTensor<T> sum = elementwise_add(h, s);
    if (store) {
      cached_m = std::move(m);
      cached_sum = sum;
    }
    return relu(sum);
  }

  VideoTensor<T> backward(const VideoTensor<T>& d_out) {
    VideoTensor<T> d_sum = relu_backward(cached_sum, d_out);
    // main path
    VideoTensor<T> d = bn3.backward(d_sum);
    d = conv3.backward(d);
    d = relu_backward(cached_a2, d);
    d = bn2.backward(d);
    d = conv2.backward(d);
    d = relu_backward(cached_a1, d);
    d = bn1.backward(d);
    VideoTensor<T> d_m = conv1.backward(d);
    // shortcut
    if (ds_conv) {
      VideoTensor<T> d_s = ds_bn->backward(d_sum);
      d_s = ds_conv->backward(d_s);
      d_m = elementwise_add(d_m, d_s);
    } else {
      d_m = elementwise_add(d_m, d_sum);
    }
    return mvf ? mvf->backward(d_m) : d_m;
  }

  void collect(ParamLists<T>& out, const std::string& prefix) {
    if (mvf) mvf->collect(out, prefix + ".mvf");
    conv1.collect(out, prefix + ".conv1");
    bn1.collect(out, prefix + ".bn1");
    conv2.collect(out, prefix + ".conv2");
    bn2.collect(out, prefix + ".bn2");
    conv3.collect(out, prefix + ".conv3");
    bn3.collect(out, prefix + ".bn3");
    if (ds_conv) {
      ds_conv->collect(out, prefix + ".ds_conv");
      ds_bn->collect(out, prefix + ".ds_bn");
    }
  }
};

}  // namespace mvf
