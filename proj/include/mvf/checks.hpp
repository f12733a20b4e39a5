#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "mvf/gradcheck.hpp"
#include "mvf/module.hpp"
#include "mvf/net.hpp"
#include "mvf/ops.hpp"

namespace mvf {

// Verification entry points shared by the CLI, the unit tests and the
// acceptance suite.  All run in double precision.

struct CheckLine {
  std::string name;
  double max_rel_err;
};

namespace detail {

inline VideoTensor<double> rand_tensor(std::size_t n, std::size_t c,
                                       std::size_t t, std::size_t h,
                                       std::size_t w, std::mt19937_64& rng,
                                       double stddev = 1.0) {
  return random_normal<double>(n, c, t, h, w, stddev, rng);
}

inline std::vector<double> flatten(
    const std::vector<const std::vector<double>*>& parts) {
  std::vector<double> out;
  for (const auto* p : parts) out.insert(out.end(), p->begin(), p->end());
  return out;
}

inline void tensor_to(const VideoTensor<double>& t, std::vector<double>& v) {
  v.assign(t.data(), t.data() + t.size());
}

}  // namespace detail

/// Gradcheck one channel-wise conv (input and tap gradients jointly).
inline double gradcheck_conv1d(Axis axis, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  const VideoTensor<double> x = detail::rand_tensor(2, 3, 4, 4, 4, rng);
  ChannelwiseKernel<double> k(3);
  for (auto& tap : k.taps) tap = std::normal_distribution<double>()(rng);
  const VideoTensor<double> r = detail::rand_tensor(2, 3, 4, 4, 4, rng);
  ConvGrad<double> g = conv1d_channelwise_backward(x, k, axis, r);
  std::vector<double> point(x.data(), x.data() + x.size());
  point.insert(point.end(), k.taps.begin(), k.taps.end());
  std::vector<double> grad(g.d_input.data(), g.d_input.data() + x.size());
  grad.insert(grad.end(), g.d_weights.taps.begin(), g.d_weights.taps.end());
  auto objective = [&](const std::vector<double>& p) {
    VideoTensor<double> xx = x;
    std::copy_n(p.begin(), x.size(), xx.data());
    ChannelwiseKernel<double> kk = k;
    std::copy_n(p.begin() + x.size(), kk.taps.size(), kk.taps.begin());
    VideoTensor<double> y = conv1d_channelwise(xx, kk, axis);
    return detail::dot(y.size(), y.data(), r.data());
  };
  return finite_diff_gradcheck(objective, point, grad, 1e-6, 400, seed)
      .max_rel_err;
}

inline double gradcheck_pointwise(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  const VideoTensor<double> x = detail::rand_tensor(2, 3, 2, 4, 4, rng);
  const std::size_t c_out = 5;
  std::vector<double> w(c_out * 3);
  for (auto& v : w) v = std::normal_distribution<double>()(rng);
  const VideoTensor<double> r = detail::rand_tensor(2, c_out, 2, 4, 4, rng);
  PointwiseGrad<double> g = conv_pointwise_backward(x, c_out, w, r);
  std::vector<double> point(x.data(), x.data() + x.size());
  point.insert(point.end(), w.begin(), w.end());
  std::vector<double> grad(g.d_input.data(), g.d_input.data() + x.size());
  grad.insert(grad.end(), g.d_weights.begin(), g.d_weights.end());
  auto objective = [&](const std::vector<double>& p) {
    VideoTensor<double> xx = x;
    std::copy_n(p.begin(), x.size(), xx.data());
    std::vector<double> ww(p.begin() + x.size(), p.end());
    VideoTensor<double> y = conv_pointwise(xx, c_out, ww);
    return detail::dot(y.size(), y.data(), r.data());
  };
  return finite_diff_gradcheck(objective, point, grad, 1e-6, 400, seed)
      .max_rel_err;
}

inline double gradcheck_conv2d(std::size_t stride, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  const VideoTensor<double> x = detail::rand_tensor(2, 3, 2, 6, 6, rng);
  const std::size_t c_out = 4;
  std::vector<double> w(c_out * 3 * 9);
  for (auto& v : w) v = std::normal_distribution<double>()(rng);
  const std::size_t ho = conv2d_out_dim(6, stride);
  const VideoTensor<double> r = detail::rand_tensor(2, c_out, 2, ho, ho, rng);
  Conv2dGrad<double> g = conv2d_spatial_backward(x, c_out, w, stride, r);
  std::vector<double> point(x.data(), x.data() + x.size());
  point.insert(point.end(), w.begin(), w.end());
  std::vector<double> grad(g.d_input.data(), g.d_input.data() + x.size());
  grad.insert(grad.end(), g.d_weights.begin(), g.d_weights.end());
  auto objective = [&](const std::vector<double>& p) {
    VideoTensor<double> xx = x;
    std::copy_n(p.begin(), x.size(), xx.data());
    std::vector<double> ww(p.begin() + x.size(), p.end());
    VideoTensor<double> y = conv2d_spatial(xx, c_out, ww, stride);
    return detail::dot(y.size(), y.data(), r.data());
  };
  // The objective is linear in every coordinate, so a larger step loses no
  // truncation accuracy and lifts the difference above rounding noise.
  return finite_diff_gradcheck(objective, point, grad, 1e-5, 400, seed)
      .max_rel_err;
}

inline double gradcheck_batchnorm(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  const VideoTensor<double> x = detail::rand_tensor(3, 4, 2, 3, 3, rng);
  BatchNormState<double> st(4);
  for (auto& v : st.gamma) v = 1.0 + 0.2 * std::normal_distribution<double>()(rng);
  for (auto& v : st.beta) v = 0.1 * std::normal_distribution<double>()(rng);
  const VideoTensor<double> r = detail::rand_tensor(3, 4, 2, 3, 3, rng);
  BatchNormCache<double> cache;
  BatchNormState<double> st_run = st;
  norm_affine(x, st_run, NormMode::Train, &cache);
  BatchNormGrad<double> g = norm_affine_backward(st, cache, r);
  std::vector<double> point(x.data(), x.data() + x.size());
  point.insert(point.end(), st.gamma.begin(), st.gamma.end());
  point.insert(point.end(), st.beta.begin(), st.beta.end());
  std::vector<double> grad(g.d_input.data(), g.d_input.data() + x.size());
  grad.insert(grad.end(), g.d_gamma.begin(), g.d_gamma.end());
  grad.insert(grad.end(), g.d_beta.begin(), g.d_beta.end());
  auto objective = [&](const std::vector<double>& p) {
    VideoTensor<double> xx = x;
    std::copy_n(p.begin(), x.size(), xx.data());
    BatchNormState<double> ss = st;
    std::copy_n(p.begin() + x.size(), 4, ss.gamma.begin());
    std::copy_n(p.begin() + x.size() + 4, 4, ss.beta.begin());
    VideoTensor<double> y = norm_affine(xx, ss, NormMode::Train);
    return detail::dot(y.size(), y.data(), r.data());
  };
  return finite_diff_gradcheck(objective, point, grad, 1e-5, 300, seed)
      .max_rel_err;
}

inline double gradcheck_linear(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  const VideoTensor<double> f = detail::rand_tensor(3, 6, 1, 1, 1, rng);
  const std::size_t out_dim = 4;
  std::vector<double> w(out_dim * 6), b(out_dim);
  for (auto& v : w) v = std::normal_distribution<double>()(rng);
  for (auto& v : b) v = std::normal_distribution<double>()(rng);
  const VideoTensor<double> r = detail::rand_tensor(3, out_dim, 1, 1, 1, rng);
  LinearGrad<double> g = linear_backward(f, out_dim, w, r);
  std::vector<double> point(f.data(), f.data() + f.size());
  point.insert(point.end(), w.begin(), w.end());
  point.insert(point.end(), b.begin(), b.end());
  std::vector<double> grad(g.d_input.data(), g.d_input.data() + f.size());
  grad.insert(grad.end(), g.d_weights.begin(), g.d_weights.end());
  grad.insert(grad.end(), g.d_bias.begin(), g.d_bias.end());
  auto objective = [&](const std::vector<double>& p) {
    VideoTensor<double> ff = f;
    std::copy_n(p.begin(), f.size(), ff.data());
    std::vector<double> ww(p.begin() + f.size(), p.begin() + f.size() + w.size());
    std::vector<double> bb(p.begin() + f.size() + w.size(), p.end());
    VideoTensor<double> y = linear(ff, out_dim, ww, bb);
    return detail::dot(y.size(), y.data(), r.data());
  };
  return finite_diff_gradcheck(objective, point, grad, 1e-6, 200, seed)
      .max_rel_err;
}

inline double gradcheck_gap(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  const VideoTensor<double> x = detail::rand_tensor(2, 3, 3, 4, 4, rng);
  const VideoTensor<double> r = detail::rand_tensor(2, 3, 1, 1, 1, rng);
  VideoTensor<double> g = global_avg_pool_backward(x, r);
  std::vector<double> point(x.data(), x.data() + x.size());
  std::vector<double> grad(g.data(), g.data() + g.size());
  auto objective = [&](const std::vector<double>& p) {
    VideoTensor<double> xx = x;
    std::copy_n(p.begin(), x.size(), xx.data());
    VideoTensor<double> y = global_avg_pool(xx);
    return detail::dot(y.size(), y.data(), r.data());
  };
  return finite_diff_gradcheck(objective, point, grad, 1e-6, 300, seed)
      .max_rel_err;
}

/// ReLU gradcheck with inputs bounded away from the kink.
inline double gradcheck_relu(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  VideoTensor<double> x = detail::rand_tensor(2, 3, 2, 4, 4, rng);
  for (std::size_t i = 0; i < x.size(); ++i) {
    double& v = x.data()[i];
    if (std::abs(v) < 0.1) v = v < 0 ? v - 0.1 : v + 0.1;
  }
  const VideoTensor<double> r = detail::rand_tensor(2, 3, 2, 4, 4, rng);
  VideoTensor<double> g = relu_backward(x, r);
  std::vector<double> point(x.data(), x.data() + x.size());
  std::vector<double> grad(g.data(), g.data() + g.size());
  auto objective = [&](const std::vector<double>& p) {
    VideoTensor<double> xx = x;
    std::copy_n(p.begin(), x.size(), xx.data());
    VideoTensor<double> y = relu(xx);
    return detail::dot(y.size(), y.data(), r.data());
  };
  return finite_diff_gradcheck(objective, point, grad, 1e-6, 300, seed)
      .max_rel_err;
}

inline double gradcheck_softmax_xent(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  const VideoTensor<double> logits = detail::rand_tensor(3, 5, 1, 1, 1, rng);
  const std::vector<std::size_t> labels = {1, 4, 0};
  XentResult<double> xr = softmax_xent(logits, labels);
  std::vector<double> point(logits.data(), logits.data() + logits.size());
  std::vector<double> grad(xr.d_logits.data(),
                           xr.d_logits.data() + logits.size());
  auto objective = [&](const std::vector<double>& p) {
    VideoTensor<double> ll = logits;
    std::copy_n(p.begin(), ll.size(), ll.data());
    return softmax_xent(ll, labels).loss;
  };
  return finite_diff_gradcheck(objective, point, grad, 1e-6, 200, seed)
      .max_rel_err;
}

/// MVF module gradcheck over input, taps and (optionally) betas.
inline double gradcheck_mvf(Activation act, bool learnable_beta,
                            std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  MvfConfig cfg;
  cfg.alpha = 0.5;
  cfg.beta_t = 1.0;
  cfg.beta_h = 0.7;
  cfg.beta_w = 1.3;
  cfg.activation = act;
  cfg.learnable_beta = learnable_beta;
  MvfWeights<double> w = init_gaussian<double>(3, 0.5, seed + 1);
  // Central differences break down if any fused pre-activation sits within
  // the step of a ReLU kink; redraw the input until the point is clear.
  VideoTensor<double> x;
  for (;;) {
    x = detail::rand_tensor(2, 6, 4, 4, 4, rng);
    if (act != Activation::ReLU) break;
    MvfTrace<double> probe = mvf_forward(x, cfg, w);
    double closest = std::numeric_limits<double>::max();
    for (std::size_t i = 0; i < probe.pre.size(); ++i)
      closest = std::min(closest, std::abs(probe.pre.data()[i]));
    if (closest > 1e-4) break;
  }
  const VideoTensor<double> r = detail::rand_tensor(2, 6, 4, 4, 4, rng);
  MvfTrace<double> tr = mvf_forward(x, cfg, w);
  MvfGrad<double> g = mvf_backward(tr, cfg, w, r);
  std::vector<double> point(x.data(), x.data() + x.size());
  for (const auto* k : {&w.k_t, &w.k_h, &w.k_w})
    point.insert(point.end(), k->taps.begin(), k->taps.end());
  std::vector<double> grad(g.d_x.data(), g.d_x.data() + x.size());
  for (const auto* k : {&g.d_weights.k_t, &g.d_weights.k_h, &g.d_weights.k_w})
    grad.insert(grad.end(), k->taps.begin(), k->taps.end());
  if (learnable_beta) {
    point.insert(point.end(), {cfg.beta_t, cfg.beta_h, cfg.beta_w});
    grad.insert(grad.end(), {g.d_beta_t, g.d_beta_h, g.d_beta_w});
  }
  const std::size_t ntaps = w.k_t.taps.size();
  auto objective = [&](const std::vector<double>& p) {
    VideoTensor<double> xx = x;
    std::copy_n(p.begin(), x.size(), xx.data());
    MvfWeights<double> ww = w;
    auto it = p.begin() + x.size();
    for (auto* k : {&ww.k_t, &ww.k_h, &ww.k_w}) {
      std::copy_n(it, ntaps, k->taps.begin());
      it += ntaps;
    }
    MvfConfig cc = cfg;
    if (learnable_beta) {
      cc.beta_t = *it++;
      cc.beta_h = *it++;
      cc.beta_w = *it++;
    }
    MvfTrace<double> t = mvf_forward(xx, cc, ww);
    return detail::dot(t.y.size(), t.y.data(), r.data());
  };
  double gmax = 0.0;
  for (double gv : grad) gmax = std::max(gmax, std::abs(gv));
  return finite_diff_gradcheck(objective, point, grad, 2e-6, 400, seed,
                               1e-4 * gmax)
      .max_rel_err;
}

/// Full bottleneck block (C=8, MVF alpha=1/2) in training mode.
inline double gradcheck_block(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  MvfConfig mc;
  mc.alpha = 0.5;
  BottleneckBlock<double> blk(8, 4, 8, 1, mc);
  for (auto& v : blk.conv1.w) v = std::normal_distribution<double>()(rng) * 0.4;
  for (auto& v : blk.conv2.w) v = std::normal_distribution<double>()(rng) * 0.2;
  for (auto& v : blk.conv3.w) v = std::normal_distribution<double>()(rng) * 0.4;
  blk.mvf->w = init_gaussian<double>(4, 0.3, seed + 7);
  for (auto& v : blk.bn3.st.gamma) v = 0.8;  // nonzero so gradients flow
  const VideoTensor<double> x = detail::rand_tensor(2, 8, 3, 4, 4, rng);
  const VideoTensor<double> r = detail::rand_tensor(2, 8, 3, 4, 4, rng);
  ParamLists<double> pl;
  blk.collect(pl, "blk");
  std::vector<double> point(x.data(), x.data() + x.size());
  for (const auto& p : pl.params)
    point.insert(point.end(), p.value->begin(), p.value->end());
  // Analytic pass.
  for (auto& p : pl.params) std::fill(p.grad->begin(), p.grad->end(), 0.0);
  VideoTensor<double> y = blk.forward(x, NormMode::Train, true);
  VideoTensor<double> d_x = blk.backward(r);
  std::vector<double> grad(d_x.data(), d_x.data() + d_x.size());
  for (const auto& p : pl.params)
    grad.insert(grad.end(), p.grad->begin(), p.grad->end());
  auto objective = [&](const std::vector<double>& p) {
    VideoTensor<double> xx = x;
    std::copy_n(p.begin(), x.size(), xx.data());
    auto it = p.begin() + x.size();
    for (auto& pr : pl.params) {
      std::copy(it, it + static_cast<long>(pr.value->size()), pr.value->begin());
      it += static_cast<long>(pr.value->size());
    }
    VideoTensor<double> out = blk.forward(xx, NormMode::Train, false);
    return detail::dot(out.size(), out.data(), r.data());
  };
  // Same hybrid tolerance as the full-network check: coordinates whose
  // gradient is far below the largest one sit inside the objective's
  // rounding noise, so they are compared against an absolute floor.
  double gmax = 0.0;
  for (double gv : grad) gmax = std::max(gmax, std::abs(gv));
  double err = finite_diff_gradcheck(objective, point, grad, 2e-6, 300, seed,
                                     1e-4 * gmax)
                   .max_rel_err;
  // restore
  auto it = point.begin() + static_cast<long>(x.size());
  for (auto& pr : pl.params) {
    std::copy(it, it + static_cast<long>(pr.value->size()), pr.value->begin());
    it += static_cast<long>(pr.value->size());
  }
  return err;
}

/// End-to-end tiny network loss gradcheck (all parameters + input).
inline double gradcheck_tiny_net(std::uint64_t seed, bool corrupt = false) {
  NetworkSpec spec;
  spec.backbone = "tiny";
  spec.frames = 3;
  spec.mvf.alpha = 0.5;
  spec.mvf_stages = {"res2", "res3"};
  spec.classes = 4;
  spec.input_resolution = 8;
  spec.in_channels = 1;
  // Central differences straddle ReLU kinks, so evaluate at a point where
  // pre-activations stay clear of zero: wide module taps (the 0.01 training
  // default parks the module's ReLU inputs right at the kink) and positive
  // norm shifts.  The analytic side is unchanged by the choice of point.
  spec.mvf_init_std = 0.5;
  Network<double> net(spec, seed);
  ParamLists<double> pl = net.parameters();
  for (auto& p : pl.params) {
    // Nonzero final norm scales so every path carries gradient.
    if (p.name.find("bn3.gamma") != std::string::npos)
      std::fill(p.value->begin(), p.value->end(), 0.7);
    if (p.name.size() > 5 &&
        p.name.compare(p.name.size() - 5, 5, ".beta") == 0 &&
        p.name.find("bn") != std::string::npos)
      std::fill(p.value->begin(), p.value->end(), 1.0);
  }
  std::mt19937_64 rng(seed + 3);
  const VideoTensor<double> x = detail::rand_tensor(2, 1, 3, 8, 8, rng, 1.0);
  const std::vector<std::size_t> labels = {1, 3};
  net.zero_grad();
  VideoTensor<double> logits = net.forward(x, NormMode::Train, true);
  XentResult<double> xr = softmax_xent(logits, labels);
  VideoTensor<double> d_x = net.backward(xr.d_logits);
  std::vector<double> point(x.data(), x.data() + x.size());
  for (const auto& p : pl.params)
    point.insert(point.end(), p.value->begin(), p.value->end());
  std::vector<double> grad(d_x.data(), d_x.data() + d_x.size());
  for (const auto& p : pl.params)
    grad.insert(grad.end(), p.grad->begin(), p.grad->end());
  if (corrupt)  // negative-control hook: a uniform 1% scale error
    for (double& g : grad) g *= 1.01;
  auto objective = [&](const std::vector<double>& p) {
    VideoTensor<double> xx = x;
    std::copy_n(p.begin(), x.size(), xx.data());
    auto it = p.begin() + x.size();
    for (auto& pr : pl.params) {
      std::copy(it, it + static_cast<long>(pr.value->size()), pr.value->begin());
      it += static_cast<long>(pr.value->size());
    }
    VideoTensor<double> out = net.forward(xx, NormMode::Train, false);
    return softmax_xent(out, labels).loss;
  };
  // Wider step than the shallow checks (the loss is O(1), so at 1e-6 the
  // numeric derivative noise floor ~1e-16/eps swamps small coordinates),
  // plus an absolute floor: coordinates whose gradient sits below the
  // objective's evaluation noise cannot be resolved relatively, but a sign
  // or scale bug on them still trips the absolute comparison.
  double gmax = 0.0;
  for (double g : grad) gmax = std::max(gmax, std::abs(g));
  double err = finite_diff_gradcheck(objective, point, grad, 2e-6, 300, seed,
                                     1e-4 * gmax)
                   .max_rel_err;
  auto it = point.begin() + static_cast<long>(x.size());
  for (auto& pr : pl.params) {
    std::copy(it, it + static_cast<long>(pr.value->size()), pr.value->begin());
    it += static_cast<long>(pr.value->size());
  }
  return err;
}

inline std::vector<CheckLine> gradcheck_target(const std::string& target,
                                               std::uint64_t seed,
                                               bool corrupt = false) {
  std::vector<CheckLine> lines;
  if (target == "ops") {
    lines.push_back({"conv1d_t", gradcheck_conv1d(Axis::Temporal, seed)});
    lines.push_back({"conv1d_h", gradcheck_conv1d(Axis::Height, seed + 1)});
    lines.push_back({"conv1d_w", gradcheck_conv1d(Axis::Width, seed + 2)});
    lines.push_back({"pointwise", gradcheck_pointwise(seed + 3)});
    lines.push_back({"conv2d_s1", gradcheck_conv2d(1, seed + 4)});
    lines.push_back({"conv2d_s2", gradcheck_conv2d(2, seed + 5)});
    lines.push_back({"batchnorm", gradcheck_batchnorm(seed + 6)});
    lines.push_back({"linear", gradcheck_linear(seed + 7)});
    lines.push_back({"global_avg_pool", gradcheck_gap(seed + 8)});
    lines.push_back({"relu", gradcheck_relu(seed + 9)});
    lines.push_back({"softmax_xent", gradcheck_softmax_xent(seed + 10)});
  } else if (target == "mvf") {
    lines.push_back({"mvf_relu", gradcheck_mvf(Activation::ReLU, false, seed)});
    lines.push_back(
        {"mvf_identity", gradcheck_mvf(Activation::Identity, false, seed + 1)});
    lines.push_back({"mvf_learnable_beta",
                     gradcheck_mvf(Activation::ReLU, true, seed + 2)});
  } else if (target == "block") {
    lines.push_back({"mvf_block", gradcheck_block(seed)});
  } else if (target == "tiny-net") {
    lines.push_back({"tiny_net", gradcheck_tiny_net(seed, corrupt)});
  } else {
    throw DomainError("unknown gradcheck target '" + target + "'");
  }
  return lines;
}

// ---------------------------------------------------------------------------
// Specialization equivalence oracles.

/// Fixed-shift MVF vs the tsm_shift reference on random tensors; returns
/// the max abs deviation over all trials (exact arithmetic: expect 0).
inline double equiv_tsm(std::size_t trials, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  double worst = 0.0;
  for (std::size_t trial = 0; trial < trials; ++trial) {
    std::uniform_int_distribution<std::size_t> nd(1, 2), cd(1, 2), td(2, 8),
        sd(1, 6);
    const std::size_t c = 8 * cd(rng);  // fraction 1/4 must shift an even count
    VideoTensor<double> x =
        detail::rand_tensor(nd(rng), c, td(rng), sd(rng), sd(rng), rng);
    MvfConfig cfg;
    cfg.alpha = 1.0;
    cfg.beta_t = 1.0;
    cfg.beta_h = 0.0;
    cfg.beta_w = 0.0;
    cfg.activation = Activation::Identity;
    MvfWeights<double> w = as_fixed_shift_weights<double>(c, 0.25);
    MvfTrace<double> tr = mvf_forward(x, cfg, w);
    VideoTensor<double> ref = tsm_shift(x, 0.25);
    worst = std::max(worst, max_abs_diff(tr.y, ref));
  }
  return worst;
}

/// alpha = 0 must be the elementwise identity.
inline double equiv_c2d(std::size_t trials, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  double worst = 0.0;
  for (std::size_t trial = 0; trial < trials; ++trial) {
    VideoTensor<double> x = detail::rand_tensor(2, 5, 3, 4, 4, rng);
    MvfConfig cfg;
    cfg.alpha = 0.0;
    MvfWeights<double> w(0);
    MvfTrace<double> tr = mvf_forward(x, cfg, w);
    worst = std::max(worst, max_abs_diff(tr.y, x));
  }
  return worst;
}

/// alpha = 1, beta_h = beta_w = 0: output must not depend on the spatial
/// kernels at all.
inline double equiv_slowonly(std::size_t trials, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  double worst = 0.0;
  for (std::size_t trial = 0; trial < trials; ++trial) {
    VideoTensor<double> x = detail::rand_tensor(2, 4, 4, 5, 5, rng);
    MvfConfig cfg;
    cfg.alpha = 1.0;
    cfg.beta_h = 0.0;
    cfg.beta_w = 0.0;
    MvfWeights<double> w = init_gaussian<double>(4, 0.5, seed + trial);
    MvfTrace<double> a = mvf_forward(x, cfg, w);
    // Perturb the spatial kernels and re-run.
    for (auto& tap : w.k_h.taps) tap += std::normal_distribution<double>()(rng);
    for (auto& tap : w.k_w.taps) tap += std::normal_distribution<double>()(rng);
    MvfTrace<double> b = mvf_forward(x, cfg, w);
    worst = std::max(worst, max_abs_diff(a.y, b.y));
  }
  return worst;
}

}  // namespace mvf
