#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <numeric>
#include <vector>

#include "mvf/tensor.hpp"

namespace mvf {

enum class Axis { Temporal, Height, Width };

inline const char* axis_name(Axis a) {
  switch (a) {
    case Axis::Temporal: return "T";
    case Axis::Height: return "H";
    case Axis::Width: return "W";
  }
  return "?";
}

/// Per-channel 3-tap kernel; taps indexed [-1, 0, +1] stored as
/// taps[c*3 + (i+1)].
template <typename T>
struct ChannelwiseKernel {
  std::size_t channels = 0;
  std::vector<T> taps;

  ChannelwiseKernel() = default;
  explicit ChannelwiseKernel(std::size_t c) : channels(c), taps(c * 3, T(0)) {}

  T tap(std::size_t c, int i) const { return taps[c * 3 + (i + 1)]; }
  T& tap(std::size_t c, int i) { return taps[c * 3 + (i + 1)]; }

  void set_all(T m1, T z, T p1) {
    for (std::size_t c = 0; c < channels; ++c) {
      tap(c, -1) = m1;
      tap(c, 0) = z;
      tap(c, +1) = p1;
    }
  }
};

template <typename T>
inline ChannelwiseKernel<T> identity_kernel(std::size_t channels) {
  ChannelwiseKernel<T> k(channels);
  k.set_all(T(0), T(1), T(0));
  return k;
}

namespace detail {

// y[0..len) += a * x[0..len)
template <typename T>
inline void axpy(std::size_t len, T a, const T* x, T* y) {
#pragma omp simd
  for (std::size_t i = 0; i < len; ++i) y[i] += a * x[i];
}

template <typename T>
inline T dot(std::size_t len, const T* x, const T* y) {
  T s = T(0);
#pragma omp simd reduction(+ : s)
  for (std::size_t i = 0; i < len; ++i) s += x[i] * y[i];
  return s;
}

// Position-chunk size keeping per-channel working sets L1-resident.
inline constexpr std::size_t kChunk = 2048;

// Adds tap * shift(src, i) into dst for one (t,h,w) volume, zero padding
// outside the axis range.  i is the tap offset: dst[p] += tap * src[p+i].
template <typename T>
inline void add_shifted(Axis axis, int i, T tap, const T* src, T* dst,
                        std::size_t t, std::size_t h, std::size_t w) {
  if (tap == T(0)) return;
  const std::size_t plane = h * w;
  const std::size_t ai = static_cast<std::size_t>(i < 0 ? -i : i);
  switch (axis) {
    case Axis::Temporal: {
      if (ai >= t) return;
      const std::size_t span = (t - ai) * plane;
      if (i >= 0)
        axpy(span, tap, src + ai * plane, dst);
      else
        axpy(span, tap, src, dst + ai * plane);
      break;
    }
    case Axis::Height: {
      if (ai >= h) return;
      const std::size_t span = (h - ai) * w;
      for (std::size_t f = 0; f < t; ++f) {
        const T* s = src + f * plane;
        T* d = dst + f * plane;
        if (i >= 0)
          axpy(span, tap, s + ai * w, d);
        else
          axpy(span, tap, s, d + ai * w);
      }
      break;
    }
    case Axis::Width: {
      if (ai >= w) return;
      const std::size_t span = w - ai;
      for (std::size_t r = 0; r < t * h; ++r) {
        const T* s = src + r * w;
        T* d = dst + r * w;
        if (i >= 0)
          axpy(span, tap, s + ai, d);
        else
          axpy(span, tap, s, d + ai);
      }
      break;
    }
  }
}

// Sum over positions of a[p] * b[p+i] with zero padding along the axis.
template <typename T>
inline T dot_shifted(Axis axis, int i, const T* a, const T* b, std::size_t t,
                     std::size_t h, std::size_t w) {
  const std::size_t plane = h * w;
  const std::size_t ai = static_cast<std::size_t>(i < 0 ? -i : i);
  T s = T(0);
  switch (axis) {
    case Axis::Temporal: {
      if (ai >= t) return T(0);
      const std::size_t span = (t - ai) * plane;
      s = (i >= 0) ? dot(span, a, b + ai * plane) : dot(span, a + ai * plane, b);
      break;
    }
    case Axis::Height: {
      if (ai >= h) return T(0);
      const std::size_t span = (h - ai) * w;
      for (std::size_t f = 0; f < t; ++f) {
        const T* pa = a + f * plane;
        const T* pb = b + f * plane;
        s += (i >= 0) ? dot(span, pa, pb + ai * w) : dot(span, pa + ai * w, pb);
      }
      break;
    }
    case Axis::Width: {
      if (ai >= w) return T(0);
      const std::size_t span = w - ai;
      for (std::size_t r = 0; r < t * h; ++r) {
        const T* pa = a + r * w;
        const T* pb = b + r * w;
        s += (i >= 0) ? dot(span, pa, pb + ai) : dot(span, pa + ai, pb);
      }
      break;
    }
  }
  return s;
}

}  // namespace detail

/// Channel-wise 3-tap cross-correlation along one axis, stride 1, zero
/// padded so the output shape equals the input shape:
///   out[c,p] = sum_i k[c,i] * x[c,p+i]
template <typename T>
VideoTensor<T> conv1d_channelwise(const VideoTensor<T>& x,
                                  const ChannelwiseKernel<T>& k, Axis axis) {
  if (k.channels != x.c())
    throw ShapeError("conv1d_channelwise: kernel has " +
                     std::to_string(k.channels) + " channels, tensor has " +
                     std::to_string(x.c()));
  VideoTensor<T> out = zeros_like(x);
  for (std::size_t n = 0; n < x.n(); ++n)
    for (std::size_t c = 0; c < x.c(); ++c)
      for (int i = -1; i <= 1; ++i)
        detail::add_shifted(axis, i, k.tap(c, i), x.channel(n, c),
                            out.channel(n, c), x.t(), x.h(), x.w());
  return out;
}

template <typename T>
struct ConvGrad {
  VideoTensor<T> d_input;
  ChannelwiseKernel<T> d_weights;
};

/// Reverse mode of conv1d_channelwise:
///   d_input[c,p]   = sum_i k[c,i] * d_out[c,p-i]
///   d_weights[c,i] = sum_p d_out[c,p] * x[c,p+i]
template <typename T>
ConvGrad<T> conv1d_channelwise_backward(const VideoTensor<T>& x,
                                        const ChannelwiseKernel<T>& k,
                                        Axis axis,
                                        const VideoTensor<T>& d_out) {
  if (k.channels != x.c() || !x.same_shape(d_out))
    throw ShapeError("conv1d_channelwise_backward: shape mismatch");
  ConvGrad<T> g{zeros_like(x), ChannelwiseKernel<T>(x.c())};
  for (std::size_t n = 0; n < x.n(); ++n)
    for (std::size_t c = 0; c < x.c(); ++c) {
      const T* xc = x.channel(n, c);
      const T* dc = d_out.channel(n, c);
      T* gx = g.d_input.channel(n, c);
      for (int i = -1; i <= 1; ++i) {
        detail::add_shifted(axis, -i, k.tap(c, i), dc, gx, x.t(), x.h(), x.w());
        g.d_weights.tap(c, i) +=
            detail::dot_shifted(axis, i, dc, xc, x.t(), x.h(), x.w());
      }
    }
  return g;
}

// ---------------------------------------------------------------------------
// Pointwise (1x1) convolution: per-frame channel mixing.
// Weights are row-major c_out x c_in; bias optional (empty = none).

template <typename T>
VideoTensor<T> conv_pointwise(const VideoTensor<T>& x, std::size_t c_out,
                              const std::vector<T>& w,
                              const std::vector<T>& bias = {}) {
  const std::size_t c_in = x.c();
  if (w.size() != c_out * c_in)
    throw ShapeError("conv_pointwise: weight size mismatch");
  if (!bias.empty() && bias.size() != c_out)
    throw ShapeError("conv_pointwise: bias size mismatch");
  VideoTensor<T> out(x.n(), c_out, x.t(), x.h(), x.w(), Uninit{});
  const std::size_t vol = x.frame_volume();
  // Chunk positions so each channel's slice stays cache-resident across
  // the full c_out x c_in mixing.
  for (std::size_t n = 0; n < x.n(); ++n)
    for (std::size_t p0 = 0; p0 < vol; p0 += detail::kChunk) {
      const std::size_t len = std::min(detail::kChunk, vol - p0);
      for (std::size_t co = 0; co < c_out; ++co) {
        T* o = out.channel(n, co) + p0;
        const T b = bias.empty() ? T(0) : bias[co];
        if (c_in == 0) {
          std::fill(o, o + len, b);
          continue;
        }
        const T w0 = w[co * c_in];
        const T* x0 = x.channel(n, 0) + p0;
#pragma omp simd
        for (std::size_t i = 0; i < len; ++i) o[i] = b + w0 * x0[i];
        for (std::size_t ci = 1; ci < c_in; ++ci)
          detail::axpy(len, w[co * c_in + ci], x.channel(n, ci) + p0, o);
      }
    }
  return out;
}

template <typename T>
struct PointwiseGrad {
  VideoTensor<T> d_input;
  std::vector<T> d_weights;
  std::vector<T> d_bias;
};

template <typename T>
PointwiseGrad<T> conv_pointwise_backward(const VideoTensor<T>& x,
                                         std::size_t c_out,
                                         const std::vector<T>& w,
                                         const VideoTensor<T>& d_out,
                                         bool has_bias = false) {
  const std::size_t c_in = x.c();
  if (d_out.c() != c_out || d_out.n() != x.n() || d_out.t() != x.t() ||
      d_out.h() != x.h() || d_out.w() != x.w())
    throw ShapeError("conv_pointwise_backward: shape mismatch");
  PointwiseGrad<T> g{zeros_like(x), std::vector<T>(c_out * c_in, T(0)),
                     std::vector<T>(has_bias ? c_out : 0, T(0))};
  const std::size_t vol = x.frame_volume();
  for (std::size_t n = 0; n < x.n(); ++n)
    for (std::size_t p0 = 0; p0 < vol; p0 += detail::kChunk) {
      const std::size_t len = std::min(detail::kChunk, vol - p0);
      for (std::size_t co = 0; co < c_out; ++co) {
        const T* dy = d_out.channel(n, co) + p0;
        for (std::size_t ci = 0; ci < c_in; ++ci) {
          detail::axpy(len, w[co * c_in + ci], dy,
                       g.d_input.channel(n, ci) + p0);
          g.d_weights[co * c_in + ci] +=
              detail::dot(len, dy, x.channel(n, ci) + p0);
        }
        if (has_bias)
          g.d_bias[co] += std::accumulate(dy, dy + len, T(0));
      }
    }
  return g;
}

// ---------------------------------------------------------------------------
// 3x3 spatial convolution applied independently per frame, zero padding 1,
// stride 1 or 2.  Weights row-major c_out x c_in x 3 x 3, no bias.

inline std::size_t conv2d_out_dim(std::size_t in, std::size_t stride) {
  return (in + 2 - 3) / stride + 1;
}

template <typename T>
VideoTensor<T> conv2d_spatial(const VideoTensor<T>& x, std::size_t c_out,
                              const std::vector<T>& w, std::size_t stride) {
  const std::size_t c_in = x.c();
  if (w.size() != c_out * c_in * 9)
    throw ShapeError("conv2d_spatial: weight size mismatch");
  if (stride != 1 && stride != 2)
    throw DomainError("conv2d_spatial: stride must be 1 or 2");
  const std::size_t ho = conv2d_out_dim(x.h(), stride);
  const std::size_t wo = conv2d_out_dim(x.w(), stride);
  VideoTensor<T> out(x.n(), c_out, x.t(), ho, wo);
  const std::size_t plane_in = x.plane();
  const std::size_t plane_out = ho * wo;
  for (std::size_t n = 0; n < x.n(); ++n)
    for (std::size_t f = 0; f < x.t(); ++f)
      for (std::size_t co = 0; co < c_out; ++co) {
        T* o = out.channel(n, co) + f * plane_out;
        for (std::size_t ci = 0; ci < c_in; ++ci) {
          const T* in = x.channel(n, ci) + f * plane_in;
          const T* wk = w.data() + (co * c_in + ci) * 9;
          for (std::size_t oy = 0; oy < ho; ++oy) {
            T* orow = o + oy * wo;
            for (std::size_t ky = 0; ky < 3; ++ky) {
              const long iy = static_cast<long>(oy * stride + ky) - 1;
              if (iy < 0 || iy >= static_cast<long>(x.h())) continue;
              const T* irow = in + static_cast<std::size_t>(iy) * x.w();
              const T w0 = wk[ky * 3], w1 = wk[ky * 3 + 1], w2 = wk[ky * 3 + 2];
              if (stride == 1) {
                // One stencil pass per input row; the edge taps fall
                // outside the padding and are handled separately.
                orow[0] += w1 * irow[0] + (x.w() > 1 ? w2 * irow[1] : T(0));
#pragma omp simd
                for (std::size_t ox = 1; ox < wo - 1; ++ox)
                  orow[ox] += w0 * irow[ox - 1] + w1 * irow[ox] +
                              w2 * irow[ox + 1];
                if (wo > 1)
                  orow[wo - 1] += w0 * irow[wo - 2] + w1 * irow[wo - 1];
              } else {
                orow[0] += w1 * irow[0] + (x.w() > 1 ? w2 * irow[1] : T(0));
#pragma omp simd
                for (std::size_t ox = 1; ox < wo; ++ox) {
                  const std::size_t ix = 2 * ox;
                  orow[ox] += w0 * irow[ix - 1] + w1 * irow[ix] +
                              (ix + 1 < x.w() ? w2 * irow[ix + 1] : T(0));
                }
              }
            }
          }
        }
      }
  return out;
}

template <typename T>
struct Conv2dGrad {
  VideoTensor<T> d_input;
  std::vector<T> d_weights;
};

template <typename T>
Conv2dGrad<T> conv2d_spatial_backward(const VideoTensor<T>& x,
                                      std::size_t c_out,
                                      const std::vector<T>& w,
                                      std::size_t stride,
                                      const VideoTensor<T>& d_out) {
  const std::size_t c_in = x.c();
  const std::size_t ho = conv2d_out_dim(x.h(), stride);
  const std::size_t wo = conv2d_out_dim(x.w(), stride);
  if (d_out.c() != c_out || d_out.h() != ho || d_out.w() != wo ||
      d_out.n() != x.n() || d_out.t() != x.t())
    throw ShapeError("conv2d_spatial_backward: shape mismatch");
  Conv2dGrad<T> g{zeros_like(x), std::vector<T>(w.size(), T(0))};
  const std::size_t plane_in = x.plane();
  const std::size_t plane_out = ho * wo;
  for (std::size_t n = 0; n < x.n(); ++n)
    for (std::size_t f = 0; f < x.t(); ++f)
      for (std::size_t co = 0; co < c_out; ++co) {
        const T* dy = d_out.channel(n, co) + f * plane_out;
        for (std::size_t ci = 0; ci < c_in; ++ci) {
          const T* in = x.channel(n, ci) + f * plane_in;
          T* gx = g.d_input.channel(n, ci) + f * plane_in;
          T* gw = g.d_weights.data() + (co * c_in + ci) * 9;
          const T* wk = w.data() + (co * c_in + ci) * 9;
          for (std::size_t oy = 0; oy < ho; ++oy) {
            const T* drow = dy + oy * wo;
            for (std::size_t ky = 0; ky < 3; ++ky) {
              const long iy = static_cast<long>(oy * stride + ky) - 1;
              if (iy < 0 || iy >= static_cast<long>(x.h())) continue;
              const T* irow = in + static_cast<std::size_t>(iy) * x.w();
              T* grow = gx + static_cast<std::size_t>(iy) * x.w();
              const T w0 = wk[ky * 3], w1 = wk[ky * 3 + 1], w2 = wk[ky * 3 + 2];
              T s0 = T(0), s1 = T(0), s2 = T(0);
              if (stride == 1) {
                grow[0] += w1 * drow[0] + (wo > 1 ? w0 * drow[1] : T(0));
                s1 += drow[0] * irow[0];
                if (x.w() > 1) s2 += drow[0] * irow[1];
#pragma omp simd reduction(+ : s0, s1, s2)
                for (std::size_t ox = 1; ox < wo - 1; ++ox) {
                  const T d = drow[ox];
                  grow[ox] += w0 * drow[ox + 1] + w1 * d + w2 * drow[ox - 1];
                  s0 += d * irow[ox - 1];
                  s1 += d * irow[ox];
                  s2 += d * irow[ox + 1];
                }
                if (wo > 1) {
                  const T d = drow[wo - 1];
                  grow[wo - 1] += w1 * d + w2 * drow[wo - 2];
                  s0 += d * irow[wo - 2];
                  s1 += d * irow[wo - 1];
                }
              } else {
                grow[0] += w1 * drow[0];
                s1 += drow[0] * irow[0];
                if (x.w() > 1) {
                  grow[1] += w2 * drow[0];
                  s2 += drow[0] * irow[1];
                }
#pragma omp simd reduction(+ : s0, s1, s2)
                for (std::size_t ox = 1; ox < wo; ++ox) {
                  const std::size_t ix = 2 * ox;
                  const T d = drow[ox];
                  grow[ix - 1] += w0 * d;
                  grow[ix] += w1 * d;
                  s0 += d * irow[ix - 1];
                  s1 += d * irow[ix];
                  if (ix + 1 < x.w()) {
                    grow[ix + 1] += w2 * d;
                    s2 += d * irow[ix + 1];
                  }
                }
              }
              gw[ky * 3] += s0;
              gw[ky * 3 + 1] += s1;
              gw[ky * 3 + 2] += s2;
            }
          }
        }
      }
  return g;
}

// ---------------------------------------------------------------------------
// Per-channel batch normalization over (n,t,h,w).

enum class NormMode { Train, Eval };

template <typename T>
struct BatchNormState {
  std::vector<T> gamma, beta;
  std::vector<T> running_mean, running_var;
  T momentum = T(0.1);
  T eps = T(1e-5);

  explicit BatchNormState(std::size_t c = 0)
      : gamma(c, T(1)), beta(c, T(0)), running_mean(c, T(0)),
        running_var(c, T(1)) {}
  std::size_t channels() const { return gamma.size(); }
};

template <typename T>
struct BatchNormCache {
  std::vector<T> mean, inv_std;
  VideoTensor<T> x_hat;
};

template <typename T>
VideoTensor<T> norm_affine(const VideoTensor<T>& x, BatchNormState<T>& st,
                           NormMode mode, BatchNormCache<T>* cache = nullptr) {
  if (st.channels() != x.c())
    throw ShapeError("norm_affine: channel mismatch");
  const std::size_t C = x.c();
  const std::size_t vol = x.frame_volume();
  const std::size_t m = x.n() * vol;  // elements per channel
  std::vector<T> mean(C), var(C);
  if (mode == NormMode::Train) {
    for (std::size_t c = 0; c < C; ++c) {
      T s = T(0), ss = T(0);
      for (std::size_t n = 0; n < x.n(); ++n) {
        const T* p = x.channel(n, c);
#pragma omp simd reduction(+ : s, ss)
        for (std::size_t i = 0; i < vol; ++i) {
          s += p[i];
          ss += p[i] * p[i];
        }
      }
      mean[c] = s / static_cast<T>(m);
      var[c] = std::max(ss / static_cast<T>(m) - mean[c] * mean[c], T(0));
      st.running_mean[c] =
          (T(1) - st.momentum) * st.running_mean[c] + st.momentum * mean[c];
      st.running_var[c] =
          (T(1) - st.momentum) * st.running_var[c] + st.momentum * var[c];
    }
  } else {
    mean = st.running_mean;
    var = st.running_var;
  }
  VideoTensor<T> out(x.n(), x.c(), x.t(), x.h(), x.w(), Uninit{});
  if (cache) {
    cache->mean = mean;
    cache->inv_std.resize(C);
    cache->x_hat =
        VideoTensor<T>(x.n(), x.c(), x.t(), x.h(), x.w(), Uninit{});
  }
  for (std::size_t c = 0; c < C; ++c) {
    const T inv = T(1) / std::sqrt(var[c] + st.eps);
    if (cache) cache->inv_std[c] = inv;
    const T a = st.gamma[c] * inv;
    const T b = st.beta[c] - a * mean[c];
    const T mu = mean[c];
    for (std::size_t n = 0; n < x.n(); ++n) {
      const T* p = x.channel(n, c);
      T* o = out.channel(n, c);
      if (cache) {
        T* xh = cache->x_hat.channel(n, c);
#pragma omp simd
        for (std::size_t i = 0; i < vol; ++i) {
          xh[i] = (p[i] - mu) * inv;
          o[i] = a * p[i] + b;
        }
      } else {
#pragma omp simd
        for (std::size_t i = 0; i < vol; ++i) o[i] = a * p[i] + b;
      }
    }
  }
  return out;
}

template <typename T>
struct BatchNormGrad {
  VideoTensor<T> d_input;
  std::vector<T> d_gamma, d_beta;
};

// Training-mode backward (batch statistics participate in the gradient).
template <typename T>
BatchNormGrad<T> norm_affine_backward(const BatchNormState<T>& st,
                                      const BatchNormCache<T>& cache,
                                      const VideoTensor<T>& d_out) {
  const std::size_t C = d_out.c();
  const std::size_t vol = d_out.frame_volume();
  const T m = static_cast<T>(d_out.n() * vol);
  BatchNormGrad<T> g{
      VideoTensor<T>(d_out.n(), d_out.c(), d_out.t(), d_out.h(), d_out.w(),
                     Uninit{}),
      std::vector<T>(C, T(0)), std::vector<T>(C, T(0))};
  for (std::size_t c = 0; c < C; ++c) {
    T sum_dy = T(0), sum_dy_xh = T(0);
    for (std::size_t n = 0; n < d_out.n(); ++n) {
      const T* dy = d_out.channel(n, c);
      const T* xh = cache.x_hat.channel(n, c);
#pragma omp simd reduction(+ : sum_dy, sum_dy_xh)
      for (std::size_t i = 0; i < vol; ++i) {
        sum_dy += dy[i];
        sum_dy_xh += dy[i] * xh[i];
      }
    }
    g.d_gamma[c] = sum_dy_xh;
    g.d_beta[c] = sum_dy;
    const T k = st.gamma[c] * cache.inv_std[c] / m;
    for (std::size_t n = 0; n < d_out.n(); ++n) {
      const T* dy = d_out.channel(n, c);
      const T* xh = cache.x_hat.channel(n, c);
      T* gx = g.d_input.channel(n, c);
#pragma omp simd
      for (std::size_t i = 0; i < vol; ++i)
        gx[i] = k * (m * dy[i] - sum_dy - xh[i] * sum_dy_xh);
    }
  }
  return g;
}

// Eval-mode backward: pure affine per element.
template <typename T>
BatchNormGrad<T> norm_affine_backward_eval(const BatchNormState<T>& st,
                                           const BatchNormCache<T>& cache,
                                           const VideoTensor<T>& d_out) {
  const std::size_t C = d_out.c();
  const std::size_t vol = d_out.frame_volume();
  BatchNormGrad<T> g{zeros_like(d_out), std::vector<T>(C, T(0)),
                     std::vector<T>(C, T(0))};
  for (std::size_t c = 0; c < C; ++c) {
    for (std::size_t n = 0; n < d_out.n(); ++n) {
      const T* dy = d_out.channel(n, c);
      const T* xh = cache.x_hat.channel(n, c);
      T* gx = g.d_input.channel(n, c);
      for (std::size_t i = 0; i < vol; ++i) {
        g.d_gamma[c] += dy[i] * xh[i];
        g.d_beta[c] += dy[i];
        gx[i] = dy[i] * st.gamma[c] * cache.inv_std[c];
      }
    }
  }
  return g;
}

// ---------------------------------------------------------------------------
// Global average pool over (t,h,w), returned as an (n,c,1,1,1) tensor.
//
// The temporal reduction sorts the per-frame partial sums before adding
// them, so the result is bitwise invariant under any permutation of the
// input frames.

template <typename T>
VideoTensor<T> global_avg_pool(const VideoTensor<T>& x) {
  VideoTensor<T> out(x.n(), x.c(), 1, 1, 1);
  const std::size_t plane = x.plane();
  std::vector<T> frame_sums(x.t());
  for (std::size_t n = 0; n < x.n(); ++n)
    for (std::size_t c = 0; c < x.c(); ++c) {
      const T* p = x.channel(n, c);
      for (std::size_t f = 0; f < x.t(); ++f) {
        T s = T(0);
        for (std::size_t i = 0; i < plane; ++i) s += p[f * plane + i];
        frame_sums[f] = s;
      }
      std::sort(frame_sums.begin(), frame_sums.end());
      T total = T(0);
      for (T s : frame_sums) total += s;
      out.at(n, c, 0, 0, 0) = total / static_cast<T>(x.t() * plane);
    }
  return out;
}

template <typename T>
VideoTensor<T> global_avg_pool_backward(const VideoTensor<T>& x_shape_ref,
                                        const VideoTensor<T>& d_out) {
  VideoTensor<T> g = zeros_like(x_shape_ref);
  const std::size_t vol = x_shape_ref.frame_volume();
  for (std::size_t n = 0; n < g.n(); ++n)
    for (std::size_t c = 0; c < g.c(); ++c) {
      const T v = d_out.at(n, c, 0, 0, 0) / static_cast<T>(vol);
      T* p = g.channel(n, c);
      for (std::size_t i = 0; i < vol; ++i) p[i] = v;
    }
  return g;
}

// ---------------------------------------------------------------------------
// Fully connected head on (n,c,1,1,1) features.

template <typename T>
VideoTensor<T> linear(const VideoTensor<T>& feats, std::size_t out_dim,
                      const std::vector<T>& w, const std::vector<T>& bias) {
  const std::size_t in_dim = feats.c();
  if (w.size() != out_dim * in_dim || bias.size() != out_dim)
    throw ShapeError("linear: weight/bias size mismatch");
  VideoTensor<T> out(feats.n(), out_dim, 1, 1, 1);
  for (std::size_t n = 0; n < feats.n(); ++n)
    for (std::size_t o = 0; o < out_dim; ++o) {
      T s = bias[o];
      for (std::size_t i = 0; i < in_dim; ++i)
        s += w[o * in_dim + i] * feats.at(n, i, 0, 0, 0);
      out.at(n, o, 0, 0, 0) = s;
    }
  return out;
}

template <typename T>
struct LinearGrad {
  VideoTensor<T> d_input;
  std::vector<T> d_weights, d_bias;
};

template <typename T>
LinearGrad<T> linear_backward(const VideoTensor<T>& feats, std::size_t out_dim,
                              const std::vector<T>& w,
                              const VideoTensor<T>& d_out) {
  const std::size_t in_dim = feats.c();
  LinearGrad<T> g{zeros_like(feats), std::vector<T>(out_dim * in_dim, T(0)),
                  std::vector<T>(out_dim, T(0))};
  for (std::size_t n = 0; n < feats.n(); ++n)
    for (std::size_t o = 0; o < out_dim; ++o) {
      const T dy = d_out.at(n, o, 0, 0, 0);
      g.d_bias[o] += dy;
      for (std::size_t i = 0; i < in_dim; ++i) {
        g.d_weights[o * in_dim + i] += dy * feats.at(n, i, 0, 0, 0);
        g.d_input.at(n, i, 0, 0, 0) += dy * w[o * in_dim + i];
      }
    }
  return g;
}

// ---------------------------------------------------------------------------
// Softmax cross-entropy; returns mean loss over the batch and d_logits.

template <typename T>
std::vector<T> softmax_row(const T* logits, std::size_t k) {
  T mx = logits[0];
  for (std::size_t i = 1; i < k; ++i) mx = std::max(mx, logits[i]);
  std::vector<T> p(k);
  T z = T(0);
  for (std::size_t i = 0; i < k; ++i) {
    p[i] = std::exp(logits[i] - mx);
    z += p[i];
  }
  for (std::size_t i = 0; i < k; ++i) p[i] /= z;
  return p;
}

template <typename T>
struct XentResult {
  T loss;
  VideoTensor<T> d_logits;
};

template <typename T>
XentResult<T> softmax_xent(const VideoTensor<T>& logits,
                           const std::vector<std::size_t>& labels) {
  const std::size_t k = logits.c();
  if (labels.size() != logits.n())
    throw ShapeError("softmax_xent: batch/label count mismatch");
  XentResult<T> r{T(0), zeros_like(logits)};
  for (std::size_t n = 0; n < logits.n(); ++n) {
    if (labels[n] >= k)
      throw DomainError("softmax_xent: label out of range");
    std::vector<T> row(k);
    for (std::size_t i = 0; i < k; ++i) row[i] = logits.at(n, i, 0, 0, 0);
    const std::vector<T> p = softmax_row(row.data(), k);
    r.loss -= std::log(std::max(p[labels[n]], std::numeric_limits<T>::min()));
    for (std::size_t i = 0; i < k; ++i)
      r.d_logits.at(n, i, 0, 0, 0) =
          (p[i] - (i == labels[n] ? T(1) : T(0))) / static_cast<T>(logits.n());
  }
  r.loss /= static_cast<T>(logits.n());
  return r;
}

template <typename T>
VideoTensor<T> relu_backward(const VideoTensor<T>& x,
                             const VideoTensor<T>& d_out) {
  if (!x.same_shape(d_out)) throw ShapeError("relu_backward: shape mismatch");
  VideoTensor<T> g(x.n(), x.c(), x.t(), x.h(), x.w(), Uninit{});
  T* go = g.data();
  const T* p = x.data();
  const T* d = d_out.data();
#pragma omp simd
  for (std::size_t i = 0; i < x.size(); ++i)
    go[i] = p[i] > T(0) ? d[i] : T(0);
  return g;
}

}  // namespace mvf
