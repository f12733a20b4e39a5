#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace mvf {

struct ShapeError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct DomainError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

namespace detail {

// Allocator that skips value-initialization on resize; used for tensors
// whose every element is written before being read.
template <typename T>
struct uninit_alloc : std::allocator<T> {
  template <typename U>
  struct rebind {
    using other = uninit_alloc<U>;
  };
  template <typename U>
  void construct(U* p) noexcept {
    ::new (static_cast<void*>(p)) U;
  }
  template <typename U, typename... Args>
  void construct(U* p, Args&&... args) {
    ::new (static_cast<void*>(p)) U(std::forward<Args>(args)...);
  }
};

}  // namespace detail

/// Tag requesting storage without the zero fill.
struct Uninit {};

/// Dense 5-D video feature tensor, row-major in (n, c, t, h, w) order.
/// Values are immutable by convention once an op has produced them; ops
/// return fresh tensors.
template <typename T>
class VideoTensor {
 public:
  VideoTensor() : dims_{0, 0, 0, 0, 0} {}

  VideoTensor(std::size_t n, std::size_t c, std::size_t t, std::size_t h,
              std::size_t w, T fill = T(0))
      : dims_{n, c, t, h, w} {
    data_.resize(n * c * t * h * w);
    std::fill(data_.begin(), data_.end(), fill);
  }

  VideoTensor(std::size_t n, std::size_t c, std::size_t t, std::size_t h,
              std::size_t w, Uninit)
      : dims_{n, c, t, h, w} {
    data_.resize(n * c * t * h * w);
  }

  std::size_t n() const { return dims_[0]; }
  std::size_t c() const { return dims_[1]; }
  std::size_t t() const { return dims_[2]; }
  std::size_t h() const { return dims_[3]; }
  std::size_t w() const { return dims_[4]; }
  const std::array<std::size_t, 5>& dims() const { return dims_; }
  std::size_t size() const { return data_.size(); }

  T* data() { return data_.data(); }
  const T* data() const { return data_.data(); }

  T& at(std::size_t n, std::size_t c, std::size_t t, std::size_t h,
        std::size_t w) {
    return data_[index(n, c, t, h, w)];
  }
  T at(std::size_t n, std::size_t c, std::size_t t, std::size_t h,
       std::size_t w) const {
    return data_[index(n, c, t, h, w)];
  }

  std::size_t index(std::size_t n, std::size_t c, std::size_t t, std::size_t h,
                    std::size_t w) const {
    return (((n * dims_[1] + c) * dims_[2] + t) * dims_[3] + h) * dims_[4] + w;
  }

  // Pointer to the start of one (n, c) volume of t*h*w values.
  T* channel(std::size_t n, std::size_t c) {
    return data_.data() + (n * dims_[1] + c) * frame_volume();
  }
  const T* channel(std::size_t n, std::size_t c) const {
    return data_.data() + (n * dims_[1] + c) * frame_volume();
  }

  std::size_t frame_volume() const { return dims_[2] * dims_[3] * dims_[4]; }
  std::size_t plane() const { return dims_[3] * dims_[4]; }

  bool same_shape(const VideoTensor& o) const { return dims_ == o.dims_; }

  std::string shape_str() const {
    std::string s = "(";
    for (int i = 0; i < 5; ++i)
      s += std::to_string(dims_[i]) + (i < 4 ? "," : ")");
    return s;
  }

 private:
  std::array<std::size_t, 5> dims_;
  std::vector<T, detail::uninit_alloc<T>> data_;
};

template <typename T>
VideoTensor<T> zeros_like(const VideoTensor<T>& x) {
  return VideoTensor<T>(x.n(), x.c(), x.t(), x.h(), x.w());
}

/// Channel count of the multi-view split: round(alpha*c), ties up.
inline std::size_t split_count(double alpha, std::size_t c) {
  if (alpha < 0.0 || alpha > 1.0)
    throw DomainError("alpha must lie in [0,1], got " + std::to_string(alpha));
  return static_cast<std::size_t>(std::floor(alpha * static_cast<double>(c) + 0.5));
}

template <typename T>
struct ChannelSplit {
  VideoTensor<T> part1;  // first round(alpha*c) channels
  VideoTensor<T> part2;  // the rest
};

template <typename T>
ChannelSplit<T> split_channels(const VideoTensor<T>& x, double alpha) {
  const std::size_t c1 = split_count(alpha, x.c());
  const std::size_t c2 = x.c() - c1;
  ChannelSplit<T> out{VideoTensor<T>(x.n(), c1, x.t(), x.h(), x.w()),
                      VideoTensor<T>(x.n(), c2, x.t(), x.h(), x.w())};
  const std::size_t vol = x.frame_volume();
  for (std::size_t n = 0; n < x.n(); ++n) {
    for (std::size_t c = 0; c < c1; ++c)
      std::copy_n(x.channel(n, c), vol, out.part1.channel(n, c));
    for (std::size_t c = 0; c < c2; ++c)
      std::copy_n(x.channel(n, c1 + c), vol, out.part2.channel(n, c));
  }
  return out;
}

template <typename T>
VideoTensor<T> concat_channels(const VideoTensor<T>& a, const VideoTensor<T>& b) {
  if (a.n() != b.n() || a.t() != b.t() || a.h() != b.h() || a.w() != b.w())
    throw ShapeError("concat_channels: non-channel dims differ, " +
                     a.shape_str() + " vs " + b.shape_str());
  VideoTensor<T> out(a.n(), a.c() + b.c(), a.t(), a.h(), a.w());
  const std::size_t vol = a.frame_volume();
  for (std::size_t n = 0; n < a.n(); ++n) {
    for (std::size_t c = 0; c < a.c(); ++c)
      std::copy_n(a.channel(n, c), vol, out.channel(n, c));
    for (std::size_t c = 0; c < b.c(); ++c)
      std::copy_n(b.channel(n, c), vol, out.channel(n, a.c() + c));
  }
  return out;
}

template <typename T>
VideoTensor<T> elementwise_add(const VideoTensor<T>& a, const VideoTensor<T>& b) {
  if (!a.same_shape(b))
    throw ShapeError("elementwise_add: shape mismatch, " + a.shape_str() +
                     " vs " + b.shape_str());
  VideoTensor<T> out = a;
  T* o = out.data();
  const T* p = b.data();
#pragma omp simd
  for (std::size_t i = 0; i < out.size(); ++i) o[i] += p[i];
  return out;
}

template <typename T>
VideoTensor<T> scale(const VideoTensor<T>& a, T s) {
  VideoTensor<T> out = a;
  T* o = out.data();
#pragma omp simd
  for (std::size_t i = 0; i < out.size(); ++i) o[i] *= s;
  return out;
}

template <typename T>
VideoTensor<T> relu(const VideoTensor<T>& a) {
  VideoTensor<T> out(a.n(), a.c(), a.t(), a.h(), a.w(), Uninit{});
  T* o = out.data();
  const T* p = a.data();
#pragma omp simd
  for (std::size_t i = 0; i < out.size(); ++i) o[i] = p[i] > T(0) ? p[i] : T(0);
  return out;
}

template <typename T>
VideoTensor<T> random_normal(std::size_t n, std::size_t c, std::size_t t,
                             std::size_t h, std::size_t w, T stddev,
                             std::mt19937_64& rng) {
  VideoTensor<T> out(n, c, t, h, w);
  std::normal_distribution<double> dist(0.0, static_cast<double>(stddev));
  T* o = out.data();
  for (std::size_t i = 0; i < out.size(); ++i) o[i] = static_cast<T>(dist(rng));
  return out;
}

template <typename T>
VideoTensor<T> reverse_frames(const VideoTensor<T>& x) {
  VideoTensor<T> out(x.n(), x.c(), x.t(), x.h(), x.w(), Uninit{});
  const std::size_t plane = x.plane();
  for (std::size_t n = 0; n < x.n(); ++n)
    for (std::size_t c = 0; c < x.c(); ++c) {
      const T* src = x.channel(n, c);
      T* dst = out.channel(n, c);
      for (std::size_t t = 0; t < x.t(); ++t)
        std::copy_n(src + t * plane, plane, dst + (x.t() - 1 - t) * plane);
    }
  return out;
}

template <typename T>
T max_abs_diff(const VideoTensor<T>& a, const VideoTensor<T>& b) {
  if (!a.same_shape(b))
    throw ShapeError("max_abs_diff: shape mismatch");
  T m = T(0);
  for (std::size_t i = 0; i < a.size(); ++i)
    m = std::max(m, std::abs(a.data()[i] - b.data()[i]));
  return m;
}

}  // namespace mvf
