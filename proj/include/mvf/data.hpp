#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "mvf/tensor.hpp"

namespace mvf {

enum class TaskKind { DirectionLR, DirectionUD, TemporalOrder, FullEight };

/// Procedural motion-classification clips: a bright square translating at
/// constant velocity, with its intensity ramping up over time.  Reversed
/// classes are the frame-reversed clips of their partner class, so motion
/// direction and ramp sign together identify the class while any
/// frame-permutation-invariant model is blind inside a pair.
struct SyntheticTask {
  TaskKind kind = TaskKind::FullEight;
  std::size_t resolution = 32;
  std::size_t frames = 8;
  std::size_t min_size = 4, max_size = 8;
  std::size_t min_speed = 1, max_speed = 3;
  double noise_std = 0.05;

  std::size_t num_classes() const {
    switch (kind) {
      case TaskKind::DirectionLR: return 2;
      case TaskKind::DirectionUD: return 2;
      case TaskKind::TemporalOrder: return 2;
      case TaskKind::FullEight: return 8;
    }
    return 0;
  }
};

inline const char* task_kind_name(TaskKind k) {
  switch (k) {
    case TaskKind::DirectionLR: return "direction_lr";
    case TaskKind::DirectionUD: return "direction_ud";
    case TaskKind::TemporalOrder: return "temporal_order";
    case TaskKind::FullEight: return "full_eight";
  }
  return "?";
}

namespace detail {

// dx, dy per direction index: 0=left, 1=right, 2=up, 3=down.
inline void direction_vector(std::size_t dir, int& dx, int& dy) {
  static const int vx[4] = {-1, 1, 0, 0};
  static const int vy[4] = {0, 0, -1, 1};
  dx = vx[dir];
  dy = vy[dir];
}

}  // namespace detail

/// FullEight class layout: class = 2*direction + reversed_flag.
inline std::size_t partner_class(std::size_t class_id) { return class_id ^ 1u; }

template <typename T>
std::pair<VideoTensor<T>, std::size_t> gen_clip(const SyntheticTask& task,
                                                std::size_t class_id,
                                                std::mt19937_64& rng) {
  if (class_id >= task.num_classes())
    throw DomainError("gen_clip: class id out of range");
  std::size_t dir = 0;
  bool reversed = false;
  switch (task.kind) {
    case TaskKind::DirectionLR: dir = class_id; break;          // left, right
    case TaskKind::DirectionUD: dir = 2 + class_id; break;      // up, down
    case TaskKind::TemporalOrder:
      dir = 1;                                                  // right
      reversed = class_id == 1;
      break;
    case TaskKind::FullEight:
      dir = class_id / 2;
      reversed = (class_id & 1u) != 0;
      break;
  }
  const std::size_t res = task.resolution;
  const std::size_t tf = task.frames;
  std::uniform_int_distribution<std::size_t> size_dist(task.min_size,
                                                       task.max_size);
  std::uniform_int_distribution<std::size_t> speed_dist(task.min_speed,
                                                        task.max_speed);
  const std::size_t side = size_dist(rng);
  const std::size_t speed = speed_dist(rng);
  const std::size_t travel = speed * (tf - 1);
  if (side + travel >= res)
    throw DomainError("gen_clip: square cannot stay inside the frame");
  int dx, dy;
  detail::direction_vector(dir, dx, dy);
  const auto start_range = [&](int d) -> std::pair<std::size_t, std::size_t> {
    if (d > 0) return {0, res - side - travel};
    if (d < 0) return {travel, res - side};
    return {0, res - side};
  };
  const auto [x_lo, x_hi] = start_range(dx);
  const auto [y_lo, y_hi] = start_range(dy);
  const std::size_t x0 = std::uniform_int_distribution<std::size_t>(x_lo, x_hi)(rng);
  const std::size_t y0 = std::uniform_int_distribution<std::size_t>(y_lo, y_hi)(rng);
  std::uniform_real_distribution<double> lo_dist(0.3, 0.5), hi_dist(0.8, 1.0);
  const double a0 = lo_dist(rng);
  const double a1 = hi_dist(rng);

  VideoTensor<T> clip(1, 1, tf, res, res);
  for (std::size_t f = 0; f < tf; ++f) {
    const double level =
        a0 + (a1 - a0) * static_cast<double>(f) /
                 static_cast<double>(tf > 1 ? tf - 1 : 1);
    const std::size_t px = static_cast<std::size_t>(
        static_cast<long>(x0) + dx * static_cast<long>(speed * f));
    const std::size_t py = static_cast<std::size_t>(
        static_cast<long>(y0) + dy * static_cast<long>(speed * f));
    for (std::size_t y = py; y < py + side; ++y)
      for (std::size_t x = px; x < px + side; ++x)
        clip.at(0, 0, f, y, x) = static_cast<T>(level);
  }
  if (task.noise_std > 0.0) {
    std::normal_distribution<double> noise(0.0, task.noise_std);
    T* p = clip.data();
    for (std::size_t i = 0; i < clip.size(); ++i)
      p[i] += static_cast<T>(noise(rng));
  }
  // Reversal after noise: a reversed clip is exactly reverse_frames of the
  // partner clip drawn from the same stream.
  if (reversed) clip = reverse_frames(clip);
  return {std::move(clip), class_id};
}

template <typename T>
struct Dataset {
  std::vector<VideoTensor<T>> clips;
  std::vector<std::size_t> labels;
  std::size_t size() const { return clips.size(); }
};

/// Balanced dataset; clip i uses its own rng stream derived from
/// (seed, i) so generation order never matters.
template <typename T>
Dataset<T> make_dataset(const SyntheticTask& task, std::size_t count,
                        std::uint64_t seed) {
  Dataset<T> ds;
  const std::size_t k = task.num_classes();
  for (std::size_t i = 0; i < count; ++i) {
    std::mt19937_64 rng(seed * 0x9E3779B97F4A7C15ULL + i);
    auto [clip, label] = gen_clip<T>(task, i % k, rng);
    ds.clips.push_back(std::move(clip));
    ds.labels.push_back(label);
  }
  return ds;
}

}  // namespace mvf
