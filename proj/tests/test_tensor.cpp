#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "mvf/tensor.hpp"

using namespace mvf;

namespace {

VideoTensor<double> rand_tensor(std::size_t n, std::size_t c, std::size_t t,
                                std::size_t h, std::size_t w,
                                std::mt19937_64& rng) {
  return random_normal<double>(n, c, t, h, w, 1.0, rng);
}

}  // namespace

TEST_CASE("tensor layout and indexing") {
  VideoTensor<double> x(2, 3, 4, 5, 6);
  REQUIRE(x.size() == 2u * 3 * 4 * 5 * 6);
  REQUIRE(x.frame_volume() == 4u * 5 * 6);
  REQUIRE(x.plane() == 30u);
  x.at(1, 2, 3, 4, 5) = 7.0;
  // row-major (n,c,t,h,w)
  REQUIRE(x.data()[x.index(1, 2, 3, 4, 5)] == 7.0);
  REQUIRE(x.index(0, 0, 0, 0, 1) == 1u);
  REQUIRE(x.index(0, 0, 0, 1, 0) == 6u);
  REQUIRE(x.index(0, 0, 1, 0, 0) == 30u);
  REQUIRE(x.index(0, 1, 0, 0, 0) == 120u);
  REQUIRE(x.channel(1, 2) == x.data() + (1 * 3 + 2) * x.frame_volume());
}

TEST_CASE("split_count rounding: half rounds up") {
  REQUIRE(split_count(0.5, 8) == 4u);
  REQUIRE(split_count(0.0, 8) == 0u);
  REQUIRE(split_count(1.0, 8) == 8u);
  REQUIRE(split_count(1.0 / 8.0, 1024) == 128u);
  REQUIRE(split_count(0.5, 7) == 4u);   // 3.5 -> 4, ties up
  REQUIRE(split_count(0.25, 6) == 2u);  // 1.5 -> 2
  REQUIRE_THROWS_AS(split_count(-0.1, 8), DomainError);
  REQUIRE_THROWS_AS(split_count(1.1, 8), DomainError);
}

TEST_CASE("split_channels partitions the channel axis") {
  std::mt19937_64 rng(1);
  VideoTensor<double> x = rand_tensor(2, 8, 3, 4, 4, rng);

  SECTION("alpha=0.5 gives 4+4") {
    ChannelSplit<double> s = split_channels(x, 0.5);
    REQUIRE(s.part1.c() == 4u);
    REQUIRE(s.part2.c() == 4u);
    for (std::size_t n = 0; n < 2; ++n)
      for (std::size_t c = 0; c < 4; ++c) {
        REQUIRE(std::equal(x.channel(n, c), x.channel(n, c) + x.frame_volume(),
                           s.part1.channel(n, c)));
        REQUIRE(std::equal(x.channel(n, 4 + c),
                           x.channel(n, 4 + c) + x.frame_volume(),
                           s.part2.channel(n, c)));
      }
  }

  SECTION("alpha=0 degenerates to (empty, x)") {
    ChannelSplit<double> s = split_channels(x, 0.0);
    REQUIRE(s.part1.c() == 0u);
    REQUIRE(s.part2.c() == 8u);
    REQUIRE(max_abs_diff(s.part2, x) == 0.0);
  }
}

TEST_CASE("concat_channels bookkeeping") {
  std::mt19937_64 rng(2);
  VideoTensor<double> a = rand_tensor(1, 4, 2, 3, 3, rng);
  VideoTensor<double> b = rand_tensor(1, 2, 2, 3, 3, rng);
  VideoTensor<double> y = concat_channels(a, b);
  REQUIRE(y.c() == 6u);
  // result channel 4 equals b channel 0
  REQUIRE(std::equal(b.channel(0, 0), b.channel(0, 0) + b.frame_volume(),
                     y.channel(0, 4)));
  VideoTensor<double> bad(1, 2, 3, 3, 3);
  REQUIRE_THROWS_AS(concat_channels(a, bad), ShapeError);
}

TEST_CASE("split then concat in original order is the identity") {
  std::mt19937_64 rng(3);
  for (double alpha : {0.0, 0.25, 0.5, 0.75, 1.0}) {
    VideoTensor<double> x = rand_tensor(2, 8, 3, 4, 5, rng);
    ChannelSplit<double> s = split_channels(x, alpha);
    VideoTensor<double> back = concat_channels(s.part1, s.part2);
    REQUIRE(max_abs_diff(back, x) == 0.0);
  }
}

TEST_CASE("elementwise ops") {
  std::mt19937_64 rng(4);
  VideoTensor<double> a = rand_tensor(2, 3, 2, 4, 4, rng);
  VideoTensor<double> b = rand_tensor(2, 3, 2, 4, 4, rng);

  SECTION("add with zeros is the identity") {
    REQUIRE(max_abs_diff(elementwise_add(a, zeros_like(a)), a) == 0.0);
  }

  SECTION("relu clamps negatives") {
    VideoTensor<double> x(1, 1, 1, 1, 3);
    x.at(0, 0, 0, 0, 0) = -1.0;
    x.at(0, 0, 0, 0, 1) = 0.0;
    x.at(0, 0, 0, 0, 2) = 2.0;
    VideoTensor<double> y = relu(x);
    REQUIRE(y.at(0, 0, 0, 0, 0) == 0.0);
    REQUIRE(y.at(0, 0, 0, 0, 1) == 0.0);
    REQUIRE(y.at(0, 0, 0, 0, 2) == 2.0);
  }

  SECTION("scale distributes over add") {
    VideoTensor<double> lhs = scale(elementwise_add(a, b), 2.0);
    VideoTensor<double> rhs = elementwise_add(scale(a, 2.0), scale(b, 2.0));
    REQUIRE(max_abs_diff(lhs, rhs) < 1e-12);
  }

  SECTION("shape mismatch throws") {
    VideoTensor<double> c(2, 3, 2, 4, 5);
    REQUIRE_THROWS_AS(elementwise_add(a, c), ShapeError);
  }
}

TEST_CASE("reverse_frames is an involution and reverses the t axis") {
  std::mt19937_64 rng(5);
  VideoTensor<double> x = rand_tensor(1, 2, 4, 3, 3, rng);
  VideoTensor<double> r = reverse_frames(x);
  for (std::size_t t = 0; t < 4; ++t)
    REQUIRE(r.at(0, 1, t, 2, 1) == x.at(0, 1, 3 - t, 2, 1));
  REQUIRE(max_abs_diff(reverse_frames(r), x) == 0.0);
}

TEST_CASE("random_normal is deterministic per seed") {
  std::mt19937_64 a(9), b(9), c(10);
  VideoTensor<double> x = rand_tensor(1, 2, 2, 3, 3, a);
  VideoTensor<double> y = rand_tensor(1, 2, 2, 3, 3, b);
  VideoTensor<double> z = rand_tensor(1, 2, 2, 3, 3, c);
  REQUIRE(max_abs_diff(x, y) == 0.0);
  REQUIRE(max_abs_diff(x, z) > 0.0);
}
