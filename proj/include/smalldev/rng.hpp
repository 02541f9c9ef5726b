#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>

namespace smalldev::rng {

// Philox 4x32-10 block cipher (Salmon et al., "Parallel random numbers:
// as easy as 1, 2, 3", SC 2011).  Pure function of (counter, key), which is
// what makes streams addressable by replication index.
struct Philox4x32 {
  static constexpr std::uint32_t kM0 = 0xD2511F53u;
  static constexpr std::uint32_t kM1 = 0xCD9E8D57u;
  static constexpr std::uint32_t kW0 = 0x9E3779B9u;
  static constexpr std::uint32_t kW1 = 0xBB67AE85u;

  static std::array<std::uint32_t, 4> block(std::array<std::uint32_t, 4> ctr,
                                            std::array<std::uint32_t, 2> key) {
    for (int round = 0; round < 10; ++round) {
      const std::uint64_t p0 = std::uint64_t{kM0} * ctr[0];
      const std::uint64_t p1 = std::uint64_t{kM1} * ctr[2];
      const auto lo0 = static_cast<std::uint32_t>(p0);
      const auto hi0 = static_cast<std::uint32_t>(p0 >> 32);
      const auto lo1 = static_cast<std::uint32_t>(p1);
      const auto hi1 = static_cast<std::uint32_t>(p1 >> 32);
      ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
      key[0] += kW0;
      key[1] += kW1;
    }
    return ctr;
  }
};

// One reproducible random stream.  The i-th output is a pure function of
// (seed, stream_id, i): the 128-bit Philox counter is laid out as
// [block_lo, block_hi, stream_lo, stream_hi] and the key as [seed_lo,
// seed_hi].  Each block yields two 64-bit outputs, so output i lives in
// block i/2, lane i%2.  Workers can therefore own disjoint stream_ids and
// produce results independent of scheduling order.
class Stream {
 public:
  explicit Stream(std::uint64_t seed, std::uint64_t stream_id = 0,
                  std::uint64_t counter = 0)
      : seed_(seed), stream_(stream_id), counter_(counter) {}

  // Raw 64-bit output at the current counter position.
  std::uint64_t next_u64() {
    const std::uint64_t block_index = counter_ >> 1;
    const unsigned lane = static_cast<unsigned>(counter_ & 1u);
    ++counter_;
    if (block_index != cached_block_) {
      const auto out = Philox4x32::block(
          {static_cast<std::uint32_t>(block_index),
           static_cast<std::uint32_t>(block_index >> 32),
           static_cast<std::uint32_t>(stream_),
           static_cast<std::uint32_t>(stream_ >> 32)},
          {static_cast<std::uint32_t>(seed_),
           static_cast<std::uint32_t>(seed_ >> 32)});
      lane0_ = std::uint64_t{out[0]} | (std::uint64_t{out[1]} << 32);
      lane1_ = std::uint64_t{out[2]} | (std::uint64_t{out[3]} << 32);
      cached_block_ = block_index;
    }
    return lane == 0 ? lane0_ : lane1_;
  }

  // Uniform in [0, 1), 53 random bits.
  double uniform01() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  // Standard normal via Box-Muller on two consecutive uniforms.  Each pair
  // of draws consumes exactly two counter positions, so draw k of a stream
  // stays a pure function of (seed, stream_id, k).  Rejection methods are
  // deliberately avoided: they would make the counter advance data-dependent.
  double gaussian() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    double u1 = uniform01();
    const double u2 = uniform01();
    if (u1 <= 0.0) u1 = 0x1.0p-53;  // log(0) guard
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double t = 2.0 * std::numbers::pi * u2;
    spare_ = r * std::sin(t);
    have_spare_ = true;
    return r * std::cos(t);
  }

  std::uint64_t seed() const { return seed_; }
  std::uint64_t stream_id() const { return stream_; }
  std::uint64_t counter() const { return counter_; }

 private:
  std::uint64_t seed_;
  std::uint64_t stream_;
  std::uint64_t counter_;
  std::uint64_t cached_block_ = ~std::uint64_t{0};
  std::uint64_t lane0_ = 0;
  std::uint64_t lane1_ = 0;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace smalldev::rng
