#pragma once

// Counter-based random streams (Philox4x32-10, Salmon et al. 2011).
// Every consumer owns an independent stream addressed by (seed, id0, id1, id2),
// so sampling results do not depend on thread count or scheduling order.

#include <array>
#include <cmath>
#include <cstdint>

namespace gaitopt {

namespace detail {

inline constexpr uint32_t kPhiloxM0 = 0xD2511F53u;
inline constexpr uint32_t kPhiloxM1 = 0xCD9E8D57u;
inline constexpr uint32_t kPhiloxW0 = 0x9E3779B9u;
inline constexpr uint32_t kPhiloxW1 = 0xBB67AE85u;

inline std::array<uint32_t, 4> philox4x32(std::array<uint32_t, 4> ctr,
                                          std::array<uint32_t, 2> key) {
  for (int round = 0; round < 10; ++round) {
    const uint64_t p0 = static_cast<uint64_t>(kPhiloxM0) * ctr[0];
    const uint64_t p1 = static_cast<uint64_t>(kPhiloxM1) * ctr[2];
    const uint32_t hi0 = static_cast<uint32_t>(p0 >> 32);
    const uint32_t lo0 = static_cast<uint32_t>(p0);
    const uint32_t hi1 = static_cast<uint32_t>(p1 >> 32);
    const uint32_t lo1 = static_cast<uint32_t>(p1);
    ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
    key[0] += kPhiloxW0;
    key[1] += kPhiloxW1;
  }
  return ctr;
}

}  // namespace detail

// Purpose tags mixed into the seed so unrelated subsystems never share a stream.
inline constexpr uint64_t kStreamPlanner = 0x706c616e6e657231ull;
inline constexpr uint64_t kStreamPlannerOut = 0x706c616e6f757432ull;
inline constexpr uint64_t kStreamDataset = 0x6461746173657433ull;
inline constexpr uint64_t kStreamTrain = 0x747261696e696e34ull;
inline constexpr uint64_t kStreamInit = 0x696e697477747335ull;

/// One independent Philox substream. Cheap to construct; construct one per
/// logical task (per trajectory sample, per episode, per training epoch).
class RngStream {
 public:
  explicit RngStream(uint64_t seed, uint32_t id0 = 0, uint32_t id1 = 0, uint32_t id2 = 0)
      : key_{static_cast<uint32_t>(seed), static_cast<uint32_t>(seed >> 32)},
        ids_{id0, id1, id2} {}

  uint32_t next_u32() {
    if (pos_ == 4) {
      buf_ = detail::philox4x32({block_++, ids_[0], ids_[1], ids_[2]}, key_);
      pos_ = 0;
    }
    return buf_[pos_++];
  }

  uint64_t next_u64() {
    const uint64_t lo = next_u32();
    const uint64_t hi = next_u32();
    return (hi << 32) | lo;
  }

  /// Uniform double in [0, 1), 53-bit resolution.
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  /// Uniform double in [lo, hi).
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Standard normal via Box-Muller; generates pairs, caches the spare.
  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    const double u1 = 1.0 - uniform();  // (0, 1]
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double theta = 6.283185307179586476925286766559 * u2;
    spare_ = r * std::sin(theta);
    has_spare_ = true;
    return r * std::cos(theta);
  }

  double normal(double mean, double stddev) { return mean + stddev * normal(); }

  /// Uniform integer in [0, n).
  uint64_t below(uint64_t n) { return n == 0 ? 0 : next_u64() % n; }

 private:
  std::array<uint32_t, 2> key_;
  std::array<uint32_t, 3> ids_;
  uint32_t block_ = 0;
  std::array<uint32_t, 4> buf_{};
  int pos_ = 4;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace gaitopt
