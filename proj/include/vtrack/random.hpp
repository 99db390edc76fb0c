#pragma once

#include <cmath>
#include <cstdint>

namespace vtrack {

// PCG32 (XSH-RR output, 64-bit LCG state), seeded as in the reference
// pcg32_srandom_r. The constants below fully define every stream this
// library generates, so other implementations can reproduce them:
//   state' = state * 6364136223846793005 + inc,  inc = (sequence << 1) | 1
//   uniform(): 53-bit double from two draws, (a >> 5) * 2^26 + (b >> 6), over 2^53
//   normal():  Box-Muller cosine branch, u1 = 1 - uniform(), u2 = uniform()
class Pcg32 {
 public:
  static constexpr std::uint64_t kMultiplier = 6364136223846793005ULL;
  static constexpr std::uint64_t kDefaultSequence = 0xda3e39cb94b95bdbULL;

  explicit Pcg32(std::uint64_t seed, std::uint64_t sequence = kDefaultSequence)
      : state_(0), inc_((sequence << 1u) | 1u) {
    next_u32();
    state_ += seed;
    next_u32();
  }

  std::uint32_t next_u32() {
    const std::uint64_t old = state_;
    state_ = old * kMultiplier + inc_;
    const auto xorshifted = static_cast<std::uint32_t>(((old >> 18u) ^ old) >> 27u);
    const auto rot = static_cast<std::uint32_t>(old >> 59u);
    return (xorshifted >> rot) | (xorshifted << ((0u - rot) & 31u));
  }

  // [0, 1)
  double uniform() {
    const std::uint32_t a = next_u32() >> 5;
    const std::uint32_t b = next_u32() >> 6;
    return (static_cast<double>(a) * 67108864.0 + static_cast<double>(b)) *
           (1.0 / 9007199254740992.0);
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  double normal() {
    const double u1 = 1.0 - uniform();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
  }

  double normal(double mean, double sigma) { return mean + sigma * normal(); }

 private:
  std::uint64_t state_;
  std::uint64_t inc_;
};

}  // namespace vtrack
