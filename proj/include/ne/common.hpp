#pragma once

#include <cstdint>
#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

namespace ne {

using TokenId = int32_t;
using IdSeq = std::vector<TokenId>;

// Special token ids, pinned so checkpoints stay portable across vocab rebuilds.
constexpr TokenId kBos = 0;
constexpr TokenId kEos = 1;
constexpr TokenId kPlh = 2;
constexpr TokenId kUnk = 3;
constexpr TokenId kPad = 4;
constexpr TokenId kNumSpecials = 5;

inline bool is_special(TokenId id) { return id >= 0 && id < kNumSpecials; }

struct Error : std::runtime_error {
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

[[noreturn]] inline void fail(const std::string& msg) { throw Error(msg); }

// Deterministic RNG. splitmix64 seeding + xoshiro256** core, so that every
// stream is reproducible bit-for-bit independent of the standard library.
class Rng {
 public:
  explicit Rng(uint64_t seed = 0) { reseed(seed); }

  void reseed(uint64_t seed) {
    uint64_t x = seed;
    for (auto& si : s_) {
      x += 0x9e3779b97f4a7c15ull;
      uint64_t z = x;
      z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
      z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
      si = z ^ (z >> 31);
    }
  }

  uint64_t next() {
    auto rotl = [](uint64_t v, int k) { return (v << k) | (v >> (64 - k)); };
    const uint64_t result = rotl(s_[1] * 5, 7) * 9;
    const uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = rotl(s_[3], 45);
    return result;
  }

  // Uniform in [0, 1).
  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  // Uniform integer in [0, n).
  uint64_t uniform_below(uint64_t n) {
    // rejection sampling to avoid modulo bias
    const uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    uint64_t v = next();
    while (v >= limit) v = next();
    return v % n;
  }

  // Standard normal via Box-Muller (no cached spare; one draw costs two words).
  double normal() {
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
  }

  // Normal truncated at +-2 sigma, rejection sampled.
  double truncated_normal(double stddev) {
    for (;;) {
      const double v = normal();
      if (std::abs(v) <= 2.0) return v * stddev;
    }
  }

  // Derive an independent stream, e.g. one per training instance.
  Rng fork(uint64_t stream) const {
    uint64_t x = s_[0] ^ (stream * 0x9e3779b97f4a7c15ull + 0x853c49e6748fea9bull);
    Rng r;
    r.reseed(x);
    return r;
  }

 private:
  uint64_t s_[4];
};

}  // namespace ne
