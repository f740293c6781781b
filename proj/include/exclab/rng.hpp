#pragma once

#include <cmath>
#include <cstdint>

namespace exclab {

// Philox4x32-10 counter-based generator (Salmon et al., SC'11).
// Every 128-bit block is a pure function of (key, counter), so streams
// indexed by (master_seed, stream_id) are non-overlapping by construction
// and replicas can be replayed independently of scheduling order.
class Philox4x32 {
 public:
  using u32 = std::uint32_t;
  using u64 = std::uint64_t;

  Philox4x32(u64 master_seed, u64 stream_id)
      : key0_(static_cast<u32>(master_seed)),
        key1_(static_cast<u32>(master_seed >> 32)),
        stream_lo_(static_cast<u32>(stream_id)),
        stream_hi_(static_cast<u32>(stream_id >> 32)) {}

  void block(u64 index, u32 out[4]) const {
    u32 c0 = static_cast<u32>(index);
    u32 c1 = static_cast<u32>(index >> 32);
    u32 c2 = stream_lo_;
    u32 c3 = stream_hi_;
    u32 k0 = key0_;
    u32 k1 = key1_;
    for (int round = 0; round < 10; ++round) {
      const u64 p0 = static_cast<u64>(kMul0) * c0;
      const u64 p1 = static_cast<u64>(kMul1) * c2;
      const u32 n0 = static_cast<u32>(p1 >> 32) ^ c1 ^ k0;
      const u32 n1 = static_cast<u32>(p1);
      const u32 n2 = static_cast<u32>(p0 >> 32) ^ c3 ^ k1;
      const u32 n3 = static_cast<u32>(p0);
      c0 = n0;
      c1 = n1;
      c2 = n2;
      c3 = n3;
      k0 += kWeyl0;
      k1 += kWeyl1;
    }
    out[0] = c0;
    out[1] = c1;
    out[2] = c2;
    out[3] = c3;
  }

 private:
  static constexpr u32 kMul0 = 0xD2511F53u;
  static constexpr u32 kMul1 = 0xCD9E8D57u;
  static constexpr u32 kWeyl0 = 0x9E3779B9u;
  static constexpr u32 kWeyl1 = 0xBB67AE85u;

  u32 key0_, key1_, stream_lo_, stream_hi_;
};

// Convenience stream over Philox blocks with the usual real-valued draws.
// All floating-point conversions are explicit so that a (seed, stream)
// pair reproduces the same trajectory on any IEEE-754 platform with the
// same libm.
class Rng {
 public:
  using u32 = std::uint32_t;
  using u64 = std::uint64_t;

  explicit Rng(u64 master_seed, u64 stream_id = 0)
      : engine_(master_seed, stream_id) {}

  u32 next_u32() {
    if (have_ == 0) {
      engine_.block(block_index_++, buf_);
      have_ = 4;
    }
    return buf_[4 - have_--];
  }

  u64 next_u64() {
    const u64 lo = next_u32();
    const u64 hi = next_u32();
    return (hi << 32) | lo;
  }

  // Uniform on [0, 1) with 53 random bits.
  double uniform() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  // Exponential holding time; rate > 0.  Uses log1p so u == 0 is safe.
  double exponential(double rate) { return -std::log1p(-uniform()) / rate; }

  // Marsaglia polar method with one cached value.
  double normal() {
    if (has_cached_) {
      has_cached_ = false;
      return cached_;
    }
    double u, v, s;
    do {
      u = 2.0 * uniform() - 1.0;
      v = 2.0 * uniform() - 1.0;
      s = u * u + v * v;
    } while (s >= 1.0 || s == 0.0);
    const double factor = std::sqrt(-2.0 * std::log(s) / s);
    cached_ = v * factor;
    has_cached_ = true;
    return u * factor;
  }

  // Unbiased integer in [0, bound) by rejection.
  u64 uniform_below(u64 bound) {
    const u64 threshold = (0 - bound) % bound;
    for (;;) {
      const u64 x = next_u64();
      if (x >= threshold) return x % bound;
    }
  }

 private:
  Philox4x32 engine_;
  u64 block_index_ = 0;
  u32 buf_[4] = {};
  int have_ = 0;
  double cached_ = 0.0;
  bool has_cached_ = false;
};

// splitmix64 finalizer; used to derive sub-seeds for named purposes so
// that e.g. the forward and reversed runs of one experiment never share
// a stream.
inline std::uint64_t mix_seed(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t tag) {
  return mix_seed(master ^ mix_seed(tag));
}

}  // namespace exclab
