#pragma once

#include <bit>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "exclab/rng.hpp"

namespace exclab {

// Occupancy configuration on the periodic lattice {0..N-1}: bit-packed
// occupancy plus a dense particle list so that uniform particle selection
// and swaps are O(1).  A Configuration is confined to one replica.
class Configuration {
 public:
  Configuration() = default;

  explicit Configuration(int sites)
      : sites_(sites),
        words_(static_cast<std::size_t>((sites + 63) / 64), 0),
        slot_of_(static_cast<std::size_t>(sites), -1) {}

  int sites() const { return sites_; }
  int particle_count() const { return static_cast<int>(particles_.size()); }

  bool occupied(int x) const {
    return (words_[static_cast<std::size_t>(x) >> 6] >>
            (static_cast<unsigned>(x) & 63u)) &
           1u;
  }

  // eta(x) - 1/2
  double centered(int x) const { return occupied(x) ? 0.5 : -0.5; }

  int particle_at(int slot) const { return particles_[static_cast<std::size_t>(slot)]; }

  int wrap(long x) const {
    long r = x % sites_;
    if (r < 0) r += sites_;
    return static_cast<int>(r);
  }

  void place(int x) {
    words_[static_cast<std::size_t>(x) >> 6] |=
        (std::uint64_t{1} << (static_cast<unsigned>(x) & 63u));
    slot_of_[static_cast<std::size_t>(x)] =
        static_cast<int>(particles_.size());
    particles_.push_back(x);
  }

  // Exchange occupancies of x and y; an involution, and a no-op when the
  // occupancies agree.
  void swap(int x, int y) {
    const bool ox = occupied(x), oy = occupied(y);
    if (ox == oy) return;
    if (oy) std::swap(x, y);  // now x occupied, y empty
    flip(x);
    flip(y);
    const int slot = slot_of_[static_cast<std::size_t>(x)];
    particles_[static_cast<std::size_t>(slot)] = y;
    slot_of_[static_cast<std::size_t>(y)] = slot;
    slot_of_[static_cast<std::size_t>(x)] = -1;
  }

  // Mean occupancy of the block [x, x+len) with wrap-around.
  double block_average(int x, int len) const {
    return static_cast<double>(block_count(x, len)) /
           static_cast<double>(len);
  }

  // Number of particles in [x, x+len), 1 <= len <= N.
  int block_count(int x, int len) const {
    int total = 0;
    int remaining = len;
    int pos = x;
    while (remaining > 0) {
      const int chunk = std::min(remaining, sites_ - pos);
      total += range_popcount(pos, chunk);
      remaining -= chunk;
      pos = 0;
    }
    return total;
  }

  // Hex-packed occupancy, site 4k+j <-> bit j of hex digit k.
  std::string to_hex() const {
    static const char digits[] = "0123456789abcdef";
    std::string out;
    out.reserve(static_cast<std::size_t>((sites_ + 3) / 4));
    for (int base = 0; base < sites_; base += 4) {
      unsigned nibble = 0;
      for (int j = 0; j < 4 && base + j < sites_; ++j)
        nibble |= static_cast<unsigned>(occupied(base + j)) << j;
      out.push_back(digits[nibble]);
    }
    return out;
  }

  static Configuration from_hex(int sites, const std::string& hex) {
    Configuration cfg(sites);
    for (int x = 0; x < sites; ++x) {
      const char c = hex[static_cast<std::size_t>(x / 4)];
      const unsigned nibble = static_cast<unsigned>(
          c <= '9' ? c - '0' : 10 + c - 'a');
      if ((nibble >> (x & 3)) & 1u) cfg.place(x);
    }
    return cfg;
  }

  bool consistent() const {
    int count = 0;
    for (const auto& w : words_) count += std::popcount(w);
    if (count != particle_count()) return false;
    for (std::size_t i = 0; i < particles_.size(); ++i) {
      const int x = particles_[i];
      if (!occupied(x) || slot_of_[static_cast<std::size_t>(x)] !=
                              static_cast<int>(i))
        return false;
    }
    return true;
  }

 private:
  void flip(int x) {
    words_[static_cast<std::size_t>(x) >> 6] ^=
        (std::uint64_t{1} << (static_cast<unsigned>(x) & 63u));
  }

  int range_popcount(int start, int len) const {
    int total = 0;
    int x = start;
    int remaining = len;
    while (remaining > 0) {
      const int word = x >> 6;
      const int bit = x & 63;
      const int take = std::min(remaining, 64 - bit);
      std::uint64_t w = words_[static_cast<std::size_t>(word)] >> bit;
      if (take < 64) w &= (std::uint64_t{1} << take) - 1;
      total += std::popcount(w);
      x += take;
      remaining -= take;
    }
    return total;
  }

  int sites_ = 0;
  std::vector<std::uint64_t> words_;
  std::vector<int> particles_;
  std::vector<int> slot_of_;
};

// i.i.d. Bernoulli(rho) sites; the experiments fix rho = 1/2.
inline Configuration sample_bernoulli(int sites, double rho, Rng& rng) {
  if (!(rho > 0.0 && rho < 1.0))
    throw std::invalid_argument("density must lie strictly in (0,1)");
  Configuration cfg(sites);
  for (int x = 0; x < sites; ++x)
    if (rng.uniform() < rho) cfg.place(x);
  return cfg;
}

}  // namespace exclab
