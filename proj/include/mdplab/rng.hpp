#pragma once

// Counter-based random streams (Philox4x32-10).
//
// A stream is addressed by (master seed, stream index); the draw position is
// part of the counter. Every Monte Carlo path owns its own stream, so results
// never depend on which thread ran the path or in what order.

#include <array>
#include <cmath>
#include <cstdint>
#include <string_view>

namespace mdplab::rng {

using Block = std::array<std::uint32_t, 4>;
using Key = std::array<std::uint32_t, 2>;

/// One Philox4x32 bijection, 10 rounds.
constexpr Block philox4x32_10(Block ctr, Key key) noexcept {
  constexpr std::uint32_t kMulA = 0xD2511F53u;
  constexpr std::uint32_t kMulB = 0xCD9E8D57u;
  constexpr std::uint32_t kWeylA = 0x9E3779B9u;
  constexpr std::uint32_t kWeylB = 0xBB67AE85u;
  for (int round = 0; round < 10; ++round) {
    if (round > 0) {
      key[0] += kWeylA;
      key[1] += kWeylB;
    }
    const std::uint64_t p0 = static_cast<std::uint64_t>(kMulA) * ctr[0];
    const std::uint64_t p1 = static_cast<std::uint64_t>(kMulB) * ctr[2];
    ctr = Block{static_cast<std::uint32_t>(p1 >> 32) ^ ctr[1] ^ key[0],
                static_cast<std::uint32_t>(p1),
                static_cast<std::uint32_t>(p0 >> 32) ^ ctr[3] ^ key[1],
                static_cast<std::uint32_t>(p0)};
  }
  return ctr;
}

constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

/// Derive an independent master seed for a named purpose.
constexpr std::uint64_t derive(std::uint64_t master, std::uint64_t tag) noexcept {
  return splitmix64(master ^ splitmix64(tag + 0x5851F42D4C957F2Dull));
}

constexpr std::uint64_t tag_of(std::string_view name) noexcept {
  std::uint64_t h = 0xCBF29CE484222325ull;  // FNV-1a
  for (char c : name) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001B3ull;
  }
  return h;
}

constexpr std::uint64_t derive(std::uint64_t master, std::string_view name) noexcept {
  return derive(master, tag_of(name));
}

struct SeedAddress {
  std::uint64_t master = 0;
  std::uint64_t stream = 0;
  friend bool operator==(const SeedAddress&, const SeedAddress&) = default;
};

class Stream {
 public:
  Stream() = default;
  Stream(std::uint64_t master, std::uint64_t stream) noexcept
      : key_{static_cast<std::uint32_t>(master), static_cast<std::uint32_t>(master >> 32)},
        stream_(stream) {}
  explicit Stream(SeedAddress a) noexcept : Stream(a.master, a.stream) {}

  std::uint64_t next_u64() noexcept {
    if (avail_ == 0) refill();
    return buf_[--avail_];
  }

  /// Uniform on the open interval (0, 1).
  double uniform() noexcept {
    return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
  }

  /// Standard normal via Box-Muller; the partner variate is kept for the next call.
  double normal() noexcept {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    const double u1 = uniform();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double t = 2.0 * 3.14159265358979323846 * u2;
    spare_ = r * std::sin(t);
    has_spare_ = true;
    return r * std::cos(t);
  }

  std::uint64_t blocks_used() const noexcept { return block_; }

 private:
  void refill() noexcept {
    const Block out = philox4x32_10(
        Block{static_cast<std::uint32_t>(block_), static_cast<std::uint32_t>(block_ >> 32),
              static_cast<std::uint32_t>(stream_), static_cast<std::uint32_t>(stream_ >> 32)},
        key_);
    ++block_;
    buf_[1] = static_cast<std::uint64_t>(out[0]) | (static_cast<std::uint64_t>(out[1]) << 32);
    buf_[0] = static_cast<std::uint64_t>(out[2]) | (static_cast<std::uint64_t>(out[3]) << 32);
    avail_ = 2;
  }

  Key key_{0, 0};
  std::uint64_t stream_ = 0;
  std::uint64_t block_ = 0;
  std::array<std::uint64_t, 2> buf_{};
  int avail_ = 0;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace mdplab::rng
