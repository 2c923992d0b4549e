#pragma once

#include <array>
#include <cstdint>
#include <limits>

namespace npsurv {

/// Philox4x32-10 block function (Salmon et al., counter-based).
std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> counter,
                                        std::array<std::uint32_t, 2> key);

/// Mixes a base seed with stream coordinates into an independent 64-bit key.
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t a, std::uint64_t b = 0);

/// Counter-based random stream. The n-th draw of stream (seed, stream) depends
/// only on (seed, stream, n), never on other streams or on scheduling.
class CounterRng {
 public:
  using result_type = std::uint64_t;

  CounterRng(std::uint64_t seed, std::uint64_t stream = 0) : seed_(seed), stream_(stream) {}

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()();

  /// Uniform on the open interval (0, 1), 53-bit resolution.
  double uniform();
  /// Uniform on [lo, hi].
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  /// Exponential with rate 1.
  double exponential();

  std::uint64_t seed() const { return seed_; }
  std::uint64_t stream() const { return stream_; }

 private:
  std::uint64_t seed_;
  std::uint64_t stream_;
  std::uint64_t block_index_ = 0;
  std::array<std::uint32_t, 4> buffer_{};
  int buffered_ = 0;  // 64-bit words left in buffer_
};

/// Rademacher signs G(b, i) in {-1, +1} keyed by (seed, replicate b, subject i).
class RademacherSigns {
 public:
  explicit RademacherSigns(std::uint64_t seed) : seed_(seed) {}
  /// 128 signs for subjects [128 * block, 128 * block + 128) as a bit mask
  /// (bit set = +1).
  std::array<std::uint32_t, 4> block(std::uint64_t replicate, std::uint64_t block) const;
  int sign(std::uint64_t replicate, std::uint64_t subject) const;

 private:
  std::uint64_t seed_;
};

}  // namespace npsurv
