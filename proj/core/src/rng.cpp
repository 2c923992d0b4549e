#include "npsurv/rng.hpp"

#include <cmath>

namespace npsurv {

namespace {

constexpr std::uint32_t kMul0 = 0xD2511F53u;
constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;

inline void mulhilo(std::uint32_t a, std::uint32_t b, std::uint32_t& lo, std::uint32_t& hi) {
  const std::uint64_t p = static_cast<std::uint64_t>(a) * b;
  lo = static_cast<std::uint32_t>(p);
  hi = static_cast<std::uint32_t>(p >> 32);
}

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

inline std::array<std::uint32_t, 4> split(std::uint64_t lo, std::uint64_t hi) {
  return {static_cast<std::uint32_t>(lo), static_cast<std::uint32_t>(lo >> 32),
          static_cast<std::uint32_t>(hi), static_cast<std::uint32_t>(hi >> 32)};
}

inline std::array<std::uint32_t, 2> key_of(std::uint64_t seed) {
  return {static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)};
}

}  // namespace

std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> ctr,
                                        std::array<std::uint32_t, 2> key) {
  for (int round = 0; round < 10; ++round) {
    if (round > 0) {
      key[0] += kWeyl0;
      key[1] += kWeyl1;
    }
    std::uint32_t lo0, hi0, lo1, hi1;
    mulhilo(kMul0, ctr[0], lo0, hi0);
    mulhilo(kMul1, ctr[2], lo1, hi1);
    ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
  }
  return ctr;
}

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t a, std::uint64_t b) {
  std::uint64_t x = splitmix64(base);
  x = splitmix64(x ^ (a * 0xD6E8FEB86659FD93ull + 0x632BE59BD9B4E019ull));
  x = splitmix64(x ^ (b * 0xA0761D6478BD642Full + 0xE7037ED1A0B428DBull));
  return x;
}

CounterRng::result_type CounterRng::operator()() {
  if (buffered_ == 0) {
    buffer_ = philox4x32(split(block_index_++, stream_), key_of(seed_));
    buffered_ = 2;
  }
  const int k = 2 - buffered_;
  --buffered_;
  return static_cast<std::uint64_t>(buffer_[2 * k]) |
         (static_cast<std::uint64_t>(buffer_[2 * k + 1]) << 32);
}

double CounterRng::uniform() {
  // (k + 0.5) / 2^53 keeps the value strictly inside (0, 1).
  const std::uint64_t k = (*this)() >> 11;
  return (static_cast<double>(k) + 0.5) * 0x1.0p-53;
}

double CounterRng::exponential() { return -std::log(uniform()); }

std::array<std::uint32_t, 4> RademacherSigns::block(std::uint64_t replicate,
                                                    std::uint64_t block) const {
  return philox4x32(split(block, replicate), key_of(seed_));
}

int RademacherSigns::sign(std::uint64_t replicate, std::uint64_t subject) const {
  const auto bits = block(replicate, subject / 128);
  const std::uint64_t r = subject % 128;
  return ((bits[r / 32] >> (r % 32)) & 1u) ? 1 : -1;
}

}  // namespace npsurv
