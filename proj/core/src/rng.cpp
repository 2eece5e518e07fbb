#include "invlab/rng.hpp"

#include <cmath>
#include <numbers>

namespace invlab {

namespace {

constexpr std::uint32_t kMul0 = 0xD2511F53u;
constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;

inline void mulhilo(std::uint32_t a, std::uint32_t b, std::uint32_t& hi, std::uint32_t& lo) {
  const std::uint64_t product = static_cast<std::uint64_t>(a) * b;
  hi = static_cast<std::uint32_t>(product >> 32);
  lo = static_cast<std::uint32_t>(product);
}

// splitmix64 finalizer, used to fold the 64-bit replicate index into 32 bits
std::uint64_t mix64(std::uint64_t z) {
  z += 0x9E3779B97F4A7C15ull;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

}  // namespace

std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> ctr,
                                        std::array<std::uint32_t, 2> key) noexcept {
  for (int round = 0; round < 10; ++round) {
    std::uint32_t hi0, lo0, hi1, lo1;
    mulhilo(kMul0, ctr[0], hi0, lo0);
    mulhilo(kMul1, ctr[2], hi1, lo1);
    ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
    key[0] += kWeyl0;
    key[1] += kWeyl1;
  }
  return ctr;
}

CounterRng::CounterRng(std::uint64_t seed, Stream stream, std::uint64_t replicate) noexcept
    : key_{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)},
      stream_(static_cast<std::uint32_t>(stream)),
      replicate_(static_cast<std::uint32_t>(replicate <= 0xFFFFFFFFull ? replicate
                                                                         : mix64(replicate))) {}

std::array<std::uint32_t, 4> CounterRng::block(std::uint64_t index) const noexcept {
  return philox4x32({static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32),
                     stream_, replicate_},
                    key_);
}

std::uint64_t CounterRng::bits(std::uint64_t index) const noexcept {
  const auto b = block(index);
  return (static_cast<std::uint64_t>(b[0]) << 32) | b[1];
}

double CounterRng::uniform(std::uint64_t index) const noexcept {
  return static_cast<double>(bits(index) >> 11) * 0x1.0p-53;
}

double CounterRng::uniform_open(std::uint64_t index) const noexcept {
  return (static_cast<double>(bits(index) >> 12) + 0.5) * 0x1.0p-52;
}

double CounterRng::normal(std::uint64_t index) const noexcept {
  const auto b = block(index);
  const std::uint64_t w0 = (static_cast<std::uint64_t>(b[0]) << 32) | b[1];
  const std::uint64_t w1 = (static_cast<std::uint64_t>(b[2]) << 32) | b[3];
  const double u0 = (static_cast<double>(w0 >> 12) + 0.5) * 0x1.0p-52;
  const double u1 = static_cast<double>(w1 >> 11) * 0x1.0p-53;
  return std::sqrt(-2.0 * std::log(u0)) * std::cos(2.0 * std::numbers::pi * u1);
}

}  // namespace invlab
