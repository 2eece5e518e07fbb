#pragma once

#include <array>
#include <cstdint>

namespace invlab {

/// Philox4x32-10 block function. Pure: the output depends only on (counter, key).
std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> counter,
                                        std::array<std::uint32_t, 2> key) noexcept;

/// Streams separate the uses of one seed so that, e.g., design draws and noise draws
/// never share counters.
enum class Stream : std::uint32_t {
  design = 1,
  noise = 2,
  perturbation = 3,
  source = 4,
  test = 99,
};

/// Counter-based generator keyed by (seed, stream, replicate). Draw `i` is a pure
/// function of the key and `i`, so replicates can run in any order or in parallel and
/// produce identical values on every platform.
class CounterRng {
public:
  CounterRng(std::uint64_t seed, Stream stream, std::uint64_t replicate = 0) noexcept;

  /// Uniform on [0,1) with 53 random bits.
  double uniform(std::uint64_t index) const noexcept;

  /// Uniform on (0,1); never returns 0, safe for log().
  double uniform_open(std::uint64_t index) const noexcept;

  /// Standard normal via Box-Muller on the pair of uniforms at `index`.
  double normal(std::uint64_t index) const noexcept;

  std::uint64_t bits(std::uint64_t index) const noexcept;

private:
  std::array<std::uint32_t, 4> block(std::uint64_t index) const noexcept;

  std::array<std::uint32_t, 2> key_;
  std::uint32_t stream_;
  std::uint32_t replicate_;
};

}  // namespace invlab
