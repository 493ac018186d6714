#pragma once

#include <array>
#include <cstdint>
#include <limits>

namespace mpedge {

// SplitMix64 finalizer; used to derive independent keys.
std::uint64_t mix64(std::uint64_t x) noexcept;

// Key for child stream `index` of `parent`. Pure function: the same pair always
// yields the same key, so per-trial streams do not depend on scheduling.
std::uint64_t split_seed(std::uint64_t parent, std::uint64_t index) noexcept;

// Philox4x32-10 counter-based generator. The 128-bit counter is
// (block, block >> 32, stream, stream >> 32); each block yields two 64-bit outputs.
// Satisfies UniformRandomBitGenerator.
class CounterRng {
 public:
  using result_type = std::uint64_t;

  explicit CounterRng(std::uint64_t key, std::uint64_t stream = 0) noexcept;

  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }
  result_type operator()() noexcept;

  // Uniform on (0, 1), never 0 or 1.
  double uniform_open() noexcept;
  // Uniform on [0, 1).
  double uniform() noexcept;
  double normal() noexcept;

  // Raw block function, exposed for known-answer tests.
  static std::array<std::uint32_t, 4> philox(std::array<std::uint32_t, 4> ctr,
                                             std::array<std::uint32_t, 2> key) noexcept;

 private:
  void refill() noexcept;

  std::array<std::uint32_t, 2> key_;
  std::uint64_t stream_;
  std::uint64_t block_ = 0;
  std::array<std::uint64_t, 2> buf_{};
  int pos_ = 2;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace mpedge
