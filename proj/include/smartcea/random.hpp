#pragma once

#include <array>
#include <cstdint>

namespace smartcea {

// Philox4x32-10 (Salmon et al., "Parallel random numbers: as easy as 1, 2, 3").
// Pure function of (key, counter); no internal state.
std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> counter,
                                        std::array<std::uint32_t, 2> key);

// Stream tags keep the different consumers of one master seed apart.
enum class StreamTag : std::uint32_t {
  Simulate = 1,
  Truth = 2,
  Bootstrap = 3,
  StudyRep = 4,
  Discrete = 5,
  Calibration = 6,
};

// A counter-based random stream addressed by (seed, tag, index). Any two
// distinct addresses give independent sequences, so record i of a simulated
// dataset can be generated on any thread in any order.
class RandomStream {
 public:
  RandomStream(std::uint64_t seed, StreamTag tag, std::uint64_t index);

  std::uint64_t next_u64();
  // Uniform on the open interval (0, 1).
  double uniform();
  double normal();
  // Exponential with rate 1.
  double exponential();
  bool bernoulli(double p) { return uniform() < p; }
  // Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n);

 private:
  void refill();

  std::array<std::uint32_t, 2> key_;
  std::array<std::uint32_t, 4> counter_;
  std::array<std::uint32_t, 4> block_{};
  int used_ = 4;
  bool has_spare_normal_ = false;
  double spare_normal_ = 0.0;
};

// SplitMix64 finaliser; used to derive child seeds (e.g. per study rep).
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t salt);

}  // namespace smartcea
