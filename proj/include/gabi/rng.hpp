#ifndef GABI_RNG_HPP
#define GABI_RNG_HPP

#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <numbers>

namespace gabi {

// Deterministic, platform-independent random streams. Every stochastic
// component derives its own substream from (seed, purpose, index...) so that
// results are bit-reproducible and independent of thread scheduling.
// Core generator is xoshiro256++ seeded via splitmix64.
class Rng {
 public:
  explicit Rng(uint64_t seed) {
    uint64_t x = seed;
    for (auto& w : s_) w = splitmix64(x);
  }

  /// Derive an independent substream from a seed and a purpose/index path.
  static Rng stream(uint64_t seed, std::initializer_list<uint64_t> path) {
    return Rng(derive(seed, path));
  }

  /// Mixed 64-bit seed for a purpose/index path.
  static uint64_t derive(uint64_t seed, std::initializer_list<uint64_t> path) {
    uint64_t x = seed;
    for (uint64_t p : path) {
      uint64_t salted = p + 0x9e3779b97f4a7c15ULL;
      x ^= splitmix64(salted);
      x = splitmix64(x);
    }
    return x;
  }

  uint64_t next_u64() {
    const uint64_t result = rotl(s_[0] + s_[3], 23) + s_[0];
    const uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = rotl(s_[3], 45);
    return result;
  }

  /// Uniform double in [0, 1).
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  /// Uniform double in (0, 1].
  double uniform_pos() {
    return static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Standard normal via Box-Muller (cosine branch; two u64 per draw).
  double normal() {
    const double u1 = uniform_pos();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) *
           std::cos(2.0 * std::numbers::pi * u2);
  }

  /// Uniform integer in [0, n).
  uint64_t below(uint64_t n) {
    // Lemire-style rejection-free enough for our n << 2^64 use.
    return next_u64() % n;
  }

 private:
  static constexpr uint64_t rotl(uint64_t x, int k) {
    return (x << k) | (x >> (64 - k));
  }
  static uint64_t splitmix64(uint64_t& state) {
    uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  uint64_t s_[4];
};

// Stream purpose tags. Keeping them in one place avoids accidental overlap
// between the substreams of different components.
namespace streams {
inline constexpr uint64_t kDatasetGeometry = 1;
inline constexpr uint64_t kDatasetBoundary = 2;
inline constexpr uint64_t kObservationNoise = 3;
inline constexpr uint64_t kInit = 4;
inline constexpr uint64_t kTrainBatch = 5;
inline constexpr uint64_t kTrainMmdRef = 6;
inline constexpr uint64_t kAbcLatent = 7;
inline constexpr uint64_t kAbcObsNoise = 8;
inline constexpr uint64_t kAbcSigma = 9;
inline constexpr uint64_t kPcnInit = 10;
inline constexpr uint64_t kPcnProposal = 11;
inline constexpr uint64_t kPcnAccept = 12;
inline constexpr uint64_t kObsSelection = 13;
inline constexpr uint64_t kDirectMask = 14;
inline constexpr uint64_t kHelmholtzGraph = 15;
inline constexpr uint64_t kHelmholtzSource = 16;
inline constexpr uint64_t kNoiseDraw = 17;
}  // namespace streams

}  // namespace gabi

#endif  // GABI_RNG_HPP
