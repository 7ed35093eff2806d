#pragma once

#include <array>
#include <cstdint>

namespace crs {

/// SplitMix64 finalizer; used for seeding and stream derivation.
std::uint64_t splitmix64(std::uint64_t& state);
std::uint64_t mix64(std::uint64_t x);

/// xoshiro256** 1.0 (Blackman & Vigna), seeded through SplitMix64.
///
/// Every random draw in the project goes through this generator so that
/// cohorts, samplers and bootstrap resamples reproduce across platforms.
/// Distribution helpers are implemented here rather than taken from
/// <random>, whose distributions are implementation-defined.
class Rng {
 public:
  using result_type = std::uint64_t;

  explicit Rng(std::uint64_t seed);

  /// Independent stream for (seed, stream tag, index).
  static Rng derive(std::uint64_t seed, std::uint64_t stream, std::uint64_t index);

  std::uint64_t next();
  std::uint64_t operator()() { return next(); }
  static constexpr std::uint64_t min() { return 0; }
  static constexpr std::uint64_t max() { return ~std::uint64_t{0}; }

  /// Uniform in [0, 1) with 53 random bits.
  double uniform();
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  /// Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n);
  /// Standard normal via Box-Muller (no cached second value).
  double normal();
  double normal(double mean, double sd) { return mean + sd * normal(); }
  /// Standard logistic variate.
  double logistic();
  bool bernoulli(double p) { return uniform() < p; }

  static constexpr const char* kAlgorithm = "xoshiro256**/splitmix64";

 private:
  std::array<std::uint64_t, 4> s_{};
};

// Stream tags; keep stable, they are part of the reproducibility contract.
namespace stream {
inline constexpr std::uint64_t kSynthPatient = 1;
inline constexpr std::uint64_t kSynthSplit = 2;
inline constexpr std::uint64_t kSynthExternal = 3;
inline constexpr std::uint64_t kHeadInit = 10;
inline constexpr std::uint64_t kSampler = 11;
inline constexpr std::uint64_t kDropout = 12;
inline constexpr std::uint64_t kBootstrap = 20;
inline constexpr std::uint64_t kEncoderInit = 30;
}  // namespace stream

}  // namespace crs
