#pragma once

#include <cstdint>
#include <limits>
#include <span>
#include <vector>

namespace rpd {

/// Counter-based 64-bit generator.
///
/// Output n of stream (seed, stream) is splitmix64_mix(key + n * 0x9E3779B97F4A7C15)
/// where key is derived from seed and stream id. Every value is a pure function
/// of (seed, stream, n), so results do not depend on the standard library's
/// distribution implementations. split() derives an independent child stream.
class CounterRng {
 public:
  using result_type = std::uint64_t;

  explicit CounterRng(std::uint64_t seed = 0, std::uint64_t stream = 0);

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()();

  /// Uniform on [0, 1) with 53 random bits.
  double uniform();
  /// Uniform on the open interval (0, 1).
  double uniform_open();
  /// Standard normal via Box-Muller (consumes two draws).
  double normal();
  /// Laplace(0, scale) via inverse CDF: u in (-1/2, 1/2) -> -scale*sign(u)*ln(1-2|u|).
  double laplace(double scale);
  /// Uniform integer in [0, n) by rejection, n > 0.
  std::uint64_t below(std::uint64_t n);

  CounterRng split(std::uint64_t child) const;

  std::uint64_t seed() const { return seed_; }
  std::uint64_t stream() const { return stream_; }
  std::uint64_t counter() const { return counter_; }

 private:
  std::uint64_t seed_;
  std::uint64_t stream_;
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

std::uint64_t splitmix64_mix(std::uint64_t z);

/// Draws indices from a fixed discrete law by inverse CDF.
class CategoricalSampler {
 public:
  explicit CategoricalSampler(std::span<const double> probabilities);

  std::size_t operator()(CounterRng& rng) const;
  std::size_t size() const { return cumulative_.size(); }

 private:
  std::vector<double> cumulative_;
};

}  // namespace rpd
