#include "rpd/random.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace rpd {

namespace {
constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;
}

std::uint64_t splitmix64_mix(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

CounterRng::CounterRng(std::uint64_t seed, std::uint64_t stream)
    : seed_(seed),
      stream_(stream),
      key_(splitmix64_mix(seed + kGolden) ^ splitmix64_mix(~stream * kGolden)) {}

CounterRng::result_type CounterRng::operator()() {
  ++counter_;
  return splitmix64_mix(key_ + counter_ * kGolden);
}

double CounterRng::uniform() {
  return static_cast<double>((*this)() >> 11) * 0x1.0p-53;
}

double CounterRng::uniform_open() {
  // (k + 0.5) / 2^53 never hits 0 or 1
  return (static_cast<double>((*this)() >> 11) + 0.5) * 0x1.0p-53;
}

double CounterRng::normal() {
  const double u1 = uniform_open();
  const double u2 = uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

double CounterRng::laplace(double scale) {
  const double u = uniform_open() - 0.5;
  if (u == 0.0) return 0.0;
  const double mag = -scale * std::log1p(-2.0 * std::abs(u));
  return u < 0.0 ? -mag : mag;
}

std::uint64_t CounterRng::below(std::uint64_t n) {
  if (n == 0) throw std::invalid_argument("CounterRng::below: n must be positive");
  const std::uint64_t limit = max() - max() % n;
  std::uint64_t v;
  do {
    v = (*this)();
  } while (v >= limit);
  return v % n;
}

CounterRng CounterRng::split(std::uint64_t child) const {
  return CounterRng(splitmix64_mix(key_ ^ (child * kGolden)), stream_ + 1 + child);
}

CategoricalSampler::CategoricalSampler(std::span<const double> probabilities) {
  if (probabilities.empty()) throw std::invalid_argument("CategoricalSampler: empty law");
  cumulative_.reserve(probabilities.size());
  double acc = 0.0;
  for (double p : probabilities) {
    if (!(p > 0.0)) throw std::invalid_argument("CategoricalSampler: probabilities must be positive");
    acc += p;
    cumulative_.push_back(acc);
  }
  // normalize so the last bucket closes exactly at 1
  for (double& c : cumulative_) c /= acc;
  cumulative_.back() = 1.0;
}

std::size_t CategoricalSampler::operator()(CounterRng& rng) const {
  if (cumulative_.size() == 1) return 0;
  const double u = rng.uniform();
  auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), u);
  return std::min<std::size_t>(static_cast<std::size_t>(it - cumulative_.begin()),
                               cumulative_.size() - 1);
}

}  // namespace rpd
