#pragma once

#include <chrono>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "rpd/metrics.hpp"

namespace rpd {

/// Raised when an iterate stops being finite.
class SolverAbort : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct RunOptions {
  std::size_t epochs = 1;
  std::uint64_t seed = 1;
  std::size_t cadence = 1;     // epochs between checkpoints
  bool average = true;         // maintain the averaged dual iterate
  bool multiplier = true;      // dual multiplier update
  bool zero_eta = false;       // fully randomized method with eta_k := 0
  bool timing = false;         // fill time_ms
  bool record_initial = false; // checkpoint at k = 0
};

struct RunResult {
  std::vector<TraceRecord> trace;
  std::vector<double> x;
  std::vector<double> y;  // averaged dual iterate (last dual iterate for the baselines)
  std::size_t iterations = 0;
  double max_cache_error = 0.0;
};

void validate_run_options(const RunOptions& opts);

/// Accumulates solver time, excluding checkpoint evaluation.
class StepClock {
 public:
  void start() { t0_ = std::chrono::steady_clock::now(); }
  void stop() { total_ += std::chrono::steady_clock::now() - t0_; }
  double elapsed_ms() const { return std::chrono::duration<double, std::milli>(total_).count(); }

 private:
  std::chrono::steady_clock::time_point t0_;
  std::chrono::steady_clock::duration total_{0};
};

/// Evaluates F, G, gap (and ||Kx - r|| when r is given) into a record.
TraceRecord make_record(const ProblemSpec& spec, const std::string& method, const std::string& schedule,
                        std::uint64_t seed, std::size_t k, double epoch, std::span<const double> x,
                        std::span<const double> y, std::optional<std::span<const double>> r,
                        std::optional<double> time_ms);

/// Throws SolverAbort if any entry is not finite.
void require_finite(std::span<const double> v, const char* what, std::size_t k);

}  // namespace rpd
