#pragma once

#include <span>

#include "rpd/problem.hpp"
#include "rpd/run.hpp"

namespace rpd {

struct PdhgConfig {
  double tau = 0.0;    // primal step
  double sigma = 0.0;  // dual step
  double theta = 1.0;  // extrapolation
};

/// tau = sigma = 0.99 / ||K||.
PdhgConfig default_pdhg_config(const ProblemConstants& consts);
/// sigma = 0.99 / max_i ||K_i||, tau = 0.99 min_i p_i / max_i ||K_i||, so that
/// tau sigma max_i ||K_i||^2 / p_i < 1.
PdhgConfig default_spdhg_config(const ProblemSpec& spec);

/// Throws std::invalid_argument unless tau, sigma > 0 and sigma tau ||K||^2 < 1.
void validate_pdhg(const PdhgConfig& cfg, double K_norm_sq);
/// Throws std::invalid_argument unless tau sigma max_i ||K_i||^2 / p_i < 1.
void validate_spdhg(const PdhgConfig& cfg, const ProblemSpec& spec);

/// Deterministic PDHG, extrapolating on the dual side:
///   x <- prox_{tau phi}(x - tau z_bar)
///   y+ = prox_{sigma g*}(y + sigma K x)
///   z_bar = K^T (y+ + theta (y+ - y))
/// One epoch is one iteration.
RunResult pdhg_run(const ProblemSpec& spec, const PdhgConfig& cfg, std::span<const double> x0,
                   std::span<const double> y0, const RunOptions& opts);

/// Stochastic PDHG over the row blocks of K with law spec.q_hat:
///   x <- prox_{tau phi}(x - tau z_bar)
///   y_i+ = prox_{sigma g_i*}(y_i + sigma K_i x) for one sampled block i
///   z += K_i^T (y_i+ - y_i),  z_bar = z + (theta / p_i) K_i^T (y_i+ - y_i)
/// One epoch is m iterations. With m = 1 this is pdhg_run step for step.
RunResult spdhg_run(const ProblemSpec& spec, const PdhgConfig& cfg, std::span<const double> x0,
                    std::span<const double> y0, const RunOptions& opts);

}  // namespace rpd
