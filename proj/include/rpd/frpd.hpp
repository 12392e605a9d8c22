#pragma once

#include <algorithm>
#include <span>
#include <vector>

#include "rpd/problem.hpp"
#include "rpd/random.hpp"
#include "rpd/run.hpp"
#include "rpd/schedule.hpp"

namespace rpd {

struct FrpdOptions {
  bool average = true;
  bool zero_eta = false;
};

/// Fully randomized primal-dual method: one dual block i ~ q_hat and one
/// primal block j ~ q per iteration. Holds a reference to spec.
class FrpdSolver {
 public:
  FrpdSolver(const ProblemSpec& spec, const Schedule& schedule, std::span<const double> x0,
             std::span<const double> y0, std::uint64_t seed, FrpdOptions opts = {});

  void step();

  /// Parameters the next step will use.
  const ParamState& params() const { return params_; }
  std::size_t k() const { return params_.k; }
  std::size_t epoch_length() const { return std::max(spec_.n(), spec_.m()); }
  std::size_t last_i() const { return last_i_; }
  std::size_t last_j() const { return last_j_; }

  const std::vector<double>& x() const { return x_; }
  const std::vector<double>& x_tilde() const { return xt_; }
  const std::vector<double>& r() const { return r_; }
  const std::vector<double>& r_tilde() const { return rt_; }
  const std::vector<double>& y_hat() const { return yh_; }
  const std::vector<double>& y_bar() const { return yb_; }
  const std::vector<double>& u() const { return u_; }
  const std::vector<double>& u_tilde() const { return ut_; }

  /// max(||u - Kx|| / (1 + ||Kx||), ||u~ - Kx~|| / (1 + ||Kx~||)).
  double cache_error() const;
  void refresh_caches();
  void check_finite() const;

 private:
  const ProblemSpec& spec_;
  Schedule schedule_;
  FrpdOptions opts_;
  ParamState params_;
  CounterRng rng_;
  CategoricalSampler dual_sampler_;
  CategoricalSampler primal_sampler_;
  std::size_t last_i_ = 0;
  std::size_t last_j_ = 0;

  std::vector<double> x_, xt_, r_, rt_, yh_, yb_, u_, ut_;
  std::vector<double> xh_, rh_, kxh_, w_, grad_, dx_;
};

RunResult frpd_run(const ProblemSpec& spec, const Schedule& schedule, std::span<const double> x0,
                   std::span<const double> y0, const RunOptions& opts);

}  // namespace rpd
