#pragma once

#include <span>
#include <vector>

#include "rpd/problem.hpp"
#include "rpd/random.hpp"
#include "rpd/run.hpp"
#include "rpd/schedule.hpp"

namespace rpd {

struct SrpdOptions {
  bool average = true;
  bool multiplier = true;
};

/// Semi-randomized primal-dual method: full dual prox step through g*,
/// one primal block j ~ q per iteration. Holds a reference to spec.
///
/// Lags at k = 0: y_hat^{-1} = y_hat^0, y^0 = y_hat^0, x_hat^{-1} = x^0, rho_{-1} = rho_0.
class SrpdSolver {
 public:
  SrpdSolver(const ProblemSpec& spec, const Schedule& schedule, std::span<const double> x0,
             std::span<const double> y0, std::uint64_t seed, SrpdOptions opts = {});

  void step();

  const ParamState& params() const { return params_; }
  std::size_t k() const { return params_.k; }
  std::size_t epoch_length() const { return spec_.n(); }
  std::size_t last_j() const { return last_j_; }
  /// Step size of the last primal prox.
  double last_primal_step() const { return last_step_; }

  const std::vector<double>& x() const { return x_; }
  const std::vector<double>& x_tilde() const { return xt_; }
  const std::vector<double>& x_hat_prev() const { return xh_prev_; }
  const std::vector<double>& y() const { return y_; }
  const std::vector<double>& y_hat() const { return yh_; }
  const std::vector<double>& y_hat_prev() const { return yh_prev_; }
  const std::vector<double>& y_bar() const { return yb_; }
  const std::vector<double>& u() const { return u_; }
  const std::vector<double>& u_tilde() const { return ut_; }
  const std::vector<double>& v_prev() const { return v_prev_; }

  double cache_error() const;
  void check_finite() const;

 private:
  const ProblemSpec& spec_;
  Schedule schedule_;
  SrpdOptions opts_;
  ParamState params_;
  CounterRng rng_;
  CategoricalSampler primal_sampler_;
  std::size_t last_j_ = 0;
  double last_step_ = 0.0;

  std::vector<double> x_, xt_, xh_prev_, y_, yh_, yh_prev_, yb_, u_, ut_, v_prev_;
  std::vector<double> xh_, kxh_, y_next_, grad_, dx_, yh_next_, x_next_, u_next_;
};

RunResult srpd_run(const ProblemSpec& spec, const Schedule& schedule, std::span<const double> x0,
                   std::span<const double> y0, const RunOptions& opts);

}  // namespace rpd
