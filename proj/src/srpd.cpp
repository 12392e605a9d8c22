#include "rpd/srpd.hpp"

#include <cmath>
#include <fmt/core.h>

namespace rpd {

SrpdSolver::SrpdSolver(const ProblemSpec& spec, const Schedule& schedule, std::span<const double> x0,
                       std::span<const double> y0, std::uint64_t seed, SrpdOptions opts)
    : spec_(spec),
      schedule_(schedule),
      opts_(opts),
      params_(schedule.initial()),
      rng_(seed, 2),
      primal_sampler_(spec.q) {
  if (!is_srpd_kind(schedule.kind())) {
    throw ScheduleError(fmt::format("srpd: schedule {} is not one of s3, s4, s5", schedule_name(schedule.kind())));
  }
  if (x0.size() != spec.p() || y0.size() != spec.d()) {
    throw DimensionError(fmt::format("srpd: start point has sizes ({}, {}), expected ({}, {})", x0.size(), y0.size(),
                                     spec.p(), spec.d()));
  }
  x_.assign(x0.begin(), x0.end());
  xt_ = x_;
  xh_prev_ = x_;
  u_ = spec.K.apply(x_);
  ut_ = u_;
  v_prev_ = u_;
  yh_.assign(y0.begin(), y0.end());
  yh_prev_ = yh_;
  y_ = yh_;
  yb_ = yh_;
  xh_.resize(spec.p());
  kxh_.resize(spec.d());
  y_next_.resize(spec.d());
  yh_next_.resize(spec.d());
}

void SrpdSolver::step() {
  const ParamState& P = params_;
  const double tau = P.tau;
  const double rho = P.rho;
  const double eta = P.eta;
  const double a = 1.0 - tau;
  const double tau0 = schedule_.tau0();
  const double ratio = tau / tau0;
  const std::size_t p = spec_.p();
  const std::size_t d = spec_.d();

  for (std::size_t l = 0; l < p; ++l) xh_[l] = a * x_[l] + tau * xt_[l];
  for (std::size_t r = 0; r < d; ++r) {
    kxh_[r] = a * u_[r] + tau * ut_[r];
    y_next_[r] = spec_.g[r].prox_conjugate(yh_[r] + rho * kxh_[r], rho);
  }

  const std::size_t j = primal_sampler_(rng_);
  last_j_ = j;
  const Partition& cb = spec_.K.col_blocks();
  const std::size_t jb = cb.begin(j);
  const std::size_t pj = cb.size(j);
  grad_.resize(pj);
  dx_.resize(pj);
  spec_.K.col_block_adjoint_into(j, y_next_, grad_);
  const double s = tau0 * P.beta / (spec_.sigma[j] * tau);
  last_step_ = s;
  for (std::size_t c = 0; c < pj; ++c) {
    const std::size_t l = jb + c;
    const double g = spec_.h.grad(l, xh_[l]) + grad_[c];
    const double next = spec_.f[l].prox(xt_[l] - s * g, s);
    if (!std::isfinite(next)) throw SolverAbort(fmt::format("srpd: non-finite primal update at k={} block {}", P.k, j));
    dx_[c] = next - xt_[l];
    xt_[l] = next;
  }

  // x^{k+1} = x_hat + ratio dx and K x^{k+1} = K x_hat + ratio K_j dx
  x_next_ = xh_;
  for (std::size_t c = 0; c < pj; ++c) x_next_[jb + c] += ratio * dx_[c];
  u_next_ = kxh_;
  spec_.K.col_block_accumulate(j, dx_, ratio, u_next_);
  spec_.K.col_block_accumulate(j, dx_, 1.0, ut_);

  if (opts_.multiplier) {
    const double c1 = eta * a / P.rho_prev;
    const double c2 = 1.0 - eta / rho;
    const double c3 = eta / rho;
    for (std::size_t r = 0; r < d; ++r) {
      const double theta = (u_next_[r] - kxh_[r]) - a * (u_[r] - v_prev_[r]);
      yh_next_[r] = c1 * yh_prev_[r] + c2 * yh_[r] + c3 * y_next_[r] + eta * theta - c1 * y_[r];
    }
    std::swap(yh_prev_, yh_);
    std::swap(yh_, yh_next_);
  } else {
    yh_prev_ = yh_;
  }

  if (opts_.average) {
    for (std::size_t r = 0; r < d; ++r) yb_[r] = a * yb_[r] + tau * y_next_[r];
  }

  std::swap(x_, x_next_);
  std::swap(xh_prev_, xh_);
  std::swap(u_, u_next_);
  std::swap(v_prev_, kxh_);
  std::swap(y_, y_next_);
  params_ = schedule_.next(params_);
}

double SrpdSolver::cache_error() const {
  auto rel = [](std::span<const double> cached, std::span<const double> fresh) {
    double diff = 0.0, nrm = 0.0;
    for (std::size_t r = 0; r < fresh.size(); ++r) {
      diff += (cached[r] - fresh[r]) * (cached[r] - fresh[r]);
      nrm += fresh[r] * fresh[r];
    }
    return std::sqrt(diff) / (1.0 + std::sqrt(nrm));
  };
  return std::max({rel(u_, spec_.K.apply(x_)), rel(ut_, spec_.K.apply(xt_)), rel(v_prev_, spec_.K.apply(xh_prev_))});
}

void SrpdSolver::check_finite() const {
  require_finite(x_, "srpd x", params_.k);
  require_finite(y_, "srpd y", params_.k);
  require_finite(yh_, "srpd y_hat", params_.k);
  require_finite(yb_, "srpd y_bar", params_.k);
}

RunResult srpd_run(const ProblemSpec& spec, const Schedule& schedule, std::span<const double> x0,
                   std::span<const double> y0, const RunOptions& opts) {
  validate_run_options(opts);
  SrpdSolver solver(spec, schedule, x0, y0, opts.seed, {opts.average, opts.multiplier});
  const std::string label = schedule_name(schedule.kind());
  const std::size_t len = solver.epoch_length();
  RunResult result;
  StepClock clock;
  auto record = [&](std::size_t epoch) {
    solver.check_finite();
    result.max_cache_error = std::max(result.max_cache_error, solver.cache_error());
    std::optional<double> t;
    if (opts.timing) t = clock.elapsed_ms();
    result.trace.push_back(make_record(spec, "srpd", label, opts.seed, solver.k(), static_cast<double>(epoch),
                                       solver.x(), solver.y_bar(), std::nullopt, t));
  };
  if (opts.record_initial) record(0);
  for (std::size_t e = 1; e <= opts.epochs; ++e) {
    clock.start();
    for (std::size_t t = 0; t < len; ++t) solver.step();
    clock.stop();
    if (e % opts.cadence == 0 || e == opts.epochs) record(e);
  }
  result.x = solver.x();
  result.y = solver.y_bar();
  result.iterations = solver.k();
  return result;
}

}  // namespace rpd
