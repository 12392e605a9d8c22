#include "rpd/frpd.hpp"

#include <cmath>
#include <fmt/core.h>

namespace rpd {

namespace {

double rel_gap(std::span<const double> cached, std::span<const double> fresh) {
  double diff = 0.0, nrm = 0.0;
  for (std::size_t r = 0; r < fresh.size(); ++r) {
    diff += (cached[r] - fresh[r]) * (cached[r] - fresh[r]);
    nrm += fresh[r] * fresh[r];
  }
  return std::sqrt(diff) / (1.0 + std::sqrt(nrm));
}

}  // namespace

FrpdSolver::FrpdSolver(const ProblemSpec& spec, const Schedule& schedule, std::span<const double> x0,
                       std::span<const double> y0, std::uint64_t seed, FrpdOptions opts)
    : spec_(spec),
      schedule_(schedule),
      opts_(opts),
      params_(schedule.initial()),
      rng_(seed, 1),
      dual_sampler_(spec.q_hat),
      primal_sampler_(spec.q) {
  if (!is_frpd_kind(schedule.kind())) {
    throw ScheduleError(fmt::format("frpd: schedule {} is not one of s1, s2, s6, s7", schedule_name(schedule.kind())));
  }
  if (x0.size() != spec.p() || y0.size() != spec.d()) {
    throw DimensionError(fmt::format("frpd: start point has sizes ({}, {}), expected ({}, {})", x0.size(), y0.size(),
                                     spec.p(), spec.d()));
  }
  x_.assign(x0.begin(), x0.end());
  xt_ = x_;
  u_ = spec.K.apply(x_);
  ut_ = u_;
  r_ = u_;
  rt_ = r_;
  yh_.assign(y0.begin(), y0.end());
  yb_ = yh_;
  xh_.resize(spec.p());
  rh_.resize(spec.d());
  kxh_.resize(spec.d());
  w_.resize(spec.d());
}

void FrpdSolver::step() {
  const ParamState& P = params_;
  const double tau = P.tau;
  const double rho = P.rho;
  const double eta = opts_.zero_eta ? 0.0 : P.eta;
  const double a = 1.0 - tau;
  const double tau0 = schedule_.tau0();
  const double ratio = tau / tau0;
  const std::size_t p = spec_.p();
  const std::size_t d = spec_.d();

  for (std::size_t l = 0; l < p; ++l) xh_[l] = a * x_[l] + tau * xt_[l];
  for (std::size_t r = 0; r < d; ++r) {
    rh_[r] = a * r_[r] + tau * rt_[r];
    kxh_[r] = a * u_[r] + tau * ut_[r];
    w_[r] = yh_[r] + rho * (kxh_[r] - rh_[r]);
  }

  const std::size_t i = dual_sampler_(rng_);
  const std::size_t j = primal_sampler_(rng_);
  last_i_ = i;
  last_j_ = j;

  // dual block: r~_i <- prox(r~_i + s w_i), since Delta_r = -w
  const Partition& rb = spec_.K.row_blocks();
  const double s_r = tau0 * P.gamma / tau;
  for (std::size_t r = rb.begin(i); r < rb.end(i); ++r) {
    const double next = spec_.g[r].prox(rt_[r] + s_r * w_[r], s_r);
    const double delta = next - rt_[r];
    rt_[r] = next;
    rh_[r] += ratio * delta;  // rh_ becomes r^{k+1}
  }

  // primal block
  const Partition& cb = spec_.K.col_blocks();
  const std::size_t jb = cb.begin(j);
  const std::size_t pj = cb.size(j);
  grad_.resize(pj);
  dx_.resize(pj);
  spec_.K.col_block_adjoint_into(j, w_, grad_);
  const double s_x = tau0 * P.beta / (tau * spec_.sigma[j]);
  for (std::size_t c = 0; c < pj; ++c) {
    const std::size_t l = jb + c;
    const double g = spec_.h.grad(l, xh_[l]) + grad_[c];
    const double next = spec_.f[l].prox(xt_[l] - s_x * g, s_x);
    dx_[c] = next - xt_[l];
    if (!std::isfinite(next)) throw SolverAbort(fmt::format("frpd: non-finite primal update at k={} block {}", P.k, j));
    xt_[l] = next;
    xh_[l] += ratio * dx_[c];  // xh_ becomes x^{k+1}
  }

  // kxh_ becomes K x^{k+1}; u~ tracks K x~
  spec_.K.col_block_accumulate(j, dx_, ratio, kxh_);
  spec_.K.col_block_accumulate(j, dx_, 1.0, ut_);

  if (eta != 0.0) {
    for (std::size_t r = 0; r < d; ++r) yh_[r] += eta * ((kxh_[r] - rh_[r]) - a * (u_[r] - r_[r]));
  }
  if (opts_.average) {
    for (std::size_t r = 0; r < d; ++r) yb_[r] = a * yb_[r] + tau * w_[r];
  }
  std::swap(x_, xh_);
  std::swap(r_, rh_);
  std::swap(u_, kxh_);
  params_ = schedule_.next(params_);
}

double FrpdSolver::cache_error() const {
  return std::max(rel_gap(u_, spec_.K.apply(x_)), rel_gap(ut_, spec_.K.apply(xt_)));
}

void FrpdSolver::refresh_caches() {
  u_ = spec_.K.apply(x_);
  ut_ = spec_.K.apply(xt_);
}

void FrpdSolver::check_finite() const {
  require_finite(x_, "frpd x", params_.k);
  require_finite(r_, "frpd r", params_.k);
  require_finite(yh_, "frpd y_hat", params_.k);
  require_finite(yb_, "frpd y_bar", params_.k);
}

RunResult frpd_run(const ProblemSpec& spec, const Schedule& schedule, std::span<const double> x0,
                   std::span<const double> y0, const RunOptions& opts) {
  validate_run_options(opts);
  FrpdSolver solver(spec, schedule, x0, y0, opts.seed, {opts.average, opts.zero_eta});
  const std::string label = schedule_name(schedule.kind());
  const std::size_t len = solver.epoch_length();
  RunResult result;
  StepClock clock;
  auto record = [&](std::size_t epoch) {
    solver.check_finite();
    result.max_cache_error = std::max(result.max_cache_error, solver.cache_error());
    std::optional<double> t;
    if (opts.timing) t = clock.elapsed_ms();
    result.trace.push_back(make_record(spec, "frpd", label, opts.seed, solver.k(), static_cast<double>(epoch),
                                       solver.x(), solver.y_bar(), std::span<const double>(solver.r()), t));
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
