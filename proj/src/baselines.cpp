#include "rpd/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <fmt/core.h>

#include "rpd/random.hpp"

namespace rpd {

namespace {

double max_row_block_ratio(const ProblemSpec& spec) {
  double worst = 0.0;
  for (std::size_t i = 0; i < spec.m(); ++i)
    worst = std::max(worst, spec.K.row_block_opnorm_sq(i).value / spec.q_hat[i]);
  return worst;
}

void check_positive(const PdhgConfig& cfg) {
  if (!(cfg.tau > 0.0) || !(cfg.sigma > 0.0)) throw std::invalid_argument("pdhg: tau and sigma must be positive");
  if (!(cfg.theta >= 0.0)) throw std::invalid_argument("pdhg: theta must be >= 0");
}

// prox of tau * phi with phi_l = f_l + (c_l/2) x^2 + a_l x
void primal_prox(const ProblemSpec& spec, const std::vector<ProxFn>& phi, double tau, std::span<const double> zbar,
                 std::vector<double>& x) {
  for (std::size_t l = 0; l < x.size(); ++l)
    x[l] = phi[l].prox(x[l] - tau * (zbar[l] + spec.h.linear_at(l)), tau);
}

}  // namespace

PdhgConfig default_pdhg_config(const ProblemConstants& consts) {
  const double s = consts.K_norm > 0.0 ? 0.99 / consts.K_norm : 1.0;
  return {s, s, 1.0};
}

PdhgConfig default_spdhg_config(const ProblemSpec& spec) {
  double max_norm = 0.0;
  for (std::size_t i = 0; i < spec.m(); ++i) max_norm = std::max(max_norm, spec.K.row_block_opnorm_sq(i).value);
  max_norm = std::sqrt(max_norm);
  if (max_norm == 0.0) max_norm = 1.0;
  const double pmin = *std::min_element(spec.q_hat.begin(), spec.q_hat.end());
  return {0.99 * pmin / max_norm, 0.99 / max_norm, 1.0};
}

void validate_pdhg(const PdhgConfig& cfg, double K_norm_sq) {
  check_positive(cfg);
  if (cfg.sigma * cfg.tau * K_norm_sq >= 1.0) {
    throw std::invalid_argument(
        fmt::format("pdhg: sigma tau ||K||^2 = {:.6g} must be < 1", cfg.sigma * cfg.tau * K_norm_sq));
  }
}

void validate_spdhg(const PdhgConfig& cfg, const ProblemSpec& spec) {
  check_positive(cfg);
  const double v = cfg.sigma * cfg.tau * max_row_block_ratio(spec);
  if (v >= 1.0) throw std::invalid_argument(fmt::format("spdhg: tau sigma max_i ||K_i||^2/p_i = {:.6g} must be < 1", v));
}

RunResult pdhg_run(const ProblemSpec& spec, const PdhgConfig& cfg, std::span<const double> x0,
                   std::span<const double> y0, const RunOptions& opts) {
  validate_run_options(opts);
  validate_pdhg(cfg, spec.K.opnorm_sq().value);
  if (x0.size() != spec.p() || y0.size() != spec.d()) throw DimensionError("pdhg: start point size mismatch");
  const std::vector<ProxFn> phi = phi_functions(spec);
  std::vector<double> x(x0.begin(), x0.end());
  std::vector<double> y(y0.begin(), y0.end());
  std::vector<double> ynext(spec.d()), kx(spec.d()), ext(spec.d());
  std::vector<double> zbar = spec.K.apply_transpose(y);
  RunResult result;
  StepClock clock;
  std::size_t k = 0;
  auto record = [&](std::size_t epoch) {
    require_finite(x, "pdhg x", k);
    require_finite(y, "pdhg y", k);
    std::optional<double> t;
    if (opts.timing) t = clock.elapsed_ms();
    result.trace.push_back(
        make_record(spec, "pdhg", "none", opts.seed, k, static_cast<double>(epoch), x, y, std::nullopt, t));
  };
  if (opts.record_initial) record(0);
  for (std::size_t e = 1; e <= opts.epochs; ++e) {
    clock.start();
    primal_prox(spec, phi, cfg.tau, zbar, x);
    spec.K.apply_into(x, kx);
    for (std::size_t r = 0; r < spec.d(); ++r) {
      ynext[r] = spec.g[r].prox_conjugate(y[r] + cfg.sigma * kx[r], cfg.sigma);
      ext[r] = ynext[r] + cfg.theta * (ynext[r] - y[r]);
    }
    spec.K.apply_transpose_into(ext, zbar);
    std::swap(y, ynext);
    ++k;
    clock.stop();
    if (e % opts.cadence == 0 || e == opts.epochs) record(e);
  }
  result.x = x;
  result.y = y;
  result.iterations = k;
  return result;
}

RunResult spdhg_run(const ProblemSpec& spec, const PdhgConfig& cfg, std::span<const double> x0,
                    std::span<const double> y0, const RunOptions& opts) {
  validate_run_options(opts);
  validate_spdhg(cfg, spec);
  if (x0.size() != spec.p() || y0.size() != spec.d()) throw DimensionError("spdhg: start point size mismatch");
  const std::vector<ProxFn> phi = phi_functions(spec);
  const Partition& rb = spec.K.row_blocks();
  CounterRng rng(opts.seed, 3);
  CategoricalSampler sampler(spec.q_hat);
  std::vector<double> x(x0.begin(), x0.end());
  std::vector<double> y(y0.begin(), y0.end());
  std::vector<double> z = spec.K.apply_transpose(y);
  std::vector<double> zbar = z;
  std::vector<double> kx, dy, dz(spec.p());
  RunResult result;
  StepClock clock;
  std::size_t k = 0;
  auto record = [&](std::size_t epoch) {
    require_finite(x, "spdhg x", k);
    require_finite(y, "spdhg y", k);
    std::optional<double> t;
    if (opts.timing) t = clock.elapsed_ms();
    result.trace.push_back(
        make_record(spec, "spdhg", "none", opts.seed, k, static_cast<double>(epoch), x, y, std::nullopt, t));
  };
  if (opts.record_initial) record(0);
  const std::size_t len = spec.m();
  for (std::size_t e = 1; e <= opts.epochs; ++e) {
    clock.start();
    for (std::size_t t = 0; t < len; ++t) {
      primal_prox(spec, phi, cfg.tau, zbar, x);
      const std::size_t i = sampler(rng);
      kx.resize(rb.size(i));
      dy.resize(rb.size(i));
      spec.K.row_block_dot_into(i, x, kx);
      for (std::size_t c = 0; c < kx.size(); ++c) {
        const std::size_t r = rb.begin(i) + c;
        const double next = spec.g[r].prox_conjugate(y[r] + cfg.sigma * kx[c], cfg.sigma);
        dy[c] = next - y[r];
        y[r] = next;
      }
      std::fill(dz.begin(), dz.end(), 0.0);
      spec.K.row_block_adjoint_accumulate(i, dy, 1.0, dz);
      const double scale = cfg.theta / spec.q_hat[i];
      for (std::size_t l = 0; l < spec.p(); ++l) {
        z[l] += dz[l];
        zbar[l] = z[l] + scale * dz[l];
      }
      ++k;
    }
    clock.stop();
    if (e % opts.cadence == 0 || e == opts.epochs) record(e);
  }
  result.x = x;
  result.y = y;
  result.iterations = k;
  return result;
}

}  // namespace rpd
