#include "rpd/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <fmt/core.h>
#include <limits>
#include <stdexcept>

#include "rpd/baselines.hpp"
#include "rpd/run.hpp"
#include "rpd/srpd.hpp"

namespace rpd {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// argument of phi* for each coordinate: -(K^T y)_l - a_l
std::vector<double> phi_conj_argument(const ProblemSpec& spec, std::span<const double> y) {
  std::vector<double> v = spec.K.apply_transpose(y);
  for (std::size_t l = 0; l < v.size(); ++l) v[l] = -v[l] - spec.h.linear_at(l);
  return v;
}

double sq_norm(std::span<const double> v) {
  double s = 0.0;
  for (double t : v) s += t * t;
  return s;
}

}  // namespace

void validate_run_options(const RunOptions& opts) {
  if (opts.epochs == 0) throw std::invalid_argument("epochs: must be >= 1");
  if (opts.cadence == 0) throw std::invalid_argument("cadence: must be >= 1");
}

void require_finite(std::span<const double> v, const char* what, std::size_t k) {
  for (std::size_t l = 0; l < v.size(); ++l) {
    if (!std::isfinite(v[l])) throw SolverAbort(fmt::format("{}: entry {} is {} at k={}", what, l, v[l], k));
  }
}

double primal_value(const ProblemSpec& spec, std::span<const double> x) {
  const std::vector<double> kx = spec.K.apply(x);
  return separable_value(spec.f, x) + spec.h.value(x) + separable_value(spec.g, kx);
}

ConjValue dual_value(const ProblemSpec& spec, std::span<const double> y) {
  const std::vector<ProxFn> phi = phi_functions(spec);
  const std::vector<double> v = phi_conj_argument(spec, y);
  const ConjValue a = separable_conj_value(phi, v);
  const ConjValue b = separable_conj_value(spec.g, y);
  ConjValue out;
  out.violation = std::hypot(a.violation, b.violation);
  out.value = out.violation > 0.0 ? kInf : a.value + b.value;
  return out;
}

std::vector<double> restore_dual_feasibility(const ProblemSpec& spec, std::span<const double> y) {
  std::vector<double> out(y.begin(), y.end());
  for (std::size_t r = 0; r < out.size(); ++r) out[r] = spec.g[r].conj_domain().project(out[r]);
  const std::vector<ProxFn> phi = phi_functions(spec);
  const std::vector<double> w = spec.K.apply_transpose(out);
  // need lo <= -s w_l - a_l <= hi for one s in [0, 1]
  double s = 1.0;
  for (std::size_t l = 0; l < w.size(); ++l) {
    const Interval dom = phi[l].conj_domain();
    const double a = spec.h.linear_at(l);
    const double t = -w[l];
    if (!dom.contains(-a)) return out;  // no shrink helps
    if (t > 0.0 && std::isfinite(dom.hi)) s = std::min(s, (dom.hi + a) / t);
    if (t < 0.0 && std::isfinite(dom.lo)) s = std::min(s, (dom.lo + a) / t);
  }
  s = std::max(s, 0.0);
  if (s < 1.0) {
    for (double& v : out) v *= s;
    // rounding can leave s w a hair outside; step down until it lands
    for (int tries = 0; tries < 60 && dual_value(spec, out).violation > 0.0; ++tries)
      for (double& v : out) v *= 1.0 - 1e-15 * std::pow(2.0, tries);
  }
  return out;
}

GapEval evaluate(const ProblemSpec& spec, std::span<const double> x, std::span<const double> y) {
  GapEval ev;
  ev.primal = primal_value(spec, x);
  const ConjValue raw = dual_value(spec, y);
  ev.violation = raw.violation;
  if (raw.violation == 0.0) {
    ev.dual = raw.value;
  } else {
    const std::vector<double> fixed = restore_dual_feasibility(spec, y);
    ev.dual = dual_value(spec, fixed).value;
  }
  ev.gap = ev.primal + ev.dual;
  return ev;
}

TraceRecord make_record(const ProblemSpec& spec, const std::string& method, const std::string& schedule,
                        std::uint64_t seed, std::size_t k, double epoch, std::span<const double> x,
                        std::span<const double> y, std::optional<std::span<const double>> r,
                        std::optional<double> time_ms) {
  const GapEval ev = evaluate(spec, x, y);
  TraceRecord rec;
  rec.method = method;
  rec.schedule = schedule;
  rec.seed = seed;
  rec.k = k;
  rec.epoch = epoch;
  rec.primal = ev.primal;
  rec.dual = ev.dual;
  rec.gap = ev.gap;
  rec.dual_violation = ev.violation;
  rec.time_ms = time_ms;
  if (r) {
    const std::vector<double> kx = spec.K.apply(x);
    double s = 0.0;
    for (std::size_t i = 0; i < kx.size(); ++i) s += (kx[i] - (*r)[i]) * (kx[i] - (*r)[i]);
    rec.feas = std::sqrt(s);
  }
  return rec;
}

ReferenceSolution reference_solution(const ProblemSpec& spec, std::size_t budget) {
  if (budget == 0) throw std::invalid_argument("reference_solution: budget must be >= 1");
  const ProblemConstants consts = constants(spec);
  const std::vector<double> x0(spec.p(), 0.0);
  const std::vector<double> y0(spec.d(), 0.0);

  ReferenceSolution ref;
  ref.F_best = primal_value(spec, x0);
  ref.x = x0;
  ref.lower_bound = -kInf;
  ref.y = y0;
  const GapEval e0 = evaluate(spec, x0, y0);
  if (std::isfinite(e0.dual)) {
    ref.lower_bound = -e0.dual;
    ref.y = restore_dual_feasibility(spec, y0);
  }

  auto absorb = [&](const std::vector<double>& x, const std::vector<double>& y) {
    const GapEval ev = evaluate(spec, x, y);
    if (ev.primal < ref.F_best) {
      ref.F_best = ev.primal;
      ref.x = x;
    }
    if (std::isfinite(ev.dual) && -ev.dual > ref.lower_bound) {
      ref.lower_bound = -ev.dual;
      ref.y = restore_dual_feasibility(spec, y);
    }
  };

  // PDHG, checkpoint every iteration so a longer budget only adds candidates
  {
    const PdhgConfig cfg = consts.K_norm > 0.0 ? default_pdhg_config(consts) : PdhgConfig{1.0, 1.0, 1.0};
    const std::vector<ProxFn> phi = phi_functions(spec);
    std::vector<double> x = x0, y = y0, ynext(spec.d()), kx(spec.d()), ext(spec.d());
    std::vector<double> zbar(spec.p(), 0.0);
    for (std::size_t it = 0; it < budget; ++it) {
      for (std::size_t l = 0; l < x.size(); ++l)
        x[l] = phi[l].prox(x[l] - cfg.tau * (zbar[l] + spec.h.linear_at(l)), cfg.tau);
      spec.K.apply_into(x, kx);
      for (std::size_t r = 0; r < spec.d(); ++r) {
        ynext[r] = spec.g[r].prox_conjugate(y[r] + cfg.sigma * kx[r], cfg.sigma);
        ext[r] = 2.0 * ynext[r] - y[r];
      }
      spec.K.apply_transpose_into(ext, zbar);
      std::swap(y, ynext);
      absorb(x, y);
    }
  }

  // semi-randomized S3 with c tau0 = 1, fixed seed
  if (spec.K.nnz() > 0) {
    const Schedule sched = Schedule::make(ScheduleKind::S3, consts);
    SrpdSolver solver(spec, sched, x0, y0, 0x5EED, {});
    for (std::size_t e = 0; e < budget; ++e) {
      for (std::size_t t = 0; t < solver.epoch_length(); ++t) solver.step();
      absorb(solver.x(), solver.y_bar());
    }
  }

  double margin = 1e-9 * (1.0 + std::abs(ref.F_best));
  if (std::isfinite(ref.lower_bound)) margin = std::clamp(ref.F_best - ref.lower_bound, 0.0, margin);
  ref.F_ref = ref.F_best - margin;
  return ref;
}

RateFit fit_rate(std::span<const double> k, std::span<const double> value, double tail) {
  if (k.size() != value.size()) throw std::invalid_argument("fit_rate: k and value differ in length");
  if (!(tail > 0.0 && tail <= 1.0)) throw std::invalid_argument("fit_rate: tail must be in (0, 1]");
  double lo = kInf, hi = -kInf;
  for (double kk : k) {
    if (kk <= 0.0) continue;
    lo = std::min(lo, std::log(kk));
    hi = std::max(hi, std::log(kk));
  }
  if (!std::isfinite(lo)) throw std::invalid_argument("fit_rate: no positive k");
  const double cut = hi - tail * (hi - lo);

  std::vector<double> t, v;
  std::size_t first = k.size(), last = 0;
  for (std::size_t i = 0; i < k.size(); ++i) {
    if (k[i] <= 0.0 || std::log(k[i]) < cut - 1e-12) continue;
    if (!(value[i] > 0.0) || !std::isfinite(value[i]))
      throw std::invalid_argument(fmt::format("fit_rate: nonpositive value {} at k={}", value[i], k[i]));
    t.push_back(std::log(k[i]));
    v.push_back(std::log(value[i]));
    first = std::min(first, i);
    last = i;
  }
  if (t.size() < 10) throw std::invalid_argument(fmt::format("fit_rate: {} points in window, need 10", t.size()));

  // trapezoid weights on the log-k axis
  const std::size_t n = t.size();
  std::vector<double> w(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double left = i > 0 ? t[i] - t[i - 1] : 0.0;
    const double right = i + 1 < n ? t[i + 1] - t[i] : 0.0;
    w[i] = 0.5 * (left + right);
  }
  double sw = 0.0, st = 0.0, sv = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sw += w[i];
    st += w[i] * t[i];
    sv += w[i] * v[i];
  }
  if (!(sw > 0.0)) throw std::invalid_argument("fit_rate: window spans a single k");
  const double tm = st / sw, vm = sv / sw;
  double stt = 0.0, stv = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    stt += w[i] * (t[i] - tm) * (t[i] - tm);
    stv += w[i] * (t[i] - tm) * (v[i] - vm);
  }
  RateFit fit;
  fit.k_begin = static_cast<std::size_t>(k[first]);
  fit.k_end = static_cast<std::size_t>(k[last]);
  fit.points = n;
  fit.slope = stv / stt;
  fit.intercept = vm - fit.slope * tm;
  double res = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double e = v[i] - (fit.intercept + fit.slope * t[i]);
    res += w[i] * e * e;
  }
  fit.residual = std::sqrt(res / sw);
  return fit;
}

std::vector<double> trace_column(const std::vector<TraceRecord>& trace, const std::string& column) {
  std::vector<double> out;
  out.reserve(trace.size());
  for (const TraceRecord& r : trace) {
    if (column == "primal") {
      out.push_back(r.primal);
    } else if (column == "dual") {
      out.push_back(r.dual);
    } else if (column == "gap") {
      out.push_back(r.gap);
    } else if (column == "dual_violation") {
      out.push_back(r.dual_violation);
    } else if (column == "k") {
      out.push_back(static_cast<double>(r.k));
    } else if (column == "epoch") {
      out.push_back(r.epoch);
    } else if (column == "feas" || column == "feas_sq") {
      if (!r.feas) throw std::invalid_argument(fmt::format("column {}: missing at k={}", column, r.k));
      out.push_back(column == "feas" ? *r.feas : *r.feas * *r.feas);
    } else if (column == "time_ms") {
      if (!r.time_ms) throw std::invalid_argument(fmt::format("column time_ms: missing at k={}", r.k));
      out.push_back(*r.time_ms);
    } else {
      throw std::invalid_argument(fmt::format("unknown column '{}'", column));
    }
  }
  return out;
}

RateFit fit_rate(const std::vector<TraceRecord>& trace, const std::string& column, double tail) {
  const std::vector<double> k = trace_column(trace, "k");
  const std::vector<double> v = trace_column(trace, column);
  return fit_rate(k, v, tail);
}

std::vector<double> median_column(const std::vector<std::vector<TraceRecord>>& traces, const std::string& column) {
  if (traces.empty()) throw std::invalid_argument("median_column: no traces");
  const std::size_t len = traces.front().size();
  std::vector<std::vector<double>> cols;
  for (const auto& tr : traces) {
    if (tr.size() != len) throw std::invalid_argument("median_column: traces differ in length");
    for (std::size_t i = 0; i < len; ++i)
      if (tr[i].k != traces.front()[i].k) throw std::invalid_argument("median_column: traces differ in k grid");
    cols.push_back(trace_column(tr, column));
  }
  std::vector<double> out(len), buf(traces.size());
  for (std::size_t i = 0; i < len; ++i) {
    for (std::size_t s = 0; s < cols.size(); ++s) buf[s] = cols[s][i];
    std::sort(buf.begin(), buf.end());
    const std::size_t h = buf.size() / 2;
    out[i] = buf.size() % 2 ? buf[h] : 0.5 * (buf[h - 1] + buf[h]);
  }
  return out;
}

namespace {

bool uses_c_form(ScheduleKind kind, double c, double tau0) {
  switch (kind) {
    case ScheduleKind::S2:
    case ScheduleKind::S5:
    case ScheduleKind::S7:
      return true;
    case ScheduleKind::S3:
      return std::abs(c * tau0 - 1.0) > 1e-12;
    default:
      return false;
  }
}

bool squared_rate(ScheduleKind kind) {
  return kind == ScheduleKind::S4 || kind == ScheduleKind::S5 || kind == ScheduleKind::S6 ||
         kind == ScheduleKind::S7;
}

}  // namespace

double bound_constant(const ProblemSpec& spec, const ProblemConstants& consts, const Schedule& schedule,
                      std::span<const double> x0, std::span<const double> y0, std::span<const double> x_star,
                      std::span<const double> y_star, double F_star) {
  if (!spec.lipschitz_g) throw std::invalid_argument("bound_overlay: the primal bound needs lipschitz_g (M_g)");
  const ScheduleKind kind = schedule.kind();
  if (needs_strong_convexity(kind) && !(consts.mu_f > 0.0))
    throw std::invalid_argument("bound_overlay: schedule needs mu_f > 0");
  const bool dual_curv = kind == ScheduleKind::S6 || kind == ScheduleKind::S7;
  if (dual_curv && !(consts.mu_g > 0.0)) throw std::invalid_argument("bound_overlay: schedule needs mu_g > 0");

  const double tau0 = schedule.tau0();
  const double rho0 = schedule.rho0();
  const double Lb = consts.L_bar, Lh = consts.L_h;

  // ||x0 - x*||^2_{sigma/q}
  const Partition& cb = spec.K.col_blocks();
  double dx = 0.0;
  for (std::size_t j = 0; j < spec.n(); ++j) {
    double s = 0.0;
    for (std::size_t l = cb.begin(j); l < cb.end(j); ++l) s += (x0[l] - x_star[l]) * (x0[l] - x_star[l]);
    dx += spec.sigma[j] / spec.q[j] * s;
  }
  // ||K(x0 - x*)||^2_{1/q_hat}
  std::vector<double> diff(x0.size());
  for (std::size_t l = 0; l < diff.size(); ++l) diff[l] = x0[l] - x_star[l];
  const std::vector<double> kd = spec.K.apply(diff);
  const Partition& rb = spec.K.row_blocks();
  double dk = 0.0;
  for (std::size_t i = 0; i < spec.m(); ++i) {
    double s = 0.0;
    for (std::size_t r = rb.begin(i); r < rb.end(i); ++r) s += kd[r] * kd[r];
    dk += s / spec.q_hat[i];
  }
  double dy = 0.0;
  for (std::size_t r = 0; r < y0.size(); ++r) dy += (y0[r] - y_star[r]) * (y0[r] - y_star[r]);

  const double F0 = primal_value(spec, x0) - F_star;
  double E2 = 0.0;
  switch (kind) {
    case ScheduleKind::S1:
    case ScheduleKind::S2:
      E2 = F0 + dy / rho0 + 0.5 * (Lh + 4.0 * rho0 * Lb) * tau0 * dx + 2.0 * tau0 * rho0 * dk;
      break;
    case ScheduleKind::S3:
      E2 = F0 + 0.5 * (2.0 * Lb * rho0 + Lh) * tau0 * dx + dy / rho0;
      break;
    case ScheduleKind::S4:
    case ScheduleKind::S5:
      E2 = F0 + 0.5 * tau0 * (Lh + 2.0 * Lb * rho0 + consts.mu_f) * dx + dy / rho0;
      break;
    case ScheduleKind::S6:
    case ScheduleKind::S7:
      E2 = F0 + dy / rho0 + 0.5 * (Lh + 4.0 * rho0 * Lb + consts.mu_f) * tau0 * dx +
           0.5 * tau0 * (4.0 * rho0 + consts.mu_g) * dk;
      break;
  }
  E2 = std::max(E2, 0.0);
  const double E = std::sqrt(E2);
  const double lip = *spec.lipschitz_g + std::sqrt(sq_norm(y_star));
  double C = 0.0;
  if (kind == ScheduleKind::S2) {
    C = E2 + lip * E * std::sqrt(2.0 * schedule.c() / rho0);
  } else {
    C = E2 + lip * E * std::sqrt(2.0 / rho0);
  }
  if (squared_rate(kind) && !uses_c_form(kind, schedule.c(), tau0)) C *= 4.0;
  return C;
}

std::vector<BoundPoint> bound_overlay(const ProblemSpec& spec, const ProblemConstants& consts,
                                      const Schedule& schedule, std::span<const double> x0,
                                      std::span<const double> y0, std::span<const double> x_star,
                                      std::span<const double> y_star, double F_star,
                                      std::span<const std::size_t> ks) {
  const double C = bound_constant(spec, consts, schedule, x0, y0, x_star, y_star, F_star);
  const double tau0 = schedule.tau0();
  const double c = schedule.c();
  const bool cform = uses_c_form(schedule.kind(), c, tau0);
  std::vector<BoundPoint> out;
  out.reserve(ks.size());
  for (std::size_t k : ks) {
    const double kk = static_cast<double>(k);
    double D = cform ? (kk + c - 1.0) / c : tau0 * kk + 1.0 - tau0;
    if (squared_rate(schedule.kind())) D *= D;
    out.push_back({k, D > 0.0 ? C / D : kInf});
  }
  return out;
}

}  // namespace rpd
