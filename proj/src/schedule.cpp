#include "rpd/schedule.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fmt/core.h>

namespace rpd {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// 2t / (sqrt(t^2 + 4) + t) equals t/2 (sqrt(t^2 + 4) - t) without the cancellation
double quadratic_step(double t) {
  return 2.0 * t / (std::sqrt(t * t + 4.0) + t);
}

}  // namespace

std::string schedule_name(ScheduleKind kind) {
  return fmt::format("s{}", static_cast<int>(kind) + 1);
}

ScheduleKind parse_schedule(std::string_view text) {
  std::string t;
  for (char ch : text) t.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(ch))));
  if (t.size() == 2 && t[0] == 's' && t[1] >= '1' && t[1] <= '7') return static_cast<ScheduleKind>(t[1] - '1');
  throw ScheduleError(fmt::format("unknown schedule '{}' (expected s1..s7)", text));
}

bool is_frpd_kind(ScheduleKind kind) {
  return kind == ScheduleKind::S1 || kind == ScheduleKind::S2 || kind == ScheduleKind::S6 ||
         kind == ScheduleKind::S7;
}

bool is_srpd_kind(ScheduleKind kind) {
  return kind == ScheduleKind::S3 || kind == ScheduleKind::S4 || kind == ScheduleKind::S5;
}

bool needs_strong_convexity(ScheduleKind kind) {
  return kind == ScheduleKind::S4 || kind == ScheduleKind::S5 || kind == ScheduleKind::S6 ||
         kind == ScheduleKind::S7;
}

double schedule_tau0(ScheduleKind kind, const ProblemConstants& consts) {
  return is_srpd_kind(kind) ? consts.tau0_primal : consts.tau0;
}

double auto_c(ScheduleKind kind, double tau0) {
  if (kind == ScheduleKind::S1 || kind == ScheduleKind::S3) return 1.0 / tau0;
  return 2.0 / tau0 + 1.0;
}

double rho0_cap(ScheduleKind kind, const ProblemConstants& consts) {
  switch (kind) {
    case ScheduleKind::S4:
    case ScheduleKind::S5:
      return consts.L_bar > 0.0 ? consts.mu_f / (8.0 * consts.L_bar) : kInf;
    case ScheduleKind::S6:
    case ScheduleKind::S7:
      return std::min(consts.mu_g, consts.L_bar > 0.0 ? consts.mu_f / consts.L_bar : kInf) / 8.0;
    default:
      return kInf;
  }
}

double auto_rho0(ScheduleKind kind, const ProblemConstants& consts) {
  if (needs_strong_convexity(kind)) return rho0_cap(kind, consts);
  return consts.K_norm > 0.0 ? 1.0 / consts.K_norm : 1.0;
}

Schedule::Schedule(ScheduleKind kind, double tau0, double c, double rho0, double L_bar, double L_h, double cap)
    : kind_(kind), tau0_(tau0), c_(c), rho0_(rho0), L_bar_(L_bar), L_h_(L_h) {
  const std::string name = schedule_name(kind);
  if (!(tau0 > 0.0 && tau0 <= 1.0)) throw ScheduleError(fmt::format("{}: tau0 = {} not in (0, 1]", name, tau0));
  if (!(rho0 > 0.0) || std::isinf(rho0)) throw ScheduleError(fmt::format("{}: rho0 must be positive", name));
  if (!(L_bar >= 0.0) || !(L_h >= 0.0)) throw ScheduleError(fmt::format("{}: constants must be >= 0", name));
  const double ct = c * tau0;
  switch (kind) {
    case ScheduleKind::S1:
      if (std::abs(ct - 1.0) > 1e-12) throw ScheduleError(fmt::format("s1: needs c tau0 = 1, got {}", ct));
      break;
    case ScheduleKind::S2:
      if (!(ct > 1.0)) throw ScheduleError(fmt::format("s2: needs c tau0 > 1, got {}", ct));
      break;
    case ScheduleKind::S3:
      if (!(c >= 1.0) || !(ct >= 1.0 - 1e-12)) throw ScheduleError(fmt::format("s3: needs c >= 1 and c tau0 >= 1"));
      break;
    case ScheduleKind::S5:
      if (!(ct > 2.0)) throw ScheduleError(fmt::format("s5: needs c tau0 > 2, got {}", ct));
      break;
    case ScheduleKind::S7:
      if (!(c >= 2.0) || !(ct > 2.0)) throw ScheduleError(fmt::format("s7: needs c >= 2 and c tau0 > 2"));
      break;
    default:
      break;
  }
  if (needs_strong_convexity(kind)) {
    if (!(cap > 0.0)) throw ScheduleError(fmt::format("{}: requires strong convexity (rho0 cap is {})", name, cap));
    if (rho0 > cap * (1.0 + 1e-12)) {
      throw ScheduleError(fmt::format("{}: rho0 = {} exceeds the cap {}", name, rho0, cap));
    }
  }
}

Schedule Schedule::make(ScheduleKind kind, const ProblemConstants& consts, std::optional<double> c,
                        std::optional<double> rho0) {
  const double tau0 = schedule_tau0(kind, consts);
  const double cc = c.value_or(auto_c(kind, tau0));
  const double r0 = rho0.value_or(auto_rho0(kind, consts));
  return Schedule(kind, tau0, cc, r0, consts.L_bar, consts.L_h, rho0_cap(kind, consts));
}

double Schedule::beta_factor() const {
  return (kind_ == ScheduleKind::S3 || kind_ == ScheduleKind::S4 || kind_ == ScheduleKind::S5) ? 2.0 : 4.0;
}

ParamState Schedule::fill(std::size_t k, double tau, double rho) const {
  ParamState s;
  s.k = k;
  s.tau = tau;
  s.rho = rho;
  s.gamma = 1.0 / (4.0 * rho);
  s.beta = 1.0 / (L_h_ + beta_factor() * L_bar_ * rho);
  s.eta = 0.5 * rho;
  return s;
}

ParamState Schedule::initial() const {
  ParamState s = fill(0, tau0_, rho0_);
  s.tau_prev = s.tau;
  s.rho_prev = s.rho;
  s.gamma_prev = s.gamma;
  s.beta_prev = s.beta;
  s.eta_prev = s.eta;
  return s;
}

ParamState Schedule::next(const ParamState& prev) const {
  const std::size_t k = prev.k + 1;
  const double kd = static_cast<double>(k);
  double tau = 0.0;
  double rho = 0.0;
  switch (kind_) {
    case ScheduleKind::S1:
      tau = tau0_ / (tau0_ * kd + 1.0);
      rho = rho0_ * (tau0_ * kd + 1.0);
      break;
    case ScheduleKind::S2:
    case ScheduleKind::S3:
      tau = c_ * tau0_ / (kd + c_);
      rho = rho0_ * tau0_ / tau;
      break;
    case ScheduleKind::S5:
    case ScheduleKind::S7:
      tau = c_ * tau0_ / (kd + c_);
      rho = rho0_ * tau0_ * tau0_ / (tau * tau);
      break;
    case ScheduleKind::S4:
      tau = quadratic_step(prev.tau);
      rho = rho0_ * tau0_ * tau0_ / (tau * tau);
      break;
    case ScheduleKind::S6:
      tau = quadratic_step(prev.tau);
      rho = prev.rho / (1.0 - tau);
      break;
  }
  ParamState s = fill(k, tau, rho);
  s.tau_prev = prev.tau;
  s.rho_prev = prev.rho;
  s.gamma_prev = prev.gamma;
  s.beta_prev = prev.beta;
  s.eta_prev = prev.eta;
  return s;
}

ParamState Schedule::at(std::size_t k) const {
  ParamState s = initial();
  while (s.k < k) s = next(s);
  return s;
}

std::string Schedule::describe() const {
  return fmt::format("{} tau0={:.6g} c={:.6g} rho0={:.6g} L_bar={:.6g} L_h={:.6g}", schedule_name(kind_), tau0_,
                     c_, rho0_, L_bar_, L_h_);
}

double relative_slack(double lhs, double rhs) {
  const double scale = std::max(std::abs(lhs), std::abs(rhs));
  if (scale == 0.0) return 0.0;
  if (std::isinf(scale)) return (lhs == rhs) ? 0.0 : (lhs > rhs ? 1.0 : -1.0);
  return (lhs - rhs) / scale;
}

std::vector<ConditionViolation> frpd_condition_slacks(const ParamState& s, double tau0, double L_bar, double L_h,
                                                      const BlockLaws& laws) {
  std::vector<ConditionViolation> out(6);
  for (int c = 0; c < 6; ++c) out[c] = {s.k, c + 1, 0, kInf};
  auto put = [&](int c, std::size_t block, double lhs, double rhs) {
    const double sl = relative_slack(lhs, rhs);
    if (sl < out[c].slack) out[c] = {s.k, c + 1, block, sl};
  };
  const double one_minus = 1.0 - s.tau;
  put(0, 0, s.rho_prev, one_minus * s.rho);
  put(1, 0, s.eta * one_minus, s.eta_prev);
  put(2, 0, (s.rho - s.eta) / (2.0 * s.rho * s.rho), s.gamma);
  put(3, 0, (s.rho - s.eta) / (L_h * (s.rho - s.eta) + 2.0 * L_bar * s.rho * s.rho), s.beta);
  for (std::size_t i = 0; i < laws.q_hat.size(); ++i) {
    const double mu = laws.mu_g[i];
    const double lhs = s.tau_prev * s.tau_prev / (tau0 * s.gamma_prev) + mu * s.tau_prev;
    const double rhs = s.tau * s.tau / (tau0 * s.gamma * one_minus) + (1.0 - laws.q_hat[i]) * mu * s.tau / one_minus;
    put(4, i, lhs, rhs);
  }
  for (std::size_t j = 0; j < laws.q.size(); ++j) {
    const double mu = laws.mu_f[j];
    const double sg = laws.sigma[j];
    const double lhs = sg * s.tau_prev * s.tau_prev / (tau0 * s.beta_prev) + mu * s.tau_prev;
    const double rhs = sg * s.tau * s.tau / (tau0 * s.beta * one_minus) + (1.0 - laws.q[j]) * mu * s.tau / one_minus;
    put(5, j, lhs, rhs);
  }
  return out;
}

std::vector<ConditionViolation> srpd_condition_slacks(const ParamState& s, double tau0, double L_bar, double L_h,
                                                      const BlockLaws& laws) {
  std::vector<ConditionViolation> out(4);
  for (int c = 0; c < 4; ++c) out[c] = {s.k, c + 1, 0, kInf};
  auto put = [&](int c, std::size_t block, double lhs, double rhs) {
    const double sl = relative_slack(lhs, rhs);
    if (sl < out[c].slack) out[c] = {s.k, c + 1, block, sl};
  };
  const double one_minus = 1.0 - s.tau;
  for (std::size_t j = 0; j < laws.q.size(); ++j) {
    const double mu = laws.mu_f[j];
    const double sg = laws.sigma[j];
    const double lhs = one_minus * s.tau_prev * (s.tau_prev * sg / (tau0 * s.beta_prev) + mu);
    const double rhs = s.tau * (s.tau * sg / (tau0 * s.beta) + (1.0 - laws.q[j]) * mu);
    put(0, j, lhs, rhs);
  }
  put(1, 0, one_minus * s.eta, s.eta_prev);
  // 1/beta >= rho L_bar + L_h + eta rho L_bar / (rho - eta)
  put(2, 0, 1.0 / s.beta, s.rho * L_bar + L_h + s.eta * s.rho * L_bar / (s.rho - s.eta));
  put(3, 0, s.rho_prev, one_minus * s.rho);
  return out;
}

ConditionReport check_conditions(const Schedule& schedule, const BlockLaws& laws, std::size_t horizon) {
  if (horizon < 1) throw std::invalid_argument("check_conditions: horizon must be >= 1");
  ConditionReport report;
  report.horizon = horizon;
  report.semi_randomized = is_srpd_kind(schedule.kind());
  const std::size_t count = report.semi_randomized ? 4 : 6;
  report.min_slack.assign(count, kInf);
  report.worst_k.assign(count, 0);
  report.violations.assign(count, 0);
  ParamState s = schedule.initial();
  for (std::size_t k = 1; k <= horizon; ++k) {
    s = schedule.next(s);
    const auto slacks = report.semi_randomized
                            ? srpd_condition_slacks(s, schedule.tau0(), schedule.L_bar(), schedule.L_h(), laws)
                            : frpd_condition_slacks(s, schedule.tau0(), schedule.L_bar(), schedule.L_h(), laws);
    for (std::size_t c = 0; c < count; ++c) {
      const ConditionViolation& v = slacks[c];
      if (v.slack < report.min_slack[c]) {
        report.min_slack[c] = v.slack;
        report.worst_k[c] = k;
      }
      if (v.slack < kSlackTolerance) {
        ++report.violations[c];
        if (!report.first) report.first = v;
        report.pass = false;
      }
    }
  }
  return report;
}

std::string format_report(const ConditionReport& report) {
  std::string out = fmt::format("{} system, k = 1..{}: {}\n", report.semi_randomized ? "semi-randomized" : "fully randomized",
                                report.horizon, report.pass ? "pass" : "FAIL");
  for (std::size_t c = 0; c < report.min_slack.size(); ++c) {
    out += fmt::format("  condition {}: min relative slack {:+.3e} at k={}, violations {}\n", c + 1,
                       report.min_slack[c], report.worst_k[c], report.violations[c]);
  }
  if (report.first) {
    out += fmt::format("  first violation: k={} condition {} block {} slack {:+.3e}\n", report.first->k,
                       report.first->condition, report.first->block, report.first->slack);
  }
  return out;
}

ClosedForm closed_form_check(ScheduleKind kind, double tau0, double rho0, std::size_t k) {
  if (kind != ScheduleKind::S1) throw ScheduleError("closed_form_check: only defined for s1");
  const double denom = tau0 * static_cast<double>(k) + 1.0;
  return {tau0 / denom, rho0 * denom, (1.0 - tau0) / denom};
}

}  // namespace rpd
