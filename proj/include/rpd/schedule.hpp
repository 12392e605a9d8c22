#pragma once

#include <cstddef>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "rpd/problem.hpp"

namespace rpd {

/// Parameter schedules.
///   S1  tau_k = tau0/(tau0 k + 1), rho_k = rho0 (tau0 k + 1)            (c tau0 = 1)
///   S2  tau_k = c tau0/(k + c),     rho_k = rho0 tau0/tau_k               (c tau0 > 1)
///   S3  as S2, semi-randomized, beta with 2 L_bar                         (c >= 1, c tau0 >= 1)
///   S4  tau_k = tau_{k-1}/2 (sqrt(tau_{k-1}^2 + 4) - tau_{k-1}), rho_k = rho0 tau0^2/tau_k^2
///   S5  tau_k = c tau0/(k + c),     rho_k = rho0 tau0^2/tau_k^2           (c tau0 > 2)
///   S6  S4 recursion, rho_k = rho_{k-1}/(1 - tau_k)
///   S7  tau_k = c tau0/(k + c),     rho_k = rho0 tau0^2/tau_k^2           (c >= 2, c tau0 > 2)
/// gamma_k = 1/(4 rho_k), eta_k = rho_k/2, beta_k = 1/(L_h + c_beta L_bar rho_k)
/// with c_beta = 4 for S1, S2, S6, S7 and 2 for S3, S4, S5.
enum class ScheduleKind { S1, S2, S3, S4, S5, S6, S7 };

class ScheduleError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

std::string schedule_name(ScheduleKind kind);
ScheduleKind parse_schedule(std::string_view text);

bool is_frpd_kind(ScheduleKind kind);
bool is_srpd_kind(ScheduleKind kind);
bool needs_strong_convexity(ScheduleKind kind);

/// tau0 the schedule runs on: min over q only for the semi-randomized kinds.
double schedule_tau0(ScheduleKind kind, const ProblemConstants& consts);
/// 1/tau0 for S1/S3, 2/tau0 + 1 otherwise.
double auto_c(ScheduleKind kind, double tau0);
/// Largest admissible rho0 (+inf when unconstrained).
double rho0_cap(ScheduleKind kind, const ProblemConstants& consts);
/// 1/||K|| without strong convexity, the cap otherwise.
double auto_rho0(ScheduleKind kind, const ProblemConstants& consts);

struct ParamState {
  std::size_t k = 0;
  double tau = 1.0, rho = 1.0, gamma = 0.25, beta = 1.0, eta = 0.5;
  double tau_prev = 1.0, rho_prev = 1.0, gamma_prev = 0.25, beta_prev = 1.0, eta_prev = 0.5;
};

class Schedule {
 public:
  Schedule(ScheduleKind kind, double tau0, double c, double rho0, double L_bar, double L_h,
           double rho0_cap = std::numeric_limits<double>::infinity());

  /// Resolves unset c / rho0 with auto_c / auto_rho0 and checks the kind's constraint.
  static Schedule make(ScheduleKind kind, const ProblemConstants& consts, std::optional<double> c = std::nullopt,
                       std::optional<double> rho0 = std::nullopt);

  ParamState initial() const;
  ParamState next(const ParamState& prev) const;
  ParamState at(std::size_t k) const;

  ScheduleKind kind() const { return kind_; }
  double tau0() const { return tau0_; }
  double c() const { return c_; }
  double rho0() const { return rho0_; }
  double L_bar() const { return L_bar_; }
  double L_h() const { return L_h_; }
  double beta_factor() const;
  std::string describe() const;

 private:
  ParamState fill(std::size_t k, double tau, double rho) const;

  ScheduleKind kind_;
  double tau0_;
  double c_;
  double rho0_;
  double L_bar_;
  double L_h_;
};

struct ConditionViolation {
  std::size_t k = 0;
  int condition = 0;      // 1-based
  std::size_t block = 0;  // block index for the per-block conditions
  double slack = 0.0;     // relative
};

struct ConditionReport {
  bool pass = true;
  std::size_t horizon = 0;
  bool semi_randomized = false;
  std::optional<ConditionViolation> first;
  std::vector<double> min_slack;          // per condition, relative
  std::vector<std::size_t> worst_k;       // where min_slack occurs
  std::vector<std::size_t> violations;    // count per condition
};

inline constexpr double kSlackTolerance = -1e-12;

/// (lhs - rhs) / max(|lhs|, |rhs|); 0 when both vanish.
double relative_slack(double lhs, double rhs);

/// Slack of each inequality for the transition prev -> cur; per-block ones take the worst block.
/// Fully randomized: six inequalities. Semi-randomized: four, ordered
/// (a) mu_f coupling, (b) eta growth, (c) beta bound, (d) rho growth.
std::vector<ConditionViolation> frpd_condition_slacks(const ParamState& cur, double tau0, double L_bar, double L_h,
                                                      const BlockLaws& laws);
std::vector<ConditionViolation> srpd_condition_slacks(const ParamState& cur, double tau0, double L_bar, double L_h,
                                                      const BlockLaws& laws);

/// Evaluates the system matching the schedule kind for k = 1..horizon.
ConditionReport check_conditions(const Schedule& schedule, const BlockLaws& laws, std::size_t horizon);
std::string format_report(const ConditionReport& report);

struct ClosedForm {
  double tau = 0.0;
  double rho = 0.0;
  double omega = 0.0;
};

/// S1 closed forms tau_k = tau0/(tau0 k + 1), rho_k = rho0 (tau0 k + 1), omega_k = (1 - tau0)/(tau0 k + 1).
ClosedForm closed_form_check(ScheduleKind kind, double tau0, double rho0, std::size_t k);

}  // namespace rpd
