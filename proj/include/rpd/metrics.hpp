#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "rpd/problem.hpp"
#include "rpd/schedule.hpp"

namespace rpd {

/// One checkpoint. dual is G at the feasibility-restored dual point and is
/// +inf when no restoration exists; dual_violation is the distance of the raw
/// dual iterate to the conjugate domains.
struct TraceRecord {
  std::string method;
  std::string schedule;
  std::uint64_t seed = 0;
  std::size_t k = 0;
  double epoch = 0.0;
  double primal = 0.0;
  double dual = 0.0;
  double gap = 0.0;
  std::optional<double> feas;  // ||Kx - r||, fully randomized method only
  double dual_violation = 0.0;
  std::optional<double> time_ms;
};

struct RateFit {
  std::size_t k_begin = 0;
  std::size_t k_end = 0;
  std::size_t points = 0;
  double slope = 0.0;
  double intercept = 0.0;
  double residual = 0.0;  // weighted RMS of log residuals
};

/// F(x) = sum f_l(x_l) + h(x) + sum g_r((Kx)_r).
double primal_value(const ProblemSpec& spec, std::span<const double> x);
/// G(y) = phi*(-K^T y) + g*(y) with phi = f + h; +inf with the domain distance when infeasible.
ConjValue dual_value(const ProblemSpec& spec, std::span<const double> y);

/// Projects y onto dom g*, then shrinks it toward 0 until -K^T y lands in dom phi*.
/// Leaves y unchanged when it is already feasible.
std::vector<double> restore_dual_feasibility(const ProblemSpec& spec, std::span<const double> y);

struct GapEval {
  double primal = 0.0;
  double dual = 0.0;
  double gap = 0.0;
  double violation = 0.0;
};

GapEval evaluate(const ProblemSpec& spec, std::span<const double> x, std::span<const double> y);

struct ReferenceSolution {
  double F_ref = 0.0;        // best primal value minus a safety margin
  double F_best = 0.0;       // best primal value seen
  double lower_bound = 0.0;  // best -G seen
  std::vector<double> x;
  std::vector<double> y;     // best feasible dual point
};

/// Long PDHG and semi-randomized runs; budget counts epochs of each.
ReferenceSolution reference_solution(const ProblemSpec& spec, std::size_t budget = 10000);

/// Least-squares slope of log(value) against log(k) over the tail of the log-k range.
/// tail = 0.5 keeps points whose log k lies in the upper half of the observed span;
/// each point is weighted by its share of the log-k axis so dense late checkpoints
/// do not dominate.
RateFit fit_rate(std::span<const double> k, std::span<const double> value, double tail = 0.5);
/// column: primal, dual, gap, feas, feas_sq.
RateFit fit_rate(const std::vector<TraceRecord>& trace, const std::string& column, double tail = 0.5);
std::vector<double> trace_column(const std::vector<TraceRecord>& trace, const std::string& column);

/// Median over seeds of a column, aligned on k; traces must share their k grid.
std::vector<double> median_column(const std::vector<std::vector<TraceRecord>>& traces, const std::string& column);

struct BoundPoint {
  std::size_t k = 0;
  double bound = 0.0;
};

/// Right-hand side of the expected primal suboptimality bound for the schedule.
/// Needs spec.lipschitz_g; the strongly convex kinds use the curvature constants.
double bound_constant(const ProblemSpec& spec, const ProblemConstants& consts, const Schedule& schedule,
                      std::span<const double> x0, std::span<const double> y0, std::span<const double> x_star,
                      std::span<const double> y_star, double F_star);
std::vector<BoundPoint> bound_overlay(const ProblemSpec& spec, const ProblemConstants& consts,
                                      const Schedule& schedule, std::span<const double> x0,
                                      std::span<const double> y0, std::span<const double> x_star,
                                      std::span<const double> y_star, double F_star,
                                      std::span<const std::size_t> ks);

}  // namespace rpd
