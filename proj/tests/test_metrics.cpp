#include <doctest.h>

#include <cmath>

#include "rpd/metrics.hpp"
#include "rpd/schedule.hpp"
#include "support.hpp"

using namespace rpd;
using namespace testing_support;

TEST_CASE("fit_rate recovers exact power laws") {
  std::vector<double> k, v1, v2;
  for (int t = 1; t <= 300; ++t) {
    k.push_back(t);
    v1.push_back(3.0 / t);
    v2.push_back(0.5 * std::pow(t, -2.0));
  }
  const RateFit f1 = fit_rate(k, v1);
  CHECK(f1.slope == doctest::Approx(-1.0).epsilon(1e-12));
  CHECK(std::exp(f1.intercept) == doctest::Approx(3.0).epsilon(1e-10));
  CHECK(f1.residual < 1e-12);
  CHECK(fit_rate(k, v2).slope == doctest::Approx(-2.0).epsilon(1e-12));
  // window covers log k in [log(300)/2, log 300]
  CHECK(f1.k_begin == 18);
  CHECK(f1.k_end == 300);
  CHECK(fit_rate(k, v1, 1.0).k_begin == 1);
}

TEST_CASE("fit_rate only sees the tail") {
  std::vector<double> k, v;
  for (int t = 1; t <= 10000; ++t) {
    k.push_back(t);
    v.push_back(t < 100 ? std::pow(t, -0.5) : 0.1 * std::pow(t / 100.0, -2.0));
  }
  CHECK(fit_rate(k, v, 0.5).slope == doctest::Approx(-2.0).epsilon(1e-6));
  CHECK(fit_rate(k, v, 1.0).slope > -2.0);
}

TEST_CASE("fit_rate weights by log spacing") {
  // a dense cluster at large k with a different slope must not dominate
  std::vector<double> k, v;
  for (double t = 10.0; t <= 1000.0; t *= 1.1) {
    k.push_back(t);
    v.push_back(1.0 / t);
  }
  const std::size_t before = k.size();
  for (int t = 0; t < 500; ++t) {
    k.push_back(1000.0 + 0.001 * (t + 1));
    v.push_back(1.0 / 1000.0);
  }
  CHECK(k.size() > before);
  CHECK(fit_rate(k, v).slope == doctest::Approx(-1.0).epsilon(0.02));
}

TEST_CASE("fit_rate on noisy data") {
  CounterRng rng(5);
  std::vector<double> k, v;
  for (int t = 1; t <= 1000; ++t) {
    k.push_back(t);
    v.push_back(std::exp(0.05 * rng.normal()) / t);
  }
  CHECK(fit_rate(k, v).slope == doctest::Approx(-1.0).epsilon(0.05));
}

TEST_CASE("fit_rate errors") {
  std::vector<double> k{1, 2, 3}, v{1, 0.5, 0.3};
  CHECK_THROWS(fit_rate(k, v));
  std::vector<double> kk, vv;
  for (int t = 1; t <= 50; ++t) {
    kk.push_back(t);
    vv.push_back(t == 40 ? 0.0 : 1.0 / t);
  }
  CHECK_THROWS(fit_rate(kk, vv));
  CHECK_THROWS(fit_rate(kk, std::vector<double>(3, 1.0)));
  CHECK_THROWS(fit_rate(kk, vv, 0.0));
}

namespace {

std::vector<TraceRecord> toy_trace(double scale, std::size_t n) {
  std::vector<TraceRecord> t;
  for (std::size_t k = 1; k <= n; ++k) {
    TraceRecord r;
    r.k = k;
    r.epoch = static_cast<double>(k);
    r.primal = 1.0 + scale / static_cast<double>(k);
    r.dual = -1.0;
    r.gap = scale / static_cast<double>(k);
    r.feas = scale / static_cast<double>(k);
    t.push_back(r);
  }
  return t;
}

}  // namespace

TEST_CASE("trace columns and medians") {
  const auto a = toy_trace(1.0, 30), b = toy_trace(2.0, 30), c = toy_trace(5.0, 30);
  const std::vector<double> sq = trace_column(a, "feas_sq");
  CHECK(sq[1] == doctest::Approx(0.25));
  CHECK(trace_column(a, "k")[4] == 5.0);
  CHECK_THROWS(trace_column(a, "nope"));
  const std::vector<double> med = median_column({a, c, b}, "gap");
  CHECK(med[0] == doctest::Approx(2.0));
  const std::vector<double> med2 = median_column({a, b}, "gap");
  CHECK(med2[0] == doctest::Approx(1.5));
  CHECK_THROWS(median_column({a, toy_trace(1.0, 20)}, "gap"));
  CHECK(fit_rate(a, "feas_sq").slope == doctest::Approx(-2.0).epsilon(1e-12));
  CHECK(fit_rate(a, "gap").slope == doctest::Approx(-1.0).epsilon(1e-12));
}

TEST_CASE("dual restoration") {
  const ProblemSpec spec = small_lad(20, 8, 2, 2);
  CounterRng rng(3);
  for (int t = 0; t < 20; ++t) {
    const std::vector<double> y = random_vector(rng, 20, 2.0);
    const std::vector<double> yr = restore_dual_feasibility(spec, y);
    CHECK(dual_value(spec, yr).violation == 0.0);
    // restored point is a scaled projection
    for (std::size_t r = 0; r < 20; ++r) CHECK(std::abs(yr[r]) <= 1.0);
  }
  const std::vector<double> zero(20, 0.0);
  CHECK(restore_dual_feasibility(spec, zero) == zero);
  const GapEval e = evaluate(spec, std::vector<double>(8, 0.0), std::vector<double>(20, 5.0));
  CHECK(e.violation > 0.0);
  CHECK(std::isfinite(e.dual));
  CHECK(e.gap == doctest::Approx(e.primal + e.dual));
}

TEST_CASE("reference solution of a problem with zero optimum") {
  // f = |x|, g = 0: optimum 0 at x = 0
  ProblemSpec spec = small_lad(10, 5, 1, 1);
  spec.g.assign(10, ProxFn::zero());
  const ReferenceSolution ref = reference_solution(spec, 50);
  CHECK(ref.F_best == 0.0);
  CHECK(ref.F_ref == 0.0);
  CHECK(ref.lower_bound <= ref.F_best);
}

TEST_CASE("reference solution brackets the optimum") {
  const ProblemSpec spec = small_svm(40, 10, 0.05, 2, 2);
  const ReferenceSolution ref = reference_solution(spec, 3000);
  CHECK(ref.lower_bound <= ref.F_best + 1e-12);
  CHECK(ref.F_best - ref.lower_bound < 1e-4);
  CHECK(ref.F_ref <= ref.F_best);
  CHECK(ref.F_ref >= ref.lower_bound - 1e-15);
  CHECK(primal_value(spec, ref.x) == doctest::Approx(ref.F_best));
  CHECK_THROWS(reference_solution(spec, 0));
}

TEST_CASE("bound overlay algebra") {
  ProblemSpec spec = small_svm(30, 10, 0.1, 2, 2);
  spec.lipschitz_g = 1.0 / 30.0;
  const ProblemConstants consts = constants(spec);
  const std::vector<double> x0(10, 0.0), y0(30, 0.0);
  const ReferenceSolution ref = reference_solution(spec, 500);
  const std::vector<std::size_t> ks{1, 2, 5, 10, 100, 1000};
  const double tau0 = consts.tau0;
  struct Case {
    ScheduleKind kind;
    std::optional<double> c;
    bool cform;
    bool squared;
  };
  const std::vector<Case> cases{{ScheduleKind::S1, std::nullopt, false, false},
                                {ScheduleKind::S2, std::nullopt, true, false},
                                {ScheduleKind::S3, std::nullopt, false, false},
                                {ScheduleKind::S3, 2.0 / tau0, true, false},
                                {ScheduleKind::S4, std::nullopt, false, true},
                                {ScheduleKind::S5, std::nullopt, true, true}};
  for (const Case& cs : cases) {
    const Schedule s = Schedule::make(cs.kind, consts, cs.c);
    const double C = bound_constant(spec, consts, s, x0, y0, ref.x, ref.y, ref.F_ref);
    CHECK(C > 0.0);
    const auto pts = bound_overlay(spec, consts, s, x0, y0, ref.x, ref.y, ref.F_ref, ks);
    REQUIRE(pts.size() == ks.size());
    for (const BoundPoint& p : pts) {
      const double kk = static_cast<double>(p.k);
      double D = cs.cform ? (kk + s.c() - 1.0) / s.c() : tau0 * kk + 1.0 - tau0;
      if (cs.squared) D *= D;
      CHECK(p.bound * D == doctest::Approx(C).epsilon(1e-12));
    }
    for (std::size_t t = 1; t < pts.size(); ++t) CHECK(pts[t].bound < pts[t - 1].bound);
  }
  ProblemSpec bare = spec;
  bare.lipschitz_g.reset();
  CHECK_THROWS(bound_constant(bare, consts, Schedule::make(ScheduleKind::S1, consts), x0, y0, ref.x, ref.y, ref.F_ref));
  ProblemConstants no_mu = consts;
  no_mu.mu_f = 0.0;
  CHECK_THROWS(bound_constant(spec, no_mu, Schedule::make(ScheduleKind::S4, consts), x0, y0, ref.x, ref.y, ref.F_ref));
  CHECK_THROWS(bound_constant(spec, consts, Schedule(ScheduleKind::S6, tau0, 3.0, 1e-3, consts.L_bar, 0.0, 1.0), x0, y0,
                              ref.x, ref.y, ref.F_ref));
}
