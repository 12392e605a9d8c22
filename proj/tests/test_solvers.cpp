#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>

#include "rpd/baselines.hpp"
#include "rpd/frpd.hpp"
#include "rpd/srpd.hpp"
#include "support.hpp"

using namespace rpd;
using namespace testing_support;

namespace {

// min sum x^2/2 + <a, x> + |Kx|^2/2, saddle x* = -(I + K^T K)^{-1} a, y* = K x*
struct Quadratic {
  ProblemSpec spec;
  std::vector<double> x_star, y_star;
};

Quadratic quadratic_problem(std::size_t rows, std::size_t cols, std::size_t m, std::size_t n, std::uint64_t seed) {
  CounterRng rng(seed);
  const std::vector<double> a = random_dense(rng, rows, cols, 0.5);
  const std::vector<double> lin = random_vector(rng, cols);
  SmoothTerm h;
  h.linear = lin;
  Quadratic q{make_problem("quad", BlockMatrix(dense_to_coo(rows, cols, a), m, n),
                           std::vector<ProxFn>(cols, ProxFn::sq_norm(1.0)),
                           std::vector<ProxFn>(rows, ProxFn::sq_norm(1.0)), h),
              {},
              {}};
  Eigen::MatrixXd K(rows, cols);
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t c = 0; c < cols; ++c) K(r, c) = a[r * cols + c];
  Eigen::VectorXd av(cols);
  for (std::size_t c = 0; c < cols; ++c) av(c) = lin[c];
  const Eigen::MatrixXd H = Eigen::MatrixXd::Identity(cols, cols) + K.transpose() * K;
  const Eigen::VectorXd xs = -H.ldlt().solve(av);
  const Eigen::VectorXd ys = K * xs;
  q.x_star.assign(xs.data(), xs.data() + cols);
  q.y_star.assign(ys.data(), ys.data() + rows);
  return q;
}

Schedule schedule_for(const ProblemSpec& spec, ScheduleKind kind, std::optional<double> c = std::nullopt,
                      std::optional<double> rho0 = std::nullopt) {
  return Schedule::make(kind, constants(spec), c, rho0);
}

}  // namespace

TEST_CASE("saddle point is a fixed point of both methods") {
  const Quadratic q = quadratic_problem(12, 9, 3, 3, 5);
  FrpdSolver f(q.spec, schedule_for(q.spec, ScheduleKind::S1), q.x_star, q.y_star, 1);
  SrpdSolver s(q.spec, schedule_for(q.spec, ScheduleKind::S3), q.x_star, q.y_star, 1);
  for (int k = 0; k < 300; ++k) {
    f.step();
    s.step();
  }
  CHECK(max_abs_diff(f.x(), q.x_star) < 1e-12);
  CHECK(max_abs_diff(f.y_bar(), q.y_star) < 1e-12);
  CHECK(max_abs_diff(f.y_hat(), q.y_star) < 1e-12);
  CHECK(max_abs_diff(s.x(), q.x_star) < 1e-12);
  CHECK(max_abs_diff(s.y(), q.y_star) < 1e-12);
  CHECK(max_abs_diff(s.y_bar(), q.y_star) < 1e-12);
}

TEST_CASE("single blocks make the seed irrelevant") {
  const ProblemSpec spec = small_lad(20, 8, 1, 1);
  const std::vector<double> x0(8, 0.0), y0(20, 0.0);
  RunOptions a, b;
  a.epochs = b.epochs = 30;
  a.seed = 1;
  b.seed = 99;
  const Schedule s1 = schedule_for(spec, ScheduleKind::S1);
  CHECK(frpd_run(spec, s1, x0, y0, a).x == frpd_run(spec, s1, x0, y0, b).x);
  const Schedule s3 = schedule_for(spec, ScheduleKind::S3);
  CHECK(srpd_run(spec, s3, x0, y0, a).x == srpd_run(spec, s3, x0, y0, b).x);
}

TEST_CASE("same seed, same trajectory; different seed, different trajectory") {
  const ProblemSpec spec = small_svm(40, 12, 0.01, 4, 4);
  const std::vector<double> x0(12, 0.0), y0(40, 0.0);
  RunOptions o;
  o.epochs = 20;
  const Schedule s1 = schedule_for(spec, ScheduleKind::S1);
  const RunResult r1 = frpd_run(spec, s1, x0, y0, o), r2 = frpd_run(spec, s1, x0, y0, o);
  CHECK(r1.x == r2.x);
  CHECK(r1.y == r2.y);
  o.seed = 2;
  CHECK(frpd_run(spec, s1, x0, y0, o).x != r1.x);
}

TEST_CASE("s6 on a scalar strongly convex pair") {
  // min x^2/2 + (x)^2/2 over x with K = 1
  ProblemSpec spec = make_problem("scalar", BlockMatrix::identity(1, 1), {ProxFn::sq_norm(1.0)}, {ProxFn::sq_norm(1.0)});
  FrpdSolver f(spec, schedule_for(spec, ScheduleKind::S6), std::vector<double>{1.0}, std::vector<double>{0.0}, 1);
  for (int k = 0; k < 500; ++k) f.step();
  CHECK(std::abs(f.x()[0]) <= 1e-2);
}

namespace {

// x^k = sum_l gamma_{k,l} x~^l with the recursion driven by the tau the solver used
template <class Solver, class Tilde, class Iterate>
void check_averaging(Solver& solver, Tilde tilde, Iterate iterate, std::size_t steps, double& worst_x,
                     double& worst_sum, double& min_gamma) {
  const double tau0 = solver.params().tau;
  std::vector<std::vector<double>> hist{tilde(solver)};
  std::vector<double> gamma{1.0};
  for (std::size_t k = 0; k < steps; ++k) {
    const double tau = solver.params().tau;
    solver.step();
    hist.push_back(tilde(solver));
    const double last = gamma.back();
    for (double& g : gamma) g *= 1.0 - tau;
    gamma.back() = (1.0 - tau) * last + tau - tau / tau0;
    gamma.push_back(tau / tau0);
    const std::vector<double>& x = iterate(solver);
    std::vector<double> comb(x.size(), 0.0);
    double total = 0.0;
    for (std::size_t l = 0; l < gamma.size(); ++l) {
      total += gamma[l];
      min_gamma = std::min(min_gamma, gamma[l]);
      for (std::size_t c = 0; c < x.size(); ++c) comb[c] += gamma[l] * hist[l][c];
    }
    std::vector<double> diff(x.size());
    for (std::size_t c = 0; c < x.size(); ++c) diff[c] = x[c] - comb[c];
    worst_x = std::max(worst_x, norm2(diff));
    worst_sum = std::max(worst_sum, std::abs(total - 1.0));
  }
}

}  // namespace

TEST_CASE("iterates are convex combinations of the tilde sequence") {
  const ProblemSpec spec = small_lad(40, 30, 4, 5, 12);
  const std::vector<double> x0 = [] {
    CounterRng rng(3);
    return random_vector(rng, 30);
  }();
  const std::vector<double> y0(40, 0.0);
  double wx = 0.0, ws = 0.0, mg = 1.0;
  FrpdSolver f(spec, schedule_for(spec, ScheduleKind::S1), x0, y0, 4);
  check_averaging(f, [](const FrpdSolver& s) { return s.x_tilde(); }, [](const FrpdSolver& s) -> const auto& { return s.x(); },
                  200, wx, ws, mg);
  CHECK(wx <= 1e-8);
  CHECK(ws <= 1e-12);
  CHECK(mg >= 0.0);
  double wr = 0.0;
  FrpdSolver f2(spec, schedule_for(spec, ScheduleKind::S1), x0, y0, 4);
  check_averaging(f2, [](const FrpdSolver& s) { return s.r_tilde(); }, [](const FrpdSolver& s) -> const auto& { return s.r(); },
                  200, wr, ws, mg);
  CHECK(wr <= 1e-8);
  wx = 0.0;
  SrpdSolver s(spec, schedule_for(spec, ScheduleKind::S3), x0, y0, 4);
  check_averaging(s, [](const SrpdSolver& t) { return t.x_tilde(); }, [](const SrpdSolver& t) -> const auto& { return t.x(); },
                  200, wx, ws, mg);
  CHECK(wx <= 1e-8);
  CHECK(ws <= 1e-12);
  CHECK(mg >= 0.0);
}

TEST_CASE("cached products stay coherent") {
  const ProblemSpec spec = small_svm(60, 20, 0.01, 5, 6);
  const std::vector<double> x0(20, 0.0), y0(60, 0.0);
  RunOptions o;
  o.epochs = 200;
  o.cadence = 10;
  CHECK(frpd_run(spec, schedule_for(spec, ScheduleKind::S2), x0, y0, o).max_cache_error < 1e-10);
  CHECK(srpd_run(spec, schedule_for(spec, ScheduleKind::S3), x0, y0, o).max_cache_error < 1e-10);
}

TEST_CASE("blocks are drawn from their laws") {
  ProblemSpec spec = small_lad(24, 16, 4, 3);
  spec.q = {0.1, 0.2, 0.3, 0.4};
  spec.q_hat = {0.5, 0.25, 0.25};
  const std::vector<double> x0(16, 0.0), y0(24, 0.0);
  FrpdSolver f(spec, schedule_for(spec, ScheduleKind::S1), x0, y0, 8);
  SrpdSolver s(spec, schedule_for(spec, ScheduleKind::S3), x0, y0, 8);
  const int N = 20000;
  std::vector<double> ci(3, 0.0), cj(4, 0.0), sj(4, 0.0);
  for (int t = 0; t < N; ++t) {
    f.step();
    s.step();
    ci[f.last_i()] += 1.0;
    cj[f.last_j()] += 1.0;
    sj[s.last_j()] += 1.0;
  }
  auto chi2 = [&](const std::vector<double>& counts, const std::vector<double>& law) {
    double c = 0.0;
    for (std::size_t t = 0; t < law.size(); ++t) c += std::pow(counts[t] - N * law[t], 2) / (N * law[t]);
    return c;
  };
  // 99.9% quantiles: 13.8 (2 dof), 16.3 (3 dof)
  CHECK(chi2(ci, spec.q_hat) < 13.8);
  CHECK(chi2(cj, spec.q) < 16.3);
  CHECK(chi2(sj, spec.q) < 16.3);
}

TEST_CASE("fully randomized method without multiplier still makes progress") {
  const ProblemSpec spec = small_svm(80, 20, 0.01, 4, 4);
  const std::vector<double> x0(20, 0.0), y0(80, 0.0);
  RunOptions o;
  o.epochs = 300;
  o.cadence = 50;
  o.zero_eta = true;
  const RunResult r = frpd_run(spec, schedule_for(spec, ScheduleKind::S1, std::nullopt, 0.01), x0, y0, o);
  CHECK(r.trace.back().gap < 0.5 * r.trace.front().gap);
  CHECK(r.trace.back().primal < primal_value(spec, x0));
}

TEST_CASE("semi-randomized dual iterate stays in the conjugate domain") {
  const ProblemSpec spec = small_lad(30, 12, 3, 3);
  const std::vector<double> x0(12, 1.0), y0(30, 0.0);
  SrpdSolver s(spec, schedule_for(spec, ScheduleKind::S3), x0, y0, 2);
  for (int k = 0; k < 500; ++k) {
    s.step();
    for (std::size_t r = 0; r < 30; ++r) REQUIRE(spec.g[r].conj_domain_distance(s.y()[r]) == 0.0);
    for (std::size_t r = 0; r < 30; ++r) REQUIRE(spec.g[r].conj_domain_distance(s.y_bar()[r]) <= 1e-15);
  }
}

TEST_CASE("zero dual term keeps the dual iterate at zero") {
  ProblemSpec spec = small_lad(20, 10, 2, 2);
  spec.g.assign(20, ProxFn::zero());
  const std::vector<double> x0(10, 1.0), y0(20, 0.0);
  SrpdSolver s(spec, schedule_for(spec, ScheduleKind::S3), x0, y0, 2);
  for (int k = 0; k < 100; ++k) s.step();
  CHECK(s.y() == std::vector<double>(20, 0.0));
  CHECK(s.y_bar() == std::vector<double>(20, 0.0));
  // f = lambda |x| alone, so F falls toward zero
  RunOptions o;
  o.epochs = 400;
  const RunResult r = srpd_run(spec, schedule_for(spec, ScheduleKind::S3), x0, y0, o);
  CHECK(primal_value(spec, r.x) < 0.5 * primal_value(spec, x0));
  CHECK(r.trace.back().dual_violation == 0.0);
}

TEST_CASE("toy svm gap drops tenfold") {
  const ProblemSpec spec = small_svm(100, 30, 0.01, 6, 6);
  const std::vector<double> x0(30, 0.0), y0(100, 0.0);
  RunOptions o;
  o.epochs = 400;
  o.cadence = 1;
  o.record_initial = true;
  for (ScheduleKind kind : {ScheduleKind::S1, ScheduleKind::S3}) {
    const Schedule s = schedule_for(spec, kind, std::nullopt, 0.01);
    const RunResult r = is_frpd_kind(kind) ? frpd_run(spec, s, x0, y0, o) : srpd_run(spec, s, x0, y0, o);
    CHECK_MESSAGE(r.trace.back().gap < 0.1 * r.trace[1].gap, schedule_name(kind));
    CHECK(r.trace.front().k == 0);
    CHECK(r.iterations == 400 * 6);
  }
}

TEST_CASE("methods reject mismatched schedules and shapes") {
  const ProblemSpec spec = small_lad(20, 10, 2, 2);
  const std::vector<double> x0(10, 0.0), y0(20, 0.0);
  CHECK_THROWS_AS(FrpdSolver(spec, schedule_for(spec, ScheduleKind::S3), x0, y0, 1), ScheduleError);
  CHECK_THROWS_AS(SrpdSolver(spec, schedule_for(spec, ScheduleKind::S1), x0, y0, 1), ScheduleError);
  CHECK_THROWS_AS(FrpdSolver(spec, schedule_for(spec, ScheduleKind::S1), std::vector<double>(3), y0, 1), DimensionError);
  RunOptions o;
  o.epochs = 0;
  CHECK_THROWS(frpd_run(spec, schedule_for(spec, ScheduleKind::S1), x0, y0, o));
}

TEST_CASE("pdhg keeps the saddle point") {
  const Quadratic q = quadratic_problem(10, 7, 1, 1, 9);
  const PdhgConfig cfg = default_pdhg_config(constants(q.spec));
  RunOptions o;
  o.epochs = 100;
  const RunResult r = pdhg_run(q.spec, cfg, q.x_star, q.y_star, o);
  CHECK(max_abs_diff(r.x, q.x_star) < 1e-12);
  CHECK(max_abs_diff(r.y, q.y_star) < 1e-12);
}

TEST_CASE("pdhg converges on a strongly convex quadratic") {
  const Quadratic q = quadratic_problem(10, 7, 1, 1, 10);
  RunOptions o;
  o.epochs = 2000;
  o.cadence = 2000;
  const RunResult r = pdhg_run(q.spec, default_pdhg_config(constants(q.spec)), std::vector<double>(7, 0.0),
                               std::vector<double>(10, 0.0), o);
  CHECK(max_abs_diff(r.x, q.x_star) < 1e-6);
}

TEST_CASE("spdhg with one block follows pdhg") {
  const ProblemSpec spec = small_lad(25, 10, 1, 1);
  const PdhgConfig cfg{0.05, 0.05, 1.0};
  RunOptions o;
  o.epochs = 200;
  o.cadence = 200;
  const std::vector<double> x0(10, 0.0), y0(25, 0.0);
  const RunResult a = pdhg_run(spec, cfg, x0, y0, o);
  const RunResult b = spdhg_run(spec, cfg, x0, y0, o);
  CHECK(max_abs_diff(a.x, b.x) < 1e-12);
  CHECK(max_abs_diff(a.y, b.y) < 1e-12);
}

TEST_CASE("baseline step validation") {
  const ProblemSpec spec = small_lad(25, 10, 1, 4);
  const ProblemConstants c = constants(spec);
  CHECK_NOTHROW(validate_pdhg(default_pdhg_config(c), c.K_norm * c.K_norm));
  CHECK_THROWS_AS(validate_pdhg({1.0, 1.0, 1.0}, c.K_norm * c.K_norm), std::invalid_argument);
  CHECK_THROWS_AS(validate_pdhg({0.0, 1.0, 1.0}, 1.0), std::invalid_argument);
  CHECK_NOTHROW(validate_spdhg(default_spdhg_config(spec), spec));
  CHECK_THROWS_AS(validate_spdhg({1.0, 1.0, 1.0}, spec), std::invalid_argument);
  RunOptions o;
  CHECK_THROWS(pdhg_run(spec, {1.0, 1.0, 1.0}, std::vector<double>(10), std::vector<double>(25), o));
}
