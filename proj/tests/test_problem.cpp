#include <doctest.h>

#include <cmath>

#include "rpd/metrics.hpp"
#include "rpd/problem.hpp"
#include "support.hpp"

using namespace rpd;
using namespace testing_support;

TEST_CASE("svm objective at zero is one") {
  const ProblemSpec spec = small_svm(40, 12, 0.01, 3, 4);
  CHECK(primal_value(spec, std::vector<double>(12, 0.0)) == doctest::Approx(1.0));
  CHECK(spec.p() == 12);
  CHECK(spec.d() == 40);
  CHECK(spec.n() == 3);
  CHECK(spec.m() == 4);
}

TEST_CASE("lad objective at zero is the l1 norm of b") {
  const LadInstance inst = gen_lad({30, 10, 0.4, 0.1, 0.2, 9});
  const ProblemSpec spec = build_lad(inst.K, inst.b, 0.5, 2, 2);
  double nb = 0.0;
  for (double v : inst.b) nb += std::abs(v);
  CHECK(primal_value(spec, std::vector<double>(10, 0.0)) == doctest::Approx(nb));
}

TEST_CASE("svm objective matches a dense evaluation") {
  const Dataset data = gen_svm({25, 8, 0.5, 0.1, 4});
  const double lambda = 0.03;
  const ProblemSpec spec = build_svm(data, lambda, 2, 5);
  CounterRng rng(2);
  for (int t = 0; t < 10; ++t) {
    const std::vector<double> x = random_vector(rng, 8);
    double F = 0.0;
    for (std::size_t i = 0; i < data.n_samples(); ++i) {
      double dot = 0.0;
      for (const auto& [c, v] : data.rows[i]) dot += v * x[c];
      F += std::max(0.0, 1.0 - data.labels[i] * dot) / 25.0;
    }
    F += 0.5 * lambda * norm2(x) * norm2(x);
    CHECK(primal_value(spec, x) == doctest::Approx(F).epsilon(1e-12));
  }
}

TEST_CASE("lad objective matches a dense evaluation") {
  const LadInstance inst = gen_lad({20, 7, 0.5, 0.2, 0.3, 3});
  const double lambda = 0.2;
  const ProblemSpec spec = build_lad(inst.K, inst.b, lambda, 7, 1);
  const std::vector<double> a = spec.K.to_dense();
  CounterRng rng(6);
  for (int t = 0; t < 10; ++t) {
    const std::vector<double> x = random_vector(rng, 7);
    const std::vector<double> kx = dense_matvec(20, 7, a, x);
    double F = 0.0;
    for (std::size_t r = 0; r < 20; ++r) F += std::abs(kx[r] - inst.b[r]);
    for (double v : x) F += lambda * std::abs(v);
    CHECK(primal_value(spec, x) == doctest::Approx(F).epsilon(1e-12));
  }
}

TEST_CASE("lad dual value is -<b, y> inside the box") {
  const LadInstance inst = gen_lad({15, 6, 0.5, 0.1, 0.3, 5});
  const ProblemSpec spec = build_lad(inst.K, inst.b, 10.0, 2, 3);
  CounterRng rng(1);
  const std::vector<double> y = random_vector(rng, 15, 0.1);
  // large lambda keeps K^T y inside the phi* domain
  const ConjValue G = dual_value(spec, y);
  REQUIRE(G.violation == 0.0);
  double by = 0.0;
  for (std::size_t r = 0; r < 15; ++r) by += inst.b[r] * y[r];
  CHECK(G.value == doctest::Approx(by));
  std::vector<double> big(15, 0.0);
  big[0] = 2.0;
  CHECK(dual_value(spec, big).violation == doctest::Approx(1.0));
}

TEST_CASE("weak duality on random points") {
  CounterRng rng(44);
  for (int t = 0; t < 20; ++t) {
    const ProblemSpec spec = t % 2 ? small_svm(30, 10, 0.05, 2, 3, 10 + t) : small_lad(25, 10, 2, 5, 10 + t);
    const std::vector<double> x = random_vector(rng, spec.p());
    const std::vector<double> y = restore_dual_feasibility(spec, random_vector(rng, spec.d(), 0.3));
    const ConjValue G = dual_value(spec, y);
    REQUIRE(G.violation == 0.0);
    const double F = primal_value(spec, x);
    CHECK(F + G.value >= -1e-10 * (1.0 + std::abs(F)));
    const GapEval e = evaluate(spec, x, y);
    CHECK(e.gap >= -1e-10 * (1.0 + std::abs(F)));
  }
}

TEST_CASE("constants for uniform blocks") {
  const ProblemSpec spec = small_svm(40, 12, 0.01, 3, 4);
  const ProblemConstants c = constants(spec);
  CHECK(c.tau0 == doctest::Approx(0.25));
  CHECK(c.tau0_primal == doctest::Approx(1.0 / 3.0));
  CHECK(c.mu_f == doctest::Approx(0.01));
  CHECK(c.mu_g == 0.0);
  CHECK(c.L_h == 0.0);
  CHECK(c.L_bar == doctest::Approx(c.K_norm * c.K_norm).epsilon(1e-8));
  CHECK(c.opnorm_converged);
}

TEST_CASE("column norm sigma rescales the weighted norm") {
  ProblemSpec spec = small_lad(30, 12, 4, 2);
  apply_sigma_rule(spec, SigmaRule::ColumnNorm);
  const ProblemConstants c = constants(spec);
  // sum of block norms squared bounds the weighted norm from above by n
  CHECK(c.L_bar <= 4.0 + 1e-8);
  CHECK(c.L_bar >= 1.0 - 1e-8);
  for (std::size_t j = 0; j < 4; ++j) CHECK(spec.sigma[j] == doctest::Approx(spec.K.col_block_opnorm_sq(j).value));
}

TEST_CASE("dual curvature and phi functions") {
  ProblemSpec spec = small_lad(12, 6, 2, 2);
  add_dual_curvature(spec, 0.3);
  CHECK(constants(spec).mu_g == doctest::Approx(0.3));
  spec.h.curvature.assign(6, 0.5);
  const std::vector<ProxFn> phi = phi_functions(spec);
  CHECK(phi.size() == 6);
  CHECK(phi[0].quad() == 0.5);
  CHECK(constants(spec).L_h == doctest::Approx(0.5));
}

TEST_CASE("validation names the broken field") {
  ProblemSpec spec = small_lad(12, 6, 2, 2);
  spec.q = {0.3, 0.3};
  CHECK_THROWS_WITH_AS(spec.validate(), doctest::Contains("q"), std::invalid_argument);
  spec = small_lad(12, 6, 2, 2);
  spec.sigma = {1.0, -1.0};
  CHECK_THROWS_WITH_AS(spec.validate(), doctest::Contains("sigma"), std::invalid_argument);
  spec = small_lad(12, 6, 2, 2);
  spec.f.pop_back();
  CHECK_THROWS_AS(spec.validate(), std::invalid_argument);
  CHECK_THROWS(build_svm(gen_svm({5, 3, 0.5, 0.0, 1}), 0.0, 1, 1));
  CHECK_THROWS_AS(build_lad(SparseCoo{2, 2, {}}, std::vector<double>{1.0}, 1.0, 1, 1), DimensionError);
}
