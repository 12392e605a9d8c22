#include <doctest.h>

#include <cmath>
#include <sstream>

#include "rpd/dataio.hpp"
#include "support.hpp"

using namespace rpd;
using namespace testing_support;

TEST_CASE("libsvm parse example") {
  std::istringstream in("+1 1:0.5 3:2\n-1 2:1 # note\n\n");
  const Dataset d = parse_libsvm(in);
  CHECK(d.n_samples() == 2);
  CHECK(d.n_features == 3);
  CHECK(d.labels == std::vector<double>{1.0, -1.0});
  CHECK(d.rows[0] == std::vector<std::pair<std::size_t, double>>{{0, 0.5}, {2, 2.0}});
  CHECK(d.rows[1] == std::vector<std::pair<std::size_t, double>>{{1, 1.0}});
  const SparseCoo coo = d.to_coo();
  CHECK(coo.rows == 2);
  CHECK(coo.cols == 3);
  CHECK(coo.entries.size() == 3);
}

TEST_CASE("libsvm explicit feature count") {
  std::istringstream in("1 2:1\n");
  CHECK(parse_libsvm(in, 10).n_features == 10);
  std::istringstream bad("1 12:1\n");
  CHECK_THROWS_AS(parse_libsvm(bad, 10), ParseError);
}

TEST_CASE("libsvm parse errors carry line numbers") {
  const std::vector<std::pair<std::string, std::size_t>> cases{
      {"1 1:1\nabc 1:1\n", 2}, {"1 1:1\n1 2:x\n", 2}, {"1 0:1\n", 1},
      {"1 3:1 2:1\n", 1},      {"1 1:1\n\n1 5\n", 3}};
  for (const auto& [text, line] : cases) {
    std::istringstream in(text);
    try {
      parse_libsvm(in);
      FAIL("no error for: " << text);
    } catch (const ParseError& e) {
      CHECK(e.line() == line);
    }
  }
}

TEST_CASE("libsvm round trip") {
  const Dataset d = gen_svm({30, 12, 0.3, 0.1, 7});
  std::stringstream ss;
  write_libsvm(ss, d);
  const Dataset back = parse_libsvm(ss, d.n_features);
  CHECK(back.labels == d.labels);
  CHECK(back.rows == d.rows);
}

TEST_CASE("generated lad statistics") {
  const LadInstance inst = gen_lad({400, 200, 0.1, 0.1, 0.05, 3});
  const double density = static_cast<double>(inst.K.entries.size()) / (400.0 * 200.0);
  CHECK(density == doctest::Approx(0.1).epsilon(0.05));
  std::size_t support = 0;
  for (double v : inst.x_true) support += v != 0.0;
  CHECK(support == 10);
  // residual b - K x_true is the Laplace noise: mean |.| = noise
  std::vector<double> r = inst.b;
  for (const auto& e : inst.K.entries) r[e.row] -= e.value * inst.x_true[e.col];
  double mad = 0.0;
  for (double v : r) mad += std::abs(v) / 400.0;
  CHECK(mad == doctest::Approx(0.1).epsilon(0.2));
}

TEST_CASE("generated svm rows are unit norm") {
  const Dataset d = gen_svm({100, 50, 0.1, 0.0, 2});
  for (const auto& row : d.rows) {
    double s = 0.0;
    for (const auto& [c, v] : row) s += v * v;
    CHECK(s == doctest::Approx(1.0));
  }
  for (double b : d.labels) CHECK(std::abs(b) == 1.0);
}

TEST_CASE("generators are deterministic in the seed") {
  const LadInstance a = gen_lad({50, 20, 0.2, 0.1, 0.1, 5}), b = gen_lad({50, 20, 0.2, 0.1, 0.1, 5});
  CHECK(a.b == b.b);
  CHECK(a.x_true == b.x_true);
  CHECK(a.K.entries.size() == b.K.entries.size());
  const LadInstance c = gen_lad({50, 20, 0.2, 0.1, 0.1, 6});
  CHECK(a.b != c.b);
  CHECK(gen_svm({20, 10, 0.3, 0.1, 1}).labels == gen_svm({20, 10, 0.3, 0.1, 1}).labels);
  CHECK_THROWS(gen_lad({10, 10, 0.0, 0.1, 0.1, 1}));
  CHECK_THROWS(gen_svm({10, 10, 0.5, 1.5, 1}));
}

TEST_CASE("instance round trip is exact") {
  const LadInstance a = gen_lad({40, 15, 0.3, 0.1, 0.2, 8});
  std::stringstream ss;
  write_instance(ss, a);
  const LadInstance b = read_instance(ss);
  CHECK(b.b == a.b);
  CHECK(b.x_true == a.x_true);
  REQUIRE(b.K.entries.size() == a.K.entries.size());
  for (std::size_t t = 0; t < a.K.entries.size(); ++t) {
    CHECK(b.K.entries[t].row == a.K.entries[t].row);
    CHECK(b.K.entries[t].col == a.K.entries[t].col);
    CHECK(b.K.entries[t].value == a.K.entries[t].value);
  }
}

TEST_CASE("instance parse errors") {
  std::istringstream bad_head("nope\n");
  CHECK_THROWS_AS(read_instance(bad_head), ParseError);
  std::istringstream outside("rpd-instance 1\n2 2 1\n5 0 1.0\nb 2\n1\n2\nx 0\n");
  CHECK_THROWS_AS(read_instance(outside), ParseError);
  std::istringstream truncated("rpd-instance 1\n2 2 1\n0 0 1.0\nb 2\n1\n");
  CHECK_THROWS_AS(read_instance(truncated), ParseError);
}
