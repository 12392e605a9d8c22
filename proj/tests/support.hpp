#pragma once

#include <cmath>
#include <vector>

#include "rpd/blockmat.hpp"
#include "rpd/dataio.hpp"
#include "rpd/problem.hpp"
#include "rpd/random.hpp"

namespace testing_support {

using namespace rpd;

inline std::vector<double> random_vector(CounterRng& rng, std::size_t n, double scale = 1.0) {
  std::vector<double> v(n);
  for (double& x : v) x = scale * rng.normal();
  return v;
}

// row-major dense with about `density` nonzeros
inline std::vector<double> random_dense(CounterRng& rng, std::size_t rows, std::size_t cols, double density) {
  std::vector<double> a(rows * cols, 0.0);
  for (double& v : a)
    if (rng.uniform() < density) v = rng.normal();
  return a;
}

inline SparseCoo dense_to_coo(std::size_t rows, std::size_t cols, const std::vector<double>& a) {
  SparseCoo coo{rows, cols, {}};
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t c = 0; c < cols; ++c)
      if (a[r * cols + c] != 0.0) coo.entries.push_back({r, c, a[r * cols + c]});
  return coo;
}

inline std::vector<double> dense_matvec(std::size_t rows, std::size_t cols, const std::vector<double>& a,
                                        const std::vector<double>& x) {
  std::vector<double> y(rows, 0.0);
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t c = 0; c < cols; ++c) y[r] += a[r * cols + c] * x[c];
  return y;
}

inline std::vector<double> dense_matvec_t(std::size_t rows, std::size_t cols, const std::vector<double>& a,
                                          const std::vector<double>& y) {
  std::vector<double> x(cols, 0.0);
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t c = 0; c < cols; ++c) x[c] += a[r * cols + c] * y[r];
  return x;
}

inline double max_abs_diff(const std::vector<double>& a, const std::vector<double>& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

inline double norm2(const std::vector<double>& v) {
  double s = 0.0;
  for (double t : v) s += t * t;
  return std::sqrt(s);
}

// small LAD instance with given block counts
inline ProblemSpec small_lad(std::size_t rows, std::size_t cols, std::size_t n_blocks, std::size_t m_blocks,
                             std::uint64_t seed = 7) {
  LadInstance inst = gen_lad({rows, cols, 0.3, 0.1, 0.2, seed});
  return build_lad(inst.K, inst.b, 1.0 / static_cast<double>(rows), n_blocks, m_blocks);
}

inline ProblemSpec small_svm(std::size_t samples, std::size_t features, double lambda, std::size_t n_blocks,
                             std::size_t m_blocks, std::uint64_t seed = 3) {
  Dataset d = gen_svm({samples, features, 0.3, 0.05, seed});
  return build_svm(d, lambda, n_blocks, m_blocks);
}

}  // namespace testing_support
