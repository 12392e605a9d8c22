#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "rpd/blockmat.hpp"

namespace rpd {

class ParseError : public std::runtime_error {
 public:
  ParseError(std::size_t line, const std::string& what);
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

/// Labeled sparse rows; feature indices are 0-based internally.
struct Dataset {
  std::vector<std::vector<std::pair<std::size_t, double>>> rows;
  std::vector<double> labels;
  std::size_t n_features = 0;

  std::size_t n_samples() const { return rows.size(); }
  /// Rows stacked into a samples x n_features matrix.
  SparseCoo to_coo() const;
};

/// LIBSVM text: "<label> <index>:<value> ..." with 1-based indices; '#' starts a comment.
/// The feature count is the largest index seen unless n_features is given.
Dataset parse_libsvm(std::istream& in, std::optional<std::size_t> n_features = std::nullopt);
Dataset read_libsvm(const std::string& path, std::optional<std::size_t> n_features = std::nullopt);
void write_libsvm(std::ostream& out, const Dataset& data);

struct LadParams {
  std::size_t rows = 500;
  std::size_t cols = 200;
  double density = 0.1;
  double noise = 0.1;
  /// Fraction of coordinates of x_true that are nonzero.
  double support = 0.05;
  std::uint64_t seed = 1;
};

struct LadInstance {
  SparseCoo K;
  std::vector<double> b;
  std::vector<double> x_true;
};

/// K with i.i.d. Bernoulli(density) pattern and standard normal values,
/// b = K x_true + noise * Laplace(0, 1).
LadInstance gen_lad(const LadParams& params);

struct SvmParams {
  std::size_t samples = 500;
  std::size_t features = 200;
  double density = 0.1;
  /// Probability of flipping each label.
  double flip = 0.05;
  std::uint64_t seed = 1;
};

/// Sparse Gaussian rows scaled to unit norm, labels sign(<a, w>) with random flips.
Dataset gen_svm(const SvmParams& params);

Partition partition(std::size_t dim, std::size_t n_blocks);

// Text instance dump:
//   rpd-instance 1
//   <rows> <cols> <nnz>
//   <row> <col> <value>      (nnz lines, 0-based)
//   b <rows>
//   <value>                  (rows lines)
//   x <cols>
//   <value>                  (cols lines, absent when cols is written as 0)
// Values are written with 17 significant digits so a reload is exact.
void write_instance(std::ostream& out, const LadInstance& inst);
LadInstance read_instance(std::istream& in);
void save_instance(const std::string& path, const LadInstance& inst);
LadInstance load_instance(const std::string& path);

}  // namespace rpd
