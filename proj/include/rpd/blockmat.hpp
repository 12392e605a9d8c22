#pragma once

#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

namespace rpd {

class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Contiguous split of [0, dim) into blocks; block k is [offsets[k], offsets[k+1]).
class Partition {
 public:
  Partition() = default;
  explicit Partition(std::vector<std::size_t> offsets);

  /// Near-equal contiguous blocks: the first dim % n blocks get one extra element.
  static Partition uniform(std::size_t dim, std::size_t n_blocks);
  static Partition singletons(std::size_t dim) { return uniform(dim, dim); }

  std::size_t dim() const { return offsets_.empty() ? 0 : offsets_.back(); }
  std::size_t count() const { return offsets_.empty() ? 0 : offsets_.size() - 1; }
  std::size_t begin(std::size_t k) const { return offsets_.at(k); }
  std::size_t end(std::size_t k) const { return offsets_.at(k + 1); }
  std::size_t size(std::size_t k) const { return end(k) - begin(k); }
  /// Block containing coordinate l.
  std::size_t block_of(std::size_t l) const;
  const std::vector<std::size_t>& offsets() const { return offsets_; }

  bool operator==(const Partition&) const = default;

 private:
  std::vector<std::size_t> offsets_;
};

struct Triplet {
  std::size_t row;
  std::size_t col;
  double value;
};

/// Coordinate-format sparse matrix, the exchange format between dataio and BlockMatrix.
struct SparseCoo {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<Triplet> entries;
};

struct OpNormEstimate {
  double value = 0.0;
  std::size_t iterations = 0;
  bool converged = true;
};

/// Sparse d x p operator stored both row-major (CSR) and column-major (CSC),
/// with a row partition (dual blocks) and a column partition (primal blocks).
/// Immutable after construction.
class BlockMatrix {
 public:
  BlockMatrix() = default;
  /// Duplicate coordinates are summed; explicit zeros are dropped.
  BlockMatrix(const SparseCoo& coo, Partition row_blocks, Partition col_blocks);
  BlockMatrix(const SparseCoo& coo, std::size_t m_blocks, std::size_t n_blocks);

  static BlockMatrix from_dense(std::size_t rows, std::size_t cols, std::span<const double> row_major,
                                Partition row_blocks, Partition col_blocks);
  static BlockMatrix identity(std::size_t dim, std::size_t blocks);

  BlockMatrix with_partitions(Partition row_blocks, Partition col_blocks) const;

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t nnz() const { return csr_val_.size(); }
  const Partition& row_blocks() const { return row_blocks_; }
  const Partition& col_blocks() const { return col_blocks_; }

  std::vector<double> apply(std::span<const double> x) const;
  void apply_into(std::span<const double> x, std::span<double> out) const;
  std::vector<double> apply_transpose(std::span<const double> y) const;
  void apply_transpose_into(std::span<const double> y, std::span<double> out) const;

  /// K_j * dx_j as a dense d-vector.
  std::vector<double> col_block_apply(std::size_t j, std::span<const double> dx_j) const;
  /// out += alpha * K_j * dx_j, touching only rows with nonzeros in block j.
  void col_block_accumulate(std::size_t j, std::span<const double> dx_j, double alpha,
                            std::span<double> out) const;
  /// K_i * x restricted to row block i.
  std::vector<double> row_block_dot(std::size_t i, std::span<const double> x) const;
  void row_block_dot_into(std::size_t i, std::span<const double> x, std::span<double> out) const;
  /// K_j^T * y for column block j.
  std::vector<double> col_block_adjoint(std::size_t j, std::span<const double> y) const;
  void col_block_adjoint_into(std::size_t j, std::span<const double> y, std::span<double> out) const;
  /// out += alpha * K_i^T * dy_i for row block i.
  void row_block_adjoint_accumulate(std::size_t i, std::span<const double> dy_i, double alpha,
                                    std::span<double> out) const;

  /// || K diag(1/sqrt(w)) ||^2 where w expands sigma over the column blocks.
  OpNormEstimate opnorm_sq_weighted(std::span<const double> sigma) const;
  /// ||K||^2.
  OpNormEstimate opnorm_sq() const;
  /// ||K_i||^2 for row block i (spectral).
  OpNormEstimate row_block_opnorm_sq(std::size_t i) const;
  /// ||K_j||^2 for column block j (spectral).
  OpNormEstimate col_block_opnorm_sq(std::size_t j) const;

  std::vector<double> to_dense() const;

  // raw views
  std::span<const std::size_t> csr_row_ptr() const { return csr_ptr_; }
  std::span<const std::size_t> csr_col_index() const { return csr_idx_; }
  std::span<const double> csr_values() const { return csr_val_; }
  std::span<const std::size_t> csc_col_ptr() const { return csc_ptr_; }
  std::span<const std::size_t> csc_row_index() const { return csc_idx_; }
  std::span<const double> csc_values() const { return csc_val_; }

  /// Nonzeros per column block, counted from the CSC view.
  std::vector<std::size_t> col_block_nnz() const;

 private:
  OpNormEstimate gram_top_eigenvalue(std::size_t row_begin, std::size_t row_end, std::size_t col_begin,
                                     std::size_t col_end, std::span<const double> col_scale) const;

  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  Partition row_blocks_;
  Partition col_blocks_;
  std::vector<std::size_t> csr_ptr_, csr_idx_;
  std::vector<double> csr_val_;
  std::vector<std::size_t> csc_ptr_, csc_idx_;
  std::vector<double> csc_val_;
};

/// Largest eigenvalue of a symmetric matrix of order <= 3 from its characteristic polynomial.
double symmetric_top_eigenvalue_small(std::size_t n, std::span<const double> a);

}  // namespace rpd
