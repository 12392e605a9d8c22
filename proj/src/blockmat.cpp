#include "rpd/blockmat.hpp"

#include <algorithm>
#include <cmath>
#include <fmt/core.h>
#include <numbers>
#include <numeric>

#include "rpd/random.hpp"

namespace rpd {

Partition::Partition(std::vector<std::size_t> offsets) : offsets_(std::move(offsets)) {
  if (offsets_.size() < 2) throw DimensionError("Partition: need at least one block");
  if (offsets_.front() != 0) throw DimensionError("Partition: first offset must be 0");
  for (std::size_t k = 1; k < offsets_.size(); ++k) {
    if (offsets_[k] <= offsets_[k - 1]) throw DimensionError("Partition: offsets must be strictly increasing");
  }
}

Partition Partition::uniform(std::size_t dim, std::size_t n_blocks) {
  if (n_blocks == 0 || n_blocks > dim) {
    throw DimensionError(fmt::format("Partition: cannot split {} coordinates into {} blocks", dim, n_blocks));
  }
  std::vector<std::size_t> off(n_blocks + 1, 0);
  const std::size_t base = dim / n_blocks;
  const std::size_t extra = dim % n_blocks;
  for (std::size_t k = 0; k < n_blocks; ++k) off[k + 1] = off[k] + base + (k < extra ? 1 : 0);
  return Partition(std::move(off));
}

std::size_t Partition::block_of(std::size_t l) const {
  if (l >= dim()) throw DimensionError("Partition::block_of: coordinate out of range");
  auto it = std::upper_bound(offsets_.begin(), offsets_.end(), l);
  return static_cast<std::size_t>(it - offsets_.begin()) - 1;
}

BlockMatrix::BlockMatrix(const SparseCoo& coo, Partition row_blocks, Partition col_blocks)
    : rows_(coo.rows), cols_(coo.cols), row_blocks_(std::move(row_blocks)), col_blocks_(std::move(col_blocks)) {
  if (row_blocks_.dim() != rows_ || col_blocks_.dim() != cols_) {
    throw DimensionError(fmt::format("BlockMatrix: partitions ({}, {}) do not match shape {}x{}", row_blocks_.dim(),
                                     col_blocks_.dim(), rows_, cols_));
  }
  std::vector<Triplet> t = coo.entries;
  for (const auto& e : t) {
    if (e.row >= rows_ || e.col >= cols_) {
      throw DimensionError(fmt::format("BlockMatrix: entry ({}, {}) outside {}x{}", e.row, e.col, rows_, cols_));
    }
  }
  std::sort(t.begin(), t.end(), [](const Triplet& a, const Triplet& b) {
    return a.row != b.row ? a.row < b.row : a.col < b.col;
  });
  // merge duplicates, drop zeros
  std::vector<Triplet> merged;
  merged.reserve(t.size());
  for (const auto& e : t) {
    if (!merged.empty() && merged.back().row == e.row && merged.back().col == e.col) {
      merged.back().value += e.value;
    } else {
      merged.push_back(e);
    }
  }
  std::erase_if(merged, [](const Triplet& e) { return e.value == 0.0; });

  csr_ptr_.assign(rows_ + 1, 0);
  csr_idx_.resize(merged.size());
  csr_val_.resize(merged.size());
  for (const auto& e : merged) ++csr_ptr_[e.row + 1];
  std::partial_sum(csr_ptr_.begin(), csr_ptr_.end(), csr_ptr_.begin());
  for (std::size_t n = 0; n < merged.size(); ++n) {
    csr_idx_[n] = merged[n].col;
    csr_val_[n] = merged[n].value;
  }

  csc_ptr_.assign(cols_ + 1, 0);
  csc_idx_.resize(merged.size());
  csc_val_.resize(merged.size());
  for (const auto& e : merged) ++csc_ptr_[e.col + 1];
  std::partial_sum(csc_ptr_.begin(), csc_ptr_.end(), csc_ptr_.begin());
  std::vector<std::size_t> fill(csc_ptr_.begin(), csc_ptr_.end() - 1);
  // merged is row-sorted, so row indices within each column come out ascending
  for (const auto& e : merged) {
    const std::size_t pos = fill[e.col]++;
    csc_idx_[pos] = e.row;
    csc_val_[pos] = e.value;
  }
}

BlockMatrix::BlockMatrix(const SparseCoo& coo, std::size_t m_blocks, std::size_t n_blocks)
    : BlockMatrix(coo, Partition::uniform(coo.rows, m_blocks), Partition::uniform(coo.cols, n_blocks)) {}

BlockMatrix BlockMatrix::from_dense(std::size_t rows, std::size_t cols, std::span<const double> row_major,
                                    Partition row_blocks, Partition col_blocks) {
  if (row_major.size() != rows * cols) throw DimensionError("BlockMatrix::from_dense: size mismatch");
  SparseCoo coo{rows, cols, {}};
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t c = 0; c < cols; ++c)
      if (row_major[r * cols + c] != 0.0) coo.entries.push_back({r, c, row_major[r * cols + c]});
  return BlockMatrix(coo, std::move(row_blocks), std::move(col_blocks));
}

BlockMatrix BlockMatrix::identity(std::size_t dim, std::size_t blocks) {
  SparseCoo coo{dim, dim, {}};
  for (std::size_t l = 0; l < dim; ++l) coo.entries.push_back({l, l, 1.0});
  return BlockMatrix(coo, blocks, blocks);
}

BlockMatrix BlockMatrix::with_partitions(Partition row_blocks, Partition col_blocks) const {
  if (row_blocks.dim() != rows_ || col_blocks.dim() != cols_) {
    throw DimensionError("BlockMatrix::with_partitions: partition dimension mismatch");
  }
  BlockMatrix copy = *this;
  copy.row_blocks_ = std::move(row_blocks);
  copy.col_blocks_ = std::move(col_blocks);
  return copy;
}

std::vector<double> BlockMatrix::apply(std::span<const double> x) const {
  std::vector<double> out(rows_);
  apply_into(x, out);
  return out;
}

void BlockMatrix::apply_into(std::span<const double> x, std::span<double> out) const {
  if (x.size() != cols_ || out.size() != rows_) {
    throw DimensionError(fmt::format("BlockMatrix::apply: got x of length {} for {}x{}", x.size(), rows_, cols_));
  }
  for (std::size_t r = 0; r < rows_; ++r) {
    double acc = 0.0;
    for (std::size_t n = csr_ptr_[r]; n < csr_ptr_[r + 1]; ++n) acc += csr_val_[n] * x[csr_idx_[n]];
    out[r] = acc;
  }
}

std::vector<double> BlockMatrix::apply_transpose(std::span<const double> y) const {
  std::vector<double> out(cols_);
  apply_transpose_into(y, out);
  return out;
}

void BlockMatrix::apply_transpose_into(std::span<const double> y, std::span<double> out) const {
  if (y.size() != rows_ || out.size() != cols_) {
    throw DimensionError(
        fmt::format("BlockMatrix::apply_transpose: got y of length {} for {}x{}", y.size(), rows_, cols_));
  }
  for (std::size_t c = 0; c < cols_; ++c) {
    double acc = 0.0;
    for (std::size_t n = csc_ptr_[c]; n < csc_ptr_[c + 1]; ++n) acc += csc_val_[n] * y[csc_idx_[n]];
    out[c] = acc;
  }
}

std::vector<double> BlockMatrix::col_block_apply(std::size_t j, std::span<const double> dx_j) const {
  std::vector<double> out(rows_, 0.0);
  col_block_accumulate(j, dx_j, 1.0, out);
  return out;
}

void BlockMatrix::col_block_accumulate(std::size_t j, std::span<const double> dx_j, double alpha,
                                       std::span<double> out) const {
  if (j >= col_blocks_.count()) throw DimensionError(fmt::format("column block {} out of range", j));
  const std::size_t b = col_blocks_.begin(j);
  if (dx_j.size() != col_blocks_.size(j) || out.size() != rows_) {
    throw DimensionError("BlockMatrix::col_block_accumulate: length mismatch");
  }
  for (std::size_t c = 0; c < dx_j.size(); ++c) {
    const double v = alpha * dx_j[c];
    if (v == 0.0) continue;
    for (std::size_t n = csc_ptr_[b + c]; n < csc_ptr_[b + c + 1]; ++n) out[csc_idx_[n]] += csc_val_[n] * v;
  }
}

std::vector<double> BlockMatrix::row_block_dot(std::size_t i, std::span<const double> x) const {
  if (i >= row_blocks_.count()) throw DimensionError(fmt::format("row block {} out of range", i));
  std::vector<double> out(row_blocks_.size(i));
  row_block_dot_into(i, x, out);
  return out;
}

void BlockMatrix::row_block_dot_into(std::size_t i, std::span<const double> x, std::span<double> out) const {
  if (i >= row_blocks_.count()) throw DimensionError(fmt::format("row block {} out of range", i));
  if (x.size() != cols_ || out.size() != row_blocks_.size(i)) {
    throw DimensionError("BlockMatrix::row_block_dot: length mismatch");
  }
  const std::size_t b = row_blocks_.begin(i);
  for (std::size_t r = 0; r < out.size(); ++r) {
    double acc = 0.0;
    for (std::size_t n = csr_ptr_[b + r]; n < csr_ptr_[b + r + 1]; ++n) acc += csr_val_[n] * x[csr_idx_[n]];
    out[r] = acc;
  }
}

std::vector<double> BlockMatrix::col_block_adjoint(std::size_t j, std::span<const double> y) const {
  if (j >= col_blocks_.count()) throw DimensionError(fmt::format("column block {} out of range", j));
  std::vector<double> out(col_blocks_.size(j));
  col_block_adjoint_into(j, y, out);
  return out;
}

void BlockMatrix::col_block_adjoint_into(std::size_t j, std::span<const double> y, std::span<double> out) const {
  if (j >= col_blocks_.count()) throw DimensionError(fmt::format("column block {} out of range", j));
  if (y.size() != rows_ || out.size() != col_blocks_.size(j)) {
    throw DimensionError("BlockMatrix::col_block_adjoint: length mismatch");
  }
  const std::size_t b = col_blocks_.begin(j);
  for (std::size_t c = 0; c < out.size(); ++c) {
    double acc = 0.0;
    for (std::size_t n = csc_ptr_[b + c]; n < csc_ptr_[b + c + 1]; ++n) acc += csc_val_[n] * y[csc_idx_[n]];
    out[c] = acc;
  }
}

void BlockMatrix::row_block_adjoint_accumulate(std::size_t i, std::span<const double> dy_i, double alpha,
                                               std::span<double> out) const {
  if (i >= row_blocks_.count()) throw DimensionError(fmt::format("row block {} out of range", i));
  if (dy_i.size() != row_blocks_.size(i) || out.size() != cols_) {
    throw DimensionError("BlockMatrix::row_block_adjoint_accumulate: length mismatch");
  }
  const std::size_t b = row_blocks_.begin(i);
  for (std::size_t r = 0; r < dy_i.size(); ++r) {
    const double v = alpha * dy_i[r];
    if (v == 0.0) continue;
    for (std::size_t n = csr_ptr_[b + r]; n < csr_ptr_[b + r + 1]; ++n) out[csr_idx_[n]] += csr_val_[n] * v;
  }
}

std::vector<double> BlockMatrix::to_dense() const {
  std::vector<double> dense(rows_ * cols_, 0.0);
  for (std::size_t r = 0; r < rows_; ++r)
    for (std::size_t n = csr_ptr_[r]; n < csr_ptr_[r + 1]; ++n) dense[r * cols_ + csr_idx_[n]] = csr_val_[n];
  return dense;
}

std::vector<std::size_t> BlockMatrix::col_block_nnz() const {
  std::vector<std::size_t> counts(col_blocks_.count(), 0);
  for (std::size_t j = 0; j < col_blocks_.count(); ++j)
    counts[j] = csc_ptr_[col_blocks_.end(j)] - csc_ptr_[col_blocks_.begin(j)];
  return counts;
}

double symmetric_top_eigenvalue_small(std::size_t n, std::span<const double> a) {
  if (a.size() != n * n || n == 0 || n > 3) throw DimensionError("symmetric_top_eigenvalue_small: need order 1..3");
  if (n == 1) return a[0];
  if (n == 2) {
    const double mid = 0.5 * (a[0] + a[3]);
    const double half = 0.5 * (a[0] - a[3]);
    return mid + std::hypot(half, a[1]);
  }
  // trigonometric solution of the characteristic cubic
  const double p1 = a[1] * a[1] + a[2] * a[2] + a[5] * a[5];
  const double tr = (a[0] + a[4] + a[8]) / 3.0;
  if (p1 == 0.0) return std::max({a[0], a[4], a[8]});
  const double p2 = (a[0] - tr) * (a[0] - tr) + (a[4] - tr) * (a[4] - tr) + (a[8] - tr) * (a[8] - tr) + 2.0 * p1;
  const double p = std::sqrt(p2 / 6.0);
  const double b0 = (a[0] - tr) / p, b4 = (a[4] - tr) / p, b8 = (a[8] - tr) / p;
  const double b1 = a[1] / p, b2 = a[2] / p, b5 = a[5] / p;
  const double det = b0 * (b4 * b8 - b5 * b5) - b1 * (b1 * b8 - b5 * b2) + b2 * (b1 * b5 - b4 * b2);
  const double r = std::clamp(det / 2.0, -1.0, 1.0);
  const double phi = std::acos(r) / 3.0;
  return tr + 2.0 * p * std::cos(phi);
}

namespace {

constexpr std::size_t kPowerCap = 10000;
constexpr double kPowerTol = 1e-10;

}  // namespace

// Top eigenvalue of S A^T A S where A = K[row_begin:row_end, col_begin:col_end], S = diag(col_scale).
OpNormEstimate BlockMatrix::gram_top_eigenvalue(std::size_t row_begin, std::size_t row_end, std::size_t col_begin,
                                                std::size_t col_end, std::span<const double> col_scale) const {
  const std::size_t nr = row_end - row_begin;
  const std::size_t nc = col_end - col_begin;
  auto in_cols = [&](std::size_t c) { return c >= col_begin && c < col_end; };

  if (std::min(nr, nc) <= 3) {
    const bool by_cols = nc <= nr;
    const std::size_t order = std::min(nr, nc);
    if (order == 0) return {0.0, 0, true};
    std::vector<double> a(nr * nc, 0.0);  // dense scaled block, row-major
    for (std::size_t r = 0; r < nr; ++r)
      for (std::size_t n = csr_ptr_[row_begin + r]; n < csr_ptr_[row_begin + r + 1]; ++n)
        if (in_cols(csr_idx_[n])) a[r * nc + csr_idx_[n] - col_begin] = csr_val_[n] * col_scale[csr_idx_[n] - col_begin];
    std::vector<double> g(order * order, 0.0);
    for (std::size_t s = 0; s < order; ++s)
      for (std::size_t t = 0; t < order; ++t) {
        double acc = 0.0;
        if (by_cols) {
          for (std::size_t r = 0; r < nr; ++r) acc += a[r * nc + s] * a[r * nc + t];
        } else {
          for (std::size_t c = 0; c < nc; ++c) acc += a[s * nc + c] * a[t * nc + c];
        }
        g[s * order + t] = acc;
      }
    return {std::max(0.0, symmetric_top_eigenvalue_small(order, g)), 0, true};
  }

  std::vector<double> v(nc), w(nc), t(nr);
  auto gram = [&](const std::vector<double>& in, std::vector<double>& out) {
    std::fill(t.begin(), t.end(), 0.0);
    for (std::size_t r = 0; r < nr; ++r) {
      double acc = 0.0;
      for (std::size_t n = csr_ptr_[row_begin + r]; n < csr_ptr_[row_begin + r + 1]; ++n) {
        const std::size_t c = csr_idx_[n];
        if (in_cols(c)) acc += csr_val_[n] * col_scale[c - col_begin] * in[c - col_begin];
      }
      t[r] = acc;
    }
    std::fill(out.begin(), out.end(), 0.0);
    for (std::size_t r = 0; r < nr; ++r) {
      if (t[r] == 0.0) continue;
      for (std::size_t n = csr_ptr_[row_begin + r]; n < csr_ptr_[row_begin + r + 1]; ++n) {
        const std::size_t c = csr_idx_[n];
        if (in_cols(c)) out[c - col_begin] += csr_val_[n] * col_scale[c - col_begin] * t[r];
      }
    }
  };
  auto norm = [](const std::vector<double>& x) { return std::sqrt(std::inner_product(x.begin(), x.end(), x.begin(), 0.0)); };

  auto run_from = [&](std::vector<double> start) -> OpNormEstimate {
    double nv = norm(start);
    for (double& e : start) e /= nv;
    v = std::move(start);
    double lambda = 0.0;
    for (std::size_t it = 1; it <= kPowerCap; ++it) {
      gram(v, w);
      const double next = std::inner_product(v.begin(), v.end(), w.begin(), 0.0);
      const double nw = norm(w);
      if (nw == 0.0) return {0.0, it, true};
      for (std::size_t c = 0; c < nc; ++c) v[c] = w[c] / nw;
      if (std::abs(next - lambda) <= kPowerTol * std::abs(next)) return {next, it, true};
      lambda = next;
    }
    return {lambda, kPowerCap, false};
  };

  // documented start: all-ones; a second fixed pseudo-random start covers the
  // case where the ones vector is orthogonal to the top singular vector
  OpNormEstimate est = run_from(std::vector<double>(nc, 1.0));
  CounterRng rng(0x5EED, 0);
  std::vector<double> alt(nc);
  for (double& e : alt) e = rng.uniform() + 0.5;
  OpNormEstimate second = run_from(std::move(alt));
  if (second.value > est.value) {
    second.iterations += est.iterations;
    return second;
  }
  est.iterations += second.iterations;
  est.converged = est.converged && second.converged;
  return est;
}

OpNormEstimate BlockMatrix::opnorm_sq_weighted(std::span<const double> sigma) const {
  if (sigma.size() != col_blocks_.count()) {
    throw DimensionError(fmt::format("opnorm_sq_weighted: {} weights for {} column blocks", sigma.size(),
                                     col_blocks_.count()));
  }
  std::vector<double> scale(cols_);
  for (std::size_t j = 0; j < sigma.size(); ++j) {
    if (!(sigma[j] > 0.0)) throw std::invalid_argument("opnorm_sq_weighted: weights must be positive");
    for (std::size_t c = col_blocks_.begin(j); c < col_blocks_.end(j); ++c) scale[c] = 1.0 / std::sqrt(sigma[j]);
  }
  return gram_top_eigenvalue(0, rows_, 0, cols_, scale);
}

OpNormEstimate BlockMatrix::opnorm_sq() const {
  std::vector<double> ones(cols_, 1.0);
  return gram_top_eigenvalue(0, rows_, 0, cols_, ones);
}

OpNormEstimate BlockMatrix::row_block_opnorm_sq(std::size_t i) const {
  std::vector<double> ones(cols_, 1.0);
  return gram_top_eigenvalue(row_blocks_.begin(i), row_blocks_.end(i), 0, cols_, ones);
}

OpNormEstimate BlockMatrix::col_block_opnorm_sq(std::size_t j) const {
  std::vector<double> ones(col_blocks_.size(j), 1.0);
  return gram_top_eigenvalue(0, rows_, col_blocks_.begin(j), col_blocks_.end(j), ones);
}

}  // namespace rpd
