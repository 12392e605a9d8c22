#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "rpd/blockmat.hpp"
#include "rpd/dataio.hpp"
#include "rpd/prox.hpp"

namespace rpd {

/// Separable smooth term h(x) = sum_l (c_l/2) x_l^2 + a_l x_l.
/// Empty vectors mean h = 0.
struct SmoothTerm {
  std::vector<double> curvature;
  std::vector<double> linear;

  bool is_zero() const { return curvature.empty() && linear.empty(); }
  double value(std::span<const double> x) const;
  /// d/dx_l h at x_l.
  double grad(std::size_t l, double x_l) const;
  double curvature_at(std::size_t l) const { return curvature.empty() ? 0.0 : curvature[l]; }
  double linear_at(std::size_t l) const { return linear.empty() ? 0.0 : linear[l]; }
};

enum class SigmaRule { Unit, ColumnNorm };

/// min_x sum_l f_l(x_l) + h(x) + sum_r g_r((Kx)_r).
/// f has one function per primal coordinate, g one per dual coordinate;
/// blocks come from the partitions of K.
struct ProblemSpec {
  std::string name;
  BlockMatrix K;
  std::vector<ProxFn> f;
  std::vector<ProxFn> g;
  SmoothTerm h;
  std::vector<double> sigma;  // n
  std::vector<double> q;      // n
  std::vector<double> q_hat;  // m

  // optional bound-overlay inputs
  std::optional<double> lipschitz_g;
  std::optional<double> diameter_phi;
  std::optional<double> diameter_g;

  std::size_t p() const { return K.cols(); }
  std::size_t d() const { return K.rows(); }
  std::size_t n() const { return K.col_blocks().count(); }
  std::size_t m() const { return K.row_blocks().count(); }

  double mu_f(std::size_t j) const;
  double mu_g(std::size_t i) const;
  double lipschitz_h(std::size_t j) const;

  /// Throws std::invalid_argument naming the first broken invariant.
  void validate() const;
};

/// Uniform laws, sigma = 1, h = 0.
ProblemSpec make_problem(std::string name, BlockMatrix K, std::vector<ProxFn> f, std::vector<ProxFn> g,
                         SmoothTerm h = {});

/// (1/N) sum_i max(0, 1 - b_i <a_i, x>) + (lambda/2) ||x||^2.
ProblemSpec build_svm(const Dataset& data, double lambda, std::size_t n_blocks, std::size_t m_blocks);
/// ||Kx - b||_1 + lambda ||x||_1.
ProblemSpec build_lad(const SparseCoo& K, std::span<const double> b, double lambda, std::size_t n_blocks,
                      std::size_t m_blocks);

/// f_l + (c_l/2) x^2 per coordinate, i.e. phi = f + h without the linear part of h.
std::vector<ProxFn> phi_functions(const ProblemSpec& spec);

void apply_sigma_rule(ProblemSpec& spec, SigmaRule rule);
/// Add (mu/2)||r||^2 to every g coordinate.
void add_dual_curvature(ProblemSpec& spec, double mu);

struct ProblemConstants {
  double L_bar = 0.0;     // ||K diag(1/sqrt(sigma))||^2
  double L_h = 0.0;       // max_j L_j^h / sigma_j
  double mu_g = 0.0;      // min_i mu_{g_i}
  double mu_f = 0.0;      // min_j mu_{f_j} / sigma_j
  double tau0 = 1.0;      // min(min q_hat, min q)
  double tau0_primal = 1.0;  // min q
  double K_norm = 0.0;    // ||K||
  bool opnorm_converged = true;
  std::size_t m = 1;
  std::size_t n = 1;
  std::optional<double> lipschitz_g;
  std::optional<double> diameter_phi;
  std::optional<double> diameter_g;
};

ProblemConstants constants(const ProblemSpec& spec);

/// Per-block data the condition checks need.
struct BlockLaws {
  std::vector<double> q, q_hat, sigma, mu_f, mu_g;
};

BlockLaws block_laws(const ProblemSpec& spec);
/// Uniform laws over m dual and n primal blocks with constant curvature.
BlockLaws uniform_laws(std::size_t m, std::size_t n, double mu_f = 0.0, double mu_g = 0.0);

}  // namespace rpd
