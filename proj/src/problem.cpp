#include "rpd/problem.hpp"

#include <algorithm>
#include <cmath>
#include <fmt/core.h>
#include <numeric>
#include <stdexcept>

namespace rpd {

double SmoothTerm::value(std::span<const double> x) const {
  double acc = 0.0;
  for (std::size_t l = 0; l < x.size(); ++l) acc += 0.5 * curvature_at(l) * x[l] * x[l] + linear_at(l) * x[l];
  return acc;
}

double SmoothTerm::grad(std::size_t l, double x_l) const {
  return curvature_at(l) * x_l + linear_at(l);
}

double ProblemSpec::mu_f(std::size_t j) const {
  const Partition& cb = K.col_blocks();
  double mu = std::numeric_limits<double>::infinity();
  for (std::size_t l = cb.begin(j); l < cb.end(j); ++l) mu = std::min(mu, f[l].strong_convexity());
  return mu;
}

double ProblemSpec::mu_g(std::size_t i) const {
  const Partition& rb = K.row_blocks();
  double mu = std::numeric_limits<double>::infinity();
  for (std::size_t l = rb.begin(i); l < rb.end(i); ++l) mu = std::min(mu, g[l].strong_convexity());
  return mu;
}

double ProblemSpec::lipschitz_h(std::size_t j) const {
  const Partition& cb = K.col_blocks();
  double L = 0.0;
  for (std::size_t l = cb.begin(j); l < cb.end(j); ++l) L = std::max(L, h.curvature_at(l));
  return L;
}

namespace {

void check_law(std::span<const double> law, std::size_t count, const char* field) {
  if (law.size() != count) {
    throw std::invalid_argument(fmt::format("{}: expected {} entries, got {}", field, count, law.size()));
  }
  double total = 0.0;
  for (double v : law) {
    if (!(v > 0.0)) throw std::invalid_argument(fmt::format("{}: probabilities must be positive", field));
    total += v;
  }
  if (std::abs(total - 1.0) > 1e-9) throw std::invalid_argument(fmt::format("{}: sums to {}, not 1", field, total));
}

std::vector<double> uniform_law(std::size_t count) {
  return std::vector<double>(count, 1.0 / static_cast<double>(count));
}

}  // namespace

void ProblemSpec::validate() const {
  if (f.size() != p()) throw std::invalid_argument(fmt::format("f: expected {} functions, got {}", p(), f.size()));
  if (g.size() != d()) throw std::invalid_argument(fmt::format("g: expected {} functions, got {}", d(), g.size()));
  if (!h.curvature.empty() && h.curvature.size() != p()) throw std::invalid_argument("h.curvature: length mismatch");
  if (!h.linear.empty() && h.linear.size() != p()) throw std::invalid_argument("h.linear: length mismatch");
  for (double c : h.curvature)
    if (!(c >= 0.0)) throw std::invalid_argument("h.curvature: must be >= 0");
  if (sigma.size() != n()) throw std::invalid_argument(fmt::format("sigma: expected {} weights", n()));
  for (double s : sigma)
    if (!(s > 0.0)) throw std::invalid_argument("sigma: weights must be positive");
  check_law(q, n(), "q");
  check_law(q_hat, m(), "q_hat");
}

ProblemSpec make_problem(std::string name, BlockMatrix K, std::vector<ProxFn> f, std::vector<ProxFn> g,
                         SmoothTerm h) {
  ProblemSpec spec;
  spec.name = std::move(name);
  spec.sigma.assign(K.col_blocks().count(), 1.0);
  spec.q = uniform_law(K.col_blocks().count());
  spec.q_hat = uniform_law(K.row_blocks().count());
  spec.K = std::move(K);
  spec.f = std::move(f);
  spec.g = std::move(g);
  spec.h = std::move(h);
  spec.validate();
  return spec;
}

ProblemSpec build_svm(const Dataset& data, double lambda, std::size_t n_blocks, std::size_t m_blocks) {
  if (!(lambda > 0.0)) throw std::invalid_argument("build_svm: lambda must be > 0");
  if (data.n_samples() == 0 || data.n_features == 0) throw std::invalid_argument("build_svm: empty data");
  SparseCoo coo{data.n_samples(), data.n_features, {}};
  for (std::size_t r = 0; r < data.n_samples(); ++r) {
    const double b = data.labels.at(r);
    if (b != 1.0 && b != -1.0) throw std::invalid_argument(fmt::format("build_svm: label {} of sample {} not +-1", b, r));
    for (const auto& [c, v] : data.rows[r]) coo.entries.push_back({r, c, b * v});
  }
  BlockMatrix K(coo, m_blocks, n_blocks);
  const double w = 1.0 / static_cast<double>(data.n_samples());
  return make_problem("svm", std::move(K), std::vector<ProxFn>(data.n_features, ProxFn::sq_norm(lambda)),
                      std::vector<ProxFn>(data.n_samples(), ProxFn::hinge(w)));
}

ProblemSpec build_lad(const SparseCoo& K, std::span<const double> b, double lambda, std::size_t n_blocks,
                      std::size_t m_blocks) {
  if (!(lambda > 0.0)) throw std::invalid_argument("build_lad: lambda must be > 0");
  if (b.size() != K.rows) {
    throw DimensionError(fmt::format("build_lad: b has length {} but K has {} rows", b.size(), K.rows));
  }
  std::vector<ProxFn> g;
  g.reserve(b.size());
  for (double v : b) g.push_back(ProxFn::l1(1.0, v));
  return make_problem("lad", BlockMatrix(K, m_blocks, n_blocks), std::vector<ProxFn>(K.cols, ProxFn::l1(lambda)),
                      std::move(g));
}

std::vector<ProxFn> phi_functions(const ProblemSpec& spec) {
  std::vector<ProxFn> out;
  out.reserve(spec.p());
  for (std::size_t l = 0; l < spec.p(); ++l) out.push_back(spec.f[l].with_quadratic(spec.h.curvature_at(l)));
  return out;
}

void apply_sigma_rule(ProblemSpec& spec, SigmaRule rule) {
  for (std::size_t j = 0; j < spec.n(); ++j) {
    if (rule == SigmaRule::Unit) {
      spec.sigma[j] = 1.0;
    } else {
      const double s = spec.K.col_block_opnorm_sq(j).value;
      spec.sigma[j] = s > 0.0 ? s : 1.0;
    }
  }
}

void add_dual_curvature(ProblemSpec& spec, double mu) {
  for (ProxFn& fn : spec.g) fn = fn.with_quadratic(mu);
}

ProblemConstants constants(const ProblemSpec& spec) {
  spec.validate();
  ProblemConstants c;
  c.m = spec.m();
  c.n = spec.n();
  const OpNormEstimate weighted = spec.K.opnorm_sq_weighted(spec.sigma);
  c.L_bar = weighted.value;
  const OpNormEstimate plain = spec.K.opnorm_sq();
  c.K_norm = std::sqrt(plain.value);
  c.opnorm_converged = weighted.converged && plain.converged;
  c.L_h = 0.0;
  c.mu_f = std::numeric_limits<double>::infinity();
  for (std::size_t j = 0; j < spec.n(); ++j) {
    c.L_h = std::max(c.L_h, spec.lipschitz_h(j) / spec.sigma[j]);
    c.mu_f = std::min(c.mu_f, spec.mu_f(j) / spec.sigma[j]);
  }
  c.mu_g = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < spec.m(); ++i) c.mu_g = std::min(c.mu_g, spec.mu_g(i));
  c.tau0_primal = *std::min_element(spec.q.begin(), spec.q.end());
  c.tau0 = std::min(c.tau0_primal, *std::min_element(spec.q_hat.begin(), spec.q_hat.end()));
  c.lipschitz_g = spec.lipschitz_g;
  c.diameter_phi = spec.diameter_phi;
  c.diameter_g = spec.diameter_g;
  return c;
}

BlockLaws block_laws(const ProblemSpec& spec) {
  BlockLaws laws;
  laws.q = spec.q;
  laws.q_hat = spec.q_hat;
  laws.sigma = spec.sigma;
  for (std::size_t j = 0; j < spec.n(); ++j) laws.mu_f.push_back(spec.mu_f(j));
  for (std::size_t i = 0; i < spec.m(); ++i) laws.mu_g.push_back(spec.mu_g(i));
  return laws;
}

BlockLaws uniform_laws(std::size_t m, std::size_t n, double mu_f, double mu_g) {
  if (m == 0 || n == 0) throw std::invalid_argument("uniform_laws: need m, n >= 1");
  BlockLaws laws;
  laws.q = uniform_law(n);
  laws.q_hat = uniform_law(m);
  laws.sigma.assign(n, 1.0);
  laws.mu_f.assign(n, mu_f);
  laws.mu_g.assign(m, mu_g);
  return laws;
}

}  // namespace rpd
