#include "rpd/prox.hpp"

#include <algorithm>
#include <cmath>
#include <fmt/core.h>
#include <stdexcept>

namespace rpd {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double soft_threshold(double z, double t) {
  if (z > t) return z - t;
  if (z < -t) return z + t;
  return 0.0;
}

void check_step(double step, const char* who) {
  if (!(step >= 0.0) || std::isinf(step)) throw std::invalid_argument(fmt::format("{}: step must be >= 0", who));
}

}  // namespace

ProxFn ProxFn::sq_norm(double mu) {
  if (!(mu >= 0.0)) throw std::invalid_argument("ProxFn::sq_norm: mu must be >= 0");
  ProxFn fn;
  fn.quad_ = mu;
  return fn;
}

ProxFn ProxFn::l1(double lambda, double shift) {
  if (!(lambda >= 0.0)) throw std::invalid_argument("ProxFn::l1: weight must be >= 0");
  if (!std::isfinite(shift)) throw std::invalid_argument("ProxFn::l1: shift must be finite");
  ProxFn fn;
  fn.kind_ = ProxKind::L1;
  fn.weight_ = lambda;
  fn.shift_ = shift;
  return fn;
}

ProxFn ProxFn::hinge(double weight) {
  if (!(weight > 0.0)) throw std::invalid_argument("ProxFn::hinge: weight must be > 0");
  ProxFn fn;
  fn.kind_ = ProxKind::Hinge;
  fn.weight_ = weight;
  return fn;
}

ProxFn ProxFn::box(double lo, double hi) {
  if (std::isnan(lo) || std::isnan(hi) || lo > hi) throw std::invalid_argument("ProxFn::box: need lo <= hi");
  ProxFn fn;
  fn.kind_ = ProxKind::Box;
  fn.lo_ = lo;
  fn.hi_ = hi;
  return fn;
}

ProxFn ProxFn::with_quadratic(double mu) const {
  if (!(mu >= 0.0)) throw std::invalid_argument("ProxFn::with_quadratic: mu must be >= 0");
  ProxFn fn = *this;
  fn.quad_ += mu;
  return fn;
}

double ProxFn::base_value(double x) const {
  switch (kind_) {
    case ProxKind::Zero:
      return 0.0;
    case ProxKind::L1:
      return weight_ * std::abs(x - shift_);
    case ProxKind::Hinge:
      return weight_ * std::max(0.0, 1.0 - x);
    case ProxKind::Box:
      return (x >= lo_ && x <= hi_) ? 0.0 : kInf;
  }
  return 0.0;
}

double ProxFn::base_prox(double z, double step) const {
  switch (kind_) {
    case ProxKind::Zero:
      return z;
    case ProxKind::L1:
      return shift_ + soft_threshold(z - shift_, step * weight_);
    case ProxKind::Hinge: {
      const double tw = step * weight_;
      if (z < 1.0 - tw) return z + tw;
      if (z <= 1.0) return 1.0;
      return z;
    }
    case ProxKind::Box:
      return std::clamp(z, lo_, hi_);
  }
  return z;
}

double ProxFn::value(double x) const {
  return base_value(x) + 0.5 * quad_ * x * x;
}

double ProxFn::prox(double z, double step) const {
  check_step(step, "ProxFn::prox");
  if (step == 0.0) return z;
  if (quad_ == 0.0) return base_prox(z, step);
  const double scale = 1.0 + step * quad_;
  return base_prox(z / scale, step / scale);
}

double ProxFn::prox_conjugate(double z, double rho) const {
  if (!(rho > 0.0) || std::isinf(rho)) throw std::invalid_argument("ProxFn::prox_conjugate: rho must be > 0");
  const double y = z - rho * prox(z / rho, 1.0 / rho);
  return conj_domain().project(y);
}

Interval ProxFn::conj_domain() const {
  if (quad_ > 0.0) return {};
  switch (kind_) {
    case ProxKind::Zero:
      return {0.0, 0.0};
    case ProxKind::L1:
      return {-weight_, weight_};
    case ProxKind::Hinge:
      return {-weight_, 0.0};
    case ProxKind::Box:
      return {std::isinf(lo_) ? 0.0 : -kInf, std::isinf(hi_) ? 0.0 : kInf};
  }
  return {};
}

ConjValue ProxFn::conj_value(double v) const {
  if (quad_ > 0.0) {
    const double x = base_prox(v / quad_, 1.0 / quad_);
    return {v * x - base_value(x) - 0.5 * quad_ * x * x, 0.0};
  }
  const Interval dom = conj_domain();
  const double dist = dom.distance(v);
  if (dist > 0.0) return {kInf, dist};
  switch (kind_) {
    case ProxKind::Zero:
      return {0.0, 0.0};
    case ProxKind::L1:
      return {shift_ * v, 0.0};
    case ProxKind::Hinge:
      return {v, 0.0};
    case ProxKind::Box:
      if (v > 0.0) return {v * hi_, 0.0};
      if (v < 0.0) return {v * lo_, 0.0};
      return {0.0, 0.0};
  }
  return {0.0, 0.0};
}

Interval ProxFn::subdifferential(double x) const {
  Interval s{0.0, 0.0};
  switch (kind_) {
    case ProxKind::Zero:
      break;
    case ProxKind::L1:
      if (x > shift_) s = {weight_, weight_};
      else if (x < shift_) s = {-weight_, -weight_};
      else s = {-weight_, weight_};
      break;
    case ProxKind::Hinge:
      if (x < 1.0) s = {-weight_, -weight_};
      else if (x == 1.0) s = {-weight_, 0.0};
      break;
    case ProxKind::Box:
      if (x < lo_ || x > hi_) return {kInf, -kInf};
      if (lo_ == hi_) s = {-kInf, kInf};
      else if (x == lo_) s = {-kInf, 0.0};
      else if (x == hi_) s = {0.0, kInf};
      break;
  }
  return {s.lo + quad_ * x, s.hi + quad_ * x};
}

std::string ProxFn::describe() const {
  std::string base;
  switch (kind_) {
    case ProxKind::Zero:
      base = "zero";
      break;
    case ProxKind::L1:
      base = fmt::format("l1(weight={}, shift={})", weight_, shift_);
      break;
    case ProxKind::Hinge:
      base = fmt::format("hinge(weight={})", weight_);
      break;
    case ProxKind::Box:
      base = fmt::format("box({}, {})", lo_, hi_);
      break;
  }
  if (quad_ > 0.0) base += fmt::format(" + {}/2 x^2", quad_);
  return base;
}

std::vector<double> prox(const ProxFn& fn, std::span<const double> z, double step) {
  std::vector<double> out(z.size());
  for (std::size_t l = 0; l < z.size(); ++l) out[l] = fn.prox(z[l], step);
  return out;
}

std::vector<double> prox_conjugate(const ProxFn& fn, std::span<const double> z, double rho) {
  std::vector<double> out(z.size());
  for (std::size_t l = 0; l < z.size(); ++l) out[l] = fn.prox_conjugate(z[l], rho);
  return out;
}

ConjValue conj_value(const ProxFn& fn, std::span<const double> v) {
  ConjValue total;
  double dist_sq = 0.0;
  for (double e : v) {
    const ConjValue c = fn.conj_value(e);
    total.value += c.value;
    dist_sq += c.violation * c.violation;
  }
  total.violation = std::sqrt(dist_sq);
  return total;
}

double value(const ProxFn& fn, std::span<const double> x) {
  double acc = 0.0;
  for (double e : x) acc += fn.value(e);
  return acc;
}

double separable_value(std::span<const ProxFn> fns, std::span<const double> x) {
  if (fns.size() != x.size()) throw std::invalid_argument("separable_value: length mismatch");
  double acc = 0.0;
  for (std::size_t l = 0; l < x.size(); ++l) acc += fns[l].value(x[l]);
  return acc;
}

ConjValue separable_conj_value(std::span<const ProxFn> fns, std::span<const double> v) {
  if (fns.size() != v.size()) throw std::invalid_argument("separable_conj_value: length mismatch");
  ConjValue total;
  double dist_sq = 0.0;
  for (std::size_t l = 0; l < v.size(); ++l) {
    const ConjValue c = fns[l].conj_value(v[l]);
    total.value += c.value;
    dist_sq += c.violation * c.violation;
  }
  total.violation = std::sqrt(dist_sq);
  return total;
}

}  // namespace rpd
