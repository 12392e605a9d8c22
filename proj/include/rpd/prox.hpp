#pragma once

#include <limits>
#include <span>
#include <string>
#include <vector>

namespace rpd {

enum class ProxKind { Zero, L1, Hinge, Box };

/// Conjugate value with the distance of the argument to the conjugate domain.
/// value is +inf whenever violation > 0.
struct ConjValue {
  double value = 0.0;
  double violation = 0.0;
};

/// Closed interval [lo, hi]; either end may be infinite.
struct Interval {
  double lo = -std::numeric_limits<double>::infinity();
  double hi = std::numeric_limits<double>::infinity();

  bool contains(double v) const { return v >= lo && v <= hi; }
  double distance(double v) const { return v < lo ? lo - v : (v > hi ? v - hi : 0.0); }
  double project(double v) const { return v < lo ? lo : (v > hi ? hi : v); }
};

/// Scalar closed convex function base(x) + (quad/2) x^2, applied component-wise.
///
///   Zero            base = 0
///   L1(lambda, b)   base = lambda |x - b|
///   Hinge(w)        base = w max(0, 1 - x)
///   Box(lo, hi)     base = indicator of [lo, hi]
///
/// SqNorm(mu) is Zero with quad = mu.
class ProxFn {
 public:
  ProxFn() = default;

  static ProxFn zero() { return {}; }
  static ProxFn sq_norm(double mu);
  static ProxFn l1(double lambda, double shift = 0.0);
  static ProxFn hinge(double weight);
  static ProxFn box(double lo, double hi);

  /// Same function plus (mu/2) x^2.
  ProxFn with_quadratic(double mu) const;

  ProxKind kind() const { return kind_; }
  double quad() const { return quad_; }
  double weight() const { return weight_; }
  double shift() const { return shift_; }
  double lo() const { return lo_; }
  double hi() const { return hi_; }
  double strong_convexity() const { return quad_; }

  /// Function value; +inf outside a Box.
  double value(double x) const;
  /// argmin_u step*fn(u) + (u - z)^2 / 2. step = 0 is the identity.
  double prox(double z, double step) const;
  /// prox_{rho fn*}(z) through Moreau: z - rho prox_{fn/rho}(z/rho), kept inside dom fn*.
  double prox_conjugate(double z, double rho) const;
  ConjValue conj_value(double v) const;
  Interval conj_domain() const;
  double conj_domain_distance(double v) const { return conj_domain().distance(v); }
  /// A subgradient interval of fn at x (empty interval means x outside dom fn).
  Interval subdifferential(double x) const;

  std::string describe() const;

 private:
  double base_value(double x) const;
  double base_prox(double z, double step) const;

  ProxKind kind_ = ProxKind::Zero;
  double quad_ = 0.0;
  double weight_ = 0.0;
  double shift_ = 0.0;
  double lo_ = 0.0;
  double hi_ = 0.0;
};

// Component-wise vector forms with one function shared by every coordinate.
std::vector<double> prox(const ProxFn& fn, std::span<const double> z, double step);
std::vector<double> prox_conjugate(const ProxFn& fn, std::span<const double> z, double rho);
ConjValue conj_value(const ProxFn& fn, std::span<const double> v);
double value(const ProxFn& fn, std::span<const double> x);

// Per-coordinate forms: fns[l] acts on coordinate l.
double separable_value(std::span<const ProxFn> fns, std::span<const double> x);
ConjValue separable_conj_value(std::span<const ProxFn> fns, std::span<const double> v);

}  // namespace rpd
