/*
 * comparison.hh
 *
 *  class-K comparison gains restricted to zero and k*r^p with k,p > 0; the
 *  family is closed under positive scaling and has exact inverses, which is
 *  all the certificate calculus needs.
 */

#pragma once

#include <cmath>

#include "impsym/common.hh"

namespace impsym {

class ComparisonFunction {
 public:
  static ComparisonFunction zero() { return ComparisonFunction(); }

  static ComparisonFunction power(double k, double p) {
    if (!(k > 0) || !(p > 0))
      throw OutOfDomain("comparison function: k and p must be positive");
    ComparisonFunction f;
    f.zero_ = false;
    f.k_ = k;
    f.p_ = p;
    return f;
  }

  static ComparisonFunction linear(double k) { return power(k, 1); }
  static ComparisonFunction identity() { return power(1, 1); }

  double operator()(double r) const {
    if (zero_) return 0;
    if (!(r >= 0)) throw OutOfDomain("comparison function: negative argument");
    if (r == 0) return 0;
    return p_ == 1 ? k_ * r : k_ * std::pow(r, p_);
  }

  /* s * f, s > 0 */
  ComparisonFunction scaled(double s) const {
    if (!(s > 0)) throw OutOfDomain("comparison function: scale must be positive");
    if (zero_) return zero();
    return power(s * k_, p_);
  }

  /* exact functional inverse; the zero function has none */
  ComparisonFunction inverse() const {
    if (zero_) throw OutOfDomain("comparison function: zero has no inverse");
    return power(std::pow(1 / k_, 1 / p_), 1 / p_);
  }

  bool is_zero() const { return zero_; }
  bool is_linear() const { return !zero_ && p_ == 1; }
  double gain() const { return zero_ ? 0 : k_; }
  double exponent() const { return p_; }

 private:
  ComparisonFunction() = default;
  bool zero_ = true;
  double k_ = 0;
  double p_ = 1;
};

}  // namespace impsym
