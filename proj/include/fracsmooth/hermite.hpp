#pragma once

#include <cmath>
#include <cstddef>
#include <numbers>
#include <vector>

#include "errors.hpp"

namespace fracsmooth {

/// Orthonormal (in the standard Gaussian measure) Hermite polynomial
/// H_n(x) = (-1)^n / sqrt(n!) e^{x^2/2} d^n/dx^n e^{-x^2/2}.
inline double hermite(std::size_t n, double x) {
  if (n == 0) return 1.0;
  double prev = 1.0, cur = x;
  for (std::size_t k = 1; k < n; ++k) {
    const double next = (x * cur - std::sqrt(double(k)) * prev) / std::sqrt(double(k + 1));
    prev = cur;
    cur = next;
  }
  return cur;
}

/// Iterates H_0(x), H_1(x), ... with overflow-safe rescaling. value(c) returns
/// H_k(x) * exp(c) for the current k without forming H_k(x) itself.
class HermiteSweep {
 public:
  explicit HermiteSweep(double x) : x_(x) {}

  std::size_t order() const { return k_; }

  double value(double log_factor = 0.0) const {
    if (cur_ == 0.0) return 0.0;
    const double c = log_scale_ + log_factor;
    return c == 0.0 ? cur_ : cur_ * std::exp(c);
  }

  void advance() {
    const double next = (x_ * cur_ - std::sqrt(double(k_)) * prev_) / std::sqrt(double(k_ + 1));
    prev_ = cur_;
    cur_ = next;
    ++k_;
    if (std::abs(cur_) > 1e150) {
      prev_ *= 1e-150;
      cur_ *= 1e-150;
      log_scale_ += 150.0 * std::numbers::ln10;
    }
  }

 private:
  double x_;
  double prev_ = 0.0;
  double cur_ = 1.0;
  double log_scale_ = 0.0;
  std::size_t k_ = 0;
};

/// Truncated Hermite expansion g = sum_{k<=K} alpha_k H_k of a function of a
/// standard Gaussian variable.
struct ChaosExpansion {
  std::vector<double> alpha;
  /// L2 mass beyond the truncation order (Parseval residual).
  double tail_l2 = 0.0;

  std::size_t order() const { return alpha.empty() ? 0 : alpha.size() - 1; }

  double evaluate(double x) const {
    double sum = 0.0;
    HermiteSweep h(x);
    for (std::size_t k = 0; k < alpha.size(); ++k) {
      if (alpha[k] != 0.0) sum += alpha[k] * h.value();
      h.advance();
    }
    return sum;
  }

  /// g'(x) = sum_k alpha_k sqrt(k) H_{k-1}(x)
  double derivative(double x) const {
    double sum = 0.0;
    HermiteSweep h(x);
    for (std::size_t k = 1; k < alpha.size(); ++k) {
      if (alpha[k] != 0.0) sum += alpha[k] * std::sqrt(double(k)) * h.value();
      h.advance();
    }
    return sum;
  }

  double second_derivative(double x) const {
    double sum = 0.0;
    HermiteSweep h(x);
    for (std::size_t k = 2; k < alpha.size(); ++k) {
      if (alpha[k] != 0.0) sum += alpha[k] * std::sqrt(double(k) * double(k - 1)) * h.value();
      h.advance();
    }
    return sum;
  }
};

}  // namespace fracsmooth
