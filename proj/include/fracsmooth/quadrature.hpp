#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <map>
#include <mutex>
#include <numbers>
#include <queue>
#include <span>
#include <sstream>
#include <vector>

#include <Eigen/Eigenvalues>
#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>

#include "errors.hpp"

namespace fracsmooth::quad {

struct GaussRule {
  std::vector<double> nodes;
  std::vector<double> weights;
  /// log of the weights; stays finite where the weights underflow.
  std::vector<double> log_weights;
};

namespace detail {

// Christoffel function 1/sum_k H_k(x)^2 for orthonormal probabilists' Hermite
// polynomials, returned in log form. Also returns H_n(x)/H_{n-1}(x) scaled
// quantities for Newton polishing.
struct HermiteEval {
  double log_christoffel;
  double ratio;  // H_n(x) / (sqrt(n) H_{n-1}(x)) = p_n / p_n'
};

inline HermiteEval hermite_eval(std::size_t n, double x) {
  double prev = 0.0, cur = 1.0, log_scale = 0.0, sum = 1.0;
  // sum holds sum_{k<=j} H_k^2 * exp(-2 log_scale)
  for (std::size_t k = 0; k + 1 < n; ++k) {
    const double next = (x * cur - std::sqrt(double(k)) * prev) / std::sqrt(double(k + 1));
    prev = cur;
    cur = next;
    sum += cur * cur;
    if (std::abs(cur) > 1e100) {
      prev *= 1e-100;
      cur *= 1e-100;
      sum *= 1e-200;
      log_scale += 100.0 * std::numbers::ln10;
    }
  }
  // cur = H_{n-1}, prev = H_{n-2}
  const double hn = (x * cur - std::sqrt(double(n - 1)) * prev) / std::sqrt(double(n));
  return {-(std::log(sum) + 2.0 * log_scale), hn / (std::sqrt(double(n)) * cur)};
}

inline GaussRule build_gauss_hermite(std::size_t n) {
  Eigen::VectorXd diag = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n));
  Eigen::VectorXd sub(static_cast<Eigen::Index>(n > 0 ? n - 1 : 0));
  for (std::size_t k = 1; k < n; ++k) sub[static_cast<Eigen::Index>(k - 1)] = std::sqrt(double(k));
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver;
  solver.computeFromTridiagonal(diag, sub, Eigen::EigenvaluesOnly);
  GaussRule rule;
  rule.nodes.resize(n);
  rule.weights.resize(n);
  rule.log_weights.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    double x = solver.eigenvalues()[static_cast<Eigen::Index>(i)];
    for (int it = 0; it < 3; ++it) x -= hermite_eval(n, x).ratio;
    rule.nodes[i] = x;
  }
  // symmetrize to remove eigen-solver asymmetry
  for (std::size_t i = 0; i < n / 2; ++i) {
    const double x = 0.5 * (rule.nodes[n - 1 - i] - rule.nodes[i]);
    rule.nodes[i] = -x;
    rule.nodes[n - 1 - i] = x;
  }
  if (n % 2 == 1) rule.nodes[n / 2] = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    rule.log_weights[i] = hermite_eval(n, rule.nodes[i]).log_christoffel;
    rule.weights[i] = std::exp(rule.log_weights[i]);
  }
  return rule;
}

inline GaussRule build_gauss_legendre(std::size_t n) {
  GaussRule rule;
  rule.nodes.resize(n);
  rule.weights.resize(n);
  rule.log_weights.resize(n);
  for (std::size_t i = 0; i < (n + 1) / 2; ++i) {
    double x = std::cos(std::numbers::pi * (double(i) + 0.75) / (double(n) + 0.5));
    double dp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = x;
      for (std::size_t k = 2; k <= n; ++k) {
        const double p2 = ((2.0 * double(k) - 1.0) * x * p1 - (double(k) - 1.0) * p0) / double(k);
        p0 = p1;
        p1 = p2;
      }
      if (n == 1) p0 = 1.0;
      dp = double(n) * (x * p1 - p0) / (x * x - 1.0);
      const double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    const double w = 2.0 / ((1.0 - x * x) * dp * dp);
    rule.nodes[i] = -x;
    rule.nodes[n - 1 - i] = x;
    rule.weights[i] = rule.weights[n - 1 - i] = w;
  }
  if (n % 2 == 1) rule.nodes[n / 2] = 0.0;
  for (std::size_t i = 0; i < n; ++i) rule.log_weights[i] = std::log(rule.weights[i]);
  return rule;
}

template <class Builder>
const GaussRule& cached_rule(std::size_t n, Builder build) {
  static std::mutex mutex;
  static std::map<std::size_t, GaussRule> cache;
  std::lock_guard lock(mutex);
  auto it = cache.find(n);
  if (it == cache.end()) it = cache.emplace(n, build(n)).first;
  return it->second;
}

}  // namespace detail

/// Gauss–Hermite rule for the standard Gaussian measure: sum_i w_i f(x_i)
/// approximates E f(Z), exact for polynomials of degree < 2n.
inline const GaussRule& gauss_hermite(std::size_t n) {
  fracsmooth::detail::require(n >= 1, "gauss_hermite: order must be >= 1");
  return detail::cached_rule<decltype(&detail::build_gauss_hermite)>(n, &detail::build_gauss_hermite);
}

/// Gauss–Legendre rule on [-1, 1].
inline const GaussRule& gauss_legendre(std::size_t n) {
  fracsmooth::detail::require(n >= 1, "gauss_legendre: order must be >= 1");
  static std::mutex mutex;
  static std::map<std::size_t, GaussRule> cache;
  std::lock_guard lock(mutex);
  auto it = cache.find(n);
  if (it == cache.end()) it = cache.emplace(n, detail::build_gauss_legendre(n)).first;
  return it->second;
}

struct Tolerance {
  double abs = 1e-14;
  double rel = 1e-11;
};

struct IntegralResult {
  double value = 0.0;
  double error = 0.0;
};

/// Globally adaptive Gauss–Kronrod (G10/K21) quadrature over consecutive
/// pieces [points[i], points[i+1]]. One error budget covers all pieces, so
/// small pieces are not refined beyond what the total needs. Throws
/// ConvergenceError when the interval budget is exhausted.
template <class F>
IntegralResult integrate_pieces(F&& f, std::span<const double> points, Tolerance tol = {},
                                std::size_t max_intervals = 4000) {
  using Kronrod = boost::math::quadrature::gauss_kronrod<double, 21>;
  using Gauss = boost::math::quadrature::gauss<double, 10>;
  const auto& xk = Kronrod::abscissa();
  const auto& wk = Kronrod::weights();
  const auto& wg = Gauss::weights();

  struct Piece {
    double a, b, value, error;
    bool operator<(const Piece& o) const { return error < o.error; }
  };
  auto rule = [&](double lo, double hi) {
    const double c = 0.5 * (lo + hi), h = 0.5 * (hi - lo);
    const double fc = f(c);
    double k = wk[0] * fc, g = 0.0;
    for (std::size_t i = 1; i < xk.size(); ++i) {
      const double s = f(c - h * xk[i]) + f(c + h * xk[i]);
      k += wk[i] * s;
      if (i % 2 == 1) g += wg[i / 2] * s;
    }
    return Piece{lo, hi, k * h, std::abs((k - g) * h)};
  };

  std::priority_queue<Piece> heap;
  double total = 0.0, error = 0.0;
  for (std::size_t i = 0; i + 1 < points.size(); ++i) {
    if (!(points[i + 1] > points[i])) continue;
    const Piece p = rule(points[i], points[i + 1]);
    total += p.value;
    error += p.error;
    heap.push(p);
  }
  if (heap.empty()) return {};
  std::vector<Piece> finished;
  while (error > std::max(tol.abs, tol.rel * std::abs(total)) && !heap.empty()) {
    if (heap.size() + finished.size() >= max_intervals) {
      std::ostringstream msg;
      msg << "adaptive quadrature on [" << points.front() << ", " << points.back()
          << "] stalled: error " << error << " for value " << total;
      throw ConvergenceError(msg.str());
    }
    const Piece worst = heap.top();
    heap.pop();
    const double mid = 0.5 * (worst.a + worst.b);
    if (!(mid > worst.a && mid < worst.b)) {
      // interval can no longer be split; accept its contribution
      error -= worst.error;
      finished.push_back(worst);
      continue;
    }
    const Piece left = rule(worst.a, mid), right = rule(mid, worst.b);
    total += left.value + right.value - worst.value;
    error += left.error + right.error - worst.error;
    heap.push(left);
    heap.push(right);
  }
  // re-sum to avoid drift from incremental updates
  double sum = 0.0, err = 0.0;
  for (const auto& p : finished) sum += p.value, err += p.error;
  while (!heap.empty()) {
    sum += heap.top().value;
    err += heap.top().error;
    heap.pop();
  }
  return {sum, err};
}

template <class F>
IntegralResult integrate(F&& f, double a, double b, Tolerance tol = {},
                         std::size_t max_intervals = 4000) {
  const double pts[2] = {a, b};
  return integrate_pieces(f, pts, tol, max_intervals);
}

/// Tanh-sinh quadrature for integrands with endpoint singularities.
template <class F>
IntegralResult integrate_endpoint_singular(F&& f, double a, double b, double rel_tol = 1e-12,
                                           double abs_tol = 1e-300) {
  thread_local boost::math::quadrature::tanh_sinh<double> integrator;
  double err = 0.0, l1 = 0.0;
  // the two-argument form sidesteps an endpoint rounding bug in the
  // one-argument wrapper of older Boost releases
  const double value = integrator.integrate([&](double x, double) { return f(x); }, a, b, rel_tol,
                                            &err, &l1);
  if (!std::isfinite(value) || err > std::max(abs_tol, 1e3 * rel_tol * l1)) {
    std::ostringstream msg;
    msg << "tanh-sinh quadrature on [" << a << ", " << b << "] failed: error " << err
        << " for L1 norm " << l1;
    throw ConvergenceError(msg.str());
  }
  return {value, err};
}

/// Half-width of the Gaussian window used for truncated expectations; covers
/// integrands growing like exp(growth * y).
inline double gaussian_window(double growth) { return 13.0 + 1.2 * std::abs(growth); }

/// E f(Y), Y standard normal, by adaptive quadrature over a truncated window
/// split at the given breakpoints. `growth` bounds the exponential growth
/// rate of f in y.
template <class F>
IntegralResult gaussian_expectation(F&& f, std::vector<double> breakpoints, double growth = 0.0,
                                    Tolerance tol = {}) {
  const double half = gaussian_window(growth);
  const double lo = -half + std::max(0.0, growth), hi = half + std::max(0.0, growth);
  std::vector<double> points{lo, hi};
  for (double b : breakpoints)
    if (b > lo && b < hi) points.push_back(b);
  std::sort(points.begin(), points.end());
  points.erase(std::unique(points.begin(), points.end()), points.end());
  constexpr double kInvSqrt2Pi = 0.5 * std::numbers::inv_sqrtpi * std::numbers::sqrt2;
  auto weighted = [&](double y) { return f(y) * std::exp(-0.5 * y * y) * kInvSqrt2Pi; };
  return integrate_pieces(weighted, points, tol);
}

}  // namespace fracsmooth::quad
