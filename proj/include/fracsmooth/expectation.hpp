#pragma once

#include <cmath>
#include <optional>
#include <vector>

#include "quadrature.hpp"

namespace fracsmooth {

/// Expectations of functions of S_t = s exp(sqrt(v) Y - v/2), Y ~ N(0,1).
/// Quadrature breakpoints cluster around `focus` (typically the strike) at
/// the scale sqrt(feature_variance), the log-price width of the structure f
/// has around the focus.
struct LognormalExpectation {
  double s = 1.0;
  double v = 0.0;
  std::optional<double> focus;
  double feature_variance = 0.0;
  /// f may grow like S^power in the tails.
  double power = 4.0;
  quad::Tolerance tol{1e-15, 1e-12};

  double y_to_s(double y) const { return s * std::exp(std::sqrt(v) * y - 0.5 * v); }

  std::vector<double> breakpoints() const {
    std::vector<double> pts;
    if (!focus || v <= 0.0) return pts;
    const double sv = std::sqrt(v);
    const double centre = (std::log(*focus / s) + 0.5 * v) / sv;
    const double width = std::sqrt(std::max(feature_variance, 1e-300)) / sv;
    pts.push_back(centre);
    for (double k : {0.25, 0.5, 1.0, 2.0, 4.0, 8.0, 16.0, 32.0}) {
      pts.push_back(centre - k * width);
      pts.push_back(centre + k * width);
    }
    for (double k : {-3.0, 0.0, 3.0}) pts.push_back(k);
    return pts;
  }

  template <class F>
  quad::IntegralResult operator()(F&& f) const {
    if (v <= 0.0) return {f(s), 0.0};
    return quad::gaussian_expectation([&](double y) { return f(y_to_s(y)); }, breakpoints(),
                                      power * std::sqrt(v), tol);
  }
};

}  // namespace fracsmooth
