#pragma once

#include <cmath>
#include <span>
#include <vector>

#include "errors.hpp"

namespace fracsmooth {

/// Weighted least-squares line y = intercept + slope x.
struct LineFit {
  double slope = 0.0;
  double intercept = 0.0;
  /// Standard error of the slope assuming unit-variance weighted residuals.
  double slope_se = 0.0;
  double r_squared = 1.0;
  /// Weighted residual sum of squares.
  double chi_squared = 0.0;
  std::vector<double> residuals;
};

/// Empty weights mean ordinary least squares.
inline LineFit fit_line(std::span<const double> x, std::span<const double> y,
                        std::span<const double> w = {}) {
  detail::require(x.size() == y.size(), "fit_line: x and y differ in length");
  detail::require(w.empty() || w.size() == x.size(), "fit_line: weight count mismatch");
  detail::require(x.size() >= 2, "fit_line: need at least two points");
  auto weight = [&](std::size_t i) { return w.empty() ? 1.0 : w[i]; };
  double sw = 0, sx = 0, sy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    detail::require(std::isfinite(weight(i)) && weight(i) >= 0, "fit_line: non-finite weight");
    detail::require(std::isfinite(x[i]) && std::isfinite(y[i]), "fit_line: non-finite data");
    sw += weight(i);
    sx += weight(i) * x[i];
    sy += weight(i) * y[i];
  }
  detail::require(sw > 0, "fit_line: all weights are zero");
  const double mx = sx / sw, my = sy / sw;
  double sxx = 0, sxy = 0, syy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = x[i] - mx, dy = y[i] - my;
    sxx += weight(i) * dx * dx;
    sxy += weight(i) * dx * dy;
    syy += weight(i) * dy * dy;
  }
  detail::require(sxx > 0, "fit_line: x values are all equal");
  LineFit fit;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  fit.residuals.resize(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    fit.residuals[i] = y[i] - fit.intercept - fit.slope * x[i];
    fit.chi_squared += weight(i) * fit.residuals[i] * fit.residuals[i];
  }
  fit.r_squared = syy > 0 ? 1.0 - fit.chi_squared / syy : 1.0;
  fit.slope_se = std::sqrt(1.0 / sxx);
  return fit;
}

}  // namespace fracsmooth
