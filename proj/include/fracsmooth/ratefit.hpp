#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <ostream>
#include <span>
#include <sstream>
#include <vector>

#include "csv.hpp"
#include "errors.hpp"
#include "hedging.hpp"
#include "model.hpp"
#include "payoffs.hpp"
#include "random.hpp"
#include "regression.hpp"
#include "timenets.hpp"

namespace fracsmooth {

struct RatePoint {
  std::size_t n = 0;
  double error = 0.0;
  double stderr = 0.0;
  std::size_t m = 0;
};

/// Fitted exponent of error ~ c n^slope.
struct RateFit {
  std::vector<RatePoint> pairs;
  double slope = 0.0;
  double intercept = 0.0;
  double r_squared = 1.0;
  double slope_se = 0.0;
  double slope_lo = 0.0;
  double slope_hi = 0.0;
  /// chi^2 per degree of freedom of the weighted fit; the slope error is
  /// inflated by its square root when it exceeds 1.
  double reduced_chi_squared = 0.0;
};

/// Weighted least squares of log error on log n with weights (error/stderr)^2,
/// the inverse delta-method variance of log error. When every stderr is zero
/// (synthetic data) the fit is unweighted and the slope error comes from the
/// residuals.
inline RateFit fit_rate(std::span<const RatePoint> pairs) {
  detail::require(pairs.size() >= 4, "fit_rate: need at least 4 points");
  std::vector<std::size_t> ns;
  for (const auto& p : pairs) ns.push_back(p.n);
  std::sort(ns.begin(), ns.end());
  ns.erase(std::unique(ns.begin(), ns.end()), ns.end());
  detail::require(ns.size() >= 4, "fit_rate: need at least 4 distinct n");
  detail::require(ns.front() >= 1 && ns.back() >= 4 * ns.front(),
                  "fit_rate: n values must span at least two octaves");
  if (std::all_of(pairs.begin(), pairs.end(), [](const RatePoint& p) { return p.error == 0.0; }))
    throw ExactHedge("fit_rate: every error is zero (exact hedge)");
  for (const auto& p : pairs) {
    if (p.error == 0.0) {
      std::ostringstream msg;
      msg << "fit_rate: zero error at n=" << p.n << " (exact hedge)";
      throw ExactHedge(msg.str());
    }
    detail::require(std::isfinite(p.error) && p.error > 0, "fit_rate: errors must be positive");
    detail::require(std::isfinite(p.stderr) && p.stderr >= 0, "fit_rate: non-finite stderr");
  }
  const bool unweighted =
      std::all_of(pairs.begin(), pairs.end(), [](const RatePoint& p) { return p.stderr == 0.0; });
  std::vector<double> x, y, w;
  for (const auto& p : pairs) {
    x.push_back(std::log(double(p.n)));
    y.push_back(std::log(p.error));
    if (!unweighted) {
      const double weight = (p.error / p.stderr) * (p.error / p.stderr);
      detail::require(std::isfinite(weight), "fit_rate: non-finite weight (zero stderr)");
      w.push_back(weight);
    }
  }
  const LineFit line = fit_line(x, y, w);
  RateFit fit;
  fit.pairs.assign(pairs.begin(), pairs.end());
  fit.slope = line.slope;
  fit.intercept = line.intercept;
  fit.r_squared = line.r_squared;
  const double dof = double(pairs.size() - 2);
  fit.reduced_chi_squared = line.chi_squared / dof;
  fit.slope_se = unweighted ? line.slope_se * std::sqrt(fit.reduced_chi_squared)
                            : line.slope_se * std::sqrt(std::max(1.0, fit.reduced_chi_squared));
  detail::require(std::isfinite(fit.slope), "fit_rate: slope is not finite");
  fit.slope_lo = fit.slope - 1.96 * fit.slope_se;
  fit.slope_hi = fit.slope + 1.96 * fit.slope_se;
  return fit;
}

struct SweepOptions {
  /// Fit without the smallest n (pre-asymptotic regime).
  bool drop_smallest = true;
  /// m_n = m sqrt(n / n_min), capped at max_path_factor * m.
  double max_path_factor = 4.0;
  /// Errors below this multiple of the payoff's price scale are rounding
  /// noise of an exact hedge and are treated as zero.
  double exact_tol = 1e-10;
  PriceOptions price;
};

struct SweepResult {
  /// every n in the sweep, including the one left out of the fit
  std::vector<RatePoint> points;
  RateFit fit;
};

inline std::size_t sweep_paths(std::size_t m, std::size_t n, std::size_t n_min,
                               double max_factor) {
  const double scaled = double(m) * std::sqrt(double(n) / double(n_min));
  return std::size_t(std::llround(std::min(scaled, max_factor * double(m))));
}

/// L2 tracking errors of theta-nets for each n, each with its own seed derived
/// from the master seed, and the fitted rate.
inline SweepResult sweep(const Payoff& p, const MarketModel& model, double theta,
                         std::span<const std::size_t> n_list, std::size_t m, std::uint64_t seed,
                         Measure measure, const SweepOptions& opts = {}) {
  detail::require(n_list.size() >= (opts.drop_smallest ? 5u : 4u),
                  "sweep: n_list too short for a fit");
  detail::require(m >= 2, "sweep: need m >= 2");
  const std::size_t n_min = *std::min_element(n_list.begin(), n_list.end());
  detail::require(n_min >= 1, "sweep: n must be >= 1");
  const Greeks g0 = greeks(p, model, 0.0, model.s0, opts.price);
  const double price_scale = std::abs(g0.price) + model.s0 * std::abs(g0.delta);
  SweepResult out;
  for (std::size_t n : n_list) {
    const std::size_t m_n = sweep_paths(m, n, n_min, opts.max_path_factor);
    const auto est = l2_tracking_error(p, model, make_theta_net(n, theta, model.T), m_n,
                                       derive_seed(seed, n), measure, opts.price);
    if (est.l2_error <= opts.exact_tol * price_scale)
      out.points.push_back({n, 0.0, 0.0, m_n});
    else
      out.points.push_back({n, est.l2_error, est.stderr, m_n});
  }
  std::vector<RatePoint> used;
  for (const auto& pt : out.points)
    if (!opts.drop_smallest || pt.n != n_min) used.push_back(pt);
  out.fit = fit_rate(used);
  return out;
}

inline void write_sweep_csv(std::ostream& out, std::span<const RatePoint> points) {
  out << "n,l2_error,stderr,m\n";
  for (const auto& p : points) write_csv_row(out, {p.n, p.error, p.stderr, p.m});
}

}  // namespace fracsmooth
