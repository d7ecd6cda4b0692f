#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "csv.hpp"
#include "errors.hpp"
#include "expectation.hpp"
#include "model.hpp"
#include "parallel.hpp"
#include "payoffs.hpp"
#include "quadrature.hpp"
#include "regression.hpp"

namespace fracsmooth {

struct SmoothnessOptions {
  PriceOptions price;
  quad::Tolerance tol{1e-15, 1e-10};
};

namespace detail {

/// Var(h(S_T) | S_t = s) under the martingale measure.
inline double conditional_variance(const Payoff& p, const MarketModel& model, double t, double s,
                                   const PriceOptions& opts) {
  const double v = model.remaining_variance(t);
  if (v <= 0.0) return 0.0;
  const double sv = std::sqrt(v);
  double var = 0.0;
  switch (p.kind) {
    case PayoffKind::affine: var = p.c1 * p.c1 * s * s * std::expm1(v); break;
    case PayoffKind::binary: {
      const double d2 = (std::log(s / p.strike) - 0.5 * v) / sv;
      var = norm_cdf(d2) * norm_cdf(-d2);
      break;
    }
    case PayoffKind::call:
    case PayoffKind::put: {
      const double K = p.strike;
      const double d1 = (std::log(s / K) + 0.5 * v) / sv, d2 = d1 - sv;
      const double sign = p.kind == PayoffKind::call ? 1.0 : -1.0;
      const double second = s * s * std::exp(v) * norm_cdf(sign * (d1 + sv)) -
                            2.0 * K * s * norm_cdf(sign * d1) + K * K * norm_cdf(sign * d2);
      const double first = sign * (s * norm_cdf(sign * d1) - K * norm_cdf(sign * d2));
      var = second - first * first;
      break;
    }
    case PayoffKind::power_holder: {
      Payoff squared = p;
      squared.holder_theta = 2.0 * p.holder_theta;
      const double second = holder_moments(squared, s, v, opts.kink_tol, 1).m0;
      const double first = holder_moments(p, s, v, opts.kink_tol, 1).m0;
      var = second - first * first;
      break;
    }
    case PayoffKind::chaos: {
      const auto& c = *p.chaos;
      const auto& rule = quad::gauss_hermite(opts.gh_order);
      const double mean = (std::log(s) - 0.5 * v - c.log_shift) / c.log_width;
      const double rho = sv / c.log_width;
      double m1 = 0.0, m2 = 0.0;
      for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
        const double g = c.expansion.evaluate(mean + rho * rule.nodes[i]);
        m1 += rule.weights[i] * g;
        m2 += rule.weights[i] * g * g;
      }
      var = m2 - m1 * m1;
      break;
    }
  }
  return p.scale * p.scale * var;
}

// Law of S_t seen from (0, s0), with quadrature breakpoints placed around the
// strike at the scale of the remaining variance.
inline LognormalExpectation law_at(const Payoff& p, const MarketModel& model, double t,
                                   double power, const quad::Tolerance& tol) {
  LognormalExpectation e;
  e.s = model.s0;
  e.v = model.degenerate() ? 0.0 : model.sigma * model.sigma * t;
  if (p.has_strike()) e.focus = p.strike;
  e.feature_variance = model.remaining_variance(t);
  e.power = power;
  e.tol = tol;
  return e;
}

inline void check_t_grid(const MarketModel& model, std::span<const double> t_grid, const char* who) {
  for (double t : t_grid)
    require(std::isfinite(t) && t >= 0.0 && t < model.T, std::string(who) + ": t must lie in [0,T)");
}

}  // namespace detail

/// E_Q h(S_T)^2 seen from (0, s0).
inline double second_moment(const Payoff& p, const MarketModel& model, const PriceOptions& opts = {}) {
  const double h = price(p, model, 0.0, model.s0, opts);
  return detail::conditional_variance(p, model, 0.0, model.s0, opts) + h * h;
}

/// Times with T - t_j = T 2^{-j}, j = 0..levels.
inline std::vector<double> default_t_grid(double T, int levels = 20) {
  detail::require(T > 0 && levels >= 0, "default_t_grid: need T > 0 and levels >= 0");
  std::vector<double> grid;
  for (int j = 0; j <= levels; ++j) grid.push_back(T - std::ldexp(T, -j));
  return grid;
}

/// D(t) = || h(S_T) - E(h(S_T) | F_t) ||_{L2} on a time grid.
struct DecayCurve {
  std::vector<double> t;
  std::vector<double> T_minus_t;
  std::vector<double> D;
  std::vector<std::string> warnings;
};

/// D(t)^2 = E[h^2] - E[H(t,S_t)^2], evaluated as the expected conditional
/// variance E[Var(h(S_T) | S_t)] so that no large terms cancel.
inline DecayCurve conditional_l2_decay(const Payoff& p, const MarketModel& model,
                                       std::span<const double> t_grid,
                                       const SmoothnessOptions& opts = {}) {
  model.validate();
  p.validate();
  detail::check_t_grid(model, t_grid, "conditional_l2_decay");
  DecayCurve curve;
  curve.t.assign(t_grid.begin(), t_grid.end());
  curve.D.resize(t_grid.size());
  std::vector<double> raw(t_grid.size());
  const double power = 2.0 * detail::payoff_growth(p);
  parallel_for(t_grid.size(), [&](std::size_t begin, std::size_t end) {
    for (std::size_t j = begin; j < end; ++j) {
      const double t = t_grid[j];
      raw[j] = detail::law_at(p, model, t, power, opts.tol)([&](double s) {
                 return detail::conditional_variance(p, model, t, s, opts.price);
               }).value;
    }
  });
  for (std::size_t j = 0; j < t_grid.size(); ++j) {
    curve.T_minus_t.push_back(model.T - t_grid[j]);
    if (raw[j] < -1e-10) {
      std::ostringstream msg;
      msg << "negative squared decay " << raw[j] << " at t=" << t_grid[j] << " clamped to 0";
      curve.warnings.push_back(msg.str());
    }
    curve.D[j] = std::sqrt(std::max(raw[j], 0.0));
  }
  return curve;
}

/// E|s dH/ds (t, S_t)|^2, the squared log-coordinate gradient.
inline std::vector<double> grad_growth_curve(const Payoff& p, const MarketModel& model,
                                             std::span<const double> t_grid,
                                             const SmoothnessOptions& opts = {}) {
  model.validate();
  p.validate();
  detail::check_t_grid(model, t_grid, "grad_growth_curve");
  std::vector<double> out(t_grid.size());
  const double power = 2.0 * detail::payoff_growth(p);
  parallel_for(t_grid.size(), [&](std::size_t begin, std::size_t end) {
    for (std::size_t j = begin; j < end; ++j) {
      const double t = t_grid[j];
      out[j] = detail::law_at(p, model, t, power, opts.tol)([&](double s) {
                 const double g = delta(p, model, t, s, opts.price) * s;
                 return g * g;
               }).value;
    }
  });
  return out;
}

/// E|D^2 u(t, X_t)|^2 with D^2 u = s^2 d2H/ds2 + s dH/ds.
inline std::vector<double> hessian_growth_curve(const Payoff& p, const MarketModel& model,
                                                std::span<const double> t_grid,
                                                const SmoothnessOptions& opts = {}) {
  model.validate();
  p.validate();
  detail::check_t_grid(model, t_grid, "hessian_growth_curve");
  std::vector<double> out(t_grid.size());
  const double power = 2.0 * detail::payoff_growth(p);
  parallel_for(t_grid.size(), [&](std::size_t begin, std::size_t end) {
    for (std::size_t j = begin; j < end; ++j) {
      const double t = t_grid[j];
      out[j] = detail::law_at(p, model, t, power, opts.tol)([&](double s) {
                 const double h = greeks(p, model, t, s, opts.price).log_gamma(s);
                 return h * h;
               }).value;
    }
  });
  return out;
}

/// Power-law fit y ~ c (T-t)^exponent on a log-log scale, dropping `trim`
/// points at each end of the grid (the grid is ordered by increasing t).
struct ExponentFit {
  double exponent = 0.0;
  double intercept = 0.0;
  double r_squared = 1.0;
  double residual_rms = 0.0;
  double max_abs_residual = 0.0;
  std::size_t points = 0;
};

inline ExponentFit fit_exponent(std::span<const double> T_minus_t, std::span<const double> values,
                                std::size_t trim = 2) {
  detail::require(T_minus_t.size() == values.size(), "fit_exponent: length mismatch");
  std::vector<double> x, y;
  for (std::size_t j = trim; j + trim < values.size(); ++j) {
    if (!(values[j] > 0.0)) continue;
    x.push_back(std::log(T_minus_t[j]));
    y.push_back(std::log(values[j]));
  }
  detail::require(x.size() >= 4, "fit_exponent: fewer than four positive points after trimming");
  const auto line = fit_line(x, y);
  ExponentFit fit{line.slope, line.intercept, line.r_squared, 0.0, 0.0, x.size()};
  for (double r : line.residuals) {
    fit.residual_rms += r * r;
    fit.max_abs_residual = std::max(fit.max_abs_residual, std::abs(r));
  }
  fit.residual_rms = std::sqrt(fit.residual_rms / double(x.size()));
  return fit;
}

/// theta = min(1, 2 * slope of log D against log(T-t)).
struct ThetaEstimate {
  double theta = 0.0;
  /// 2 * slope before clamping
  double raw = 0.0;
  ExponentFit fit;
};

inline ThetaEstimate estimate_theta_sup(const DecayCurve& curve, std::size_t trim = 2) {
  detail::require(curve.D.size() >= 8, "estimate_theta_sup: need at least 8 grid points");
  const auto [lo, hi] = std::minmax_element(curve.T_minus_t.begin(), curve.T_minus_t.end());
  detail::require(*hi >= 1e3 * *lo, "estimate_theta_sup: T-t must span at least 3 decades");
  if (std::all_of(curve.D.begin(), curve.D.end(), [](double d) { return d == 0.0; }))
    throw InfiniteSmoothness("estimate_theta_sup: D vanishes identically (constant payoff)");
  ThetaEstimate est;
  est.fit = fit_exponent(curve.T_minus_t, curve.D, trim);
  est.raw = 2.0 * est.fit.exponent;
  est.theta = std::clamp(est.raw, std::numeric_limits<double>::min(), 1.0);
  return est;
}

/// Values of D^2, the gradient growth and the Hessian growth at Gauss–Legendre
/// nodes of the dyadic shells T-t in [T 2^{-j-1}, T 2^{-j}], j = 0..levels-1.
/// Integrals against powers of T-t are taken in u = ln(T-t).
struct ShellProfile {
  double T = 1.0;
  std::size_t levels = 0;
  std::size_t order = 0;
  std::vector<double> tau;
  /// Gauss–Legendre weight times du
  std::vector<double> weight;
  std::vector<double> decay_sq;
  std::vector<double> grad_sq;
  std::vector<double> hess_sq;
};

struct ProfileParts {
  bool decay = true;
  bool grad = true;
  bool hess = true;
};

inline ShellProfile shell_profile(const Payoff& p, const MarketModel& model,
                                  std::size_t levels = 24, std::size_t order = 8,
                                  ProfileParts parts = {}, const SmoothnessOptions& opts = {}) {
  detail::require(levels >= 4 && order >= 1, "shell_profile: need levels >= 4, order >= 1");
  ShellProfile prof{model.T, levels, order, {}, {}, {}, {}, {}};
  const auto& rule = quad::gauss_legendre(order);
  std::vector<double> times;
  for (std::size_t j = 0; j < levels; ++j) {
    const double hi = std::log(model.T) - double(j) * std::numbers::ln2;
    const double lo = hi - std::numbers::ln2;
    for (std::size_t i = 0; i < order; ++i) {
      const double u = 0.5 * (lo + hi) + 0.5 * (hi - lo) * rule.nodes[i];
      prof.tau.push_back(std::exp(u));
      prof.weight.push_back(0.5 * (hi - lo) * rule.weights[i]);
      times.push_back(model.T - prof.tau.back());
    }
  }
  if (parts.decay) {
    const auto curve = conditional_l2_decay(p, model, times, opts);
    for (double d : curve.D) prof.decay_sq.push_back(d * d);
  }
  if (parts.grad) prof.grad_sq = grad_growth_curve(p, model, times, opts);
  if (parts.hess) prof.hess_sq = hessian_growth_curve(p, model, times, opts);
  return prof;
}

/// Truncated integrals over the dyadic shells and the resulting verdict: the
/// integral is finite when the shell increments decay geometrically.
struct FinitenessVerdict {
  std::vector<double> delta;
  std::vector<double> increments;
  std::vector<double> partial;
  /// fitted decay rate of log2(increment) per shell over the finer half
  double rate = 0.0;
  bool finite = true;
  double value = 0.0;
};

/// Increments decaying by less than this factor of 2^{-rate} per shell count as divergent.
inline constexpr double kMinShellDecayRate = 0.02;

namespace detail {

inline FinitenessVerdict shell_verdict(const ShellProfile& prof, std::span<const double> values,
                                       double tau_power) {
  require(values.size() == prof.tau.size(), "shell_verdict: profile part not computed");
  FinitenessVerdict out;
  double running = 0.0;
  for (std::size_t j = 0; j < prof.levels; ++j) {
    double inc = 0.0;
    for (std::size_t i = 0; i < prof.order; ++i) {
      const std::size_t k = j * prof.order + i;
      inc += prof.weight[k] * std::pow(prof.tau[k], tau_power) * values[k];
    }
    running += inc;
    out.delta.push_back(std::ldexp(prof.T, -int(j) - 1));
    out.increments.push_back(inc);
    out.partial.push_back(running);
  }
  out.value = running;
  std::vector<double> x, y;
  for (std::size_t j = prof.levels / 2; j < prof.levels; ++j)
    if (out.increments[j] > 0.0) {
      x.push_back(double(j));
      y.push_back(std::log2(out.increments[j]));
    }
  if (x.size() < 2) {
    // increments vanish on the fine shells
    out.rate = std::numeric_limits<double>::infinity();
    out.finite = true;
    return out;
  }
  out.rate = -fit_line(x, y).slope;
  out.finite = out.rate > kMinShellDecayRate;
  return out;
}

}  // namespace detail

/// int_0^{T-delta} (T-t)^{-1-theta} D(t)^2 dt for delta = T 2^{-j-1}.
inline FinitenessVerdict b22_integral(const ShellProfile& prof, double theta) {
  detail::require(theta > 0 && theta < 1, "b22_integral: theta must lie in (0,1)");
  return detail::shell_verdict(prof, prof.decay_sq, -theta);
}

inline FinitenessVerdict b22_integral(const Payoff& p, const MarketModel& model, double theta,
                                      std::size_t levels = 24, const SmoothnessOptions& opts = {}) {
  detail::require(theta > 0 && theta < 1, "b22_integral: theta must lie in (0,1)");
  return b22_integral(shell_profile(p, model, levels, 8, {true, false, false}, opts), theta);
}

/// int (T-t)^{-theta} E|grad u|^2 dt
inline FinitenessVerdict grad_integral(const ShellProfile& prof, double theta) {
  return detail::shell_verdict(prof, prof.grad_sq, 1.0 - theta);
}

/// int (T-t)^{1-theta} E|D^2 u|^2 dt
inline FinitenessVerdict hessian_integral(const ShellProfile& prof, double theta) {
  return detail::shell_verdict(prof, prof.hess_sq, 2.0 - theta);
}

/// The three integral-type finiteness verdicts at one theta.
struct IntegralVerdicts {
  double theta = 0.0;
  FinitenessVerdict decay, grad, hess;
  bool agree() const { return decay.finite == grad.finite && grad.finite == hess.finite; }
};

inline IntegralVerdicts integral_verdicts(const ShellProfile& prof, double theta) {
  return {theta, b22_integral(prof, theta), grad_integral(prof, theta), hessian_integral(prof, theta)};
}

enum class Verdict { holds, borderline, fails };

inline std::string to_string(Verdict v) {
  switch (v) {
    case Verdict::holds: return "holds";
    case Verdict::borderline: return "borderline";
    case Verdict::fails: return "fails";
  }
  return "unknown";
}

/// Smoothness index implied by each sup-type growth exponent:
/// D^2 ~ (T-t)^theta, E|grad u|^2 ~ (T-t)^{theta-1}, E|D^2 u|^2 ~ (T-t)^{theta-2}.
struct GrowthExponents {
  ExponentFit decay_sq, grad_sq, hess_sq;
  double theta_decay = 0.0, theta_grad = 0.0, theta_hess = 0.0;

  static Verdict verdict(double implied, double theta, double tol) {
    if (theta <= implied - tol) return Verdict::holds;
    if (theta >= implied + tol) return Verdict::fails;
    return Verdict::borderline;
  }
  /// Two verdicts are compatible unless one holds and the other fails.
  bool agree(double theta, double tol = 0.08) const {
    const Verdict v[3] = {verdict(theta_decay, theta, tol), verdict(theta_grad, theta, tol),
                          verdict(theta_hess, theta, tol)};
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j)
        if (v[i] == Verdict::holds && v[j] == Verdict::fails) return false;
    return true;
  }
};

inline GrowthExponents growth_exponents(std::span<const double> T_minus_t,
                                        std::span<const double> decay_sq,
                                        std::span<const double> grad_sq,
                                        std::span<const double> hess_sq, std::size_t trim = 2) {
  GrowthExponents g;
  g.decay_sq = fit_exponent(T_minus_t, decay_sq, trim);
  g.grad_sq = fit_exponent(T_minus_t, grad_sq, trim);
  g.hess_sq = fit_exponent(T_minus_t, hess_sq, trim);
  g.theta_decay = std::min(1.0, g.decay_sq.exponent);
  g.theta_grad = std::min(1.0, 1.0 + g.grad_sq.exponent);
  g.theta_hess = std::min(1.0, 2.0 + g.hess_sq.exponent);
  return g;
}

/// Everything the smoothness diagnostics report on one grid.
struct SmoothnessReport {
  DecayCurve decay;
  std::vector<double> grad_sq;
  std::vector<double> hess_sq;
};

inline SmoothnessReport smoothness_report(const Payoff& p, const MarketModel& model,
                                          std::span<const double> t_grid,
                                          const SmoothnessOptions& opts = {}) {
  return {conditional_l2_decay(p, model, t_grid, opts), grad_growth_curve(p, model, t_grid, opts),
          hessian_growth_curve(p, model, t_grid, opts)};
}

inline GrowthExponents growth_exponents(const SmoothnessReport& r, std::size_t trim = 2) {
  std::vector<double> d2;
  for (double d : r.decay.D) d2.push_back(d * d);
  return growth_exponents(r.decay.T_minus_t, d2, r.grad_sq, r.hess_sq, trim);
}

inline void write_smoothness_csv(std::ostream& out, const SmoothnessReport& r) {
  write_csv_row(out, {"t", "T_minus_t", "decay", "grad_sq", "hess_sq"});
  for (std::size_t j = 0; j < r.decay.t.size(); ++j)
    write_csv_row(out, {r.decay.t[j], r.decay.T_minus_t[j], r.decay.D[j], r.grad_sq[j], r.hess_sq[j]});
}

}  // namespace fracsmooth
