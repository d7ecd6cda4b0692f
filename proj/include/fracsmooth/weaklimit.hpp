#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <ostream>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "chaos.hpp"
#include "csv.hpp"
#include "errors.hpp"
#include "expectation.hpp"
#include "model.hpp"
#include "parallel.hpp"
#include "payoffs.hpp"
#include "quadrature.hpp"
#include "random.hpp"
#include "regression.hpp"
#include "smoothness.hpp"

namespace fracsmooth {

struct ClockOptions {
  /// Dyadic shells [T - T 2^-j, T - T 2^-j-1], j < levels, are integrated
  /// directly; the remainder is extrapolated.
  int levels = 24;
  /// Gauss–Legendre order per panel and panels per shell.
  std::size_t time_order = 4;
  std::size_t panels = 4;
  Measure measure = Measure::historical;
  PriceOptions price;
};

/// Per-path realizations of the limit clock
/// A = int_0^T T^theta (T-t)^{1-theta} / (2 theta) sigma^4 (S_t^2 d2H/ds2)^2 dt.
struct ClockSample {
  Payoff payoff;
  MarketModel model;
  double theta = 1.0;
  ClockOptions options;
  std::uint64_t seed = 0;
  std::vector<double> A_values;
  /// 1 where the last shells were still growing, so no tail was added
  std::vector<unsigned char> flagged;
  /// Monte Carlo mean of each shell's contribution.
  std::vector<double> shell_means;

  std::size_t paths() const { return A_values.size(); }
  std::size_t flagged_count() const {
    return std::size_t(std::count(flagged.begin(), flagged.end(), 1));
  }
  double flagged_fraction() const {
    return paths() ? double(flagged_count()) / double(paths()) : 0.0;
  }
  double mean() const {
    double s = 0.0;
    for (double a : A_values) s += a;
    return s / double(A_values.size());
  }
  /// Mean of the clock truncated after `depth` shells, without extrapolation.
  double truncated_mean(std::size_t depth) const {
    double s = 0.0;
    for (std::size_t j = 0; j < std::min(depth, shell_means.size()); ++j) s += shell_means[j];
    return s;
  }
};

namespace detail {

inline double clock_weight(const MarketModel& model, double theta, double t) {
  const double s2 = model.sigma * model.sigma;
  return std::pow(model.T, theta) * std::pow(model.T - t, 1.0 - theta) / (2.0 * theta) * s2 * s2;
}

struct ShellRule {
  std::vector<double> nodes;
  std::vector<double> weights;
  /// nodes of shell j are [first[j], first[j+1])
  std::vector<std::size_t> first;
};

inline ShellRule clock_rule(const MarketModel& model, double theta, const ClockOptions& o) {
  require(o.levels >= 2 && o.time_order >= 1 && o.panels >= 1,
          "clock_A: need levels >= 2, time_order >= 1, panels >= 1");
  const auto& gl = quad::gauss_legendre(o.time_order);
  ShellRule rule;
  for (int j = 0; j < o.levels; ++j) {
    rule.first.push_back(rule.nodes.size());
    const double a = model.T - std::ldexp(model.T, -j), b = model.T - std::ldexp(model.T, -j - 1);
    const double h = (b - a) / double(o.panels);
    for (std::size_t q = 0; q < o.panels; ++q) {
      const double lo = a + h * double(q);
      for (std::size_t i = 0; i < gl.nodes.size(); ++i) {
        const double t = lo + 0.5 * h * (gl.nodes[i] + 1.0);
        rule.nodes.push_back(t);
        rule.weights.push_back(0.5 * h * gl.weights[i] * clock_weight(model, theta, t));
      }
    }
  }
  rule.first.push_back(rule.nodes.size());
  return rule;
}

/// Geometric continuation of the last two shell contributions; infinite when
/// they do not decrease.
inline double shell_tail(double before_last, double last) {
  if (last <= 0.0) return 0.0;
  if (!(last < before_last)) return std::numeric_limits<double>::infinity();
  const double r = last / before_last;
  return last * r / (1.0 - r);
}

}  // namespace detail

inline ClockSample clock_A(const Payoff& p, const MarketModel& model, double theta, std::size_t m,
                           std::uint64_t seed, const ClockOptions& opts = {}) {
  model.validate();
  p.validate();
  detail::require(theta > 0 && theta <= 1, "clock_A: theta must lie in (0,1]");
  detail::require(m >= 1, "clock_A: path count must be >= 1");
  const auto rule = detail::clock_rule(model, theta, opts);
  const std::size_t J = std::size_t(opts.levels);
  ClockSample out{p, model, theta, opts, seed, std::vector<double>(m), std::vector<unsigned char>(m),
                  std::vector<double>(J, 0.0)};
  std::vector<double> shells(m * J);
  parallel_for(m, [&](std::size_t begin, std::size_t end) {
    std::vector<double> s(rule.nodes.size());
    for (std::size_t path = begin; path < end; ++path) {
      fill_gbm_path(model, rule.nodes, seed, path, opts.measure, s);
      double* c = shells.data() + path * J;
      double total = 0.0;
      for (std::size_t j = 0; j < J; ++j) {
        double sum = 0.0;
        for (std::size_t i = rule.first[j]; i < rule.first[j + 1]; ++i) {
          const double x = s[i] * s[i] * gamma(p, model, rule.nodes[i], s[i], opts.price);
          sum += rule.weights[i] * x * x;
        }
        c[j] = sum;
        total += sum;
      }
      const double tail = detail::shell_tail(c[J - 2], c[J - 1]);
      out.flagged[path] = std::isinf(tail) ? 1 : 0;
      out.A_values[path] = std::isinf(tail) ? total : total + tail;
    }
  });
  for (std::size_t j = 0; j < J; ++j) {
    double sum = 0.0;
    for (std::size_t path = 0; path < m; ++path) sum += shells[path * J + j];
    out.shell_means[j] = sum / double(m);
  }
  return out;
}

struct ExpectedClock {
  double value = 0.0;
  /// per-shell contributions of E A
  std::vector<double> shells;
  /// shells stopped decreasing, so E A is reported as infinite
  bool divergent = false;
};

/// E A by quadrature: the same shells as clock_A with the spatial expectation
/// taken under the martingale law of S_t.
inline ExpectedClock expected_clock(const Payoff& p, const MarketModel& model, double theta,
                                    int levels = 40, std::size_t time_order = 8,
                                    const PriceOptions& popts = {}) {
  model.validate();
  p.validate();
  detail::require(theta > 0 && theta <= 1, "expected_clock: theta must lie in (0,1]");
  ClockOptions o;
  o.levels = levels;
  o.time_order = time_order;
  o.panels = 1;
  const auto rule = detail::clock_rule(model, theta, o);
  std::vector<double> values(rule.nodes.size());
  const double power = 4.0 * detail::payoff_growth(p);
  parallel_for(rule.nodes.size(), [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      const double t = rule.nodes[i];
      LognormalExpectation law;
      law.s = model.s0;
      law.v = model.sigma * model.sigma * t;
      if (p.has_strike()) law.focus = p.strike;
      law.feature_variance = model.remaining_variance(t);
      law.power = power;
      law.tol = {1e-300, 1e-10};
      values[i] = law([&](double s) {
                    const double x = s * s * gamma(p, model, t, s, popts);
                    return x * x;
                  }).value;
    }
  });
  ExpectedClock out;
  for (int j = 0; j < levels; ++j) {
    double sum = 0.0;
    for (std::size_t i = rule.first[j]; i < rule.first[j + 1]; ++i)
      sum += rule.weights[i] * values[i];
    out.shells.push_back(sum);
    out.value += sum;
  }
  const double tail = detail::shell_tail(out.shells[levels - 2], out.shells[levels - 1]);
  out.divergent = std::isinf(tail);
  out.value += tail;
  return out;
}

/// sqrt(A_i) xi_i with xi drawn from the mixing stream, independent of the
/// Brownian stream that produced A even under the same seed.
inline std::vector<double> mixed_normal_sample(const ClockSample& clock, std::uint64_t seed) {
  std::vector<double> out(clock.paths());
  for (std::size_t i = 0; i < out.size(); ++i)
    out[i] = std::sqrt(clock.A_values[i]) * CounterRng::normal(seed, i, 0, Stream::mixing);
  return out;
}

struct SampleMoments {
  double mean = 0.0;
  double variance = 0.0;
  /// E(x - mean)^4 / variance^2
  double kurtosis = 0.0;
};

inline SampleMoments sample_moments(std::span<const double> x) {
  detail::require(x.size() >= 2, "sample_moments: need at least two values");
  SampleMoments m;
  for (double v : x) m.mean += v;
  m.mean /= double(x.size());
  double m2 = 0.0, m4 = 0.0;
  for (double v : x) {
    const double d = (v - m.mean) * (v - m.mean);
    m2 += d;
    m4 += d * d;
  }
  m.variance = m2 / double(x.size() - 1);
  m2 /= double(x.size());
  m.kurtosis = m2 > 0.0 ? m4 / double(x.size()) / (m2 * m2) : 0.0;
  return m;
}

/// Two-sample Kolmogorov–Smirnov statistic.
inline double ks_distance(std::span<const double> x, std::span<const double> y) {
  detail::require(!x.empty() && !y.empty(), "ks_distance: samples must be non-empty");
  std::vector<double> a(x.begin(), x.end()), b(y.begin(), y.end());
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  const double na = double(a.size()), nb = double(b.size());
  std::size_t i = 0, j = 0;
  double d = 0.0;
  while (i < a.size() && j < b.size()) {
    const double v = std::min(a[i], b[j]);
    while (i < a.size() && a[i] == v) ++i;
    while (j < b.size() && b[j] == v) ++j;
    d = std::max(d, std::abs(double(i) / na - double(j) / nb));
  }
  return d;
}

/// (AH)(t,s) = s dH/ds - H.
inline double apply_A_operator(const Payoff& p, const MarketModel& model, double t, double s,
                               const PriceOptions& opts = {}) {
  detail::require(t < model.T, "apply_A_operator: needs t < T");
  const Greeks g = greeks(p, model, t, s, opts);
  return s * g.delta - g.price;
}

namespace detail {

inline void check_unit_maturity(const MarketModel& model, const char* who) {
  require(std::abs(model.T - 1.0) <= 1e-12, std::string(who) + ": requires T = 1");
}

}  // namespace detail

/// D^{S,theta}_{t_k} at every time of one path sampled at times[0] = 0 < ... < 1.
/// On [0,t] the weight (1-u)^{-(1+theta)/2} is integrated exactly against the
/// piecewise-linear interpolant of AH(u, S_u); on [t,1] the integrand is
/// constant and integrates in closed form.
inline std::vector<double> fractional_D_process(const Payoff& p, const MarketModel& model,
                                                double theta, std::span<const double> times,
                                                std::span<const double> values,
                                                const PriceOptions& opts = {}) {
  detail::check_unit_maturity(model, "fractional_D");
  detail::require(theta > 0 && theta <= 1, "fractional_D: theta must lie in (0,1]");
  detail::require(times.size() == values.size() && !times.empty(),
                  "fractional_D: times and values differ in length");
  detail::require(times.front() == 0.0, "fractional_D: path must start at t = 0");
  for (std::size_t k = 1; k < times.size(); ++k)
    detail::require(times[k] > times[k - 1], "fractional_D: times must increase");
  detail::require(times.back() < 1.0,
                  "fractional_D: the weight is not integrable up to t = 1; use t < 1");
  std::vector<double> f(times.size());
  const double a0 = apply_A_operator(p, model, 0.0, values[0], opts);
  for (std::size_t k = 0; k < times.size(); ++k)
    f[k] = apply_A_operator(p, model, times[k], values[k], opts) - a0;
  if (theta == 1.0) return f;

  const double beta = 0.5 * (1.0 + theta), c = 0.5 * (1.0 - theta);
  auto G1 = [&](double x) { return std::pow(x, 1.0 - beta) / (1.0 - beta); };
  auto G2 = [&](double x) { return std::pow(x, 2.0 - beta) / (2.0 - beta); };
  std::vector<double> out(times.size());
  double integral = 0.0;
  out[0] = f[0];
  for (std::size_t k = 1; k < times.size(); ++k) {
    const double xa = 1.0 - times[k - 1], xb = 1.0 - times[k], h = times[k] - times[k - 1];
    const double w0 = G1(xa) - G1(xb);
    const double w1 = (xa * w0 - (G2(xa) - G2(xb))) / h;
    integral += w0 * f[k - 1] + w1 * (f[k] - f[k - 1]);
    out[k] = c * integral + f[k] * std::pow(xb, c);
  }
  return out;
}

inline double fractional_D(const Payoff& p, const MarketModel& model, double theta, double t,
                           std::span<const double> times, std::span<const double> values,
                           const PriceOptions& opts = {}) {
  const auto it = std::find(times.begin(), times.end(), t);
  detail::require(it != times.end(), "fractional_D: t must be one of the path times");
  const auto k = std::size_t(it - times.begin());
  return fractional_D_process(p, model, theta, times.first(k + 1), values.first(k + 1), opts)[k];
}

/// Grid for fractional_D paths: 0, points_per_octave points per halving of
/// 1 - u down to the last requested t, and the requested times themselves.
inline std::vector<double> fractional_path_grid(std::span<const double> t_grid,
                                                std::size_t points_per_octave = 16) {
  detail::require(!t_grid.empty() && points_per_octave >= 1,
                  "fractional_path_grid: empty grid");
  const double last = *std::max_element(t_grid.begin(), t_grid.end());
  detail::require(last < 1.0, "fractional_path_grid: times must be < 1");
  std::vector<double> grid{0.0};
  for (std::size_t j = 1;; ++j) {
    const double u = -std::expm1(-std::numbers::ln2 * double(j) / double(points_per_octave));
    if (u >= last) break;
    grid.push_back(u);
  }
  grid.insert(grid.end(), t_grid.begin(), t_grid.end());
  std::sort(grid.begin(), grid.end());
  grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
  return grid;
}

struct LpOptions {
  std::size_t batches = 10;
  std::size_t points_per_octave = 16;
  Measure measure = Measure::historical;
  PriceOptions price;
};

struct LpCurve {
  double theta = 1.0;
  double p_norm = 2.0;
  std::vector<double> t;
  std::vector<double> norm;
  std::vector<double> stderr;
  /// E|D_{t_k} - D_{t_{k-1}}|^p per octave of 1 - t, k >= 1
  std::vector<double> increment_moment;
  /// fitted decay of log2(increment_moment) per octave over the finer half
  double increment_rate = 0.0;
  Boundedness verdict = Boundedness::bounded;
  std::vector<std::string> warnings;
};

/// Monte Carlo estimates of ||D^{S,theta}_t||_{L_p} with errors from
/// independent path batches. The curve is bounded when the L_p norms of the
/// martingale increments between grid times shrink geometrically per octave of
/// 1 - t, so that their sum converges; this sees convergence long before the
/// running maximum visibly levels off.
inline LpCurve lp_bound_curve(const Payoff& p, const MarketModel& model, double theta,
                              double p_norm, std::span<const double> t_grid, std::size_t m,
                              std::uint64_t seed, const LpOptions& opts = {}) {
  model.validate();
  p.validate();
  detail::check_unit_maturity(model, "lp_bound_curve");
  detail::require(p_norm >= 2.0, "lp_bound_curve: p must be >= 2");
  detail::require(opts.batches >= 2 && m >= opts.batches,
                  "lp_bound_curve: need at least two batches with one path each");
  detail::check_unit_grid(t_grid, "lp_bound_curve");
  const auto grid = fractional_path_grid(t_grid, opts.points_per_octave);
  std::vector<std::size_t> pos;
  for (double t : t_grid)
    pos.push_back(std::size_t(std::lower_bound(grid.begin(), grid.end(), t) - grid.begin()));
  const std::size_t nt = t_grid.size();
  std::vector<double> powers(m * nt), jumps(m * nt, 0.0);
  parallel_for(m, [&](std::size_t begin, std::size_t end) {
    std::vector<double> s(grid.size());
    for (std::size_t path = begin; path < end; ++path) {
      fill_gbm_path(model, grid, seed, path, opts.measure, s);
      const auto d = fractional_D_process(p, model, theta, grid, s, opts.price);
      for (std::size_t k = 0; k < nt; ++k) {
        powers[path * nt + k] = std::pow(std::abs(d[pos[k]]), p_norm);
        if (k > 0) jumps[path * nt + k] = std::pow(std::abs(d[pos[k]] - d[pos[k - 1]]), p_norm);
      }
    }
  });

  LpCurve out;
  out.theta = theta;
  out.p_norm = p_norm;
  out.t.assign(t_grid.begin(), t_grid.end());
  const std::size_t B = opts.batches;
  for (std::size_t k = 0; k < nt; ++k) {
    std::vector<double> batch(B, 0.0);
    double total = 0.0;
    for (std::size_t b = 0; b < B; ++b) {
      const std::size_t lo = m * b / B, hi = m * (b + 1) / B;
      for (std::size_t path = lo; path < hi; ++path) batch[b] += powers[path * nt + k];
      total += batch[b];
      batch[b] /= double(hi - lo);
    }
    const double moment = total / double(m);
    double var = 0.0;
    for (double v : batch) var += (v - moment) * (v - moment);
    const double se_moment = std::sqrt(var / double(B - 1) / double(B));
    const double norm = std::pow(moment, 1.0 / p_norm);
    out.norm.push_back(norm);
    out.stderr.push_back(moment > 0.0 ? se_moment * norm / (p_norm * moment) : 0.0);
    const auto [lo_b, hi_b] = std::minmax_element(batch.begin(), batch.end());
    if (*hi_b > 1.5 * *lo_b && *hi_b > 0.0) {
      std::ostringstream msg;
      msg << "heavy tails at t=" << t_grid[k] << ": batch moments range over [" << *lo_b << ", "
          << *hi_b << "]";
      out.warnings.push_back(msg.str());
    }
  }
  // increments per octave of 1 - t, fitted over the finer half of the grid
  std::vector<double> x, y;
  for (std::size_t k = 1; k < nt; ++k) {
    double sum = 0.0;
    for (std::size_t path = 0; path < m; ++path) sum += jumps[path * nt + k];
    const double octaves = std::log2((1.0 - t_grid[k - 1]) / (1.0 - t_grid[k]));
    out.increment_moment.push_back(sum / double(m) / octaves);
    if (k >= nt / 2 && out.increment_moment.back() > 0.0) {
      x.push_back(-std::log2(1.0 - t_grid[k]));
      y.push_back(std::log2(out.increment_moment.back()));
    }
  }
  const bool all_zero =
      std::all_of(out.norm.begin(), out.norm.end(), [](double v) { return v == 0.0; });
  if (all_zero || x.empty()) {
    out.increment_rate = std::numeric_limits<double>::infinity();
    out.verdict = Boundedness::bounded;
  } else {
    detail::require(x.size() >= 3, "lp_bound_curve: t grid too short to judge boundedness");
    out.increment_rate = -fit_line(x, y).slope;
    out.verdict =
        out.increment_rate > kMinShellDecayRate ? Boundedness::bounded : Boundedness::unbounded;
  }
  return out;
}

inline void write_clock_csv(std::ostream& out, const ClockSample& clock) {
  out << "path_id,A,flagged\n";
  for (std::size_t i = 0; i < clock.paths(); ++i)
    write_csv_row(out, {i, clock.A_values[i], int(clock.flagged[i])});
}

/// Long format for comparing distributions: one row per sampled value.
inline void write_distribution_csv(std::ostream& out,
                                   std::initializer_list<std::pair<std::string, std::span<const double>>> samples) {
  out << "sample_source,value\n";
  for (const auto& [name, values] : samples)
    for (double v : values) write_csv_row(out, {name, v});
}

inline void write_lp_curve_csv(std::ostream& out, const LpCurve& curve) {
  out << "theta,p,t,lp_norm,stderr\n";
  for (std::size_t k = 0; k < curve.t.size(); ++k)
    write_csv_row(out, {curve.theta, curve.p_norm, curve.t[k], curve.norm[k], curve.stderr[k]});
}

}  // namespace fracsmooth
