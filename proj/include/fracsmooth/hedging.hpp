#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <ostream>
#include <span>
#include <vector>

#include <boost/math/interpolators/cardinal_cubic_b_spline.hpp>

#include "csv.hpp"
#include "errors.hpp"
#include "expectation.hpp"
#include "model.hpp"
#include "parallel.hpp"
#include "payoffs.hpp"
#include "quadrature.hpp"
#include "timenets.hpp"

namespace fracsmooth {

/// Martingale-measure deltas at a fixed set of rebalancing times. Closed-form
/// payoffs are evaluated directly; Holder payoffs are read from a cubic
/// spline per time, tabulated in u = asinh(d/4) with d = ln(s/K)/sqrt(v).
class DeltaOracle {
 public:
  DeltaOracle(const Payoff& p, const MarketModel& model, std::span<const double> times,
              PriceOptions opts = {}, std::size_t table_points = 1025)
      : payoff_(p), model_(model), opts_(opts), times_(times.begin(), times.end()) {
    for (double t : times_)
      detail::require(t >= 0.0 && t < model.T, "DeltaOracle: rebalancing times must lie in [0,T)");
    sqrt_var_.resize(times_.size());
    for (std::size_t i = 0; i < times_.size(); ++i)
      sqrt_var_[i] = std::sqrt(model.sigma * model.sigma * std::max(model.T - times_[i], kMinRemainingTime));
    if (p.kind == PayoffKind::power_holder && !model.degenerate()) build_tables(table_points);
  }

  std::size_t size() const { return times_.size(); }
  double time(std::size_t i) const { return times_[i]; }

  double operator()(std::size_t i, double s) const {
    const Payoff& p = payoff_;
    if (model_.degenerate()) return delta(p, model_, times_[i], s, opts_);
    const double sv = sqrt_var_[i];
    switch (p.kind) {
      case PayoffKind::affine: return p.scale * p.c1;
      case PayoffKind::call:
        return p.scale * norm_cdf((std::log(s / p.strike) + 0.5 * sv * sv) / sv);
      case PayoffKind::put:
        return -p.scale * norm_cdf(-(std::log(s / p.strike) + 0.5 * sv * sv) / sv);
      case PayoffKind::binary:
        return p.scale * norm_pdf((std::log(s / p.strike) - 0.5 * sv * sv) / sv) / (s * sv);
      case PayoffKind::power_holder: {
        const double d = std::log(s / p.strike) / sv;
        if (d < kLowD) return 0.0;
        const double u = std::asinh(d / 4.0);
        const auto& table = tables_[i];
        if (u > table.hi) return delta(p, model_, times_[i], s, opts_);
        return table.spline(u) / s;
      }
      case PayoffKind::chaos: return delta(p, model_, times_[i], s, opts_);
    }
    return 0.0;
  }

 private:
  // Below this standardized log-moneyness the Holder delta is below 1e-300.
  static constexpr double kLowD = -38.0;

  struct Table {
    boost::math::interpolators::cardinal_cubic_b_spline<double> spline;
    double hi = 0.0;
  };

  void build_tables(std::size_t points) {
    detail::require(points >= 16, "DeltaOracle: table needs at least 16 points");
    tables_.resize(times_.size());
    parallel_for(times_.size(), [&](std::size_t begin, std::size_t end) {
      for (std::size_t i = begin; i < end; ++i) {
        const double sv = sqrt_var_[i];
        // reach far enough into the money to cover 15 total standard deviations
        const double d_hi = std::max(-kLowD, 15.0 * model_.sigma * std::sqrt(model_.T) / sv);
        const double lo = std::asinh(kLowD / 4.0), hi = std::asinh(d_hi / 4.0);
        const double step = (hi - lo) / double(points - 1);
        std::vector<double> values(points);
        for (std::size_t k = 0; k < points; ++k) {
          const double u = lo + step * double(k);
          const double s = payoff_.strike * std::exp(4.0 * std::sinh(u) * sv);
          // s * delta varies less than delta across the table
          values[k] = s * delta(payoff_, model_, times_[i], s, opts_);
        }
        tables_[i].spline = {values.data(), values.size(), lo, step};
        tables_[i].hi = hi;
      }
    });
  }

  Payoff payoff_;
  MarketModel model_;
  PriceOptions opts_;
  std::vector<double> times_;
  std::vector<double> sqrt_var_;
  std::vector<Table> tables_;
};

/// Per-path tracking errors of the discrete delta hedge, optionally observed
/// on a grid of intermediate times.
struct TrackingErrorSample {
  Payoff payoff;
  MarketModel model;
  TimeNet net;
  std::vector<double> terminal_errors;
  std::vector<double> process_times;
  /// paths x process_times, row-major
  std::vector<double> process_values;
  std::uint64_t seed = 0;
  Measure measure = Measure::martingale;

  std::size_t paths() const { return terminal_errors.size(); }
  double process(std::size_t path, std::size_t k) const {
    return process_values[path * process_times.size() + k];
  }
};

namespace detail {

inline void check_net(const MarketModel& model, const TimeNet& net, const char* who) {
  require(std::abs(net.T - model.T) <= 1e-14 * model.T && net.nodes.back() == model.T,
          std::string(who) + ": net maturity differs from model maturity");
  require(net.nodes.size() == net.n + 1 && net.n >= 1, std::string(who) + ": malformed net");
}

}  // namespace detail

/// C_T = h(S_T) - H(0,s0) - sum_i delta(t_i, S_{t_i}) (S_{t_{i+1}} - S_{t_i}) per
/// path. Deltas are martingale-measure deltas; paths follow `measure`.
inline TrackingErrorSample tracking_error_terminal(const Payoff& p, const MarketModel& model,
                                                   const TimeNet& net, std::size_t m,
                                                   std::uint64_t seed, Measure measure,
                                                   const PriceOptions& opts = {}) {
  model.validate();
  p.validate();
  detail::check_net(model, net, "tracking_error_terminal");
  detail::require(m >= 1, "tracking_error_terminal: path count must be >= 1");
  const std::span<const double> nodes(net.nodes);
  const DeltaOracle deltas(p, model, nodes.first(net.n), opts);
  const double h0 = price(p, model, 0.0, model.s0, opts);
  TrackingErrorSample out{p, model, net, std::vector<double>(m), {}, {}, seed, measure};
  parallel_for(m, [&](std::size_t begin, std::size_t end) {
    std::vector<double> s(nodes.size());
    for (std::size_t path = begin; path < end; ++path) {
      fill_gbm_path(model, nodes, seed, path, measure, s);
      double gains = 0.0;
      for (std::size_t i = 0; i < net.n; ++i) gains += deltas(i, s[i]) * (s[i + 1] - s[i]);
      out.terminal_errors[path] = payoff_eval(p, s.back()) - h0 - gains;
    }
  });
  return out;
}

/// Tracking error process C_t observed at eval_times (each in [0,T)), with the
/// truncation convention S_{t_{i+1} ^ t} - S_{t_i ^ t}. The simulation grid is
/// the union of net nodes and eval_times. Terminal errors are filled as well.
inline TrackingErrorSample tracking_error_process(const Payoff& p, const MarketModel& model,
                                                  const TimeNet& net, std::size_t m,
                                                  std::uint64_t seed,
                                                  std::span<const double> eval_times,
                                                  Measure measure, const PriceOptions& opts = {}) {
  model.validate();
  p.validate();
  detail::check_net(model, net, "tracking_error_process");
  detail::require(m >= 1, "tracking_error_process: path count must be >= 1");
  for (double e : eval_times)
    detail::require(e >= 0.0 && e < model.T, "tracking_error_process: eval times must lie in [0,T)");
  std::vector<double> grid(net.nodes);
  grid.insert(grid.end(), eval_times.begin(), eval_times.end());
  std::sort(grid.begin(), grid.end());
  grid.erase(std::unique(grid.begin(), grid.end()), grid.end());

  // net index active on each grid step (grid[j-1], grid[j]] and positions of
  // net nodes and eval times inside the grid
  std::vector<std::size_t> active(grid.size(), 0), node_pos(net.n + 1), eval_pos(eval_times.size());
  for (std::size_t j = 1; j < grid.size(); ++j) active[j] = left_index(net, grid[j]);
  for (std::size_t i = 0; i <= net.n; ++i)
    node_pos[i] = std::size_t(std::lower_bound(grid.begin(), grid.end(), net.nodes[i]) - grid.begin());
  for (std::size_t k = 0; k < eval_times.size(); ++k)
    eval_pos[k] =
        std::size_t(std::lower_bound(grid.begin(), grid.end(), eval_times[k]) - grid.begin());

  const DeltaOracle deltas(p, model, std::span<const double>(net.nodes).first(net.n), opts);
  const double h0 = price(p, model, 0.0, model.s0, opts);
  const std::size_t E = eval_times.size();
  TrackingErrorSample out{p, model, net, std::vector<double>(m),
                          std::vector<double>(eval_times.begin(), eval_times.end()),
                          std::vector<double>(m * E), seed, measure};
  parallel_for(m, [&](std::size_t begin, std::size_t end) {
    std::vector<double> s(grid.size()), gains(grid.size());
    std::vector<double> hedge(net.n);
    for (std::size_t path = begin; path < end; ++path) {
      fill_gbm_path(model, grid, seed, path, measure, s);
      for (std::size_t i = 0; i < net.n; ++i) hedge[i] = deltas(i, s[node_pos[i]]);
      gains[0] = 0.0;
      for (std::size_t j = 1; j < grid.size(); ++j)
        gains[j] = gains[j - 1] + hedge[active[j]] * (s[j] - s[j - 1]);
      for (std::size_t k = 0; k < E; ++k) {
        const std::size_t j = eval_pos[k];
        out.process_values[path * E + k] = price(p, model, grid[j], s[j], opts) - h0 - gains[j];
      }
      out.terminal_errors[path] = payoff_eval(p, s.back()) - h0 - gains.back();
    }
  });
  return out;
}

/// Monte Carlo estimate of ||C_T||_{L2}.
struct L2ErrorEstimate {
  std::size_t n = 0;
  double theta = 1.0;
  double l2_error = 0.0;
  /// standard error of the mean of C_T^2
  double stderr_sq = 0.0;
  /// delta-method standard error of l2_error
  double stderr = 0.0;
  std::size_t m = 0;
};

inline L2ErrorEstimate l2_from_sample(const TrackingErrorSample& sample) {
  const auto& c = sample.terminal_errors;
  detail::require(c.size() >= 2, "l2_tracking_error: need at least two paths");
  double mean = 0.0;
  for (double x : c) mean += x * x;
  mean /= double(c.size());
  double var = 0.0;
  for (double x : c) {
    const double d = x * x - mean;
    var += d * d;
  }
  var /= double(c.size() - 1);
  L2ErrorEstimate est{sample.net.n, sample.net.theta, std::sqrt(mean), std::sqrt(var / double(c.size())),
                      0.0, c.size()};
  est.stderr = est.l2_error > 0.0 ? est.stderr_sq / (2.0 * est.l2_error) : 0.0;
  return est;
}

inline L2ErrorEstimate l2_tracking_error(const Payoff& p, const MarketModel& model,
                                         const TimeNet& net, std::size_t m, std::uint64_t seed,
                                         Measure measure, const PriceOptions& opts = {}) {
  detail::require(m >= 2, "l2_tracking_error: need at least two paths");
  return l2_from_sample(tracking_error_terminal(p, model, net, m, seed, measure, opts));
}

struct ZRegOptions {
  /// Gauss–Legendre order on each net interval
  std::size_t t_quad_order = 8;
  /// dyadic refinement levels of the last interval toward T
  std::size_t grading_levels = 30;
  quad::Tolerance tol{1e-13, 1e-9};
  /// Gauss–Hermite order of the inner (bridge) expectation
  std::size_t inner_order = 48;
  PriceOptions price;
};

namespace detail {

// E f(S_u, S_t) under the martingale law started at (0, s0), u < t. The outer
// integral runs adaptively over S_t; the inner one is Gauss–Hermite over the
// bridge law of S_u given S_t, whose log-width sqrt(u (t-u) / t) never exceeds
// the width sqrt(T-u) on which functions of (u, S_u) vary.
template <class F>
double joint_expectation(const Payoff& p, const MarketModel& model, double u, double t, F&& f,
                         const quad::Tolerance& tol, std::size_t inner_order) {
  const double sig = model.sigma, sig2 = sig * sig;
  LognormalExpectation outer;
  outer.s = model.s0;
  outer.v = sig2 * t;
  if (p.has_strike()) outer.focus = p.strike;
  outer.feature_variance = sig2 * (model.T - t);
  outer.power = 2.0 * payoff_growth(p) + 2.0;
  outer.tol = tol;
  const auto& rule = quad::gauss_hermite(inner_order);
  const double bridge_sd = u > 0.0 ? std::sqrt(u * (t - u) / t) : 0.0;
  return outer([&](double st) {
           if (u == 0.0) return f(model.s0, st);
           const double w_t = (std::log(st / model.s0) + 0.5 * sig2 * t) / sig;
           const double mean = u / t * w_t;
           double sum = 0.0;
           for (std::size_t k = 0; k < rule.nodes.size(); ++k) {
             const double w_u = mean + bridge_sd * rule.nodes[k];
             sum += rule.weights[k] * f(model.s0 * std::exp(sig * w_u - 0.5 * sig2 * u), st);
           }
           return sum;
         }).value;
}

// sum_i int_{t_{i-1}}^{t_i} E g(t_{i-1}, t) dt with the last interval graded
// dyadically toward T.
template <class G>
double net_time_integral(const TimeNet& net, const ZRegOptions& opts, G&& g) {
  const auto& rule = quad::gauss_legendre(opts.t_quad_order);
  struct Segment {
    std::size_t interval;
    double a, b;
  };
  std::vector<Segment> segments;
  for (std::size_t i = 0; i < net.n; ++i) {
    const double a = net.nodes[i], b = net.nodes[i + 1];
    if (i + 1 < net.n) {
      segments.push_back({i, a, b});
      continue;
    }
    const double width = b - a;
    double hi = a;
    for (std::size_t k = 1; k <= opts.grading_levels; ++k) {
      const double next = b - std::ldexp(width, -int(k));
      segments.push_back({i, hi, next});
      hi = next;
    }
  }
  std::vector<double> parts(segments.size());
  parallel_for(segments.size(), [&](std::size_t begin, std::size_t end) {
    for (std::size_t k = begin; k < end; ++k) {
      const auto& seg = segments[k];
      const double c = 0.5 * (seg.a + seg.b), h = 0.5 * (seg.b - seg.a);
      double sum = 0.0;
      for (std::size_t q = 0; q < rule.nodes.size(); ++q)
        sum += rule.weights[q] * g(net.nodes[seg.interval], c + h * rule.nodes[q]);
      parts[k] = h * sum;
    }
  });
  double total = 0.0;
  for (double x : parts) total += x;
  return total;
}

}  // namespace detail

/// L2-regularity of z_t = sigma S_t dH/ds(t, S_t) along the net:
/// sum_i int_{t_{i-1}}^{t_i} E|z_t - z_{t_{i-1}}|^2 dt, inner expectations over
/// the joint law of (S_{t_{i-1}}, S_t).
inline double z_regularity(const Payoff& p, const MarketModel& model, const TimeNet& net,
                           const ZRegOptions& opts = {}) {
  model.validate();
  p.validate();
  detail::check_net(model, net, "z_regularity");
  const double sig = model.sigma;
  return detail::net_time_integral(net, opts, [&](double u, double t) {
    return detail::joint_expectation(
        p, model, u, t,
        [&](double su, double st) {
          const double d = sig * (st * delta(p, model, t, st, opts.price) -
                                  su * delta(p, model, u, su, opts.price));
          return d * d;
        },
        opts.tol, opts.inner_order);
  });
}

/// E C_T^2 under the martingale measure from the Ito isometry:
/// sum_i int_{t_{i-1}}^{t_i} E[sigma^2 S_t^2 (delta(t,S_t) - delta(t_{i-1},S_{t_{i-1}}))^2] dt.
inline double isometry_error_sq(const Payoff& p, const MarketModel& model, const TimeNet& net,
                                const ZRegOptions& opts = {}) {
  model.validate();
  p.validate();
  detail::check_net(model, net, "isometry_error_sq");
  const double sig = model.sigma;
  return detail::net_time_integral(net, opts, [&](double u, double t) {
    return detail::joint_expectation(
        p, model, u, t,
        [&](double su, double st) {
          const double d =
              sig * st * (delta(p, model, t, st, opts.price) - delta(p, model, u, su, opts.price));
          return d * d;
        },
        opts.tol, opts.inner_order);
  });
}

inline void write_l2_header(std::ostream& out) {
  write_csv_row(out, {"payoff_kind", "K", "theta_payoff", "net_theta", "n", "m", "seed", "measure",
                      "l2_error", "stderr"});
}

inline void write_l2_row(std::ostream& out, const Payoff& p, const L2ErrorEstimate& e,
                         std::uint64_t seed, Measure measure) {
  write_csv_row(out, {to_string(p.kind), p.has_strike() ? format_double(p.strike) : std::string(),
                      p.kind == PayoffKind::power_holder ? format_double(p.holder_theta) : std::string(),
                      e.theta, e.n, e.m, seed, to_string(measure), e.l2_error, e.stderr});
}

}  // namespace fracsmooth
