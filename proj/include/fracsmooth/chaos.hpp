#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <numbers>
#include <optional>
#include <ostream>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "csv.hpp"
#include "errors.hpp"
#include "hermite.hpp"
#include "model.hpp"
#include "normal.hpp"
#include "parallel.hpp"
#include "payoffs.hpp"
#include "quadrature.hpp"

namespace fracsmooth {

struct ProjectOptions {
  /// Gauss–Hermite order; must exceed 2K.
  std::size_t quad_order = 1024;
  /// Points where g jumps or kinks. When present the coefficients are
  /// computed by composite Gauss–Legendre panels split there, which converges
  /// far faster than Gauss–Hermite for discontinuous g.
  std::vector<double> breakpoints;
  /// Parseval residuals below -parseval_tol * ||g||^2 are reported as errors.
  double parseval_tol = 1e-8;
};

namespace detail {

constexpr double kLogInvSqrt2Pi = -0.91893853320467274178;

/// Nodes x_i and log(w_i * density) for the composite rule used with
/// breakpoints: panels narrow enough to resolve H_K over the window where
/// H_K(x) phi(x) is not negligible.
inline void composite_gaussian_rule(std::size_t K, std::span<const double> breakpoints,
                                    std::vector<double>& nodes, std::vector<double>& log_weights) {
  const double half = std::sqrt(4.0 * double(K) + 2.0) + 12.0;
  const double width = std::min(0.5, 3.0 / std::sqrt(double(K) + 1.0));
  std::vector<double> cuts{-half, half};
  for (double b : breakpoints)
    if (b > -half && b < half) cuts.push_back(b);
  std::sort(cuts.begin(), cuts.end());
  cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());
  const auto& gl = quad::gauss_legendre(24);
  for (std::size_t c = 0; c + 1 < cuts.size(); ++c) {
    const double len = cuts[c + 1] - cuts[c];
    const auto panels = static_cast<std::size_t>(std::ceil(len / width));
    const double h = len / double(panels);
    for (std::size_t p = 0; p < panels; ++p) {
      const double a = cuts[c] + h * double(p);
      for (std::size_t i = 0; i < gl.nodes.size(); ++i) {
        const double x = a + 0.5 * h * (gl.nodes[i] + 1.0);
        nodes.push_back(x);
        log_weights.push_back(std::log(0.5 * h * gl.weights[i]) + kLogInvSqrt2Pi - 0.5 * x * x);
      }
    }
  }
}

}  // namespace detail

/// Chaos coefficients alpha_k = E g(Z) H_k(Z), k <= K, of a function of a
/// standard Gaussian variable.
template <class G>
ChaosExpansion project(G&& g, std::size_t K, const ProjectOptions& opts = {}) {
  std::vector<double> nodes, log_weights;
  if (opts.breakpoints.empty()) {
    detail::require(opts.quad_order > 2 * K, "project: quad_order must exceed 2K");
    const auto& gh = quad::gauss_hermite(opts.quad_order);
    nodes = gh.nodes;
    log_weights = gh.log_weights;
  } else {
    detail::composite_gaussian_rule(K, opts.breakpoints, nodes, log_weights);
  }

  const std::size_t n = nodes.size();
  std::vector<double> values(n);
  for (std::size_t i = 0; i < n; ++i) {
    values[i] = g(nodes[i]);
    if (!std::isfinite(values[i])) {
      std::ostringstream msg;
      msg << "project: g is not finite at x=" << nodes[i];
      throw InvalidArgument(msg.str());
    }
  }

  // Per-node contributions are accumulated in worker-independent slots.
  const std::size_t blocks = std::min<std::size_t>(n, 64);
  std::vector<std::vector<double>> partial(blocks, std::vector<double>(K + 1, 0.0));
  std::vector<double> norm_part(blocks, 0.0);
  parallel_for(blocks, [&](std::size_t b0, std::size_t b1) {
    for (std::size_t b = b0; b < b1; ++b) {
      for (std::size_t i = n * b / blocks; i < n * (b + 1) / blocks; ++i) {
        if (values[i] == 0.0) continue;
        const double lw = log_weights[i];
        norm_part[b] += std::exp(lw) * values[i] * values[i];
        HermiteSweep h(nodes[i]);
        for (std::size_t k = 0; k <= K; ++k) {
          partial[b][k] += values[i] * h.value(lw);
          h.advance();
        }
      }
    }
  });

  ChaosExpansion e;
  e.alpha.assign(K + 1, 0.0);
  double norm_sq = 0.0;
  for (std::size_t b = 0; b < blocks; ++b) {
    norm_sq += norm_part[b];
    for (std::size_t k = 0; k <= K; ++k) e.alpha[k] += partial[b][k];
  }
  double captured = 0.0;
  for (std::size_t k = K + 1; k-- > 0;) captured += e.alpha[k] * e.alpha[k];
  const double residual = norm_sq - captured;
  if (residual < -opts.parseval_tol * std::max(norm_sq, 1e-300)) {
    std::ostringstream msg;
    msg << "project: negative Parseval residual " << residual << " for ||g||^2 = " << norm_sq
        << "; raise the quadrature order";
    throw ConvergenceError(msg.str());
  }
  e.tail_l2 = std::sqrt(std::max(residual, 0.0));
  return e;
}

/// ||g||^2 in L2 of the standard Gaussian measure by the same rule project uses.
template <class G>
double gaussian_norm_sq(G&& g, std::size_t K, const ProjectOptions& opts = {}) {
  std::vector<double> nodes, log_weights;
  if (opts.breakpoints.empty()) {
    const auto& gh = quad::gauss_hermite(opts.quad_order);
    nodes = gh.nodes;
    log_weights = gh.log_weights;
  } else {
    detail::composite_gaussian_rule(K, opts.breakpoints, nodes, log_weights);
  }
  double sum = 0.0;
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    const double v = g(nodes[i]);
    sum += std::exp(log_weights[i]) * v * v;
  }
  return sum;
}

struct D12Norm {
  double norm = 0.0;
  /// tail_l2 exceeds 1e-6, so the truncated sum may understate the norm
  bool tail_warning = false;
};

inline D12Norm d12_norm(const ChaosExpansion& e) {
  double sum = 0.0;
  for (std::size_t k = e.alpha.size(); k-- > 0;) sum += double(k + 1) * e.alpha[k] * e.alpha[k];
  return {std::sqrt(sum), e.tail_l2 > 1e-6};
}

/// Source of chaos coefficients of arbitrary order with a certified bound on
/// the part of the series that has not been summed.
struct CoefficientSource {
  struct TailBound {
    /// bound on sum_{k>K} k t^{k-1} alpha_k^2
    double weighted = 0.0;
    /// bound on sum_{k>K} t^{k-1} alpha_k^2
    double plain = 0.0;
  };

  std::string name;
  /// Returns a fresh generator yielding alpha_0, alpha_1, ... in order.
  std::function<std::function<double()>()> open;
  /// Number of coefficients available; nullopt for an infinite sequence.
  std::optional<std::size_t> length;
  /// Bounds for the series beyond order K, given alpha_K.
  std::function<TailBound(std::size_t K, double alpha_K, double t)> tail;
  /// E g(Z)^2
  double norm_sq = 0.0;
};

namespace detail {

/// Cramer's bound |H_n(x)| <= kCramer exp(x^2/4) for the orthonormal Hermite
/// functions.
constexpr double kCramer = 1.0864350;

/// Tail bounds when alpha_k^2 <= c / k^p for all k > K (p >= 1).
inline CoefficientSource::TailBound power_envelope_tail(double c, double p, std::size_t K,
                                                        double t) {
  const double k1 = double(K + 1);
  const double tk = std::pow(t, double(K));
  return {c * std::pow(k1, 1.0 - p) * tk / (1.0 - t), c * std::pow(k1, -p) * tk / (1.0 - t)};
}

}  // namespace detail

/// Finite expansion: beyond its order only the Parseval tail is known, which
/// bounds the rest of the series by tail_l2^2 times the largest weight.
inline CoefficientSource expansion_source(const ChaosExpansion& e) {
  CoefficientSource src;
  src.name = "expansion";
  src.open = [alpha = e.alpha] {
    return [alpha, k = std::size_t{0}]() mutable { return k < alpha.size() ? alpha[k++] : 0.0; };
  };
  src.length = e.alpha.size();
  const double tail_sq = e.tail_l2 * e.tail_l2;
  src.tail = [tail_sq](std::size_t K, double, double t) {
    const double peak = -1.0 / std::log(t);  // k t^{k-1} is largest near here
    const double k = std::max(double(K + 1), std::floor(peak));
    const double weight = std::max(k * std::pow(t, k - 1.0), (k + 1.0) * std::pow(t, k));
    return CoefficientSource::TailBound{tail_sq * weight, tail_sq * std::pow(t, double(K))};
  };
  double norm = tail_sq;
  for (std::size_t k = e.alpha.size(); k-- > 0;) norm += e.alpha[k] * e.alpha[k];
  src.norm_sq = norm;
  return src;
}

/// g = 1_{[a, inf)}: alpha_0 = N(-a), alpha_k = phi(a) H_{k-1}(a) / sqrt(k).
inline CoefficientSource indicator_source(double a) {
  detail::require(std::isfinite(a), "indicator_source: threshold must be finite");
  CoefficientSource src;
  src.name = "indicator";
  const double pa = norm_pdf(a);
  src.open = [a, pa] {
    return [a, pa, sweep = HermiteSweep(a), k = std::size_t{0}]() mutable {
      if (k == 0) {
        ++k;
        return norm_cdf(-a);
      }
      const double v = pa * sweep.value() / std::sqrt(double(k));
      sweep.advance();
      ++k;
      return v;
    };
  };
  const double c = std::pow(pa * detail::kCramer, 2) * std::exp(0.5 * a * a);
  src.tail = [c](std::size_t K, double, double t) {
    return detail::power_envelope_tail(c, 1.0, K, t);
  };
  src.norm_sq = norm_cdf(-a);
  return src;
}

/// g(x) = (s0 exp(w x - w^2/2) - K)_+, the call payoff as a function of the
/// standardized Gaussian driving ln S_T. With a = (ln(K/s0) + w^2/2)/w,
/// integration by parts gives alpha_0 = s0 N(w-a) - K N(-a), alpha_1 =
/// s0 w N(w-a) and alpha_{k+1} = w (alpha_k + K phi(a) H_{k-1}(a)/sqrt(k)) /
/// sqrt(k+1).
inline CoefficientSource call_source(double s0, double K, double w) {
  detail::require(s0 > 0 && K > 0 && w > 0, "call_source: need s0, K, w > 0");
  CoefficientSource src;
  src.name = "call";
  const double a = (std::log(K / s0) + 0.5 * w * w) / w;
  const double kpa = K * norm_pdf(a);
  const double a0 = s0 * norm_cdf(w - a) - K * norm_cdf(-a);
  const double a1 = s0 * w * norm_cdf(w - a);
  src.open = [=] {
    return [=, sweep = HermiteSweep(a), prev = 0.0, k = std::size_t{0}]() mutable {
      double v;
      if (k == 0) {
        v = a0;
      } else if (k == 1) {
        v = a1;
      } else {
        // sweep holds H_{k-2}(a)
        v = w * (prev + kpa * sweep.value() / std::sqrt(double(k - 1))) / std::sqrt(double(k));
        sweep.advance();
      }
      prev = v;
      ++k;
      return v;
    };
  };
  // |alpha_{k+1}| <= |alpha_k|/2 + B/k once w^2 <= (k+1)/4, hence
  // |alpha_k| <= M/k beyond such a K with M = max(K |alpha_K|, 3B).
  const double B = kpa * w * detail::kCramer * std::exp(0.25 * a * a);
  src.tail = [=](std::size_t Kt, double alpha_K, double t) {
    if (double(Kt + 1) < 4.0 * w * w || Kt < 5) {
      constexpr double inf = std::numeric_limits<double>::infinity();
      return CoefficientSource::TailBound{inf, inf};
    }
    const double M = std::max(double(Kt) * std::abs(alpha_K), 3.0 * B);
    return detail::power_envelope_tail(M * M, 2.0, Kt, t);
  };
  // E g^2 = s0^2 e^{w^2} N(2w - a) - 2 s0 K N(w - a) + K^2 N(-a)
  src.norm_sq = s0 * s0 * std::exp(w * w) * norm_cdf(2.0 * w - a) -
                2.0 * s0 * K * norm_cdf(w - a) + K * K * norm_cdf(-a);
  return src;
}

/// Coefficient source of g(x) = h(S_T) with S_T = s0 exp(w x - w^2/2),
/// w = sigma sqrt(T), for payoffs with a closed-form chaos expansion.
inline CoefficientSource payoff_chaos_source(const Payoff& p, const MarketModel& model) {
  p.validate();
  model.validate();
  const double w = model.sigma * std::sqrt(model.T);
  CoefficientSource src;
  switch (p.kind) {
    case PayoffKind::binary:
      src = indicator_source((std::log(p.strike / model.s0) + 0.5 * w * w) / w);
      break;
    case PayoffKind::call:
      src = call_source(model.s0, p.strike, w);
      break;
    case PayoffKind::chaos:
      detail::require(std::abs(p.chaos->log_width - w) <= 1e-12 * w,
                      "payoff_chaos_source: chaos payoff built for a different model");
      src = expansion_source(p.chaos->expansion);
      break;
    default:
      throw InvalidArgument("payoff_chaos_source: no closed-form chaos expansion for " +
                            to_string(p.kind));
  }
  if (p.scale != 1.0) {
    const double c = p.scale;
    auto open = src.open;
    auto tail = src.tail;
    src.open = [open, c] { return [g = open(), c]() mutable { return c * g(); }; };
    src.tail = [tail, c](std::size_t K, double alpha_K, double t) {
      if (c == 0.0) return CoefficientSource::TailBound{};
      auto b = tail(K, alpha_K / c, t);
      return CoefficientSource::TailBound{c * c * b.weighted, c * c * b.plain};
    };
    src.norm_sq *= c * c;
  }
  return src;
}

struct SeriesOptions {
  std::size_t initial_order = 256;
  /// Largest truncation order tried before giving up.
  std::size_t max_order = std::size_t{1} << 27;
  /// Tail bound allowed relative to the partial sum.
  double rel_tol = 1e-8;
};

namespace detail {

/// Sums sum_{k=1}^{K} c_k(t) alpha_k^2 for every t, doubling K until the tail
/// bound is within rel_tol of the partial sum. Terms are added in blocks of
/// increasing k and the block totals are combined from the last block down,
/// so small terms are accumulated first.
template <class Weight, class TailPart>
std::vector<double> certified_series(const CoefficientSource& src, std::span<const double> t_grid,
                                     const SeriesOptions& opts, Weight weight, TailPart tail_part,
                                     const char* who) {
  constexpr std::size_t kBlock = 4096;
  const std::size_t nt = t_grid.size();
  std::vector<std::vector<double>> blocks(nt);
  std::vector<double> power(nt);  // t^{k-1} at the current k
  auto gen = src.open();
  gen();  // alpha_0 never enters
  std::size_t summed = 0;  // highest k included
  std::size_t target = std::max<std::size_t>(opts.initial_order, 8);
  const std::size_t cap = src.length ? std::min(opts.max_order, *src.length - 1) : opts.max_order;
  std::vector<double> totals(nt);
  std::vector<double> alpha_sq;
  double last = 0.0;
  while (true) {
    target = std::min(target, cap);
    while (summed < target) {
      const std::size_t begin = summed + 1;
      const std::size_t end = std::min(target, begin - 1 + kBlock);
      alpha_sq.clear();
      for (std::size_t k = begin; k <= end; ++k) {
        last = gen();
        alpha_sq.push_back(last * last);
      }
      parallel_for(nt, [&](std::size_t i0, std::size_t i1) {
        for (std::size_t i = i0; i < i1; ++i) {
          const double t = t_grid[i];
          double p = std::pow(t, double(begin - 1));
          double sum = 0.0;
          for (std::size_t k = begin; k <= end; ++k) {
            sum += weight(k, p) * alpha_sq[k - begin];
            p *= t;
          }
          blocks[i].push_back(sum);
        }
      });
      summed = end;
    }
    bool ok = true;
    double worst = 0.0;
    for (std::size_t i = 0; i < nt; ++i) {
      double total = 0.0;
      for (std::size_t b = blocks[i].size(); b-- > 0;) total += blocks[i][b];
      totals[i] = total;
      const double bound = tail_part(src.tail(summed, last, t_grid[i]));
      if (!(bound <= opts.rel_tol * total) && !(bound == 0.0 && total == 0.0)) {
        ok = false;
        worst = std::max(worst, t_grid[i]);
      }
    }
    if (ok) return totals;
    if (summed >= cap) {
      std::ostringstream msg;
      msg << who << ": truncation tail not certified at order " << summed << " for t=" << worst
          << " (" << src.name << " coefficients)";
      throw ConvergenceError(msg.str());
    }
    target = 2 * summed;
  }
}

inline void check_unit_grid(std::span<const double> t_grid, const char* who) {
  require(!t_grid.empty(), std::string(who) + ": empty t grid");
  for (std::size_t i = 0; i < t_grid.size(); ++i) {
    require(t_grid[i] >= 0.0 && t_grid[i] < 1.0, std::string(who) + ": t must lie in [0,1)");
    if (i > 0) require(t_grid[i] > t_grid[i - 1], std::string(who) + ": t grid not increasing");
  }
}

}  // namespace detail

/// t = 1 - 2^{-j}, j = 0..levels.
inline std::vector<double> besov_t_grid(int levels = 20) {
  detail::require(levels >= 1, "besov_t_grid: need at least one level");
  std::vector<double> grid;
  for (int j = 0; j <= levels; ++j) grid.push_back(1.0 - std::ldexp(1.0, -j));
  return grid;
}

enum class Boundedness { bounded, unbounded };

inline std::string to_string(Boundedness b) {
  return b == Boundedness::bounded ? "bounded" : "unbounded";
}

/// bounded when the running maximum grows by less than `max_increase` over
/// the last decade of 1 - t.
inline Boundedness running_max_verdict(std::span<const double> one_minus_t,
                                       std::span<const double> values, double max_increase = 0.05) {
  detail::require(one_minus_t.size() == values.size() && !values.empty(),
                  "running_max_verdict: length mismatch");
  const double last = one_minus_t.back();
  double before = -std::numeric_limits<double>::infinity(), overall = before;
  for (std::size_t i = 0; i < values.size(); ++i) {
    overall = std::max(overall, values[i]);
    if (one_minus_t[i] >= 10.0 * last) before = std::max(before, values[i]);
  }
  detail::require(std::isfinite(before), "running_max_verdict: grid spans less than a decade");
  return overall <= (1.0 + max_increase) * before ? Boundedness::bounded : Boundedness::unbounded;
}

struct BesovCurve {
  double theta = 0.0;
  std::vector<double> t;
  std::vector<double> phi;
  Boundedness verdict = Boundedness::bounded;
};

/// Phi(t) = (1-t)^{1-theta} sum_{k>=1} k t^{k-1} alpha_k^2 on the grid, with the
/// series truncated only where its tail is certified.
inline BesovCurve besov_criterion(const CoefficientSource& src, double theta,
                                  std::span<const double> t_grid, const SeriesOptions& opts = {}) {
  detail::require(theta > 0 && theta < 1, "besov_criterion: theta must lie in (0,1)");
  detail::check_unit_grid(t_grid, "besov_criterion");
  detail::require(t_grid.back() >= 1.0 - std::ldexp(1.0, -20) * (1.0 + 1e-9),
                  "besov_criterion: grid must reach 1 - t = 2^-20");
  const auto sums = detail::certified_series(
      src, t_grid, opts, [](std::size_t k, double p) { return double(k) * p; },
      [](const CoefficientSource::TailBound& b) { return b.weighted; }, "besov_criterion");
  BesovCurve out;
  out.theta = theta;
  out.t.assign(t_grid.begin(), t_grid.end());
  std::vector<double> gap(t_grid.size());
  for (std::size_t i = 0; i < t_grid.size(); ++i) {
    gap[i] = 1.0 - t_grid[i];
    out.phi.push_back(std::pow(gap[i], 1.0 - theta) * sums[i]);
  }
  out.verdict = running_max_verdict(gap, out.phi);
  return out;
}

inline BesovCurve besov_criterion(const ChaosExpansion& e, double theta,
                                  std::span<const double> t_grid, const SeriesOptions& opts = {}) {
  return besov_criterion(expansion_source(e), theta, t_grid, opts);
}

/// ||M_1 - M_t||_{L2} = sqrt(sum_{k>=1} alpha_k^2 (1 - t^k)) for M_t = E(g(W_1)|F_t),
/// with the truncation tail added in quadrature.
inline double decay_from_chaos(const ChaosExpansion& e, double t) {
  detail::require(t >= 0.0 && t < 1.0, "decay_from_chaos: t must lie in [0,1)");
  double sum = 0.0;
  // 1 - t^k via expm1 keeps precision as t -> 1; log(0) = -inf gives 1 at t = 0
  for (std::size_t k = e.alpha.size(); k-- > 1;)
    sum += e.alpha[k] * e.alpha[k] * -std::expm1(double(k) * std::log(t));
  return std::sqrt(sum + e.tail_l2 * e.tail_l2);
}

/// Same quantity from a coefficient source, as Var g - sum_{k>=1} alpha_k^2 t^k
/// with the geometric series certified at every t.
inline std::vector<double> decay_from_chaos(const CoefficientSource& src,
                                            std::span<const double> t_grid,
                                            const SeriesOptions& opts = {}) {
  detail::check_unit_grid(t_grid, "decay_from_chaos");
  auto gen = src.open();
  const double a0 = gen();
  const double variance = src.norm_sq - a0 * a0;
  // The t = 0 point has an empty series; shift it out of the certified sum.
  std::vector<double> positive;
  for (double t : t_grid)
    if (t > 0.0) positive.push_back(t);
  std::vector<double> sums;
  if (!positive.empty())
    sums = detail::certified_series(
        src, positive, opts, [](std::size_t, double p) { return p; },
        [](const CoefficientSource::TailBound& b) { return b.plain; }, "decay_from_chaos");
  std::vector<double> out;
  std::size_t j = 0;
  for (double t : t_grid) {
    // the certified sum runs over t^{k-1}; one more factor t gives t^k
    const double series = t > 0.0 ? t * sums[j++] : 0.0;
    out.push_back(std::sqrt(std::max(variance - series, 0.0)));
  }
  return out;
}

struct D12Divergence {
  std::vector<std::size_t> orders;
  std::vector<double> partial_sums;
  /// partial-sum growth between consecutive orders
  std::vector<double> increments;
  bool divergent = false;
};

/// Heuristic membership test for D_{1,2}: partial sums of (k+1) alpha_k^2 at
/// K = 2^lo..2^hi diverge when their dyadic increments never decrease.
inline D12Divergence d12_divergence(const CoefficientSource& src, int lo = 5, int hi = 12) {
  detail::require(lo >= 1 && hi > lo + 1, "d12_divergence: need at least three orders");
  const std::size_t top = std::size_t{1} << hi;
  if (src.length)
    detail::require(*src.length > top, "d12_divergence: source has too few coefficients");
  D12Divergence out;
  auto gen = src.open();
  double sum = 0.0;
  std::size_t next = std::size_t{1} << lo;
  for (std::size_t k = 0; k <= top; ++k) {
    const double a = gen();
    sum += double(k + 1) * a * a;
    if (k == next) {
      out.orders.push_back(k);
      out.partial_sums.push_back(sum);
      next *= 2;
    }
  }
  out.divergent = true;
  for (std::size_t i = 1; i < out.partial_sums.size(); ++i) {
    out.increments.push_back(out.partial_sums[i] - out.partial_sums[i - 1]);
    if (i >= 2 && out.increments[i - 1] < out.increments[i - 2]) out.divergent = false;
  }
  if (out.increments.back() <= 0.0) out.divergent = false;
  return out;
}

inline std::vector<double> take_coefficients(const CoefficientSource& src, std::size_t K) {
  auto gen = src.open();
  std::vector<double> out;
  const std::size_t count = src.length ? std::min(K + 1, *src.length) : K + 1;
  for (std::size_t k = 0; k < count; ++k) out.push_back(gen());
  return out;
}

inline void write_coefficients_csv(std::ostream& out, std::span<const double> alpha) {
  out << "k,alpha_k\n";
  for (std::size_t k = 0; k < alpha.size(); ++k) write_csv_row(out, {k, alpha[k]});
}

/// Long format: one row per (theta, t).
inline void write_besov_csv(std::ostream& out, std::span<const BesovCurve> curves,
                            std::span<const double> decay) {
  out << "theta,t,phi_theta,decay\n";
  for (const auto& c : curves)
    for (std::size_t i = 0; i < c.t.size(); ++i)
      write_csv_row(out, {c.theta, c.t[i], c.phi[i], i < decay.size() ? decay[i] : 0.0});
}

}  // namespace fracsmooth
