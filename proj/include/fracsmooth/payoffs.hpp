#pragma once

#include <algorithm>
#include <cmath>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>

#include "errors.hpp"
#include "hermite.hpp"
#include "model.hpp"
#include "normal.hpp"
#include "quadrature.hpp"

namespace fracsmooth {

enum class PayoffKind { call, put, binary, power_holder, affine, chaos };

inline std::string to_string(PayoffKind k) {
  switch (k) {
    case PayoffKind::call: return "call";
    case PayoffKind::put: return "put";
    case PayoffKind::binary: return "binary";
    case PayoffKind::power_holder: return "power_holder";
    case PayoffKind::affine: return "affine";
    case PayoffKind::chaos: return "chaos";
  }
  return "unknown";
}

inline std::optional<PayoffKind> parse_payoff_kind(std::string_view name) {
  for (auto k : {PayoffKind::call, PayoffKind::put, PayoffKind::binary, PayoffKind::power_holder,
                 PayoffKind::affine, PayoffKind::chaos})
    if (to_string(k) == name) return k;
  return std::nullopt;
}

/// g(xi) with xi = (ln s - log_shift) / log_width, g given by its chaos
/// coefficients.
struct ChaosPayoff {
  ChaosExpansion expansion;
  double log_shift = 0.0;
  double log_width = 1.0;

  double xi(double s) const { return (std::log(s) - log_shift) / log_width; }
};

/// Terminal payoff h(S_T). `scale` multiplies the payoff and everything
/// derived from it.
struct Payoff {
  PayoffKind kind = PayoffKind::call;
  double strike = 1.0;
  double holder_theta = 0.5;
  double c0 = 0.0;
  double c1 = 0.0;
  std::shared_ptr<const ChaosPayoff> chaos;
  double scale = 1.0;

  static Payoff call(double K) { return {PayoffKind::call, K}; }
  static Payoff put(double K) { return {PayoffKind::put, K}; }
  static Payoff binary(double K) { return {PayoffKind::binary, K}; }
  static Payoff power_holder(double K, double theta) {
    Payoff p{PayoffKind::power_holder, K};
    p.holder_theta = theta;
    return p;
  }
  static Payoff affine(double c0, double c1) {
    Payoff p{PayoffKind::affine};
    p.c0 = c0;
    p.c1 = c1;
    return p;
  }
  /// h(S_T) = g(W_T / sqrt(T)) under the martingale measure of `model`, i.e.
  /// g evaluated at the standardized Gaussian driving ln S_T.
  static Payoff chaos_payoff(ChaosExpansion expansion, const MarketModel& model) {
    Payoff p{PayoffKind::chaos};
    const double width = model.sigma * std::sqrt(model.T);
    p.chaos = std::make_shared<const ChaosPayoff>(
        ChaosPayoff{std::move(expansion), std::log(model.s0) - 0.5 * width * width, width});
    return p;
  }

  Payoff scaled(double lambda) const {
    Payoff p = *this;
    p.scale *= lambda;
    return p;
  }

  bool has_strike() const {
    return kind == PayoffKind::call || kind == PayoffKind::put || kind == PayoffKind::binary ||
           kind == PayoffKind::power_holder;
  }

  /// Point where the payoff is non-smooth; used to place quadrature breakpoints.
  std::optional<double> singular_point() const {
    if (has_strike()) return strike;
    return std::nullopt;
  }

  void validate() const {
    detail::require(std::isfinite(scale), "payoff: scale must be finite");
    if (has_strike())
      detail::require(std::isfinite(strike) && strike > 0, "payoff: strike K must be > 0");
    if (kind == PayoffKind::power_holder)
      detail::require(holder_theta > 0 && holder_theta < 1,
                      "payoff: holder_theta must lie in (0,1)");
    if (kind == PayoffKind::affine)
      detail::require(std::isfinite(c0) && std::isfinite(c1), "payoff: c0, c1 must be finite");
    if (kind == PayoffKind::chaos) {
      detail::require(chaos && !chaos->expansion.alpha.empty(),
                      "payoff: chaos payoff needs coefficients");
      detail::require(chaos->log_width > 0, "payoff: chaos log width must be > 0");
      for (double a : chaos->expansion.alpha)
        detail::require(std::isfinite(a), "payoff: non-finite chaos coefficient");
    }
  }
};

inline double payoff_eval(const Payoff& p, double s) {
  detail::require(s > 0 && std::isfinite(s), "payoff_eval: s must be > 0");
  double v = 0.0;
  switch (p.kind) {
    case PayoffKind::call: v = std::max(s - p.strike, 0.0); break;
    case PayoffKind::put: v = std::max(p.strike - s, 0.0); break;
    case PayoffKind::binary: v = s >= p.strike ? 1.0 : 0.0; break;
    case PayoffKind::power_holder:
      v = s > p.strike ? std::pow(s - p.strike, p.holder_theta) : 0.0;
      break;
    case PayoffKind::affine: v = p.c0 + p.c1 * s; break;
    case PayoffKind::chaos: v = p.chaos->expansion.evaluate(p.chaos->xi(s)); break;
  }
  return p.scale * v;
}

struct Greeks {
  double price = 0.0;
  double delta = 0.0;
  double gamma = 0.0;

  /// s dH/ds, the gradient in log-price coordinates.
  double log_delta(double s) const { return s * delta; }
  /// s^2 d2H/ds2 + s dH/ds, the second derivative in log-price coordinates.
  double log_gamma(double s) const { return s * s * gamma + s * delta; }
};

struct PriceOptions {
  /// Gauss–Hermite order for chaos payoffs.
  std::size_t gh_order = 201;
  /// Re-evaluate with twice the order and compare.
  bool check_doubling = false;
  double doubling_tol = 1e-8;
  /// Relative tolerance for the strike-split quadrature of Holder payoffs.
  double kink_tol = 1e-12;
};

/// Remaining time is floored here inside pricing kernels.
inline constexpr double kMinRemainingTime = 1e-12;

namespace detail {

// Exponent q with |h(s)| <= c (1 + s^q).
inline double payoff_growth(const Payoff& p) {
  switch (p.kind) {
    case PayoffKind::call:
    case PayoffKind::put:
    case PayoffKind::affine: return 1.0;
    case PayoffKind::power_holder: return p.holder_theta;
    default: return 0.0;
  }
}

// One-sided derivatives of the payoff itself, used when no volatility remains.
inline Greeks payoff_greeks(const Payoff& p, double s) {
  Greeks g{payoff_eval(p, s), 0.0, 0.0};
  switch (p.kind) {
    case PayoffKind::call: g.delta = s >= p.strike ? 1.0 : 0.0; break;
    case PayoffKind::put: g.delta = s < p.strike ? -1.0 : 0.0; break;
    case PayoffKind::binary: break;
    case PayoffKind::power_holder:
      if (s > p.strike) {
        const double th = p.holder_theta, x = s - p.strike;
        g.delta = th * std::pow(x, th - 1.0);
        g.gamma = th * (th - 1.0) * std::pow(x, th - 2.0);
      }
      break;
    case PayoffKind::affine: g.delta = p.c1; break;
    case PayoffKind::chaos: {
      const auto& c = *p.chaos;
      const double x = c.xi(s), w = c.log_width;
      const double g1 = c.expansion.derivative(x), g2 = c.expansion.second_derivative(x);
      g.delta = g1 / (w * s);
      g.gamma = (g2 / (w * w) - g1 / w) / (s * s);
      break;
    }
  }
  g.delta *= p.scale;
  g.gamma *= p.scale;
  return g;
}

// Kernel moments E h(S_T) {1, Z, Z^2 - 1} with S_T = s exp(sqrt(v) Z - v/2).
struct KernelMoments {
  double m0 = 0.0, m1 = 0.0, m2 = 0.0;
};

inline Greeks from_moments(const KernelMoments& m, double s, double v) {
  const double sv = std::sqrt(v);
  const double dx = m.m1 / sv, dxx = m.m2 / v;
  return {m.m0, dx / s, (dxx - dx) / (s * s)};
}

inline KernelMoments holder_moments(const Payoff& p, double s, double v, double tol,
                                    int count = 3) {
  const double sv = std::sqrt(v), th = p.holder_theta, K = p.strike;
  const double zstar = (std::log(K / s) + 0.5 * v) / sv;
  const double reach = quad::gaussian_window(th * sv) + th * sv;
  const double upper = reach - zstar;
  KernelMoments out;
  if (upper <= 0.0) return out;
  const double lower = std::max(0.0, -zstar - quad::gaussian_window(0.0));
  const double scale = std::pow(K, th);
  // far out of the money the kernels are below any meaningful price scale
  constexpr double abs_tol = 1e-30;
  auto base = [&](double w) {
    const double z = zstar + w;
    return std::pow(std::expm1(sv * w), th) * norm_pdf(z);
  };
  out.m0 = quad::integrate_endpoint_singular([&](double w) { return base(w); }, lower, upper, tol,
                                             abs_tol).value;
  if (count > 1)
    out.m1 = quad::integrate_endpoint_singular([&](double w) { return base(w) * (zstar + w); },
                                               lower, upper, tol, abs_tol).value;
  if (count > 2)
    out.m2 = quad::integrate_endpoint_singular(
               [&](double w) {
                 const double z = zstar + w;
                 return base(w) * (z * z - 1.0);
               },
               lower, upper, tol, abs_tol).value;
  out.m0 *= scale;
  out.m1 *= scale;
  out.m2 *= scale;
  return out;
}

inline KernelMoments chaos_moments(const ChaosPayoff& c, double s, double v, std::size_t order) {
  const auto& rule = quad::gauss_hermite(order);
  const double sv = std::sqrt(v);
  const double mean = (std::log(s) - 0.5 * v - c.log_shift) / c.log_width;
  const double rho = sv / c.log_width;
  KernelMoments out;
  for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
    const double z = rule.nodes[i], w = rule.weights[i];
    if (w == 0.0) continue;
    const double g = c.expansion.evaluate(mean + rho * z);
    out.m0 += w * g;
    out.m1 += w * g * z;
    out.m2 += w * g * (z * z - 1.0);
  }
  return out;
}

inline Greeks closed_form(const Payoff& p, double s, double v) {
  const double sv = std::sqrt(v);
  Greeks g;
  switch (p.kind) {
    case PayoffKind::affine:
      g = {p.c0 + p.c1 * s, p.c1, 0.0};
      break;
    case PayoffKind::call:
    case PayoffKind::put:
    case PayoffKind::binary: {
      const double K = p.strike;
      const double d1 = (std::log(s / K) + 0.5 * v) / sv, d2 = d1 - sv;
      if (p.kind == PayoffKind::call) {
        g = {s * norm_cdf(d1) - K * norm_cdf(d2), norm_cdf(d1), norm_pdf(d1) / (s * sv)};
      } else if (p.kind == PayoffKind::put) {
        g = {K * norm_cdf(-d2) - s * norm_cdf(-d1), -norm_cdf(-d1), norm_pdf(d1) / (s * sv)};
      } else {
        g = {norm_cdf(d2), norm_pdf(d2) / (s * sv), -norm_pdf(d2) * d1 / (s * s * v)};
      }
      break;
    }
    default: break;
  }
  return g;
}

inline void check_time(const MarketModel& model, double t, double s, const char* who) {
  require(std::isfinite(t) && t >= 0.0 && t <= model.T, std::string(who) + ": t outside [0,T]");
  require(std::isfinite(s) && s > 0.0, std::string(who) + ": s must be > 0");
}

}  // namespace detail

/// Price and both spot Greeks of h(S_T) under the martingale measure, given
/// S_t = s. Closed form for call/put/binary/affine; quadrature otherwise, with
/// the Greeks obtained by differentiating the lognormal kernel.
inline Greeks greeks(const Payoff& p, const MarketModel& model, double t, double s,
                     const PriceOptions& opts = {}) {
  if (t >= model.T || model.degenerate()) return detail::payoff_greeks(p, s);
  const double v = model.sigma * model.sigma * std::max(model.T - t, kMinRemainingTime);
  Greeks g;
  switch (p.kind) {
    case PayoffKind::power_holder:
      g = detail::from_moments(detail::holder_moments(p, s, v, opts.kink_tol), s, v);
      break;
    case PayoffKind::chaos: {
      const auto m = detail::chaos_moments(*p.chaos, s, v, opts.gh_order);
      if (opts.check_doubling) {
        const auto m2 = detail::chaos_moments(*p.chaos, s, v, 2 * opts.gh_order);
        const double scale = 1.0 + std::abs(m2.m0) + std::abs(m2.m1) + std::abs(m2.m2);
        const double diff = std::abs(m.m0 - m2.m0) + std::abs(m.m1 - m2.m1) + std::abs(m.m2 - m2.m2);
        if (diff > opts.doubling_tol * scale) {
          std::ostringstream msg;
          msg << "Gauss-Hermite pricing not converged at t=" << t << ", s=" << s
              << ": doubling the order changed the kernel moments by " << diff;
          throw ConvergenceError(msg.str());
        }
      }
      g = detail::from_moments(m, s, v);
      break;
    }
    default: g = detail::closed_form(p, s, v);
  }
  g.price *= p.scale;
  g.delta *= p.scale;
  g.gamma *= p.scale;
  return g;
}

/// H(t,s) = E_Q(h(S_T) | S_t = s); equals payoff_eval at t = T.
inline double price(const Payoff& p, const MarketModel& model, double t, double s,
                    const PriceOptions& opts = {}) {
  detail::check_time(model, t, s, "price");
  if (t == model.T) return payoff_eval(p, s);
  if (p.kind == PayoffKind::power_holder && !model.degenerate()) {
    const double v = model.sigma * model.sigma * std::max(model.T - t, kMinRemainingTime);
    return p.scale * detail::holder_moments(p, s, v, opts.kink_tol, 1).m0;
  }
  return greeks(p, model, t, s, opts).price;
}

namespace detail {
inline void reject_maturity(const MarketModel& model, double t, double s, const char* who) {
  check_time(model, t, s, who);
  require(t < model.T, std::string(who) + ": Greeks are only defined strictly before maturity");
}
}  // namespace detail

inline double delta(const Payoff& p, const MarketModel& model, double t, double s,
                    const PriceOptions& opts = {}) {
  detail::reject_maturity(model, t, s, "delta");
  if (p.kind == PayoffKind::affine) return p.scale * p.c1;
  if (!model.degenerate() && (p.kind == PayoffKind::call || p.kind == PayoffKind::put ||
                              p.kind == PayoffKind::binary)) {
    const double v = model.sigma * model.sigma * std::max(model.T - t, kMinRemainingTime);
    const double sv = std::sqrt(v), d1 = (std::log(s / p.strike) + 0.5 * v) / sv;
    if (p.kind == PayoffKind::call) return p.scale * norm_cdf(d1);
    if (p.kind == PayoffKind::put) return -p.scale * norm_cdf(-d1);
    return p.scale * norm_pdf(d1 - sv) / (s * sv);
  }
  if (p.kind == PayoffKind::power_holder && !model.degenerate()) {
    const double v = model.sigma * model.sigma * std::max(model.T - t, kMinRemainingTime);
    const auto m = detail::holder_moments(p, s, v, opts.kink_tol, 2);
    return p.scale * m.m1 / (std::sqrt(v) * s);
  }
  return greeks(p, model, t, s, opts).delta;
}

inline double gamma(const Payoff& p, const MarketModel& model, double t, double s,
                    const PriceOptions& opts = {}) {
  detail::reject_maturity(model, t, s, "gamma");
  return greeks(p, model, t, s, opts).gamma;
}

/// A payoff bound to a model and quadrature configuration.
struct PriceSurface {
  Payoff payoff;
  MarketModel model;
  PriceOptions options;

  double price(double t, double s) const { return fracsmooth::price(payoff, model, t, s, options); }
  double delta(double t, double s) const { return fracsmooth::delta(payoff, model, t, s, options); }
  double gamma(double t, double s) const { return fracsmooth::gamma(payoff, model, t, s, options); }
  Greeks greeks(double t, double s) const {
    detail::reject_maturity(model, t, s, "greeks");
    return fracsmooth::greeks(payoff, model, t, s, options);
  }
};

}  // namespace fracsmooth
