#include <gtest/gtest.h>

#include <array>
#include <cmath>
#include <vector>

#include "fracsmooth/model.hpp"
#include "fracsmooth/payoffs.hpp"

using namespace fracsmooth;

namespace {

const MarketModel kGbm{};

// Reference values from tests/oracles/power_holder.py (40-digit mpmath).
struct HolderCase {
  double s, K, theta, v, price, delta, gamma;
};
constexpr std::array<HolderCase, 5> kHolderCases{{
    {1.0, 1.0, 0.25, 1.0, 0.28482583890541348, 0.37130437983624838, -0.080327317273463153},
    {1.3, 1.0, 0.25, 0.04, 0.64701720062764224, 0.94164303762787939, -2.3143006386799202},
    {0.8, 1.0, 0.25, 0.25, 0.17371085090161995, 0.61583795079345297, 0.62706475737610628},
    {1.0, 1.0, 0.7, 0.0001, 0.015896743871387775, 1.8078248750072276, 111.00482628997662},
    {2.0, 1.5, 0.4, 2.0, 0.42131940114086863, 0.21562960784607444, -0.030224160145849444},
}};

std::vector<Payoff> test_payoffs() {
  ChaosExpansion e;
  e.alpha = {0.3, -0.5, 0.25, 0.1, -0.05};
  return {Payoff::call(1.0), Payoff::put(1.1), Payoff::binary(0.9), Payoff::power_holder(1.0, 0.25),
          Payoff::affine(0.5, 2.0), Payoff::chaos_payoff(e, kGbm)};
}

}  // namespace

TEST(PayoffEval, Examples) {
  EXPECT_EQ(payoff_eval(Payoff::call(1.0), 1.5), 0.5);
  EXPECT_EQ(payoff_eval(Payoff::binary(1.0), 1.0), 1.0);
  EXPECT_EQ(payoff_eval(Payoff::binary(1.0), std::nextafter(1.0, 0.0)), 0.0);
  EXPECT_EQ(payoff_eval(Payoff::power_holder(1.0, 0.25), 2.0), 1.0);
  EXPECT_EQ(payoff_eval(Payoff::put(1.0), 0.25), 0.75);
  EXPECT_EQ(payoff_eval(Payoff::affine(1.0, -2.0), 3.0), -5.0);
  EXPECT_THROW(payoff_eval(Payoff::call(1.0), 0.0), InvalidArgument);
  EXPECT_THROW(payoff_eval(Payoff::call(1.0), -1.0), InvalidArgument);
}

TEST(PayoffValidate, RejectsBadParameters) {
  EXPECT_THROW(Payoff::call(0.0).validate(), InvalidArgument);
  EXPECT_THROW(Payoff::power_holder(1.0, 1.0).validate(), InvalidArgument);
  EXPECT_THROW(Payoff::power_holder(1.0, 0.0).validate(), InvalidArgument);
  EXPECT_THROW(Payoff::affine(NAN, 1.0).validate(), InvalidArgument);
  EXPECT_NO_THROW(Payoff::power_holder(1.0, 0.25).validate());
  EXPECT_EQ(parse_payoff_kind("power_holder"), PayoffKind::power_holder);
  EXPECT_FALSE(parse_payoff_kind("digital").has_value());
}

TEST(Price, CallClosedFormAtTheMoney) {
  // N(1/2) - N(-1/2), cross-checked by a 1e7-node trapezoid rule
  EXPECT_NEAR(price(Payoff::call(1.0), kGbm, 0.0, 1.0), 0.38292492254802624, 1e-15);
  EXPECT_NEAR(delta(Payoff::call(1.0), kGbm, 0.0, 1.0), 0.69146246127401312, 1e-15);
}

TEST(Price, CallDeltaMatchesFiniteDifference) {
  const auto p = Payoff::call(1.0);
  const double h = 1e-5;
  const double fd = (price(p, kGbm, 0.0, 1.0 + h) - price(p, kGbm, 0.0, 1.0 - h)) / (2 * h);
  EXPECT_NEAR(fd / delta(p, kGbm, 0.0, 1.0), 1.0, 1e-6);
}

TEST(Price, AffineIsMartingale) {
  const auto p = Payoff::affine(0.3, 1.7);
  for (double t : {0.0, 0.4, 0.999})
    for (double s : {0.2, 1.0, 5.0}) {
      EXPECT_DOUBLE_EQ(price(p, kGbm, t, s), 0.3 + 1.7 * s);
      EXPECT_EQ(delta(p, kGbm, t, s), 1.7);
      EXPECT_EQ(gamma(p, kGbm, t, s), 0.0);
    }
}

TEST(Price, BinaryInBrownianCoordinates) {
  // with w = ln s + t/2 the binary price is N((w - L)/sqrt(T-t)), L = ln K + T/2
  const double K = 1.3, L = std::log(K) + 0.5;
  for (double t : {0.0, 0.3, 0.9, 0.999})
    for (double s : {0.5, 1.0, 1.3, 2.0}) {
      const double w = std::log(s) + 0.5 * t, tau = 1.0 - t;
      const auto g = greeks(Payoff::binary(K), kGbm, t, s);
      EXPECT_NEAR(g.price, norm_cdf((w - L) / std::sqrt(tau)), 1e-15);
      const double grad = std::exp(-(w - L) * (w - L) / (2 * tau)) / std::sqrt(2 * M_PI * tau);
      EXPECT_NEAR(g.log_delta(s), grad, 1e-13 * (1 + grad));
    }
}

TEST(Price, HolderMatchesHighPrecisionOracle) {
  for (const auto& c : kHolderCases) {
    const MarketModel model{1.0, 1.0, 0.0, c.v};
    const auto p = Payoff::power_holder(c.K, c.theta);
    const auto g = greeks(p, model, 0.0, c.s);
    EXPECT_NEAR(g.price / c.price, 1.0, 1e-10) << c.s << " " << c.v;
    EXPECT_NEAR(g.delta / c.delta, 1.0, 1e-9) << c.s << " " << c.v;
    EXPECT_NEAR(g.gamma / c.gamma, 1.0, 1e-8) << c.s << " " << c.v;
    EXPECT_DOUBLE_EQ(price(p, model, 0.0, c.s), g.price);
    EXPECT_DOUBLE_EQ(delta(p, model, 0.0, c.s), g.delta);
  }
}

TEST(Price, ChaosPayoffMatchesMehler) {
  // E H_k(m + rho Z) = (1 - rho^2)^{k/2} H_k(m / sqrt(1 - rho^2))
  for (std::size_t k : {0u, 1u, 2u, 5u, 12u}) {
    ChaosExpansion e;
    e.alpha.assign(k + 1, 0.0);
    e.alpha[k] = 1.0;
    const auto p = Payoff::chaos_payoff(e, kGbm);
    for (double t : {0.1, 0.5, 0.9})
      for (double s : {0.6, 1.0, 1.8}) {
        const double v = 1.0 - t, rho2 = v;
        const double m = std::log(s) - 0.5 * v + 0.5;
        const double expected =
            std::pow(1 - rho2, 0.5 * double(k)) * hermite(k, m / std::sqrt(1 - rho2));
        EXPECT_NEAR(price(p, kGbm, t, s), expected, 1e-12) << k << " " << t << " " << s;
      }
  }
}

TEST(Price, DoublingCheckFlagsUnresolvedQuadrature) {
  ChaosExpansion e;
  e.alpha.assign(121, 0.0);
  e.alpha[120] = 1.0;
  PriceOptions opts;
  opts.gh_order = 20;
  opts.check_doubling = true;
  EXPECT_THROW(price(Payoff::chaos_payoff(e, kGbm), kGbm, 0.0, 1.0, opts), ConvergenceError);
  opts.gh_order = 201;
  EXPECT_NO_THROW(price(Payoff::chaos_payoff(e, kGbm), kGbm, 0.0, 1.0, opts));
}

TEST(Price, MaturityReturnsPayoffAndGreeksRejectIt) {
  for (const auto& p : test_payoffs()) {
    EXPECT_EQ(price(p, kGbm, 1.0, 1.2), payoff_eval(p, 1.2));
    EXPECT_THROW(delta(p, kGbm, 1.0, 1.2), InvalidArgument);
    EXPECT_THROW(gamma(p, kGbm, 1.0, 1.2), InvalidArgument);
  }
  EXPECT_THROW(price(Payoff::call(1.0), kGbm, 1.5, 1.0), InvalidArgument);
  EXPECT_THROW(price(Payoff::call(1.0), kGbm, 0.5, 0.0), InvalidArgument);
}

TEST(Greeks, MatchFiniteDifferencesForEveryKind) {
  for (const auto& p : test_payoffs())
    for (double t : {0.0, 0.5, 0.9})
      for (double s : {0.7, 1.0, 1.4}) {
        const double h1 = 1e-5 * s, h2 = 1e-3 * s;
        const double fd1 = (price(p, kGbm, t, s + h1) - price(p, kGbm, t, s - h1)) / (2 * h1);
        const double fd2 =
            (price(p, kGbm, t, s + h2) - 2 * price(p, kGbm, t, s) + price(p, kGbm, t, s - h2)) /
            (h2 * h2);
        const double d = delta(p, kGbm, t, s), g = gamma(p, kGbm, t, s);
        EXPECT_LT(std::abs(fd1 - d), 1e-5 * std::abs(d) + 1e-12) << to_string(p.kind) << t << s;
        EXPECT_LT(std::abs(fd2 - g), 1e-3 * std::abs(g) + 1e-8) << to_string(p.kind) << t << s;
      }
}

TEST(Greeks, ScaleIsExact) {
  for (const auto& p : test_payoffs()) {
    const auto q = p.scaled(2.0);
    const auto a = greeks(p, kGbm, 0.3, 1.1), b = greeks(q, kGbm, 0.3, 1.1);
    EXPECT_EQ(b.price, 2.0 * a.price);
    EXPECT_EQ(b.delta, 2.0 * a.delta);
    EXPECT_EQ(b.gamma, 2.0 * a.gamma);
  }
}

TEST(Pricing, MonteCarloMartingaleCheck) {
  const std::size_t m = 200000;
  const auto batch = simulate_gbm(kGbm, std::vector<double>{1.0}, m, 31337, Measure::martingale);
  for (const auto& p : test_payoffs()) {
    double sum = 0, sq = 0;
    for (std::size_t i = 0; i < m; ++i) {
      const double h = payoff_eval(p, batch.at(i, 0));
      sum += h;
      sq += h * h;
    }
    const double mean = sum / double(m);
    const double se = std::sqrt((sq / double(m) - mean * mean) / double(m - 1));
    EXPECT_NEAR(mean, price(p, kGbm, 0.0, 1.0), 3 * se) << to_string(p.kind);
  }
}

TEST(Pricing, ConvergesToPayoffNearMaturity) {
  for (const auto& p : test_payoffs())
    for (double s : {0.8, 1.25}) {
      double previous = INFINITY;
      for (double tau : {1e-2, 1e-4, 1e-6}) {
        const double err = std::abs(price(p, kGbm, 1.0 - tau, s) - payoff_eval(p, s));
        EXPECT_LE(err, previous) << to_string(p.kind) << " s=" << s << " tau=" << tau;
        previous = err;
      }
      EXPECT_LT(previous, 1e-2) << to_string(p.kind);
    }
}

TEST(Pricing, DegenerateModelUsesPayoff) {
  const MarketModel flat{1.0, 1e-300, 0.0, 1.0};
  EXPECT_EQ(price(Payoff::call(0.8), flat, 0.2, 1.0), 0.2 * 1.0 + 0.0 * 0.8 + (1.0 - 0.8) - 0.2);
  EXPECT_EQ(delta(Payoff::call(0.8), flat, 0.2, 1.0), 1.0);
  EXPECT_EQ(gamma(Payoff::binary(0.8), flat, 0.2, 1.0), 0.0);
}
