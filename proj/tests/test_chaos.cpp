#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <sstream>
#include <vector>

#include "fracsmooth/chaos.hpp"
#include "fracsmooth/normal.hpp"
#include "fracsmooth/random.hpp"
#include "fracsmooth/smoothness.hpp"

using namespace fracsmooth;

namespace {

const MarketModel kGbm{};

/// For 1{x >= 0}: sum_{k>=1} alpha_k^2 t^k = P(X >= 0, Y >= 0) - 1/4 = asin(t) / (2 pi)
/// for standard normals with correlation t.
double indicator_decay(double t) { return std::sqrt(0.25 - std::asin(t) / (2.0 * std::numbers::pi)); }

double indicator_phi(double theta, double t) {
  return std::pow(1.0 - t, 1.0 - theta) / (2.0 * std::numbers::pi * std::sqrt(1.0 - t * t));
}

}  // namespace

TEST(Project, Polynomials) {
  const auto x = project([](double v) { return v; }, 8);
  const auto x2 = project([](double v) { return v * v; }, 8);
  for (std::size_t k = 0; k <= 8; ++k) {
    EXPECT_NEAR(x.alpha[k], k == 1 ? 1.0 : 0.0, 1e-13);
    EXPECT_NEAR(x2.alpha[k], k == 0 ? 1.0 : k == 2 ? std::sqrt(2.0) : 0.0, 1e-13);
  }
  EXPECT_LT(x.tail_l2, 1e-6);
}

TEST(Project, IndicatorMatchesClosedForm) {
  const double a = 0.3;
  const auto exact = take_coefficients(indicator_source(a), 64);
  ProjectOptions split;
  split.breakpoints = {a};
  const auto sharp = project([a](double v) { return v >= a ? 1.0 : 0.0; }, 64, split);
  const auto plain = project([a](double v) { return v >= a ? 1.0 : 0.0; }, 64);
  EXPECT_NEAR(exact[0], norm_cdf(-a), 1e-15);
  for (std::size_t k = 0; k <= 64; ++k) {
    EXPECT_NEAR(sharp.alpha[k], exact[k], 1e-11) << k;
    // without the breakpoint the jump costs up to one node weight (~0.07 phi(a))
    EXPECT_NEAR(plain.alpha[k], exact[k], 0.015) << k;
  }
}

TEST(Project, CallMatchesClosedFormRecurrence) {
  const double s0 = 1.2, K = 1.0, w = 0.8;
  const double a = (std::log(K / s0) + 0.5 * w * w) / w;
  ProjectOptions split;
  split.breakpoints = {a};
  const auto e = project(
      [&](double x) { return std::max(s0 * std::exp(w * x - 0.5 * w * w) - K, 0.0); }, 128, split);
  const auto exact = take_coefficients(call_source(s0, K, w), 128);
  for (std::size_t k = 0; k <= 128; ++k) EXPECT_NEAR(e.alpha[k], exact[k], 1e-11) << k;
}

TEST(Project, ParsevalIdentity) {
  auto g = [](double x) { return std::sin(x); };
  const auto e = project(g, 64);
  double sum = 0.0;
  for (double a : e.alpha) sum += a * a;
  const double exact = 0.5 * (1.0 - std::exp(-2.0));
  EXPECT_NEAR(gaussian_norm_sq(g, 64), exact, 1e-13);
  EXPECT_NEAR(sum + e.tail_l2 * e.tail_l2, exact, 1e-12);
  EXPECT_LT(e.tail_l2, 1e-8);
}

TEST(Project, RejectsBadInputs) {
  ProjectOptions small;
  small.quad_order = 16;
  EXPECT_THROW(project([](double x) { return x; }, 8, small), InvalidArgument);
  EXPECT_THROW(project([](double x) { return 1.0 / (x - x); }, 4), InvalidArgument);
}

TEST(D12, NormsOfSimpleFunctions) {
  const auto x = d12_norm(project([](double v) { return v; }, 6));
  EXPECT_NEAR(x.norm, std::sqrt(2.0), 1e-12);
  EXPECT_FALSE(x.tail_warning);
  EXPECT_NEAR(d12_norm(project([](double) { return -2.5; }, 6)).norm, 2.5, 1e-12);
}

TEST(D12, IndicatorDivergesCallConverges) {
  const auto ind = d12_divergence(indicator_source(0.0));
  EXPECT_TRUE(ind.divergent);
  for (std::size_t i = 1; i < ind.partial_sums.size(); ++i)
    EXPECT_GT(ind.partial_sums[i], ind.partial_sums[i - 1]);
  EXPECT_FALSE(d12_divergence(call_source(1.0, 1.0, 1.0)).divergent);
  EXPECT_THROW(d12_divergence(expansion_source(project([](double v) { return v; }, 4))),
               InvalidArgument);
}

TEST(Besov, IndicatorMatchesArcsineDerivative) {
  const auto grid = besov_t_grid();
  const auto src = indicator_source(0.0);
  for (double theta : {0.3, 0.5, 0.7}) {
    const auto c = besov_criterion(src, theta, grid);
    for (std::size_t i = 0; i < grid.size(); ++i)
      EXPECT_NEAR(c.phi[i], indicator_phi(theta, grid[i]), 1e-7 * indicator_phi(theta, grid[i]));
  }
}

TEST(Besov, IndicatorVerdicts) {
  const auto grid = besov_t_grid();
  const auto src = indicator_source(0.0);
  EXPECT_EQ(besov_criterion(src, 0.5, grid).verdict, Boundedness::bounded);
  const auto c = besov_criterion(src, 0.7, grid);
  EXPECT_EQ(c.verdict, Boundedness::unbounded);
  EXPECT_GT(c.phi.back() / c.phi[1], 10.0);
}

TEST(Besov, LinearFunctionIsBoundedForEveryTheta) {
  const auto grid = besov_t_grid();
  const auto e = project([](double v) { return 3.0 * v; }, 4);
  for (double theta : {0.1, 0.5, 0.99}) {
    const auto c = besov_criterion(e, theta, grid);
    EXPECT_EQ(c.verdict, Boundedness::bounded);
    for (std::size_t i = 0; i < grid.size(); ++i)
      EXPECT_NEAR(c.phi[i], 9.0 * std::pow(1.0 - grid[i], 1.0 - theta), 1e-10);
  }
}

TEST(Besov, Preconditions) {
  const auto src = indicator_source(0.0);
  EXPECT_THROW(besov_criterion(src, 0.5, besov_t_grid(10)), InvalidArgument);
  EXPECT_THROW(besov_criterion(src, 1.0, besov_t_grid()), InvalidArgument);
  SeriesOptions capped;
  capped.max_order = 512;
  EXPECT_THROW(besov_criterion(src, 0.5, besov_t_grid(), capped), ConvergenceError);
}

TEST(DecayFromChaos, IndicatorClosedForm) {
  const auto grid = besov_t_grid();
  const auto d = decay_from_chaos(indicator_source(0.0), grid);
  for (std::size_t i = 0; i < grid.size(); ++i)
    EXPECT_NEAR(d[i], indicator_decay(grid[i]), 1e-8 * indicator_decay(grid[i]));
  const std::vector<double> half{0.5};
  EXPECT_NEAR(decay_from_chaos(indicator_source(0.0), half)[0], std::sqrt(1.0 / 6.0), 1e-10);
}

TEST(DecayFromChaos, IndicatorMonteCarloRegression) {
  // ||1{W_1 >= 0} - N(W_{1/2} / sqrt(1/2))||^2 sampled directly
  const std::size_t m = 10'000'000;
  double sum = 0.0, sum_sq = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    const double w_half = std::sqrt(0.5) * CounterRng::normal(2024, i, 0);
    const double w_one = w_half + std::sqrt(0.5) * CounterRng::normal(2024, i, 1);
    const double d = (w_one >= 0.0 ? 1.0 : 0.0) - norm_cdf(w_half / std::sqrt(0.5));
    sum += d * d;
    sum_sq += d * d * d * d;
  }
  const double mean = sum / double(m);
  const double se = std::sqrt((sum_sq / double(m) - mean * mean) / double(m));
  EXPECT_NEAR(mean, 1.0 / 6.0, 3.0 * se);
}

TEST(DecayFromChaos, FiniteExpansionEndpoints) {
  const auto e = project([](double v) { return v * v + v; }, 6);
  // Var = 1 + 2
  EXPECT_NEAR(decay_from_chaos(e, 0.0), std::sqrt(3.0), 1e-12);
  // alpha_1^2 (1-t) + alpha_2^2 (1-t^2)
  EXPECT_NEAR(decay_from_chaos(e, 0.9), std::sqrt(0.1 + 2.0 * (1.0 - 0.81)), 1e-12);
  EXPECT_THROW(decay_from_chaos(e, 1.0), InvalidArgument);
}

TEST(DecayFromChaos, MatchesSmoothnessModule) {
  const auto grid = default_t_grid(1.0, 20);
  for (const Payoff& p : {Payoff::binary(1.0), Payoff::call(1.0), Payoff::binary(1.3).scaled(2.0)}) {
    const auto chaos = decay_from_chaos(payoff_chaos_source(p, kGbm), grid);
    const auto direct = conditional_l2_decay(p, kGbm, grid).D;
    for (std::size_t i = 0; i < grid.size(); ++i)
      EXPECT_NEAR(chaos[i], direct[i], 1e-3 * direct[i]) << to_string(p.kind) << " t=" << grid[i];
  }
}

TEST(DecayFromChaos, CriterionAgreesWithDecayExponent) {
  // bounded criterion <=> D(t) <= c (1-t)^{theta/2}, so the verdict flips at the
  // fitted smoothness index of the decay curve
  const auto grid = besov_t_grid();
  const auto src = indicator_source(0.4);
  DecayCurve curve;
  curve.t.assign(grid.begin(), grid.end());
  for (double t : grid) curve.T_minus_t.push_back(1.0 - t);
  curve.D = decay_from_chaos(src, grid);
  const double theta_hat = estimate_theta_sup(curve).theta;
  EXPECT_NEAR(theta_hat, 0.5, 0.05);
  for (double theta : {0.2, 0.35, 0.65, 0.8}) {
    const auto verdict = besov_criterion(src, theta, grid).verdict;
    EXPECT_EQ(verdict == Boundedness::bounded, theta < theta_hat) << theta;
  }
}

TEST(PayoffSource, ScalingAndUnsupportedKinds) {
  const auto base = payoff_chaos_source(Payoff::binary(1.0), kGbm);
  const auto scaled = payoff_chaos_source(Payoff::binary(1.0).scaled(-3.0), kGbm);
  const auto a = take_coefficients(base, 20), b = take_coefficients(scaled, 20);
  for (std::size_t k = 0; k < a.size(); ++k) EXPECT_DOUBLE_EQ(b[k], -3.0 * a[k]);
  EXPECT_DOUBLE_EQ(scaled.norm_sq, 9.0 * base.norm_sq);
  // binary at K = s0 = 1, sigma = 1: E g^2 = P(S_1 >= 1) = N(-1/2)
  EXPECT_NEAR(base.norm_sq, norm_cdf(-0.5), 1e-15);
  EXPECT_THROW(payoff_chaos_source(Payoff::put(1.0), kGbm), InvalidArgument);
}

TEST(PayoffSource, CallSecondMoment) {
  // E(S_1 - 1)_+^2 for s0 = K = sigma = 1
  const double exact = std::exp(1.0) * norm_cdf(1.5) - 2.0 * norm_cdf(0.5) + norm_cdf(-0.5);
  EXPECT_NEAR(call_source(1.0, 1.0, 1.0).norm_sq, exact, 1e-14);
  const auto alpha = take_coefficients(call_source(1.0, 1.0, 1.0), 1 << 16);
  double sum = 0.0;
  for (std::size_t k = alpha.size(); k-- > 0;) sum += alpha[k] * alpha[k];
  EXPECT_NEAR(sum, exact, 1e-6);
  EXPECT_LE(sum, exact);
}

TEST(ChaosCsv, Layout) {
  std::ostringstream coeffs;
  const std::vector<double> alpha{0.5, 0.25};
  write_coefficients_csv(coeffs, alpha);
  EXPECT_EQ(coeffs.str(), "k,alpha_k\n0,0.5\n1,0.25\n");
  BesovCurve c;
  c.theta = 0.5;
  c.t = {0.0, 0.5};
  c.phi = {1.0, 2.0};
  const std::vector<BesovCurve> curves{c};
  const std::vector<double> decay{0.75, 0.125};
  std::ostringstream besov;
  write_besov_csv(besov, curves, decay);
  EXPECT_EQ(besov.str(), "theta,t,phi_theta,decay\n0.5,0,1,0.75\n0.5,0.5,2,0.125\n");
}
