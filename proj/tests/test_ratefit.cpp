#include <gtest/gtest.h>

#include <cmath>
#include <sstream>
#include <vector>

#include "fracsmooth/random.hpp"
#include "fracsmooth/ratefit.hpp"
#include "fracsmooth/regression.hpp"

using namespace fracsmooth;

namespace {

const MarketModel kGbm{};

std::vector<RatePoint> synthetic(double c, double slope, std::vector<std::size_t> ns = {8, 16, 32, 64, 128}) {
  std::vector<RatePoint> out;
  for (std::size_t n : ns) out.push_back({n, c * std::pow(double(n), slope), 0.0, 0});
  return out;
}

}  // namespace

TEST(FitLine, ExactLineAndWeights) {
  const std::vector<double> x{0, 1, 2, 3}, y{1, 3, 5, 7};
  const auto f = fit_line(x, y);
  EXPECT_NEAR(f.slope, 2.0, 1e-14);
  EXPECT_NEAR(f.intercept, 1.0, 1e-14);
  EXPECT_NEAR(f.r_squared, 1.0, 1e-14);
  // an outlier with zero weight is ignored
  const std::vector<double> y2{1, 3, 5, 100}, w{1, 1, 1, 0};
  EXPECT_NEAR(fit_line(x, y2, w).slope, 2.0, 1e-14);
  EXPECT_THROW(fit_line(std::vector<double>{1, 1}, std::vector<double>{0, 1}), InvalidArgument);
}

TEST(FitRate, SyntheticPowerLaws) {
  const auto half = fit_rate(synthetic(3.0, -0.5));
  EXPECT_NEAR(half.slope, -0.5, 1e-12);
  EXPECT_NEAR(half.r_squared, 1.0, 1e-12);
  EXPECT_NEAR(half.intercept, std::log(3.0), 1e-12);
  EXPECT_NEAR(fit_rate(synthetic(0.7, -0.25)).slope, -0.25, 1e-12);
  const auto flat = fit_rate(synthetic(2.0, 0.0));
  EXPECT_NEAR(flat.slope, 0.0, 1e-12);
  EXPECT_LE(flat.slope_lo, flat.slope);
  EXPECT_GE(flat.slope_hi, flat.slope);
}

TEST(FitRate, Preconditions) {
  EXPECT_THROW(fit_rate(synthetic(1.0, -0.5, {8, 16, 32})), InvalidArgument);
  EXPECT_THROW(fit_rate(synthetic(1.0, -0.5, {8, 8, 16, 32})), InvalidArgument);
  EXPECT_THROW(fit_rate(synthetic(1.0, -0.5, {10, 12, 14, 16, 20})), InvalidArgument);
  auto zero = synthetic(1.0, -0.5);
  zero[2].error = 0.0;
  EXPECT_THROW(fit_rate(zero), ExactHedge);
  EXPECT_THROW(fit_rate(synthetic(0.0, -0.5)), ExactHedge);
  auto negative = synthetic(1.0, -0.5);
  negative[1].error = -0.1;
  EXPECT_THROW(fit_rate(negative), InvalidArgument);
  // one point with an error bar of zero next to noisy points has infinite weight
  auto mixed = synthetic(1.0, -0.5);
  for (auto& p : mixed) p.stderr = 0.01;
  mixed[0].stderr = 0.0;
  EXPECT_THROW(fit_rate(mixed), InvalidArgument);
}

TEST(FitRate, WeightedIntervalCoversTheTruth) {
  // log-normal noise with known relative standard errors
  int covered = 0;
  const int trials = 200;
  for (int trial = 0; trial < trials; ++trial) {
    std::vector<RatePoint> pts;
    for (std::size_t n : {8u, 16u, 32u, 64u, 128u, 256u}) {
      const double rel = 0.02 * std::sqrt(double(n) / 8.0);
      const double e = std::pow(double(n), -0.5) * std::exp(rel * CounterRng::normal(trial, n, 0));
      pts.push_back({n, e, rel * e, 1000});
    }
    const auto fit = fit_rate(pts);
    if (fit.slope_lo <= -0.5 && -0.5 <= fit.slope_hi) ++covered;
  }
  // nominal 95%; allow for the binomial spread of 200 trials
  EXPECT_GE(covered, 180);
}

TEST(FitRate, OverdispersionWidensTheInterval) {
  auto pts = synthetic(1.0, -0.5, {8, 16, 32, 64, 128, 256});
  for (std::size_t i = 0; i < pts.size(); ++i) {
    pts[i].error *= (i % 2 ? 1.05 : 0.95);
    pts[i].stderr = 1e-3 * pts[i].error;
  }
  const auto fit = fit_rate(pts);
  EXPECT_GT(fit.reduced_chi_squared, 1.0);
  const double naive = fit_line(
      [&] { std::vector<double> x; for (auto& p : pts) x.push_back(std::log(double(p.n))); return x; }(),
      [&] { std::vector<double> y; for (auto& p : pts) y.push_back(std::log(p.error)); return y; }(),
      [&] { std::vector<double> w; for (auto& p : pts) w.push_back(1e6); return w; }()).slope_se;
  EXPECT_NEAR(fit.slope_se, naive * std::sqrt(fit.reduced_chi_squared), 1e-12);
}

TEST(Sweep, PathCountsScaleWithN) {
  EXPECT_EQ(sweep_paths(1000, 8, 8, 4.0), 1000u);
  EXPECT_EQ(sweep_paths(1000, 32, 8, 4.0), 2000u);
  EXPECT_EQ(sweep_paths(1000, 128, 8, 4.0), 4000u);
  EXPECT_EQ(sweep_paths(1000, 512, 8, 4.0), 4000u);
}

TEST(Sweep, AffinePayoffIsAnExactHedge) {
  const std::vector<std::size_t> ns{4, 8, 16, 32, 64};
  EXPECT_THROW(sweep(Payoff::affine(1.0, 0.5), kGbm, 1.0, ns, 200, 1, Measure::martingale), ExactHedge);
}

TEST(Sweep, DropsTheSmallestNAndIsDeterministic) {
  const std::vector<std::size_t> ns{4, 8, 16, 32, 64};
  const auto a = sweep(Payoff::call(1.0), kGbm, 1.0, ns, 2000, 9, Measure::historical);
  const auto b = sweep(Payoff::call(1.0), kGbm, 1.0, ns, 2000, 9, Measure::historical);
  EXPECT_EQ(a.points.size(), 5u);
  EXPECT_EQ(a.fit.pairs.size(), 4u);
  EXPECT_EQ(a.fit.pairs.front().n, 8u);
  EXPECT_EQ(a.fit.slope, b.fit.slope);
  for (std::size_t i = 0; i < a.points.size(); ++i) {
    EXPECT_EQ(a.points[i].error, b.points[i].error);
    EXPECT_EQ(a.points[i].m, sweep_paths(2000, ns[i], 4, 4.0));
  }
  EXPECT_THROW(sweep(Payoff::call(1.0), kGbm, 1.0, std::vector<std::size_t>{8, 16, 32, 64}, 100, 1,
                     Measure::historical),
               InvalidArgument);
}

TEST(Sweep, SeedRobustness) {
  const std::vector<std::size_t> ns{8, 16, 32, 64, 128};
  const auto a = sweep(Payoff::call(1.0), kGbm, 1.0, ns, 5000, 1, Measure::historical);
  const auto b = sweep(Payoff::call(1.0), kGbm, 1.0, ns, 5000, 2, Measure::historical);
  EXPECT_LT(std::abs(a.fit.slope - b.fit.slope), a.fit.slope_hi - a.fit.slope_lo);
}

TEST(Sweep, NoSuperconvergence) {
  const std::vector<std::size_t> ns{8, 16, 32, 64, 128};
  struct Case {
    Payoff p;
    double theta;
  };
  for (const Case& c : {Case{Payoff::call(1.0), 1.0}, Case{Payoff::call(1.0), 0.5},
                        Case{Payoff::binary(1.0), 1.0}, Case{Payoff::binary(1.0), 0.4},
                        Case{Payoff::power_holder(1.0, 0.25), 1.0}}) {
    const auto s = sweep(c.p, kGbm, c.theta, ns, 5000, 3, Measure::historical);
    EXPECT_GE(s.fit.slope, -0.62) << to_string(c.p.kind) << " theta=" << c.theta;
  }
}

TEST(Sweep, ThetaNetDominatesEquidistantForBinary) {
  const std::vector<std::size_t> ns{8, 16, 32, 64, 128};
  const auto eq = sweep(Payoff::binary(1.0), kGbm, 1.0, ns, 10000, 4, Measure::historical);
  const auto net = sweep(Payoff::binary(1.0), kGbm, 0.4, ns, 10000, 4, Measure::historical);
  for (std::size_t i = 0; i < ns.size(); ++i) {
    const double joint = std::hypot(eq.points[i].stderr, net.points[i].stderr);
    EXPECT_LE(net.points[i].error, eq.points[i].error + 2.0 * joint) << "n=" << ns[i];
  }
}

TEST(SweepCsv, Layout) {
  const std::vector<RatePoint> pts{{8, 0.5, 0.01, 100}};
  std::ostringstream out;
  write_sweep_csv(out, pts);
  EXPECT_EQ(out.str(), "n,l2_error,stderr,m\n8,0.5,0.01,100\n");
}
