#pragma once

// Experiment drivers behind the fracsmooth subcommands. Each command resolves
// its parameters, computes, and writes CSV tables plus a JSON summary into an
// output directory. Outputs depend only on the configuration.

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include <fracsmooth.hpp>

#include "config.hpp"

namespace fracsmooth::cli {

using Json = nlohmann::ordered_json;

/// Writes files into one directory, each CSV prefixed with the config echo.
class OutputDir {
 public:
  OutputDir(std::filesystem::path dir, std::string command, const Config& cfg)
      : dir_(std::move(dir)), command_(std::move(command)), cfg_(cfg) {
    std::filesystem::create_directories(dir_);
  }

  template <class Writer>
  void csv(const std::string& name, Writer&& write) const {
    std::ofstream out(dir_ / name, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + (dir_ / name).string());
    out << "# fracsmooth " << kVersion << '\n' << "# command=" << command_ << '\n';
    for (const auto& [key, value] : cfg_.resolved()) out << "# " << key << '=' << value << '\n';
    write(out);
  }

  void summary(const Json& j) const {
    std::ofstream out(dir_ / (command_ + "_summary.json"), std::ios::binary);
    out << j.dump(2) << '\n';
  }

 private:
  std::filesystem::path dir_;
  std::string command_;
  const Config& cfg_;
};

inline MarketModel parse_model(Config& c) {
  auto positive = [](double v) { return v > 0; };
  MarketModel m;
  m.s0 = c.real("s0", 1.0, positive, "> 0");
  m.sigma = c.real("sigma", 1.0, positive, "> 0");
  m.mu = c.real("mu", 0.0);
  m.T = c.real("T", 1.0, positive, "> 0");
  return m;
}

inline Payoff parse_payoff(Config& c, const MarketModel& model) {
  const auto kind = *parse_payoff_kind(
      c.choice("payoff", "call", {"call", "put", "binary", "power_holder", "affine", "chaos"}));
  auto positive = [](double v) { return v > 0; };
  Payoff p;
  p.kind = kind;
  if (p.has_strike()) p.strike = c.real("strike", 1.0, positive, "> 0");
  if (kind == PayoffKind::power_holder)
    p.holder_theta = c.real("holder_theta", 0.25, [](double v) { return v > 0 && v < 1; }, "in (0,1)");
  if (kind == PayoffKind::affine) {
    p.c0 = c.real("c0", 0.0);
    p.c1 = c.real("c1", 1.0);
  }
  if (kind == PayoffKind::chaos) {
    ChaosExpansion e;
    e.alpha = c.reals("alpha", {0.0, 1.0});
    p = Payoff::chaos_payoff(std::move(e), model);
  }
  p.scale = c.real("scale", 1.0);
  return p;
}

inline Measure parse_measure(Config& c) {
  return c.choice("measure", "historical", {"historical", "martingale"}) == "historical"
             ? Measure::historical
             : Measure::martingale;
}

inline double parse_net_theta(Config& c, double fallback) {
  return c.real("theta", fallback, [](double v) { return v > 0 && v <= 1; }, "in (0,1]");
}

inline std::uint64_t parse_seed(Config& c) { return c.integer("seed", 20240601); }

inline std::vector<std::size_t> geometric_counts(std::size_t lo, std::size_t hi) {
  std::vector<std::size_t> out;
  for (std::size_t n = lo; n <= hi; n *= 2) out.push_back(n);
  return out;
}

inline Json payoff_json(const Payoff& p) {
  Json j;
  j["kind"] = to_string(p.kind);
  if (p.has_strike()) j["strike"] = p.strike;
  if (p.kind == PayoffKind::power_holder) j["holder_theta"] = p.holder_theta;
  if (p.kind == PayoffKind::affine) {
    j["c0"] = p.c0;
    j["c1"] = p.c1;
  }
  if (p.scale != 1.0) j["scale"] = p.scale;
  return j;
}

inline Json cmd_price(Config& c, const std::filesystem::path& out) {
  const auto model = parse_model(c);
  const auto p = parse_payoff(c, model);
  const double T = model.T;
  const auto t_list =
      c.reals("t_list", {0.0, 0.5 * T, 0.9 * T}, [T](double t) { return t >= 0 && t < T; }, "in [0,T)");
  auto positive = [](double v) { return v > 0; };
  const double s_min = c.real("s_min", 0.5 * model.s0, positive, "> 0");
  const double s_max = c.real("s_max", 1.5 * model.s0, positive, "> 0");
  const auto s_points = c.integer("s_points", 11, 1, 100000);
  if (s_max < s_min) throw ConfigError("s_max", "s_max must be >= s_min");
  c.ignore("seed");
  c.reject_unused();
  p.validate();

  std::vector<double> s_grid;
  for (std::uint64_t i = 0; i < s_points; ++i)
    s_grid.push_back(s_points == 1 ? s_min
                                   : s_min + (s_max - s_min) * double(i) / double(s_points - 1));
  std::vector<Greeks> table(t_list.size() * s_grid.size());
  parallel_for(table.size(), [&](std::size_t begin, std::size_t end) {
    for (std::size_t k = begin; k < end; ++k)
      table[k] = greeks(p, model, t_list[k / s_grid.size()], s_grid[k % s_grid.size()]);
  });
  OutputDir dir(out, "price", c);
  dir.csv("price.csv", [&](std::ostream& o) {
    o << "t,s,price,delta,gamma\n";
    for (std::size_t k = 0; k < table.size(); ++k)
      write_csv_row(o, {t_list[k / s_grid.size()], s_grid[k % s_grid.size()], table[k].price,
                        table[k].delta, table[k].gamma});
  });
  Json j;
  j["command"] = "price";
  j["payoff"] = payoff_json(p);
  j["rows"] = table.size();
  j["price_at_s0"] = price(p, model, 0.0, model.s0);
  dir.summary(j);
  return j;
}

inline Json cmd_hedge_sweep(Config& c, const std::filesystem::path& out) {
  const auto model = parse_model(c);
  const auto p = parse_payoff(c, model);
  const double theta = parse_net_theta(c, 1.0);
  const auto n_list = c.counts("n_list", geometric_counts(8, 512));
  const auto m = c.integer("m", 100000, 2);
  const auto seed = parse_seed(c);
  const auto measure = parse_measure(c);
  SweepOptions opts;
  opts.drop_smallest = c.flag("drop_smallest", true);
  opts.max_path_factor = c.real("max_path_factor", 4.0, [](double v) { return v >= 1; }, ">= 1");
  c.reject_unused();

  const auto result = sweep(p, model, theta, n_list, m, seed, measure, opts);
  OutputDir dir(out, "hedge-sweep", c);
  dir.csv("sweep.csv", [&](std::ostream& o) { write_sweep_csv(o, result.points); });
  const auto& f = result.fit;
  Json j;
  j["command"] = "hedge-sweep";
  j["payoff"] = payoff_json(p);
  j["theta"] = theta;
  j["slope"] = f.slope;
  j["slope_lo"] = f.slope_lo;
  j["slope_hi"] = f.slope_hi;
  j["r2"] = f.r_squared;
  j["intercept"] = f.intercept;
  j["slope_se"] = f.slope_se;
  j["reduced_chi2"] = f.reduced_chi_squared;
  j["fitted_points"] = f.pairs.size();
  dir.summary(j);
  return j;
}

inline Json cmd_smoothness(Config& c, const std::filesystem::path& out) {
  const auto model = parse_model(c);
  const auto p = parse_payoff(c, model);
  const auto levels = c.integer("levels", 20, 8, 60);
  const auto theta_list =
      c.reals("theta_list", {0.3, 0.5, 0.7, 0.9}, [](double v) { return v > 0 && v < 1; }, "in (0,1)");
  const bool integrals = c.flag("integral_verdicts", true);
  const auto profile_levels = c.integer("profile_levels", 24, 4, 60);
  const double tol = c.real("exponent_tol", 0.08, [](double v) { return v > 0; }, "> 0");
  c.ignore("seed");
  c.reject_unused();

  const auto grid = default_t_grid(model.T, int(levels));
  const auto report = smoothness_report(p, model, grid);
  const auto est = estimate_theta_sup(report.decay);
  const auto g = growth_exponents(report);
  std::optional<ShellProfile> prof;
  if (integrals) prof = shell_profile(p, model, profile_levels);

  OutputDir dir(out, "smoothness", c);
  dir.csv("smoothness.csv", [&](std::ostream& o) { write_smoothness_csv(o, report); });
  Json j;
  j["command"] = "smoothness";
  j["payoff"] = payoff_json(p);
  j["theta_hat"] = est.theta;
  j["theta_raw"] = est.raw;
  j["exponents"] = {{"decay_sq", g.decay_sq.exponent},
                    {"grad_sq", g.grad_sq.exponent},
                    {"hess_sq", g.hess_sq.exponent}};
  j["implied_theta"] = {{"decay", g.theta_decay}, {"grad", g.theta_grad}, {"hess", g.theta_hess}};
  Json cells = Json::array();
  for (double theta : theta_list) {
    Json cell;
    cell["theta"] = theta;
    cell["growth"] = {to_string(GrowthExponents::verdict(g.theta_decay, theta, tol)),
                      to_string(GrowthExponents::verdict(g.theta_grad, theta, tol)),
                      to_string(GrowthExponents::verdict(g.theta_hess, theta, tol))};
    cell["growth_agree"] = g.agree(theta, tol);
    if (prof) {
      const auto v = integral_verdicts(*prof, theta);
      cell["integrals_finite"] = {v.decay.finite, v.grad.finite, v.hess.finite};
      cell["integrals_agree"] = v.agree();
    }
    cells.push_back(cell);
  }
  j["verdicts"] = cells;
  if (!report.decay.warnings.empty()) j["warnings"] = report.decay.warnings;
  dir.summary(j);
  return j;
}

inline CoefficientSource parse_chaos_source(Config& c, const MarketModel& model) {
  const auto function = c.choice("function", "payoff", {"payoff", "indicator"});
  if (function == "indicator") return indicator_source(c.real("threshold", 0.0));
  return payoff_chaos_source(parse_payoff(c, model), model);
}

inline Json cmd_chaos(Config& c, const std::filesystem::path& out) {
  const auto model = parse_model(c);
  const auto src = parse_chaos_source(c, model);
  const auto K = c.integer("K", 256, 1, std::size_t{1} << 24);
  const auto theta_list =
      c.reals("theta_list", {0.5, 0.7}, [](double v) { return v > 0 && v < 1; }, "in (0,1)");
  const auto levels = c.integer("levels", 20, 20, 40);
  const auto d12_lo = c.integer("d12_lo", 5, 1, 30);
  const auto d12_hi = c.integer("d12_hi", 12, d12_lo + 2, 30);
  SeriesOptions series;
  series.initial_order = c.integer("initial_order", 256, 8);
  series.max_order = c.integer("max_order", std::size_t{1} << 27, series.initial_order);
  c.ignore("seed");
  c.reject_unused();

  const auto grid = besov_t_grid(int(levels));
  const auto decay = decay_from_chaos(src, grid, series);
  std::vector<BesovCurve> curves;
  for (double theta : theta_list) curves.push_back(besov_criterion(src, theta, grid, series));
  const bool infinite = !src.length || *src.length > (std::size_t{1} << d12_hi);
  std::optional<D12Divergence> d12;
  if (infinite) d12 = d12_divergence(src, int(d12_lo), int(d12_hi));

  OutputDir dir(out, "chaos", c);
  dir.csv("chaos_coefficients.csv",
          [&](std::ostream& o) { write_coefficients_csv(o, take_coefficients(src, K)); });
  dir.csv("chaos_besov.csv", [&](std::ostream& o) { write_besov_csv(o, curves, decay); });
  Json j;
  j["command"] = "chaos";
  j["source"] = src.name;
  j["variance"] = decay.front() * decay.front();
  if (d12) {
    j["d12"] = {{"orders", d12->orders},
                {"partial_sums", d12->partial_sums},
                {"increments", d12->increments},
                {"divergent", d12->divergent}};
  }
  Json verdicts = Json::array();
  const auto half = std::size_t(std::find(grid.begin(), grid.end(), 0.5) - grid.begin());
  for (const auto& cv : curves)
    verdicts.push_back({{"theta", cv.theta},
                        {"verdict", to_string(cv.verdict)},
                        {"phi_end_over_phi_half", cv.phi.back() / cv.phi[half]}});
  j["besov"] = verdicts;
  dir.summary(j);
  return j;
}

inline Json cmd_weaklimit(Config& c, const std::filesystem::path& out) {
  const auto model = parse_model(c);
  const auto p = parse_payoff(c, model);
  const double theta = parse_net_theta(c, 1.0);
  const auto n = c.integer("n", 256, 1);
  const auto m = c.integer("m", 20000, 2);
  const auto seed = parse_seed(c);
  const auto measure = parse_measure(c);
  ClockOptions clock_opts;
  clock_opts.measure = measure;
  clock_opts.levels = int(c.integer("clock_levels", 24, 2, 50));
  clock_opts.time_order = c.integer("time_order", 4, 1, 64);
  clock_opts.panels = c.integer("panels", 4, 1, 1024);
  const double lp_p = c.real("lp_p", 2.0, [](double v) { return v >= 2; }, ">= 2");
  const double lp_theta = c.real("lp_theta", theta, [](double v) { return v > 0 && v <= 1; }, "in (0,1]");
  const auto lp_levels = c.integer("lp_levels", 10, 2, 40);
  const auto lp_m = c.integer("lp_m", 2000, 0);
  LpOptions lp_opts;
  lp_opts.measure = measure;
  lp_opts.batches = c.integer("lp_batches", 10, 2);
  c.reject_unused();
  if (std::abs(model.T - 1.0) > 1e-12) throw ConfigError("T", "weaklimit requires T = 1");

  const auto errors = tracking_error_terminal(p, model, make_theta_net(n, theta, model.T), m,
                                              derive_seed(seed, 1), measure);
  std::vector<double> scaled;
  for (double e : errors.terminal_errors) scaled.push_back(std::sqrt(double(n)) * e);
  const auto clock = clock_A(p, model, theta, m, derive_seed(seed, 2), clock_opts);
  const auto mixed = mixed_normal_sample(clock, derive_seed(seed, 3));
  const double ks = ks_distance(scaled, mixed);
  const auto mixed_moments = sample_moments(mixed);
  // sample variance of sqrt(A) xi against mean(A): the difference has the
  // per-path terms A (xi^2 - 1)
  std::vector<double> diff;
  for (std::size_t i = 0; i < mixed.size(); ++i) diff.push_back(mixed[i] * mixed[i] - clock.A_values[i]);
  const auto dm = sample_moments(diff);
  const double band = 3.0 * std::sqrt(dm.variance / double(diff.size()));

  std::optional<LpCurve> lp;
  if (lp_m > 0) {
    std::vector<double> t_grid;
    for (std::uint64_t k = 0; k <= lp_levels; ++k) t_grid.push_back(1.0 - std::ldexp(1.0, -int(k)));
    lp = lp_bound_curve(p, model, lp_theta, lp_p, t_grid, lp_m, derive_seed(seed, 4), lp_opts);
  }

  OutputDir dir(out, "weaklimit", c);
  dir.csv("clock.csv", [&](std::ostream& o) { write_clock_csv(o, clock); });
  dir.csv("weaklimit_samples.csv", [&](std::ostream& o) {
    write_distribution_csv(o, {{"scaled_error", scaled}, {"mixed_normal", mixed}});
  });
  if (lp) dir.csv("lp_curve.csv", [&](std::ostream& o) { write_lp_curve_csv(o, *lp); });
  Json j;
  j["command"] = "weaklimit";
  j["payoff"] = payoff_json(p);
  j["theta"] = theta;
  j["n"] = n;
  j["ks"] = ks;
  j["mean_A"] = clock.mean();
  j["mixed_variance"] = mixed_moments.variance;
  j["mixed_kurtosis"] = mixed_moments.kurtosis;
  j["variance_band"] = band;
  j["variance_within_band"] = std::abs(mixed_moments.variance - clock.mean()) <= band;
  j["flagged_fraction"] = clock.flagged_fraction();
  if (lp) {
    j["lp"] = {{"theta", lp->theta},
               {"p", lp->p_norm},
               {"verdict", to_string(lp->verdict)},
               {"increment_rate", lp->increment_rate},
               {"max", *std::max_element(lp->norm.begin(), lp->norm.end())},
               {"warnings", lp->warnings}};
  }
  dir.summary(j);
  return j;
}

inline Json cmd_zreg(Config& c, const std::filesystem::path& out) {
  const auto model = parse_model(c);
  const auto p = parse_payoff(c, model);
  const double theta = parse_net_theta(c, 0.4);
  const auto n_list = c.counts("n_list", geometric_counts(8, 256));
  ZRegOptions opts;
  opts.t_quad_order = c.integer("t_quad_order", 8, 1, 64);
  opts.grading_levels = c.integer("grading_levels", 30, 0, 60);
  opts.inner_order = c.integer("inner_order", 48, 4, 400);
  const bool isometry = c.flag("isometry", false);
  c.ignore("seed");
  c.reject_unused();

  std::vector<double> z, iso;
  for (std::size_t n : n_list) {
    const auto net = make_theta_net(n, theta, model.T);
    z.push_back(z_regularity(p, model, net, opts));
    if (isometry) iso.push_back(isometry_error_sq(p, model, net, opts));
  }
  OutputDir dir(out, "zreg", c);
  dir.csv("zreg.csv", [&](std::ostream& o) {
    o << (isometry ? "n,theta,zreg,n_zreg,isometry,n_isometry\n" : "n,theta,zreg,n_zreg\n");
    for (std::size_t k = 0; k < n_list.size(); ++k) {
      const double nd = double(n_list[k]);
      if (isometry)
        write_csv_row(o, {n_list[k], theta, z[k], nd * z[k], iso[k], nd * iso[k]});
      else
        write_csv_row(o, {n_list[k], theta, z[k], nd * z[k]});
    }
  });
  Json j;
  j["command"] = "zreg";
  j["payoff"] = payoff_json(p);
  j["theta"] = theta;
  std::vector<double> scaled;
  for (std::size_t k = 0; k < n_list.size(); ++k) scaled.push_back(double(n_list[k]) * z[k]);
  j["n_zreg"] = scaled;
  if (scaled.size() >= 3) {
    const auto [lo, hi] = std::minmax_element(scaled.end() - 3, scaled.end());
    j["last3_max_over_min"] = *hi / *lo;
  }
  dir.summary(j);
  return j;
}

using CommandFn = Json (*)(Config&, const std::filesystem::path&);

inline const std::map<std::string, CommandFn>& commands() {
  static const std::map<std::string, CommandFn> table{
      {"price", cmd_price},         {"hedge-sweep", cmd_hedge_sweep}, {"smoothness", cmd_smoothness},
      {"chaos", cmd_chaos},         {"weaklimit", cmd_weaklimit},     {"zreg", cmd_zreg}};
  return table;
}

}  // namespace fracsmooth::cli
