#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "errors.hpp"
#include "parallel.hpp"
#include "random.hpp"

namespace fracsmooth {

enum class Measure { historical, martingale };

inline std::string to_string(Measure m) {
  return m == Measure::historical ? "historical" : "martingale";
}

/// Volatilities below this are simulated and priced as exactly zero.
inline constexpr double kDegenerateSigma = 1e-150;

/// Geometric Brownian motion dS = S (mu dt + sigma dW) under the historical
/// measure; prices always use the zero-drift martingale dynamics.
struct MarketModel {
  double s0 = 1.0;
  double sigma = 1.0;
  double mu = 0.0;
  double T = 1.0;

  void validate() const {
    detail::require(std::isfinite(s0) && s0 > 0, "model: s0 must be finite and > 0");
    detail::require(std::isfinite(sigma) && sigma > 0, "model: sigma must be finite and > 0");
    detail::require(std::isfinite(mu), "model: mu must be finite");
    detail::require(std::isfinite(T) && T > 0, "model: T must be finite and > 0");
  }

  bool degenerate() const { return sigma < kDegenerateSigma; }

  double drift(Measure m) const { return m == Measure::historical ? mu : 0.0; }

  /// Variance of ln S over [t, T].
  double remaining_variance(double t) const {
    return degenerate() ? 0.0 : sigma * sigma * (T - t);
  }
};

/// Row-major (path-major) matrix of simulated values on a common time grid.
struct PathBatch {
  std::vector<double> times;
  std::size_t paths = 0;
  std::vector<double> values;
  std::uint64_t seed = 0;
  Measure measure = Measure::martingale;
  /// true when values hold the state X of an Euler scheme instead of prices
  bool state_paths = false;

  std::size_t steps() const { return times.size(); }
  double at(std::size_t path, std::size_t j) const { return values[path * times.size() + j]; }
  std::span<const double> path(std::size_t i) const {
    return {values.data() + i * times.size(), times.size()};
  }
};

namespace detail {

inline void check_grid(std::span<const double> times, double T, const char* who) {
  require(!times.empty(), std::string(who) + ": empty time grid");
  for (std::size_t j = 0; j < times.size(); ++j) {
    require(std::isfinite(times[j]), std::string(who) + ": non-finite grid time");
    require(times[j] >= 0.0 && times[j] <= T, std::string(who) + ": grid time outside [0,T]");
    if (j > 0) require(times[j] > times[j - 1], std::string(who) + ": grid not strictly increasing");
  }
}

}  // namespace detail

/// Brownian increment feeding grid point j of a path.
template <class Normal = CounterNormal>
double brownian_increment(std::uint64_t seed, std::uint64_t path, std::uint64_t j, double dt,
                          const Normal& normal = {}) {
  return dt > 0.0 ? std::sqrt(dt) * normal(seed, path, j) : 0.0;
}

/// Fills out[j] = S_{times[j]} for one path using exact lognormal increments.
/// The grid is assumed validated.
inline void fill_gbm_path(const MarketModel& model, std::span<const double> times,
                          std::uint64_t seed, std::uint64_t path, Measure measure,
                          std::span<double> out) {
  const double drift = model.drift(measure);
  if (model.degenerate()) {
    for (std::size_t j = 0; j < times.size(); ++j) out[j] = model.s0 * std::exp(drift * times[j]);
    return;
  }
  const double compensator = drift - 0.5 * model.sigma * model.sigma;
  double w = 0.0, prev = 0.0;
  for (std::size_t j = 0; j < times.size(); ++j) {
    w += brownian_increment(seed, path, j, times[j] - prev);
    prev = times[j];
    out[j] = model.s0 * std::exp(model.sigma * w + compensator * times[j]);
  }
}

/// Simulates m GBM paths on the grid. Path i depends only on (seed, i, grid),
/// never on m or on the worker count.
inline PathBatch simulate_gbm(const MarketModel& model, std::span<const double> times,
                              std::size_t m, std::uint64_t seed, Measure measure) {
  model.validate();
  detail::check_grid(times, model.T, "simulate_gbm");
  detail::require(m >= 1, "simulate_gbm: path count must be >= 1");
  PathBatch batch;
  batch.times.assign(times.begin(), times.end());
  batch.paths = m;
  batch.seed = seed;
  batch.measure = measure;
  batch.values.resize(m * times.size());
  parallel_for(m, [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i)
      fill_gbm_path(model, batch.times, seed, i,
                    measure, std::span<double>(batch.values).subspan(i * times.size(), times.size()));
  });
  return batch;
}

using Coefficient = std::function<double(double t, double x)>;

/// Euler–Maruyama scheme for dX = b(t,X) dt + sigma(t,X) dW, driven by the
/// same Brownian increments as simulate_gbm for an identical seed. The grid
/// starts at t = 0 implicitly; times[0] may be 0 or positive.
template <class Normal = CounterNormal>
PathBatch simulate_euler(const Coefficient& b, const Coefficient& sigma_fn, double x0,
                         std::span<const double> times, std::size_t m, std::uint64_t seed,
                         const Normal& normal = {}) {
  detail::require(std::isfinite(x0), "simulate_euler: x0 must be finite");
  detail::require(m >= 1, "simulate_euler: path count must be >= 1");
  detail::check_grid(times, times.empty() ? 0.0 : times.back(), "simulate_euler");
  PathBatch batch;
  batch.times.assign(times.begin(), times.end());
  batch.paths = m;
  batch.seed = seed;
  batch.state_paths = true;
  batch.values.resize(m * times.size());
  parallel_for(m, [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      double x = x0, prev = 0.0;
      for (std::size_t j = 0; j < times.size(); ++j) {
        const double dt = times[j] - prev;
        if (dt > 0.0) {
          const double drift = b(prev, x), diffusion = sigma_fn(prev, x);
          if (!std::isfinite(drift) || !std::isfinite(diffusion)) {
            std::ostringstream msg;
            msg << "simulate_euler: non-finite coefficient at t=" << prev << ", x=" << x
                << " on path " << i;
            throw ConvergenceError(msg.str());
          }
          x += drift * dt + diffusion * brownian_increment(seed, i, j, dt, normal);
        }
        prev = times[j];
        batch.values[i * times.size() + j] = x;
      }
    }
  });
  return batch;
}

}  // namespace fracsmooth
