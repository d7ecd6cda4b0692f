#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdio>
#include <ostream>
#include <vector>

#include "errors.hpp"

namespace fracsmooth {

/// Rebalancing dates 0 = t_0 < ... < t_n = T concentrated toward maturity
/// for theta < 1: t_k = T (1 - (1 - k/n)^{1/theta}).
struct TimeNet {
  std::vector<double> nodes;
  std::size_t n = 0;
  double theta = 1.0;
  double T = 1.0;

  double operator[](std::size_t k) const { return nodes[k]; }
  double interval(std::size_t i) const { return nodes[i + 1] - nodes[i]; }
};

inline TimeNet make_theta_net(std::size_t n, double theta, double T) {
  detail::require(n >= 1, "make_theta_net: n must be >= 1");
  detail::require(theta > 0.0 && theta <= 1.0, "make_theta_net: theta must lie in (0,1]");
  detail::require(std::isfinite(T) && T > 0.0, "make_theta_net: T must be > 0");
  TimeNet net{std::vector<double>(n + 1), n, theta, T};
  const double nd = static_cast<double>(n);
  for (std::size_t k = 0; k < n; ++k) {
    const double remaining = static_cast<double>(n - k) / nd;
    net.nodes[k] = theta == 1.0 ? static_cast<double>(k) * T / nd
                                : T * (1.0 - std::pow(remaining, 1.0 / theta));
  }
  net.nodes[n] = T;
  for (std::size_t k = 0; k < n; ++k)
    detail::require(net.nodes[k + 1] > net.nodes[k],
                    "make_theta_net: nodes collapse in double precision; raise theta or lower n");
  return net;
}

/// Index i with t_i < s <= t_{i+1}; 0 at s = 0.
inline std::size_t left_index(const TimeNet& net, double s) {
  detail::require(s >= 0.0 && s <= net.T, "left_index: s outside [0,T]");
  if (s == 0.0) return 0;
  const auto it = std::lower_bound(net.nodes.begin(), net.nodes.end(), s);
  return static_cast<std::size_t>(it - net.nodes.begin()) - 1;
}

/// Single column of node times, one per line, 17 significant digits.
inline void write_net_csv(std::ostream& out, const TimeNet& net) {
  char buf[64];
  out << "t\n";
  for (double t : net.nodes) {
    std::snprintf(buf, sizeof buf, "%.17g\n", t);
    out << buf;
  }
}

}  // namespace fracsmooth
