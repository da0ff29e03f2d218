#pragma once

// Shared fixtures and hand-rolled generators for the unit suites.

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <numbers>
#include <vector>

#include "westinv/harness.hpp"
#include "westinv/westfield.hpp"

namespace westinv::testing {

inline constexpr double pi = std::numbers::pi;

/// Dirichlet-Neumann model driven by the manufactured quarter-sine source with beta = t^2.
inline ForwardModel manufactured_model(Eigen::Index nx, Eigen::Index nt, MaterialParams params = {1.0, 0.1},
                                       BoundaryCondition bc = {}) {
  const Grids g{SpatialGrid(nx), TimeGrid(nt)};
  return {g, params, bc, manufactured_source(SpatialProfile::quarter_sine(), TimeProfile::power(2), params, g, bc), {}};
}

/// Deterministic draws for property tests; each call consumes one counter value.
class Draws {
 public:
  explicit Draws(std::uint64_t seed) : rng_(seed) {}

  double uniform(double lo = 0.0, double hi = 1.0) { return rng_.uniform(counter_++, lo, hi); }

  Eigen::VectorXd vector(Eigen::Index n, double lo = -1.0, double hi = 1.0) {
    Eigen::VectorXd v(n);
    for (Eigen::Index i = 0; i < n; ++i) v(i) = uniform(lo, hi);
    return v;
  }

  /// Smooth grid function: a few random sine modes vanishing at x = 0.
  Eigen::VectorXd smooth_profile(const SpatialGrid& grid, int modes = 4, double scale = 1.0) {
    const Eigen::VectorXd c = vector(modes);
    Eigen::VectorXd out = Eigen::VectorXd::Zero(grid.size());
    for (Eigen::Index i = 0; i < grid.size(); ++i)
      for (int k = 0; k < modes; ++k) out(i) += scale * c(k) * std::sin((k + 0.5) * pi * grid.node(i)) / (k + 1);
    return out;
  }

  /// Smooth time trace on every level of `time`, vanishing at t = 0.
  Eigen::VectorXd smooth_trace(const TimeGrid& time, int modes = 3) {
    const Eigen::VectorXd c = vector(modes);
    Eigen::VectorXd out = Eigen::VectorXd::Zero(time.levels());
    for (Eigen::Index n = 0; n < time.levels(); ++n)
      for (int k = 0; k < modes; ++k) out(n) += c(k) * std::sin((k + 1) * pi * time.time(n) / time.horizon());
    return out;
  }

 private:
  SplitMix64 rng_;
  std::uint64_t counter_ = 0;
};

/// Least-squares slope of log(y) against log(x).
inline double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
  const auto n = static_cast<double>(x.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double lx = std::log(x[i]), ly = std::log(y[i]);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

}  // namespace westinv::testing
