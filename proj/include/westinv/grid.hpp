#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstddef>
#include <optional>

#include "westinv/errors.hpp"

namespace westinv {

/// Uniform node set on [left, right].
class SpatialGrid {
 public:
  SpatialGrid() = default;
  SpatialGrid(Eigen::Index nodes, double left = 0.0, double right = 1.0)
      : left_(left), right_(right), nodes_(nodes) {
    if (nodes < 3) throw GridTooCoarse("spatial grid needs at least 3 nodes");
    if (!(right > left)) throw GridMismatch("spatial grid endpoints must be increasing");
  }

  Eigen::Index size() const { return nodes_; }
  double left() const { return left_; }
  double right() const { return right_; }
  double spacing() const { return (right_ - left_) / static_cast<double>(nodes_ - 1); }
  double node(Eigen::Index i) const { return left_ + spacing() * static_cast<double>(i); }

  Eigen::VectorXd nodes() const { return Eigen::VectorXd::LinSpaced(nodes_, left_, right_); }

  /// Trapezoidal quadrature weights, so that w.dot(u) approximates the integral of u.
  Eigen::VectorXd weights() const {
    Eigen::VectorXd w = Eigen::VectorXd::Constant(nodes_, spacing());
    w(0) *= 0.5;
    w(nodes_ - 1) *= 0.5;
    return w;
  }

  /// Index of the node at `x`, if `x` coincides with one.
  std::optional<Eigen::Index> find_node(double x, double rel_tol = 1e-9) const {
    const double s = (x - left_) / spacing();
    const double r = std::round(s);
    if (std::abs(s - r) > rel_tol * std::max(1.0, std::abs(s)) || r < 0 ||
        r > static_cast<double>(nodes_ - 1))
      return std::nullopt;
    return static_cast<Eigen::Index>(r);
  }

  bool operator==(const SpatialGrid&) const = default;

 private:
  double left_ = 0.0;
  double right_ = 1.0;
  Eigen::Index nodes_ = 3;
};

/// Uniform time levels t_n = n * T / steps, n = 0..steps.
class TimeGrid {
 public:
  TimeGrid() = default;
  TimeGrid(Eigen::Index steps, double horizon = 1.0) : horizon_(horizon), steps_(steps) {
    if (steps < 2) throw GridTooCoarse("time grid needs at least 2 steps");
    if (!(horizon > 0.0)) throw GridMismatch("time horizon must be positive");
  }

  Eigen::Index steps() const { return steps_; }
  Eigen::Index levels() const { return steps_ + 1; }
  double horizon() const { return horizon_; }
  double step() const { return horizon_ / static_cast<double>(steps_); }
  double time(Eigen::Index n) const { return step() * static_cast<double>(n); }
  Eigen::VectorXd times() const { return Eigen::VectorXd::LinSpaced(levels(), 0.0, horizon_); }

  Eigen::VectorXd weights() const {
    Eigen::VectorXd w = Eigen::VectorXd::Constant(levels(), step());
    w(0) *= 0.5;
    w(steps_) *= 0.5;
    return w;
  }

  bool operator==(const TimeGrid&) const = default;

 private:
  double horizon_ = 1.0;
  Eigen::Index steps_ = 2;
};

struct Grids {
  SpatialGrid space;
  TimeGrid time;

  bool operator==(const Grids&) const = default;
};

}  // namespace westinv
