#pragma once

#include <Eigen/Dense>

#include <string>

namespace westinv {

enum class TraceOrigin { Model, SyntheticClean, SyntheticNoisy, Prefiltered };

std::string to_string(TraceOrigin origin);

/// Sampled time trace h(t_k) at the observation point.
struct TimeTrace {
  Eigen::VectorXd times;
  Eigen::VectorXd values;
  double delta = 0.0;  // noise bound, 0 for clean data
  TraceOrigin origin = TraceOrigin::Model;

  Eigen::Index size() const { return values.size(); }
};

}  // namespace westinv
