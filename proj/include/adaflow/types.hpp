#pragma once

#include <cmath>

#include <Eigen/Dense>

namespace adaflow {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Full state z = (v, m, x) of the adaptive/momentum dynamics.
///
/// `v` is empty for the Nesterov dynamics and `m` is empty for the
/// momentum-free (RMSProp-like) dynamics. Whenever `v` is present it is
/// componentwise nonnegative.
struct IterateState {
  Vector v;
  Vector m;
  Vector x;

  [[nodiscard]] Eigen::Index dimension() const { return x.size(); }
  /// Euclidean norm of the stacked vector (v, m, x).
  [[nodiscard]] double norm() const {
    return std::sqrt(v.squaredNorm() + m.squaredNorm() + x.squaredNorm());
  }
  [[nodiscard]] bool all_finite() const {
    return v.allFinite() && m.allFinite() && x.allFinite();
  }
};

/// Scalar values (h, r, p, q) of the schedules at one time, or their limits.
struct ScheduleValues {
  double h = 0.0;
  double r = 0.0;
  double p = 0.0;
  double q = 0.0;

  bool operator==(const ScheduleValues&) const = default;
};

}  // namespace adaflow
