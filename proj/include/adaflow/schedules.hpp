#pragma once

#include <functional>
#include <string>
#include <variant>
#include <vector>

#include "adaflow/types.hpp"

namespace adaflow::schedules {

/// Adam-type coefficient a(t, lambda, alpha) = lambda^-1 (1 - e^{-lambda alpha}) / (1 - e^{-alpha t}).
/// Throws DomainError unless t, lambda, alpha are all positive.
[[nodiscard]] double adam_a(double t, double lambda, double alpha);

struct Adam {
  double lambda = 1.0;
  double alpha1 = 1.0;  ///< drives h = r
  double alpha2 = 1.0;  ///< drives p = q
};

struct Constant {
  double h = 1.0;
  double r = 1.0;
  double p = 1.0;
  double q = 1.0;
};

/// h = r = friction, p = q = 0.
struct HeavyBall {
  double friction = 1.0;
};

/// h = 1, r(t) = alpha / t, p = q = 0.
struct Nag {
  double alpha = 3.0;
};

/// Four user-supplied functions of t with explicitly declared limits.
struct Custom {
  std::function<double(double)> h, r, p, q;
  ScheduleValues limits;
};

using ScheduleKind = std::variant<Adam, Constant, HeavyBall, Nag, Custom>;

/// The non-autonomous coefficients (h, r, p, q). Immutable after construction.
class ScheduleSpec {
 public:
  /// Validates parameters of the chosen kind; throws ConfigError.
  explicit ScheduleSpec(ScheduleKind kind);

  static ScheduleSpec adam(double lambda, double alpha1, double alpha2) {
    return ScheduleSpec(Adam{lambda, alpha1, alpha2});
  }
  static ScheduleSpec constant(double h, double r, double p, double q) {
    return ScheduleSpec(Constant{h, r, p, q});
  }
  static ScheduleSpec heavy_ball(double friction) { return ScheduleSpec(HeavyBall{friction}); }
  static ScheduleSpec nag(double alpha) { return ScheduleSpec(Nag{alpha}); }

  /// Values at time t > 0. DomainError for t <= 0, for t < 1e-12 with the nag
  /// kind, and when a custom function returns a negative or non-finite value.
  [[nodiscard]] ScheduleValues eval(double t) const;

  /// (h_inf, r_inf, p_inf, q_inf).
  [[nodiscard]] ScheduleValues limits() const;

  [[nodiscard]] const ScheduleKind& kind() const { return kind_; }
  [[nodiscard]] std::string kind_name() const;

 private:
  ScheduleKind kind_;
};

/// Outcome of one sampled clause of the schedule hypotheses.
struct ClauseCheck {
  std::string name;
  bool holds = false;
  std::string detail;
};

/// Sampled (necessary-condition) check of the schedule hypotheses on a grid.
struct AssumptionReport {
  std::vector<ClauseCheck> clauses;

  [[nodiscard]] bool all_hold() const;
  /// Null when no clause of that name exists.
  [[nodiscard]] const ClauseCheck* find(const std::string& name) const;
};

/// 64 log-spaced points in [1e-3, 1e6].
[[nodiscard]] std::vector<double> default_grid();

/// Checks, on the sampled grid:
///  - h nonincreasing with positive limit,
///  - r and q nonincreasing with positive limits,
///  - p convergent (tail stabilisation towards p_inf; heuristic),
///  - r(t) >= q(t)/4 at every grid point and r_inf > q_inf/4,
///  - declared limits consistent with the value at the last grid point.
/// Violations are reported, never thrown. The grid must be nonempty,
/// strictly increasing and positive (ConfigError otherwise).
[[nodiscard]] AssumptionReport validate_assumptions(const ScheduleSpec& spec,
                                                    const std::vector<double>& grid = default_grid());

}  // namespace adaflow::schedules
