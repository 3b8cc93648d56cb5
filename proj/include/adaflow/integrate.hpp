#pragma once

#include <cstddef>
#include <ostream>
#include <variant>
#include <vector>

#include "adaflow/problems.hpp"
#include "adaflow/schedules.hpp"
#include "adaflow/types.hpp"

namespace adaflow::integrate {

/// v' = p S(x) - q v,  m' = h grad F(x) - r m,  x' = -m / sqrt(v + eps).
struct GeneralOde {};
/// v' = p S(x) - q v,  x' = -grad F(x) / sqrt(v + eps). The state has no m.
struct AdagradOde {};
/// m' = grad F(x) - (alpha / t) m,  x' = -m. The state has no v.
struct NesterovOde {
  double alpha = 3.0;
};

using OdeKind = std::variant<GeneralOde, AdagradOde, NesterovOde>;

/// Time derivative g(z, t). The schedule is ignored for the Nesterov kind.
/// Throws DomainError for t <= 0 or when some v_i < -eps.
[[nodiscard]] IterateState rhs(const OdeKind& kind, const schedules::ScheduleSpec& spec,
                               const problems::Problem& p, const IterateState& z, double t, double eps);

struct Trajectory {
  std::vector<double> times;
  std::vector<IterateState> states;
  /// Lyapunov energy at each stored time: E(h(t), z) for the general ODE,
  /// F(x) - F_star for the momentum-free ODE and F(x) + |m|^2/2 for Nesterov.
  std::vector<double> energies;

  [[nodiscard]] std::size_t size() const { return times.size(); }
  [[nodiscard]] const IterateState& final_state() const { return states.back(); }
};

struct IntegratorOptions {
  double eps = 1e-8;
  /// Bound on the Richardson estimate of the local error, relative to max(1, |z|_inf).
  double tol = 1e-8;
  double base_step = 1e-2;
  double min_step = 1e-12;
};

/// Classical RK4 with a fixed base step; a step is accepted when the
/// full-step and two-half-step results agree to `tol` (the half-step result
/// is kept), otherwise the step is halved. v components in (-1e-14, 0) are
/// clipped to 0; larger negative excursions reject the step.
///
/// Throws NumericalError when |z| exceeds 1e12 or the step underflows
/// `min_step`, ConfigError when T < t0, DomainError when t0 <= 0.
[[nodiscard]] Trajectory integrate(const OdeKind& kind, const schedules::ScheduleSpec& spec,
                                   const problems::Problem& p, const IterateState& z0, double t0, double T,
                                   const IntegratorOptions& options = {});

/// Initial state (v0, m0, x0) with m0 = grad F(x0) lim h/r and v0 = S(x0) lim p/q
/// as t -> 0+. Ratios whose denominator vanishes near 0 are taken as 0.
[[nodiscard]] IterateState compatible_initial_state(const schedules::ScheduleSpec& spec,
                                                    const problems::Problem& p, const Vector& x0);

/// h (F(x) - F_star) + 1/2 | m / (v + eps)^(1/4) |^2.
[[nodiscard]] double energy(const problems::Problem& p, double h, const IterateState& z, double eps,
                            double f_star);

/// F(x) + 1/2 |m|^2.
[[nodiscard]] double energy_nesterov(const problems::Problem& p, const IterateState& z);

/// E_inf(z) - delta <grad F(x), m> + delta |q_inf v - p_inf S(x)|^2.
[[nodiscard]] double w_delta(const problems::Problem& p, const IterateState& z, double delta,
                             const ScheduleValues& limits, double eps, double f_star);

/// max(|grad F(x)|, |m|, |q_inf v - p_inf S(x)|); absent blocks are skipped
/// (no v term for Nesterov, no m term for the momentum-free ODE).
[[nodiscard]] double residual_to_equilibrium(const OdeKind& kind, const problems::Problem& p,
                                             const IterateState& z, const ScheduleValues& limits);

struct ChangeOfVariableReport {
  double kappa = 0.0;  ///< sqrt(2 alpha + 2)
  double beta = 0.0;   ///< kappa^2 / 4
  double max_residual = 0.0;
  std::size_t points = 0;
  double t_min = 0.0;
  double t_max = 0.0;
};

/// kappa and beta of the time change for a Nesterov parameter alpha.
[[nodiscard]] ChangeOfVariableReport change_of_variable_constants(double alpha);

/// Builds y(t) = kappa m(kappa sqrt t) / (2 sqrt t), u(t) = x(kappa sqrt t)
/// from a Nesterov trajectory by cubic Hermite interpolation and returns the
/// largest residual of
///   y' = (beta / t)(grad F(u) - y),   u' = -y
/// over `points` check times strictly between trajectory nodes. With
/// t_lo = t_hi = 0 the widest admissible window is used; otherwise
/// kappa sqrt(t) must stay inside the trajectory (RangeError).
[[nodiscard]] ChangeOfVariableReport nesterov_change_of_variable(const Trajectory& traj, double alpha,
                                                                 const problems::Problem& p,
                                                                 std::size_t points = 200, double t_lo = 0.0,
                                                                 double t_hi = 0.0);

/// Columns t, v_1..v_d, m_1..m_d, x_1..x_d, energy (absent blocks omitted).
void write_trajectory_csv(const Trajectory& traj, std::ostream& out);

}  // namespace adaflow::integrate
