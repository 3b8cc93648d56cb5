#include "adaflow/integrate.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "adaflow/csv.hpp"
#include "adaflow/errors.hpp"

namespace adaflow::integrate {
namespace {

using problems::Problem;
using schedules::ScheduleSpec;

constexpr double kBlowUp = 1e12;
constexpr double kClip = 1e-14;

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};

Vector inv_sqrt(const Vector& v, double eps) { return (v.array() + eps).rsqrt().matrix(); }

void check_v(const Vector& v, double eps) {
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (!(v[i] >= -eps)) {
      std::ostringstream os;
      os << "v component " << i << " = " << v[i] << " lies below -eps";
      throw DomainError(os.str());
    }
  }
}

// y + a * k, blockwise; empty blocks stay empty.
IterateState axpy(const IterateState& y, double a, const IterateState& k) {
  IterateState out;
  out.v = y.v + a * k.v;
  out.m = y.m + a * k.m;
  out.x = y.x + a * k.x;
  return out;
}

double max_abs_diff(const IterateState& a, const IterateState& b) {
  double d = 0.0;
  if (a.v.size()) d = std::max(d, (a.v - b.v).cwiseAbs().maxCoeff());
  if (a.m.size()) d = std::max(d, (a.m - b.m).cwiseAbs().maxCoeff());
  if (a.x.size()) d = std::max(d, (a.x - b.x).cwiseAbs().maxCoeff());
  return d;
}

double max_abs(const IterateState& a) {
  double d = 0.0;
  if (a.v.size()) d = std::max(d, a.v.cwiseAbs().maxCoeff());
  if (a.m.size()) d = std::max(d, a.m.cwiseAbs().maxCoeff());
  if (a.x.size()) d = std::max(d, a.x.cwiseAbs().maxCoeff());
  return d;
}

struct System {
  const OdeKind& kind;
  const ScheduleSpec& spec;
  const Problem& p;
  double eps;

  IterateState operator()(double t, const IterateState& z) const { return rhs(kind, spec, p, z, t, eps); }

  IterateState rk4(double t, const IterateState& y, double dt) const {
    const IterateState k1 = (*this)(t, y);
    const IterateState k2 = (*this)(t + dt / 2, axpy(y, dt / 2, k1));
    const IterateState k3 = (*this)(t + dt / 2, axpy(y, dt / 2, k2));
    const IterateState k4 = (*this)(t + dt, axpy(y, dt, k3));
    IterateState out;
    out.v = y.v + dt / 6 * (k1.v + 2 * k2.v + 2 * k3.v + k4.v);
    out.m = y.m + dt / 6 * (k1.m + 2 * k2.m + 2 * k3.m + k4.m);
    out.x = y.x + dt / 6 * (k1.x + 2 * k2.x + 2 * k3.x + k4.x);
    return out;
  }

  double energy_at(double t, const IterateState& z) const {
    return std::visit(Overloaded{
                          [&](const GeneralOde&) { return energy(p, spec.eval(t).h, z, eps, p.min_value); },
                          [&](const AdagradOde&) { return p.value(z.x) - p.min_value; },
                          [&](const NesterovOde&) { return energy_nesterov(p, z); },
                      },
                      kind);
  }
};

// Clips roundoff-level negative v entries; false when a genuine violation remains.
bool clip_v(Vector& v) {
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (v[i] < 0.0) {
      if (v[i] <= -kClip) return false;
      v[i] = 0.0;
    }
  }
  return true;
}

void check_shape(const OdeKind& kind, const IterateState& z, Eigen::Index d) {
  const bool needs_v = !std::holds_alternative<NesterovOde>(kind);
  const bool needs_m = !std::holds_alternative<AdagradOde>(kind);
  if (z.x.size() != d) throw ConfigError("initial x has wrong dimension");
  if (needs_v ? z.v.size() != d : z.v.size() != 0) throw ConfigError("initial v has wrong shape for this ODE");
  if (needs_m ? z.m.size() != d : z.m.size() != 0) throw ConfigError("initial m has wrong shape for this ODE");
}

IterateState nesterov_rhs(const Problem& p, const IterateState& z, double t, double alpha) {
  IterateState dz;
  dz.m = p.grad(z.x) - (alpha / t) * z.m;
  dz.x = -z.m;
  return dz;
}

}  // namespace

IterateState rhs(const OdeKind& kind, const ScheduleSpec& spec, const Problem& p, const IterateState& z, double t,
                 double eps) {
  if (!(t > 0.0)) throw DomainError("ODE right-hand side evaluated at non-positive time");
  return std::visit(Overloaded{
                        [&](const GeneralOde&) {
                          check_v(z.v, eps);
                          const ScheduleValues s = spec.eval(t);
                          IterateState dz;
                          dz.v = s.p * problems::second_moment(p, z.x) - s.q * z.v;
                          dz.m = s.h * p.grad(z.x) - s.r * z.m;
                          dz.x = -z.m.cwiseProduct(inv_sqrt(z.v, eps));
                          return dz;
                        },
                        [&](const AdagradOde&) {
                          check_v(z.v, eps);
                          const ScheduleValues s = spec.eval(t);
                          IterateState dz;
                          dz.v = s.p * problems::second_moment(p, z.x) - s.q * z.v;
                          dz.x = -p.grad(z.x).cwiseProduct(inv_sqrt(z.v, eps));
                          return dz;
                        },
                        [&](const NesterovOde& n) { return nesterov_rhs(p, z, t, n.alpha); },
                    },
                    kind);
}

Trajectory integrate(const OdeKind& kind, const ScheduleSpec& spec, const Problem& p, const IterateState& z0,
                     double t0, double T, const IntegratorOptions& options) {
  if (!(t0 > 0.0)) throw DomainError("integration must start at t0 > 0");
  if (T < t0) throw ConfigError("integration horizon T must not precede t0");
  if (!(options.base_step > 0.0) || !(options.tol > 0.0) || !(options.eps > 0.0)) {
    throw ConfigError("integrator base_step, tol and eps must be positive");
  }
  check_shape(kind, z0, p.dimension);
  if (z0.v.size() && (z0.v.array() < 0.0).any()) throw DomainError("initial v must be nonnegative");

  const System sys{kind, spec, p, options.eps};
  Trajectory traj;
  traj.times.push_back(t0);
  traj.states.push_back(z0);
  traj.energies.push_back(sys.energy_at(t0, z0));

  double t = t0;
  IterateState y = z0;
  double dt = options.base_step;
  const double t_end_slack = 1e-13 * std::max(1.0, std::abs(T));
  while (T - t > t_end_slack) {
    const double step = std::min(dt, T - t);
    bool accepted = false;
    IterateState candidate;
    try {
      const IterateState full = sys.rk4(t, y, step);
      const IterateState half = sys.rk4(t, y, step / 2);
      candidate = sys.rk4(t + step / 2, half, step / 2);
      const double err = max_abs_diff(candidate, full) / 15.0;
      accepted = candidate.all_finite() && err <= options.tol * std::max(1.0, max_abs(candidate)) &&
                 clip_v(candidate.v);
    } catch (const DomainError&) {
      accepted = false;  // a stage left the domain; retry with a smaller step
    }
    if (!accepted) {
      dt = step / 2;
      if (dt < options.min_step) {
        std::ostringstream os;
        os << "integrator step underflow at t = " << t;
        throw NumericalError(os.str());
      }
      continue;
    }
    t = (T - (t + step) <= t_end_slack) ? T : t + step;
    y = std::move(candidate);
    if (y.norm() > kBlowUp) {
      std::ostringstream os;
      os << "trajectory blow-up (|z| > 1e12) at t = " << t;
      throw NumericalError(os.str());
    }
    traj.times.push_back(t);
    traj.states.push_back(y);
    traj.energies.push_back(sys.energy_at(t, y));
    dt = std::min(options.base_step, 2 * step);
  }
  return traj;
}

IterateState compatible_initial_state(const ScheduleSpec& spec, const Problem& p, const Vector& x0) {
  constexpr double kNearZero = 1e-9;
  const ScheduleValues s = spec.eval(kNearZero);
  const double hr = s.r > 0.0 ? s.h / s.r : 0.0;
  const double pq = s.q > 0.0 ? s.p / s.q : 0.0;
  IterateState z;
  z.x = x0;
  z.m = hr * p.grad(x0);
  z.v = pq * problems::second_moment(p, x0);
  return z;
}

double energy(const Problem& p, double h, const IterateState& z, double eps, double f_star) {
  const double kinetic = z.m.size() ? 0.5 * z.m.cwiseAbs2().cwiseProduct(inv_sqrt(z.v, eps)).sum() : 0.0;
  return h * (p.value(z.x) - f_star) + kinetic;
}

double energy_nesterov(const Problem& p, const IterateState& z) { return p.value(z.x) + 0.5 * z.m.squaredNorm(); }

double w_delta(const Problem& p, const IterateState& z, double delta, const ScheduleValues& limits, double eps,
               double f_star) {
  const double base = energy(p, limits.h, z, eps, f_star);
  const double cross = p.grad(z.x).dot(z.m);
  const double gap = (limits.q * z.v - limits.p * problems::second_moment(p, z.x)).squaredNorm();
  return base - delta * cross + delta * gap;
}

double residual_to_equilibrium(const OdeKind& kind, const Problem& p, const IterateState& z,
                               const ScheduleValues& limits) {
  double r = p.grad(z.x).norm();
  if (z.m.size()) r = std::max(r, z.m.norm());
  if (!std::holds_alternative<NesterovOde>(kind) && z.v.size()) {
    r = std::max(r, (limits.q * z.v - limits.p * problems::second_moment(p, z.x)).norm());
  }
  return r;
}

ChangeOfVariableReport change_of_variable_constants(double alpha) {
  if (!(alpha >= 0.0)) throw ConfigError("Nesterov alpha must be nonnegative");
  ChangeOfVariableReport r;
  r.kappa = std::sqrt(2.0 * alpha + 2.0);
  r.beta = r.kappa * r.kappa / 4.0;
  return r;
}

ChangeOfVariableReport nesterov_change_of_variable(const Trajectory& traj, double alpha, const Problem& p,
                                                   std::size_t points, double t_lo, double t_hi) {
  if (traj.size() < 2) throw RangeError("change of variable needs at least two trajectory points");
  ChangeOfVariableReport report = change_of_variable_constants(alpha);
  const double kappa = report.kappa;
  const double beta = report.beta;
  const double s_first = traj.times.front();
  const double s_last = traj.times.back();

  if (t_lo == 0.0 && t_hi == 0.0) {
    // Start at t = 1 where possible: the map scales interpolation error in
    // dm/ds by kappa^2 / (4 t), which blows up near t = 0.
    const double s_lo = std::max(s_first, std::min(kappa, s_last / 2));
    t_lo = (s_lo / kappa) * (s_lo / kappa);
    t_hi = (s_last / kappa) * (s_last / kappa);
  }
  if (!(t_lo > 0.0) || !(t_hi > t_lo)) throw RangeError("invalid change-of-variable window");
  if (kappa * std::sqrt(t_lo) < s_first - 1e-12 || kappa * std::sqrt(t_hi) > s_last + 1e-12) {
    throw RangeError("kappa sqrt(t) leaves the trajectory time range");
  }

  std::vector<IterateState> slopes;
  slopes.reserve(traj.size());
  for (std::size_t i = 0; i < traj.size(); ++i) slopes.push_back(nesterov_rhs(p, traj.states[i], traj.times[i], alpha));

  report.points = points;
  report.t_min = t_lo;
  report.t_max = t_hi;
  const double s_lo = kappa * std::sqrt(t_lo);
  const double s_hi = kappa * std::sqrt(t_hi);
  for (std::size_t j = 0; j < points; ++j) {
    const double s = s_lo + (static_cast<double>(j) + 0.5) * (s_hi - s_lo) / static_cast<double>(points);
    const double t = (s / kappa) * (s / kappa);
    auto upper = std::upper_bound(traj.times.begin(), traj.times.end(), s);
    std::size_t i = static_cast<std::size_t>(std::distance(traj.times.begin(), upper));
    i = std::clamp<std::size_t>(i, 1, traj.size() - 1) - 1;
    const double h = traj.times[i + 1] - traj.times[i];
    const double th = (s - traj.times[i]) / h;
    const double h00 = 2 * th * th * th - 3 * th * th + 1, h10 = th * th * th - 2 * th * th + th;
    const double h01 = -2 * th * th * th + 3 * th * th, h11 = th * th * th - th * th;
    const double d00 = 6 * th * th - 6 * th, d10 = 3 * th * th - 4 * th + 1;
    const double d01 = -6 * th * th + 6 * th, d11 = 3 * th * th - 2 * th;
    const IterateState& a = traj.states[i];
    const IterateState& b = traj.states[i + 1];
    const IterateState& fa = slopes[i];
    const IterateState& fb = slopes[i + 1];
    const Vector m = h00 * a.m + h10 * h * fa.m + h01 * b.m + h11 * h * fb.m;
    const Vector x = h00 * a.x + h10 * h * fa.x + h01 * b.x + h11 * h * fb.x;
    const Vector dm = (d00 * a.m + d10 * h * fa.m + d01 * b.m + d11 * h * fb.m) / h;
    const Vector dx = (d00 * a.x + d10 * h * fa.x + d01 * b.x + d11 * h * fb.x) / h;

    const double sqrt_t = std::sqrt(t);
    const Vector y = kappa * m / (2 * sqrt_t);
    const Vector dy = kappa * kappa * dm / (4 * t) - kappa * m / (4 * t * sqrt_t);
    const Vector du = dx * kappa / (2 * sqrt_t);
    const Vector r1 = dy - (beta / t) * (p.grad(x) - y);
    const Vector r2 = du + y;
    report.max_residual = std::max({report.max_residual, r1.cwiseAbs().maxCoeff(), r2.cwiseAbs().maxCoeff()});
  }
  return report;
}

void write_trajectory_csv(const Trajectory& traj, std::ostream& out) {
  csv::Writer w(out);
  std::vector<std::string> cols{"t"};
  if (!traj.states.empty()) {
    const auto& z = traj.states.front();
    for (auto& c : csv::indexed_columns("v", z.v.size())) cols.push_back(c);
    for (auto& c : csv::indexed_columns("m", z.m.size())) cols.push_back(c);
    for (auto& c : csv::indexed_columns("x", z.x.size())) cols.push_back(c);
  }
  cols.push_back("energy");
  w.header(cols);
  for (std::size_t i = 0; i < traj.size(); ++i) {
    const auto& z = traj.states[i];
    w.cell(traj.times[i]);
    for (Eigen::Index k = 0; k < z.v.size(); ++k) w.cell(z.v[k]);
    for (Eigen::Index k = 0; k < z.m.size(); ++k) w.cell(z.m[k]);
    for (Eigen::Index k = 0; k < z.x.size(); ++k) w.cell(z.x[k]);
    w.cell(traj.energies[i]);
    w.end_row();
  }
}

}  // namespace adaflow::integrate
