#include "adaflow/schedules.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "adaflow/errors.hpp"

namespace adaflow::schedules {
namespace {

constexpr double kNagMinTime = 1e-12;

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};

void require_positive(double value, const char* what) {
  if (!(value > 0.0) || !std::isfinite(value)) {
    throw ConfigError(std::string("schedule parameter ") + what + " must be positive and finite");
  }
}

void require_nonnegative(double value, const char* what) {
  if (!(value >= 0.0) || !std::isfinite(value)) {
    throw ConfigError(std::string("schedule parameter ") + what + " must be nonnegative and finite");
  }
}

double checked_custom(const std::function<double(double)>& f, double t, const char* name) {
  const double value = f(t);
  if (!std::isfinite(value) || value < 0.0) {
    std::ostringstream os;
    os << "custom schedule " << name << "(" << t << ") = " << value << " is not a finite nonnegative value";
    throw DomainError(os.str());
  }
  return value;
}

bool nonincreasing(const std::vector<double>& values, std::size_t* where) {
  for (std::size_t i = 1; i < values.size(); ++i) {
    if (values[i] > values[i - 1] + 1e-12 * (1.0 + std::abs(values[i - 1]))) {
      if (where) *where = i;
      return false;
    }
  }
  return true;
}

std::string fmt_double(double v) {
  std::ostringstream os;
  os.precision(6);
  os << v;
  return os.str();
}

}  // namespace

double adam_a(double t, double lambda, double alpha) {
  if (!(t > 0.0)) throw DomainError("adam_a: time must be positive, got " + fmt_double(t));
  if (!(lambda > 0.0) || !(alpha > 0.0)) throw DomainError("adam_a: lambda and alpha must be positive");
  // -expm1 keeps both factors accurate when their arguments are small.
  return (-std::expm1(-lambda * alpha) / lambda) / (-std::expm1(-alpha * t));
}

ScheduleSpec::ScheduleSpec(ScheduleKind kind) : kind_(std::move(kind)) {
  std::visit(Overloaded{
                 [](const Adam& a) {
                   require_positive(a.lambda, "lambda");
                   require_positive(a.alpha1, "alpha1");
                   require_positive(a.alpha2, "alpha2");
                 },
                 [](const Constant& c) {
                   require_nonnegative(c.h, "h");
                   require_nonnegative(c.r, "r");
                   require_nonnegative(c.p, "p");
                   require_nonnegative(c.q, "q");
                 },
                 [](const HeavyBall& hb) { require_positive(hb.friction, "friction"); },
                 [](const Nag& n) { require_positive(n.alpha, "alpha"); },
                 [](const Custom& c) {
                   if (!c.h || !c.r || !c.p || !c.q) throw ConfigError("custom schedule needs all of h, r, p, q");
                   require_nonnegative(c.limits.h, "h_inf");
                   require_nonnegative(c.limits.r, "r_inf");
                   require_nonnegative(c.limits.p, "p_inf");
                   require_nonnegative(c.limits.q, "q_inf");
                 },
             },
             kind_);
}

ScheduleValues ScheduleSpec::eval(double t) const {
  if (!(t > 0.0)) throw DomainError("schedule evaluated at non-positive time " + fmt_double(t));
  return std::visit(Overloaded{
                        [t](const Adam& a) {
                          const double hr = adam_a(t, a.lambda, a.alpha1);
                          const double pq = adam_a(t, a.lambda, a.alpha2);
                          return ScheduleValues{hr, hr, pq, pq};
                        },
                        [](const Constant& c) { return ScheduleValues{c.h, c.r, c.p, c.q}; },
                        [](const HeavyBall& hb) { return ScheduleValues{hb.friction, hb.friction, 0.0, 0.0}; },
                        [t](const Nag& n) {
                          if (t < kNagMinTime) {
                            throw DomainError("nag schedule evaluated below t = 1e-12 (t = " + fmt_double(t) + ")");
                          }
                          return ScheduleValues{1.0, n.alpha / t, 0.0, 0.0};
                        },
                        [t](const Custom& c) {
                          return ScheduleValues{checked_custom(c.h, t, "h"), checked_custom(c.r, t, "r"),
                                                checked_custom(c.p, t, "p"), checked_custom(c.q, t, "q")};
                        },
                    },
                    kind_);
}

ScheduleValues ScheduleSpec::limits() const {
  return std::visit(Overloaded{
                        [](const Adam& a) {
                          const double hr = -std::expm1(-a.lambda * a.alpha1) / a.lambda;
                          const double pq = -std::expm1(-a.lambda * a.alpha2) / a.lambda;
                          return ScheduleValues{hr, hr, pq, pq};
                        },
                        [](const Constant& c) { return ScheduleValues{c.h, c.r, c.p, c.q}; },
                        [](const HeavyBall& hb) { return ScheduleValues{hb.friction, hb.friction, 0.0, 0.0}; },
                        [](const Nag&) { return ScheduleValues{1.0, 0.0, 0.0, 0.0}; },
                        [](const Custom& c) { return c.limits; },
                    },
                    kind_);
}

std::string ScheduleSpec::kind_name() const {
  return std::visit(Overloaded{
                        [](const Adam&) { return std::string("adam"); },
                        [](const Constant&) { return std::string("constant"); },
                        [](const HeavyBall&) { return std::string("heavy_ball"); },
                        [](const Nag&) { return std::string("nag"); },
                        [](const Custom&) { return std::string("custom"); },
                    },
                    kind_);
}

bool AssumptionReport::all_hold() const {
  return std::all_of(clauses.begin(), clauses.end(), [](const ClauseCheck& c) { return c.holds; });
}

const ClauseCheck* AssumptionReport::find(const std::string& name) const {
  for (const auto& c : clauses) {
    if (c.name == name) return &c;
  }
  return nullptr;
}

std::vector<double> default_grid() {
  constexpr int kPoints = 64;
  std::vector<double> grid(kPoints);
  const double lo = std::log10(1e-3);
  const double hi = std::log10(1e6);
  for (int i = 0; i < kPoints; ++i) grid[i] = std::pow(10.0, lo + (hi - lo) * i / (kPoints - 1));
  return grid;
}

AssumptionReport validate_assumptions(const ScheduleSpec& spec, const std::vector<double>& grid) {
  if (grid.empty()) throw ConfigError("validation grid is empty");
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (!(grid[i] > 0.0)) throw ConfigError("validation grid must be positive");
    if (i > 0 && !(grid[i] > grid[i - 1])) throw ConfigError("validation grid must be strictly increasing");
  }

  std::vector<double> h, r, p, q;
  for (double t : grid) {
    const auto s = spec.eval(t);
    h.push_back(s.h);
    r.push_back(s.r);
    p.push_back(s.p);
    q.push_back(s.q);
  }
  const ScheduleValues lim = spec.limits();

  AssumptionReport report;
  auto add = [&](std::string name, bool holds, std::string detail) {
    report.clauses.push_back({std::move(name), holds, std::move(detail)});
  };
  auto monotone_clause = [&](const char* name, const std::vector<double>& values) {
    std::size_t at = 0;
    const bool ok = nonincreasing(values, &at);
    add(std::string(name) + "_nonincreasing", ok,
        ok ? "nonincreasing on grid" : "increases at t = " + fmt_double(grid[at]));
  };

  monotone_clause("h", h);
  add("h_limit_positive", lim.h > 0.0, "h_inf = " + fmt_double(lim.h));
  monotone_clause("r", r);
  add("r_limit_positive", lim.r > 0.0, "r_inf = " + fmt_double(lim.r));
  monotone_clause("q", q);
  add("q_limit_positive", lim.q > 0.0, "q_inf = " + fmt_double(lim.q));

  {
    // Heuristic: the last quarter of the grid must sit close to p_inf and the
    // distance must not grow towards the end.
    const std::size_t start = grid.size() - std::max<std::size_t>(1, grid.size() / 4);
    const double tol = 1e-3 * (1.0 + std::abs(lim.p));
    double worst = 0.0;
    for (std::size_t i = start; i < grid.size(); ++i) worst = std::max(worst, std::abs(p[i] - lim.p));
    const double first_gap = std::abs(p[start] - lim.p);
    const double last_gap = std::abs(p.back() - lim.p);
    const bool ok = worst <= tol && last_gap <= first_gap + 1e-12;
    add("p_convergent", ok, "max tail deviation from p_inf = " + fmt_double(worst) + " (heuristic tail check)");
  }

  {
    bool ok = true;
    std::string detail = "r >= q/4 on grid";
    for (std::size_t i = 0; i < grid.size(); ++i) {
      if (r[i] < q[i] / 4.0) {
        ok = false;
        detail = "r < q/4 at t = " + fmt_double(grid[i]);
        break;
      }
    }
    add("r_dominates_quarter_q", ok, detail);
  }
  add("r_limit_exceeds_quarter_q_limit", lim.r > lim.q / 4.0,
      "r_inf = " + fmt_double(lim.r) + ", q_inf/4 = " + fmt_double(lim.q / 4.0));

  {
    const double tol = 1e-3;
    auto close = [tol](double a, double b) { return std::abs(a - b) <= tol * (1.0 + std::abs(b)); };
    const bool ok = close(h.back(), lim.h) && close(r.back(), lim.r) && close(p.back(), lim.p) && close(q.back(), lim.q);
    add("limits_consistent", ok, "declared limits vs values at t = " + fmt_double(grid.back()));
  }
  return report;
}

}  // namespace adaflow::schedules
