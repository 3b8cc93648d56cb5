#include "adaflow/optimize.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "adaflow/csv.hpp"
#include "adaflow/errors.hpp"
#include "adaflow/integrate.hpp"
#include "adaflow/parallel.hpp"

namespace adaflow::optimize {
namespace {

using problems::GradientSample;
using problems::Problem;
using schedules::ScheduleSpec;

void guard(std::size_t n, double gamma_next, double q) {
  if (1.0 - gamma_next * q < 0.0) {
    std::ostringstream os;
    os << "step guard 1 - gamma_{n+1} q_n >= 0 violated at n = " << n << " (gamma = " << gamma_next
       << ", q = " << q << ")";
    throw ConfigError(os.str());
  }
}

void update_v(Vector& v, double gamma, const ScheduleValues& s, const GradientSample& sample) {
  v = (1.0 - gamma * s.q) * v + (gamma * s.p) * sample.g_sq;
}

integrate::OdeKind limiting_kind(const RunConfig& c) {
  switch (c.algorithm) {
    case Algorithm::general: return integrate::GeneralOde{};
    case Algorithm::adagrad: return integrate::AdagradOde{};
    case Algorithm::snag: return integrate::NesterovOde{c.nag_alpha};
  }
  return integrate::GeneralOde{};
}

void check_initial_shape(const Problem& p, const RunConfig& c) {
  const auto d = p.dimension;
  const auto& z = c.z0;
  const bool needs_v = c.algorithm != Algorithm::snag;
  const bool needs_m = c.algorithm != Algorithm::adagrad;
  if (z.x.size() != d) throw ConfigError("initial x has wrong dimension");
  if (needs_v ? z.v.size() != d : z.v.size() != 0) throw ConfigError("initial v has wrong shape for the algorithm");
  if (needs_m ? z.m.size() != d : z.m.size() != 0) throw ConfigError("initial m has wrong shape for the algorithm");
  if (z.v.size() && (z.v.array() < 0.0).any()) throw ConfigError("initial v must be nonnegative");
}

double diagnostic(const Problem& p, const RunConfig& c, const IterateState& z, double h_prev) {
  switch (c.algorithm) {
    case Algorithm::general: return lyapunov_diag(z, h_prev, p, c.eps);
    case Algorithm::adagrad: return p.value(z.x);
    case Algorithm::snag: return integrate::energy_nesterov(p, z);
  }
  return 0.0;
}

}  // namespace

void StepsizeSpec::validate() const {
  if (!(gamma0 > 0.0) || !std::isfinite(gamma0)) throw ConfigError("stepsize gamma0 must be positive");
  if (!(alpha > 0.0) || alpha > 1.0) throw ConfigError("stepsize exponent alpha must lie in (0, 1]");
}

double StepsizeSpec::at(std::size_t n) const {
  if (n == 0) throw DomainError("step sizes are indexed from n = 1");
  return gamma0 / std::pow(static_cast<double>(n), alpha);
}

const char* to_string(Algorithm a) {
  switch (a) {
    case Algorithm::general: return "general";
    case Algorithm::snag: return "snag";
    case Algorithm::adagrad: return "adagrad";
  }
  return "unknown";
}

Algorithm parse_algorithm(const std::string& name) {
  if (name == "general") return Algorithm::general;
  if (name == "snag") return Algorithm::snag;
  if (name == "adagrad") return Algorithm::adagrad;
  throw ConfigError("unknown algorithm '" + name + "' (expected general, snag or adagrad)");
}

const char* to_string(Termination t) { return t == Termination::completed ? "completed" : "diverged"; }

double schedule_time(std::size_t n, double tau_n, const StepsizeSpec& gamma) {
  return n == 0 ? gamma.at(1) : tau_n;
}

void advance_general(IterateState& z, std::size_t n, const ScheduleValues& s, double gamma_next,
                     const GradientSample& sample, double eps) {
  guard(n, gamma_next, s.q);
  update_v(z.v, gamma_next, s, sample);
  z.m = (1.0 - gamma_next * s.r) * z.m + (gamma_next * s.h) * sample.g;
  z.x.array() -= gamma_next * z.m.array() * (z.v.array() + eps).rsqrt();
}

void advance_nag(IterateState& z, double nag_alpha, double gamma_next, double tau_n, const GradientSample& sample) {
  if (!(tau_n > 0.0)) throw DomainError("S-NAG step needs tau_n > 0");
  z.m = (1.0 - nag_alpha * gamma_next / tau_n) * z.m + gamma_next * sample.g;
  z.x -= gamma_next * z.m;
}

void advance_adagrad(IterateState& z, std::size_t n, const ScheduleValues& s, double gamma_next,
                     const GradientSample& sample, double eps) {
  guard(n, gamma_next, s.q);
  update_v(z.v, gamma_next, s, sample);
  z.x.array() -= gamma_next * sample.g.array() * (z.v.array() + eps).rsqrt();
}

IterateState step_general(const IterateState& z, std::size_t n, double tau_n, const ScheduleSpec& spec,
                          const StepsizeSpec& gamma, const GradientSample& sample, double eps) {
  IterateState next = z;
  advance_general(next, n, spec.eval(schedule_time(n, tau_n, gamma)), gamma.at(n + 1), sample, eps);
  return next;
}

IterateState step_nag(const IterateState& y, std::size_t n, double nag_alpha, const StepsizeSpec& gamma,
                      const GradientSample& sample, double tau_n) {
  IterateState next = y;
  advance_nag(next, nag_alpha, gamma.at(n + 1), tau_n, sample);
  return next;
}

IterateState step_adagrad(const IterateState& z, std::size_t n, double tau_n, const ScheduleSpec& spec,
                          const StepsizeSpec& gamma, const GradientSample& sample, double eps) {
  IterateState next = z;
  advance_adagrad(next, n, spec.eval(schedule_time(n, tau_n, gamma)), gamma.at(n + 1), sample, eps);
  return next;
}

double lyapunov_diag(const IterateState& z, double h_prev, const Problem& p, double eps) {
  const double kinetic = 0.5 * z.m.cwiseAbs2().dot((z.v.array() + eps).rsqrt().matrix());
  return h_prev * p.value(z.x) + kinetic;
}

IterateState shaped_initial_state(Algorithm algorithm, const Vector& x0, const std::optional<Vector>& m0,
                                  const std::optional<Vector>& v0) {
  IterateState z;
  z.x = x0;
  if (algorithm != Algorithm::adagrad) z.m = m0 ? *m0 : Vector::Zero(x0.size());
  if (algorithm != Algorithm::snag) z.v = v0 ? *v0 : Vector::Zero(x0.size());
  return z;
}

double final_residual(const Problem& p, const RunConfig& config, const IterateState& z) {
  return integrate::residual_to_equilibrium(limiting_kind(config), p, z, config.schedule.limits());
}

RunRecord run(const Problem& p, const RunConfig& config, RandomStream& rng) {
  if (config.n_iter < 1) throw ConfigError("n_iter must be at least 1");
  if (config.record_stride < 1) throw ConfigError("record_stride must be at least 1");
  if (!(config.eps > 0.0)) throw ConfigError("eps must be positive");
  config.stepsize.validate();
  check_initial_shape(p, config);

  RunRecord record;
  IterateState z = config.z0;
  GradientSample sample;
  double tau = 0.0;
  double h_prev = 1.0;

  for (std::size_t n = 0; n < config.n_iter; ++n) {
    const double gamma_next = config.stepsize.at(n + 1);
    problems::sample_gradient(p, z.x, rng, sample);
    switch (config.algorithm) {
      case Algorithm::general: {
        const ScheduleValues s = config.schedule.eval(schedule_time(n, tau, config.stepsize));
        advance_general(z, n, s, gamma_next, sample, config.eps);
        h_prev = s.h;
        break;
      }
      case Algorithm::adagrad: {
        const ScheduleValues s = config.schedule.eval(schedule_time(n, tau, config.stepsize));
        advance_adagrad(z, n, s, gamma_next, sample, config.eps);
        h_prev = s.h;
        break;
      }
      case Algorithm::snag:
        advance_nag(z, config.nag_alpha, gamma_next, schedule_time(n, tau, config.stepsize), sample);
        break;
    }
    tau += gamma_next;
    const std::size_t index = n + 1;
    const bool diverged = !z.all_finite() || z.norm() > kDivergenceThreshold;
    const bool last = index == config.n_iter || diverged;
    if (index % config.record_stride == 0 || last) {
      RecordedIterate r;
      r.n = index;
      r.tau = tau;
      r.state = z;
      r.lyapunov = diagnostic(p, config, z, h_prev);
      r.residual = diverged ? std::numeric_limits<double>::infinity() : final_residual(p, config, z);
      record.records.push_back(std::move(r));
    }
    if (diverged) {
      record.termination = Termination::diverged;
      record.steps = index;
      record.final_tau = tau;
      record.final_state = std::move(z);
      return record;
    }
  }
  record.steps = config.n_iter;
  record.final_tau = tau;
  record.final_state = std::move(z);
  return record;
}

RunRecord run(const Problem& p, const RunConfig& config, std::uint64_t seed) {
  RandomStream rng(seed);
  return run(p, config, rng);
}

std::vector<RunRecord> run_batch(const Problem& p, const RunConfig& config, std::size_t n_runs,
                                 std::uint64_t master_seed, unsigned threads) {
  std::vector<RunRecord> out(n_runs);
  parallel_for(n_runs, threads, [&](std::size_t i) { out[i] = run(p, config, derive_seed(master_seed, i)); });
  return out;
}

void write_run_csv(const RunRecord& record, std::ostream& out) {
  csv::Writer w(out);
  std::vector<std::string> cols{"n", "tau_n"};
  const IterateState& z = record.final_state;
  for (auto& c : csv::indexed_columns("x", z.x.size())) cols.push_back(c);
  for (auto& c : csv::indexed_columns("m", z.m.size())) cols.push_back(c);
  for (auto& c : csv::indexed_columns("v", z.v.size())) cols.push_back(c);
  cols.emplace_back("V_n");
  cols.emplace_back("residual");
  w.header(cols);
  for (const auto& r : record.records) {
    w.cell(static_cast<long long>(r.n)).cell(r.tau);
    for (Eigen::Index k = 0; k < r.state.x.size(); ++k) w.cell(r.state.x[k]);
    for (Eigen::Index k = 0; k < r.state.m.size(); ++k) w.cell(r.state.m[k]);
    for (Eigen::Index k = 0; k < r.state.v.size(); ++k) w.cell(r.state.v[k]);
    w.cell(r.lyapunov).cell(r.residual);
    w.end_row();
  }
}

double quantile(std::vector<double> values, double q) {
  if (values.empty()) throw ConfigError("quantile of an empty sample");
  std::sort(values.begin(), values.end());
  const double pos = std::clamp(q, 0.0, 1.0) * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, values.size() - 1);
  return values[lo] + (pos - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

ResidualSummary summarize(const Problem& p, const RunConfig& config, const std::vector<RunRecord>& runs) {
  ResidualSummary s;
  s.runs = runs.size();
  std::vector<double> residuals;
  for (const auto& r : runs) {
    if (r.termination == Termination::diverged) {
      ++s.diverged;
      continue;
    }
    residuals.push_back(final_residual(p, config, r.final_state));
  }
  if (!residuals.empty()) {
    s.median = quantile(residuals, 0.5);
    s.q10 = quantile(residuals, 0.1);
    s.q90 = quantile(residuals, 0.9);
    s.max = *std::max_element(residuals.begin(), residuals.end());
  } else {
    s.median = s.q10 = s.q90 = s.max = std::numeric_limits<double>::infinity();
  }
  return s;
}

}  // namespace adaflow::optimize
