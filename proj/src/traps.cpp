#include "adaflow/traps.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "adaflow/csv.hpp"
#include "adaflow/errors.hpp"
#include "adaflow/parallel.hpp"
#include <Eigen/Eigenvalues>

#include "adaflow/spectral.hpp"

namespace adaflow::traps {
namespace {

Matrix symmetrized(const Matrix& A) { return 0.5 * (A + A.transpose()); }

Matrix negative_projector(const spectral::SymmetricEigen& eig) {
  const auto d = eig.eigenvalues.size();
  Matrix P = Matrix::Zero(d, d);
  for (Eigen::Index k = 0; k < d; ++k)
    if (eig.eigenvalues[k] < 0.0) P.noalias() += eig.vectors.col(k) * eig.vectors.col(k).transpose();
  return P;
}

IterateState saddle_state(optimize::Algorithm algorithm, const Vector& v_star, const Vector& x) {
  IterateState z;
  z.x = x;
  if (algorithm != optimize::Algorithm::adagrad) z.m = Vector::Zero(x.size());
  if (algorithm != optimize::Algorithm::snag) z.v = v_star;
  return z;
}

Vector uniform_in_ball(Eigen::Index d, double radius, RandomStream& rng) {
  Vector dir(d);
  for (Eigen::Index k = 0; k < d; ++k) dir[k] = rng.normal();
  const double n = dir.norm();
  if (n == 0.0) return Vector::Zero(d);
  return dir * (radius * std::pow(rng.uniform(), 1.0 / static_cast<double>(d)) / n);
}

void tally(EscapeArm& arm) {
  for (const auto& r : arm.runs) {
    switch (r.classification) {
      case Endpoint::saddle: ++arm.at_saddle; break;
      case Endpoint::minimum: ++arm.at_minimum; break;
      case Endpoint::maximum: ++arm.at_maximum; break;
      case Endpoint::unclassified: ++arm.unclassified; break;
      case Endpoint::diverged: ++arm.diverged; break;
    }
  }
}

}  // namespace

Vector preconditioner_diagonal(const problems::Problem& p, const Vector& x_star, const ScheduleValues& limits,
                               double eps) {
  if (!(limits.q > 0.0)) throw DomainError("v* needs q_inf > 0");
  const Vector v_star = (limits.p / limits.q) * problems::second_moment(p, x_star);
  return (v_star.array() + eps).rsqrt();
}

Matrix linearize_D(const problems::Problem& p, const Vector& x_star, const ScheduleValues& limits, double eps) {
  const auto d = p.dimension;
  if (x_star.size() != d) throw ConfigError("x* has wrong dimension");
  const Matrix H = p.hess(x_star);
  const Matrix dS = problems::second_moment_jacobian(p, x_star);
  const Vector V = preconditioner_diagonal(p, x_star, limits, eps);
  Matrix D = Matrix::Zero(3 * d, 3 * d);
  D.block(0, 0, d, d) = -limits.q * Matrix::Identity(d, d);
  D.block(0, 2 * d, d, d) = limits.p * dS;
  D.block(d, d, d, d) = -limits.r * Matrix::Identity(d, d);
  D.block(d, 2 * d, d, d) = limits.h * H;
  D.block(2 * d, d, d, d) = -Matrix(V.asDiagonal());
  return D;
}

TrapAnalysis unstable_spectrum(const Matrix& hessian, const Vector& v_diag, const ScheduleValues& limits) {
  const auto d = hessian.rows();
  if (hessian.cols() != d || v_diag.size() != d) throw ConfigError("unstable_spectrum: shape mismatch");
  if ((v_diag.array() <= 0.0).any()) throw DomainError("preconditioner must be positive");
  const double r = limits.r;
  const Matrix half = spectral::diag_sqrt(v_diag);
  const Matrix inv_half = spectral::diag_inv_sqrt(v_diag);
  const auto eig = spectral::sym_eigen(symmetrized(limits.h * half * hessian * half));

  TrapAnalysis t;
  t.v_diag = v_diag;
  t.beta = eig.eigenvalues;
  t.eigenvectors = eig.vectors;
  t.d_minus = static_cast<std::size_t>(d);  // the -q_inf block
  for (Eigen::Index k = 0; k < d; ++k) {
    const double b = t.beta[k];
    if (b < 0.0) {
      t.phi.push_back(k);
      ++t.d_plus;
      ++t.d_minus;
    } else if (b > 0.0) {
      t.d_minus += 2;
    } else {
      t.d_minus += 1;  // roots 0 and -r
    }
  }
  t.zeta.resize(static_cast<Eigen::Index>(t.d_plus));
  t.A_plus = Matrix::Zero(static_cast<Eigen::Index>(t.d_plus), 3 * d);
  for (std::size_t j = 0; j < t.d_plus; ++j) {
    const auto k = t.phi[j];
    const auto row = static_cast<Eigen::Index>(j);
    const double z = 0.5 * (-r + std::sqrt(r * r - 4.0 * t.beta[k]));
    t.zeta[row] = z;
    const Eigen::RowVectorXd w = eig.vectors.col(k).transpose();
    t.A_plus.block(row, d, 1, d) = w * half;
    t.A_plus.block(row, 2 * d, 1, d) = -(r + z) * w * inv_half;
  }
  t.projector = negative_projector(spectral::sym_eigen(symmetrized(half * hessian * half)));
  return t;
}

std::size_t count_unstable(const Matrix& D, double tol) {
  if (D.size() == 0) return 0;
  Eigen::EigenSolver<Matrix> solver(D, false);
  if (solver.info() != Eigen::Success) throw NumericalError("eigenvalue iteration did not converge");
  const auto re = solver.eigenvalues().real();
  return static_cast<std::size_t>((re.array() > tol).count());
}

Matrix unstable_projector(const Matrix& hessian, const Vector& v_diag) {
  const Matrix half = spectral::diag_sqrt(v_diag);
  return negative_projector(spectral::sym_eigen(symmetrized(half * hessian * half)));
}

double noise_excitation(const Matrix& projector, const Vector& v_diag, const Matrix& noise_cov) {
  const Matrix half = spectral::diag_sqrt(v_diag);
  return (projector * half * noise_cov * half * projector).norm();
}

double noise_excitation(const problems::Problem& p, const Vector& x_star, const Vector& v_diag) {
  return noise_excitation(unstable_projector(p.hess(x_star), v_diag), v_diag, problems::noise_covariance(p, x_star));
}

TrapAnalysis trap_analysis(const problems::Problem& p, const Vector& x_star, const ScheduleValues& limits,
                           double eps) {
  const Vector V = preconditioner_diagonal(p, x_star, limits, eps);
  const Matrix H = p.hess(x_star);
  TrapAnalysis t = unstable_spectrum(H, V, limits);
  t.D = linearize_D(p, x_star, limits, eps);
  t.v_star = (limits.p / limits.q) * problems::second_moment(p, x_star);
  t.excitation = noise_excitation(t.projector, V, problems::noise_covariance(p, x_star));
  return t;
}

TrapAnalysis nag_trap_analysis(const problems::Problem& p, const Vector& x_star) {
  const auto d = p.dimension;
  if (x_star.size() != d) throw ConfigError("x* has wrong dimension");
  const Matrix H = symmetrized(p.hess(x_star));
  const auto eig = spectral::sym_eigen(H);

  TrapAnalysis t;
  t.nesterov = true;
  t.v_diag = Vector::Ones(d);
  t.beta = eig.eigenvalues;
  t.eigenvectors = eig.vectors;
  t.D = Matrix::Zero(2 * d, 2 * d);
  t.D.topRightCorner(d, d) = H;
  t.D.bottomLeftCorner(d, d) = -Matrix::Identity(d, d);
  for (Eigen::Index k = 0; k < d; ++k) {
    if (t.beta[k] < 0.0) {
      t.phi.push_back(k);
      ++t.d_plus;
      ++t.d_minus;
    }
  }
  t.zeta.resize(static_cast<Eigen::Index>(t.d_plus));
  t.A_plus = Matrix::Zero(static_cast<Eigen::Index>(t.d_plus), 2 * d);
  for (std::size_t j = 0; j < t.d_plus; ++j) {
    const auto k = t.phi[j];
    const auto row = static_cast<Eigen::Index>(j);
    const double z = std::sqrt(-t.beta[k]);
    t.zeta[row] = z;
    const Eigen::RowVectorXd w = eig.vectors.col(k).transpose();
    t.A_plus.block(row, 0, 1, d) = w;
    t.A_plus.block(row, d, 1, d) = -z * w;
  }
  t.projector = negative_projector(eig);
  t.excitation = noise_excitation(t.projector, t.v_diag, problems::noise_covariance(p, x_star));
  return t;
}

const char* to_string(Endpoint e) {
  switch (e) {
    case Endpoint::saddle: return "saddle";
    case Endpoint::minimum: return "minimum";
    case Endpoint::maximum: return "maximum";
    case Endpoint::unclassified: return "unclassified";
    case Endpoint::diverged: return "diverged";
  }
  return "unknown";
}

EscapeRun classify_endpoint(const problems::Problem& p, const Vector& x, double radius) {
  EscapeRun r;
  r.endpoint = x;
  r.distance = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < p.critical_points.size(); ++i) {
    const double dist = (x - p.critical_points[i].x).norm();
    if (dist < r.distance) {
      r.distance = dist;
      r.nearest = static_cast<std::ptrdiff_t>(i);
    }
  }
  if (r.nearest >= 0 && r.distance <= radius) {
    switch (p.critical_points[static_cast<std::size_t>(r.nearest)].kind) {
      case problems::CriticalKind::saddle: r.classification = Endpoint::saddle; break;
      case problems::CriticalKind::minimum: r.classification = Endpoint::minimum; break;
      case problems::CriticalKind::maximum: r.classification = Endpoint::maximum; break;
    }
  }
  return r;
}

EscapeReport escape_experiment(const problems::Problem& p, const Vector& saddle, const EscapeOptions& options) {
  options.stepsize.validate();
  if (!options.stepsize.square_summable())
    throw ConfigError("escape experiments need square-summable steps (alpha > 1/2)");
  if (options.algorithm == optimize::Algorithm::adagrad)
    throw ConfigError("escape experiments support the general and snag algorithms");
  if (p.grad(saddle).norm() > 1e-8) throw DomainError("escape start is not a critical point");
  const Matrix H = p.hess(saddle);
  if (spectral::sym_eigen(symmetrized(H)).eigenvalues[0] >= 0.0)
    throw ConfigError("escape start has no negative curvature direction");

  const ScheduleValues limits = options.schedule.limits();
  EscapeReport report;
  Vector v_star;
  if (options.algorithm == optimize::Algorithm::snag) {
    const TrapAnalysis t = nag_trap_analysis(p, saddle);
    report.excitation = t.excitation;
    report.d_plus = t.d_plus;
  } else {
    const TrapAnalysis t = trap_analysis(p, saddle, limits, options.eps);
    report.excitation = t.excitation;
    report.d_plus = t.d_plus;
    v_star = t.v_star;
  }

  optimize::RunConfig config;
  config.algorithm = options.algorithm;
  config.schedule = options.schedule;
  config.stepsize = options.stepsize;
  config.n_iter = options.n_iter;
  config.record_stride = options.n_iter;
  config.eps = options.eps;
  config.nag_alpha = options.nag_alpha;
  const IterateState start = saddle_state(options.algorithm, v_star, saddle);

  auto run_arm = [&](const problems::Problem& problem, double init_radius, const char* label) {
    EscapeArm arm;
    arm.label = label;
    arm.runs.resize(options.n_runs);
    parallel_for(options.n_runs, options.threads, [&](std::size_t i) {
      RandomStream rng(derive_seed(options.master_seed, i));
      optimize::RunConfig c = config;
      c.z0 = start;
      if (init_radius > 0.0) c.z0.x += uniform_in_ball(saddle.size(), init_radius, rng);
      const auto rec = optimize::run(problem, c, rng);
      EscapeRun r;
      if (rec.termination == optimize::Termination::diverged) {
        r.endpoint = rec.final_state.x;
        r.distance = std::numeric_limits<double>::infinity();
        r.classification = Endpoint::diverged;
      } else {
        r = classify_endpoint(problem, rec.final_state.x, options.radius);
      }
      r.run = i;
      arm.runs[i] = std::move(r);
    });
    tally(arm);
    return arm;
  };

  report.excited = run_arm(p, options.init_radius, "excited");
  report.control = run_arm(p.with_noise(problems::NoNoise{}), 0.0, "control");
  return report;
}

void write_escape_csv(const EscapeArm& arm, std::ostream& out) {
  csv::Writer w(out);
  const long long d = arm.runs.empty() ? 0 : arm.runs.front().endpoint.size();
  std::vector<std::string> cols{"run"};
  for (auto& c : csv::indexed_columns("x", d)) cols.push_back(c);
  cols.insert(cols.end(), {"nearest", "distance", "classification"});
  w.header(cols);
  for (const auto& r : arm.runs) {
    w.cell(static_cast<long long>(r.run));
    for (Eigen::Index k = 0; k < r.endpoint.size(); ++k) w.cell(r.endpoint[k]);
    w.cell(static_cast<long long>(r.nearest)).cell(r.distance).cell(std::string_view(to_string(r.classification)));
    w.end_row();
  }
}

const char* to_string(Verdict v) {
  switch (v) {
    case Verdict::converging: return "converging";
    case Verdict::diverging: return "diverging";
    case Verdict::inconclusive: return "inconclusive";
  }
  return "unknown";
}

Verdict series_verdict(const std::vector<double>& s) {
  if (s.size() < 3) return Verdict::inconclusive;
  const double total = s.back();
  const double last = s[s.size() - 1] - s[s.size() - 2];
  const double prev = s[s.size() - 2] - s[s.size() - 3];
  if (last <= 0.0) return Verdict::converging;
  if (prev <= 0.0) return Verdict::inconclusive;
  const double ratio = last / prev;
  if (ratio >= 0.9) return Verdict::diverging;
  if (last <= 0.05 * total) return Verdict::converging;
  return Verdict::inconclusive;
}

AvtReport check_avt_assumptions(const schedules::ScheduleSpec& spec, const optimize::StepsizeSpec& stepsize,
                                std::size_t n_max) {
  stepsize.validate();
  if (n_max < 10) throw ConfigError("n_max must be at least 10");
  const ScheduleValues lim = spec.limits();
  AvtReport rep;
  double mismatch = 0.0;
  double squares = 0.0;
  double tau = 0.0;
  std::size_t next_checkpoint = 10;
  for (std::size_t n = 1; n <= n_max; ++n) {
    const double g = stepsize.at(n);
    tau += g;
    const ScheduleValues s = spec.eval(tau);
    const double diff = lim.q * s.p - lim.p * s.q;
    mismatch += diff * diff;
    squares += g * g;
    if (n == next_checkpoint || n == n_max) {
      rep.schedule_mismatch.checkpoints.push_back(n);
      rep.schedule_mismatch.partial_sums.push_back(mismatch);
      rep.step_squares.checkpoints.push_back(n);
      rep.step_squares.partial_sums.push_back(squares);
      if (n == next_checkpoint) next_checkpoint *= 10;
    }
  }
  rep.schedule_mismatch.verdict = series_verdict(rep.schedule_mismatch.partial_sums);
  rep.step_squares.verdict = series_verdict(rep.step_squares.partial_sums);
  return rep;
}

}  // namespace adaflow::traps
