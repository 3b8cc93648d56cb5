#include "adaflow/clt.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "adaflow/csv.hpp"
#include "adaflow/errors.hpp"

namespace adaflow::clt {
namespace {

bool symmetric(const Matrix& A) { return (A - A.transpose()).norm() <= 1e-10 * std::max(1.0, A.norm()); }

double relative_frobenius(const Matrix& a, const Matrix& ref) {
  const double denom = ref.norm();
  if (denom == 0.0) return a.norm() == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
  return (a - ref).norm() / denom;
}

}  // namespace

CltInputs make_inputs(const problems::Problem& p, const Vector& x_star, const schedules::ScheduleSpec& spec,
                      const optimize::StepsizeSpec& stepsize, double eps) {
  if (x_star.size() != p.dimension) throw ConfigError("x* has wrong dimension");
  if (p.grad(x_star).norm() > 1e-8) throw DomainError("x* is not a critical point of F");
  CltInputs in;
  in.x_star = x_star;
  in.hessian = p.hess(x_star);
  in.s_star = problems::second_moment(p, x_star);
  in.noise_cov = problems::noise_covariance(p, x_star);
  in.limits = spec.limits();
  in.stepsize = stepsize;
  in.eps = eps;
  validate(in);
  return in;
}

void validate(const CltInputs& in) {
  const auto d = in.x_star.size();
  if (d == 0) throw ConfigError("CLT inputs are empty");
  if (in.hessian.rows() != d || in.hessian.cols() != d || in.s_star.size() != d || in.noise_cov.rows() != d ||
      in.noise_cov.cols() != d)
    throw ConfigError("CLT inputs have inconsistent shapes");
  if (!symmetric(in.hessian)) throw ConfigError("Hessian at x* is not symmetric");
  if (!symmetric(in.noise_cov)) throw ConfigError("noise covariance is not symmetric");
  if (spectral::sym_eigen(in.hessian).eigenvalues[0] <= 0.0)
    throw ConfigError("Hessian at x* is not positive definite");
  if (spectral::sym_eigen(in.noise_cov).eigenvalues[0] < -1e-9 * std::max(1.0, in.noise_cov.norm()))
    throw ConfigError("noise covariance is not positive semidefinite");
  if (!(in.limits.r > 0.0) || !(in.limits.h > 0.0) || !(in.limits.q > 0.0) || in.limits.p < 0.0)
    throw ConfigError("CLT needs r_inf, h_inf, q_inf > 0 and p_inf >= 0");
  if (!(in.eps > 0.0)) throw ConfigError("eps must be positive");
  in.stepsize.validate();
}

Vector v_star(const CltInputs& in) {
  if (!(in.limits.q > 0.0)) throw DomainError("v* needs q_inf > 0");
  return (in.limits.p / in.limits.q) * in.s_star;
}

Vector v_matrix_diagonal(const CltInputs& in) { return (v_star(in).array() + in.eps).rsqrt(); }

Matrix v_matrix(const CltInputs& in) { return v_matrix_diagonal(in).asDiagonal(); }

double rate_L(double r_inf, double h_inf, double pi1) {
  if (!(r_inf > 0.0) || !(pi1 > 0.0)) throw DomainError("rate_L needs r_inf > 0 and pi_1 > 0");
  return 0.5 * r_inf * (1.0 - std::sqrt(std::max(1.0 - 4.0 * h_inf * pi1 / (r_inf * r_inf), 0.0)));
}

double rate_L(const CltInputs& in, double pi1) { return rate_L(in.limits.r, in.limits.h, pi1); }

double theta(const optimize::StepsizeSpec& stepsize, double l_wedge_q) {
  stepsize.validate();
  if (stepsize.alpha < 1.0) return 0.0;
  if (!(stepsize.gamma0 > 1.0 / (2.0 * l_wedge_q))) {
    std::ostringstream os;
    os << "with alpha = 1 the step size needs gamma0 > 1/(2 min(L, q_inf)) = " << 1.0 / (2.0 * l_wedge_q)
       << ", got gamma0 = " << stepsize.gamma0;
    throw StepsizeConstraintError(os.str());
  }
  return 1.0 / (2.0 * stepsize.gamma0);
}

spectral::SymmetricEigen preconditioned_eigen(const CltInputs& in) {
  const Matrix half = spectral::diag_sqrt(v_matrix_diagonal(in));
  return spectral::sym_eigen(half * in.hessian * half);
}

double checked_theta(const CltInputs& in) {
  const double L = rate_L(in, preconditioned_eigen(in).eigenvalues[0]);
  return theta(in.stepsize, std::min(L, in.limits.q));
}

Matrix clt_matrix(const CltInputs& in) {
  const auto d = in.x_star.size();
  Matrix H = Matrix::Zero(2 * d, 2 * d);
  H.topLeftCorner(d, d) = -in.limits.r * Matrix::Identity(d, d);
  H.topRightCorner(d, d) = in.limits.h * in.hessian;
  H.bottomLeftCorner(d, d) = -v_matrix(in);
  return H;
}

Matrix gamma_lyapunov(const CltInputs& in) {
  validate(in);
  const auto d = in.x_star.size();
  const double th = checked_theta(in);
  const Matrix B = clt_matrix(in) + th * Matrix::Identity(2 * d, 2 * d);
  Matrix Q = Matrix::Zero(2 * d, 2 * d);
  Q.topLeftCorner(d, d) = in.limits.h * in.limits.h * in.noise_cov;
  return spectral::lyapunov_solve(B, Q);
}

Matrix gamma2_closed_form(const CltInputs& in) {
  validate(in);
  const double r = in.limits.r;
  const double h = in.limits.h;
  const double th = checked_theta(in);
  const double damp = r - 2.0 * th;
  if (!(damp > 0.0)) throw DegenerateDenominatorError("closed form needs r_inf - 2 theta > 0");

  const Matrix half = spectral::diag_sqrt(v_matrix_diagonal(in));
  const spectral::SymmetricEigen eig = spectral::sym_eigen(half * in.hessian * half);
  const Matrix& P = eig.vectors;
  const Vector& pi = eig.eigenvalues;
  const Matrix C = P.transpose() * half * in.noise_cov * half * P;

  const auto d = pi.size();
  Matrix inner(d, d);
  for (Eigen::Index k = 0; k < d; ++k) {
    for (Eigen::Index l = 0; l < d; ++l) {
      const double gap = pi[k] - pi[l];
      const double denom = (damp / h) * (pi[k] + pi[l] + 2.0 * th * (th - r) / h) + gap * gap / (2.0 * damp);
      if (!(denom > 0.0)) {
        std::ostringstream os;
        os << "closed-form denominator is not positive at (" << k << ", " << l << ")";
        throw DegenerateDenominatorError(os.str());
      }
      inner(k, l) = C(k, l) / denom;
    }
  }
  const Matrix G2 = half * P * inner * P.transpose() * half;
  return 0.5 * (G2 + G2.transpose());
}

CltResult analyze(const CltInputs& in) {
  validate(in);
  const auto d = in.x_star.size();
  CltResult res;
  res.v_star = v_star(in);
  res.V = v_matrix(in);
  res.eigen = preconditioned_eigen(in);
  res.L = rate_L(in, res.eigen.eigenvalues[0]);
  res.theta = checked_theta(in);
  res.H = clt_matrix(in);
  res.margin = spectral::hurwitz_margin_block(in.limits.r, in.limits.h, in.hessian, v_matrix_diagonal(in));
  const Matrix half = spectral::diag_sqrt(v_matrix_diagonal(in));
  res.C = res.eigen.vectors.transpose() * half * in.noise_cov * half * res.eigen.vectors;
  res.Gamma = gamma_lyapunov(in);
  res.Gamma2 = gamma2_closed_form(in);
  res.consistency = (res.Gamma2 - res.Gamma.bottomRightCorner(d, d)).norm() / (1.0 + res.Gamma.norm());
  return res;
}

EmpiricalClt empirical_clt(const problems::Problem& p, const schedules::ScheduleSpec& spec,
                           const optimize::StepsizeSpec& stepsize, const Vector& x_star, double eps,
                           const EmpiricalOptions& options) {
  const CltInputs in = make_inputs(p, x_star, spec, stepsize, eps);
  const CltResult reference = analyze(in);
  const auto d = x_star.size();

  optimize::RunConfig config;
  config.algorithm = optimize::Algorithm::general;
  config.schedule = spec;
  config.stepsize = stepsize;
  config.n_iter = options.n_iter;
  config.record_stride = options.n_iter;
  config.eps = eps;
  config.z0.v = reference.v_star;
  config.z0.m = Vector::Zero(d);
  config.z0.x = x_star;

  const auto runs = optimize::run_batch(p, config, options.n_runs, options.master_seed, options.threads);
  const double scale = 1.0 / std::sqrt(stepsize.at(options.n_iter));

  EmpiricalClt out;
  for (std::size_t i = 0; i < runs.size(); ++i) {
    const auto& r = runs[i];
    if (r.termination == optimize::Termination::diverged) {
      ++out.diverged;
      continue;
    }
    const IterateState& z = r.final_state;
    const double dist = std::sqrt((z.v - reference.v_star).squaredNorm() + z.m.squaredNorm() +
                                  (z.x - x_star).squaredNorm());
    if (!(dist <= options.filter_threshold)) {
      ++out.filtered;
      continue;
    }
    Vector s(2 * d);
    s << scale * z.m, scale * (z.x - x_star);
    out.samples.push_back(std::move(s));
    out.kept.push_back(i);
  }

  const std::size_t n = out.samples.size();
  out.mean = Vector::Zero(2 * d);
  out.covariance = Matrix::Zero(2 * d, 2 * d);
  if (n >= 2) {
    for (const auto& s : out.samples) out.mean += s;
    out.mean /= static_cast<double>(n);
    for (const auto& s : out.samples) {
      const Vector c = s - out.mean;
      out.covariance.noalias() += c * c.transpose();
    }
    out.covariance /= static_cast<double>(n - 1);
    out.mc_band = std::sqrt(2.0 / static_cast<double>(n - 1));
  } else {
    out.mc_band = std::numeric_limits<double>::infinity();
  }
  out.x_block = out.covariance.bottomRightCorner(d, d);
  out.rel_error_gamma = relative_frobenius(out.covariance, reference.Gamma);
  out.rel_error_gamma2 = relative_frobenius(out.x_block, reference.Gamma2);
  return out;
}

void write_samples_csv(const EmpiricalClt& e, std::ostream& out) {
  csv::Writer w(out);
  const long long d = e.samples.empty() ? e.x_block.rows() : e.samples.front().size() / 2;
  std::vector<std::string> cols{"run"};
  for (auto& c : csv::indexed_columns("m", d)) cols.push_back(c);
  for (auto& c : csv::indexed_columns("x", d)) cols.push_back(c);
  w.header(cols);
  for (std::size_t i = 0; i < e.samples.size(); ++i) {
    w.cell(static_cast<long long>(e.kept[i]));
    for (Eigen::Index k = 0; k < e.samples[i].size(); ++k) w.cell(e.samples[i][k]);
    w.end_row();
  }
}

}  // namespace adaflow::clt
