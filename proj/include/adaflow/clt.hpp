#pragma once

#include <cstddef>
#include <cstdint>
#include <limits>
#include <ostream>
#include <vector>

#include "adaflow/optimize.hpp"
#include "adaflow/problems.hpp"
#include "adaflow/schedules.hpp"
#include "adaflow/spectral.hpp"
#include "adaflow/types.hpp"

namespace adaflow::clt {

/// Local data of the general method at a strict local minimum.
struct CltInputs {
  Vector x_star;
  Matrix hessian;    ///< Hess F(x*), symmetric positive definite
  Vector s_star;     ///< S(x*)
  Matrix noise_cov;  ///< Cov(grad f(x*, xi)), symmetric PSD
  ScheduleValues limits;
  optimize::StepsizeSpec stepsize;
  double eps = 1e-8;
};

/// Gathers the inputs from a problem. Throws DomainError when
/// |grad F(x*)| > 1e-8 and ConfigError when the Hessian is not positive definite.
[[nodiscard]] CltInputs make_inputs(const problems::Problem& p, const Vector& x_star,
                                    const schedules::ScheduleSpec& spec, const optimize::StepsizeSpec& stepsize,
                                    double eps);

/// Checks shapes, symmetry, positive definiteness of the Hessian, PSD noise
/// covariance and positive limits r, h, q. Throws ConfigError.
void validate(const CltInputs& in);

/// p_inf S(x*) / q_inf. Throws DomainError when q_inf <= 0.
[[nodiscard]] Vector v_star(const CltInputs& in);

/// diag((eps + v*)^(-1/2)).
[[nodiscard]] Matrix v_matrix(const CltInputs& in);
[[nodiscard]] Vector v_matrix_diagonal(const CltInputs& in);

/// r/2 (1 - sqrt(max(1 - 4 h pi1 / r^2, 0))).
[[nodiscard]] double rate_L(double r_inf, double h_inf, double pi1);
[[nodiscard]] double rate_L(const CltInputs& in, double pi1);

/// 0 for alpha < 1 and 1/(2 gamma0) for alpha = 1. In the second case
/// gamma0 > 1/(2 l_wedge_q) is required (StepsizeConstraintError); the
/// default bound disables the check.
[[nodiscard]] double theta(const optimize::StepsizeSpec& stepsize,
                           double l_wedge_q = std::numeric_limits<double>::infinity());

/// [[-r I, h H], [-V, 0]].
[[nodiscard]] Matrix clt_matrix(const CltInputs& in);

/// Eigen-pair of V^(1/2) H V^(1/2).
[[nodiscard]] spectral::SymmetricEigen preconditioned_eigen(const CltInputs& in);

/// The checked theta of the inputs (uses min(L, q_inf) for the bound).
[[nodiscard]] double checked_theta(const CltInputs& in);

/// Solution of (H + theta I) G + G (H + theta I)^T = -blockdiag(h^2 Q, 0).
[[nodiscard]] Matrix gamma_lyapunov(const CltInputs& in);

/// Closed-form x-block of the covariance.
/// Throws DegenerateDenominatorError when r - 2 theta <= 0 or some
/// denominator is not positive.
[[nodiscard]] Matrix gamma2_closed_form(const CltInputs& in);

struct CltResult {
  Vector v_star;
  Matrix V;
  spectral::SymmetricEigen eigen;
  double L = 0.0;
  double theta = 0.0;
  double margin = 0.0;  ///< Hurwitz margin of the CLT matrix
  Matrix H;             ///< the 2d x 2d CLT matrix
  Matrix Gamma;
  Matrix Gamma2;
  Matrix C;
  /// |Gamma2 - lower-right block of Gamma|_F / (1 + |Gamma|_F)
  double consistency = 0.0;
};

[[nodiscard]] CltResult analyze(const CltInputs& in);

struct EmpiricalOptions {
  std::size_t n_iter = 200000;
  std::size_t n_runs = 2000;
  std::uint64_t master_seed = 1;
  unsigned threads = 1;
  /// Runs whose final |z - z*| exceeds this are treated as not converging
  /// to z* and excluded.
  double filter_threshold = 0.1;
};

struct EmpiricalClt {
  Matrix covariance;  ///< 2d x 2d sample covariance of gamma_n^(-1/2) (m_n, x_n - x*)
  Matrix x_block;
  Vector mean;
  std::vector<Vector> samples;       ///< rescaled final iterates of kept runs
  std::vector<std::size_t> kept;     ///< run index of each sample
  std::size_t diverged = 0;
  std::size_t filtered = 0;
  double rel_error_gamma = 0.0;   ///< |cov - Gamma|_F / |Gamma|_F
  double rel_error_gamma2 = 0.0;  ///< |x_block - Gamma2|_F / |Gamma2|_F
  /// Nominal relative standard error of a sample covariance, sqrt(2/(N-1)).
  double mc_band = 0.0;
};

/// Monte-Carlo check: n_runs runs of the general method started at
/// z* = (v*, 0, x*), rescaled final iterates and their covariance. Relative
/// errors are infinite when the reference covariance vanishes.
[[nodiscard]] EmpiricalClt empirical_clt(const problems::Problem& p, const schedules::ScheduleSpec& spec,
                                         const optimize::StepsizeSpec& stepsize, const Vector& x_star, double eps,
                                         const EmpiricalOptions& options);

/// One row per kept run: run, m_1..m_d, x_1..x_d (rescaled).
void write_samples_csv(const EmpiricalClt& e, std::ostream& out);

}  // namespace adaflow::clt
