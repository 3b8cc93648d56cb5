#pragma once

#include <cstddef>
#include <cstdint>
#include <ostream>
#include <string>
#include <vector>

#include "adaflow/optimize.hpp"
#include "adaflow/problems.hpp"
#include "adaflow/schedules.hpp"
#include "adaflow/types.hpp"

namespace adaflow::traps {

/// Linearization and unstable spectrum at a critical point.
struct TrapAnalysis {
  bool nesterov = false;
  Matrix D;             ///< 3d x 3d (general) or 2d x 2d (S-NAG)
  Vector v_star;        ///< empty for S-NAG
  Vector v_diag;        ///< diagonal of V (ones for S-NAG)
  Vector beta;          ///< eigenvalues of h V^(1/2) H V^(1/2) (or h H), ascending
  Matrix eigenvectors;  ///< matching columns w_k
  Vector zeta;          ///< unstable eigenvalues, zeta[j] paired with beta[phi[j]]
  std::vector<Eigen::Index> phi;
  std::size_t d_plus = 0;   ///< eigenvalues of D with positive real part
  std::size_t d_minus = 0;  ///< eigenvalues of D with negative real part
  Matrix A_plus;            ///< d_plus rows of left eigenvectors: A_plus D = diag(zeta) A_plus
  Matrix projector;         ///< orthogonal projector on the negative eigenspace
  double excitation = 0.0;  ///< |Pi_u V^(1/2) Q V^(1/2) Pi_u|_F
};

/// Vector V of the diagonal preconditioner diag((eps + v*)^(-1/2)), v* = p S(x*) / q.
[[nodiscard]] Vector preconditioner_diagonal(const problems::Problem& p, const Vector& x_star,
                                             const ScheduleValues& limits, double eps);

/// D = [[-q I, 0, p grad S(x*)], [0, -r I, h H], [0, -V, 0]].
/// Throws MissingHessianError when the problem has no Hessian and
/// UnsupportedNoiseError when grad S is unavailable.
[[nodiscard]] Matrix linearize_D(const problems::Problem& p, const Vector& x_star, const ScheduleValues& limits,
                                 double eps);

/// Unstable spectrum from (H, V, limits): beta_k, zeta_k, A_plus and the
/// projector. D is left empty.
[[nodiscard]] TrapAnalysis unstable_spectrum(const Matrix& hessian, const Vector& v_diag,
                                             const ScheduleValues& limits);

/// Number of eigenvalues of a general matrix with real part > tol.
[[nodiscard]] std::size_t count_unstable(const Matrix& D, double tol = 1e-9);

/// |Pi_u V^(1/2) Q V^(1/2) Pi_u|_F for a given projector.
[[nodiscard]] double noise_excitation(const Matrix& projector, const Vector& v_diag, const Matrix& noise_cov);

/// Projector on the negative eigenspace of V^(1/2) H V^(1/2).
[[nodiscard]] Matrix unstable_projector(const Matrix& hessian, const Vector& v_diag);

/// Excitation at x* using Q = Cov(grad f(x*, xi)).
[[nodiscard]] double noise_excitation(const problems::Problem& p, const Vector& x_star, const Vector& v_diag);

/// Full analysis of the general method at x*.
[[nodiscard]] TrapAnalysis trap_analysis(const problems::Problem& p, const Vector& x_star,
                                         const ScheduleValues& limits, double eps);

/// S-NAG analysis: D = [[0, H], [-I, 0]] on (m, x), zeta = sqrt(-beta),
/// A_plus rows [w, -zeta w], projector on the negative eigenspace of H.
[[nodiscard]] TrapAnalysis nag_trap_analysis(const problems::Problem& p, const Vector& x_star);

enum class Endpoint { saddle, minimum, maximum, unclassified, diverged };

[[nodiscard]] const char* to_string(Endpoint e);

struct EscapeRun {
  std::size_t run = 0;
  Vector endpoint;
  std::ptrdiff_t nearest = -1;  ///< index into problem.critical_points
  double distance = 0.0;
  Endpoint classification = Endpoint::unclassified;
};

struct EscapeArm {
  std::string label;
  std::vector<EscapeRun> runs;
  std::size_t at_saddle = 0;
  std::size_t at_minimum = 0;
  std::size_t at_maximum = 0;
  std::size_t unclassified = 0;
  std::size_t diverged = 0;

  [[nodiscard]] double fraction(std::size_t count) const {
    return runs.empty() ? 0.0 : static_cast<double>(count) / static_cast<double>(runs.size());
  }
};

struct EscapeOptions {
  optimize::Algorithm algorithm = optimize::Algorithm::general;
  schedules::ScheduleSpec schedule = schedules::ScheduleSpec::adam(1, 1, 1);
  optimize::StepsizeSpec stepsize{0.1, 0.7};
  double eps = 1e-8;
  double nag_alpha = 3.0;
  std::size_t n_runs = 200;
  std::size_t n_iter = 100000;
  double init_radius = 0.0;
  double radius = 1e-2;  ///< classification radius
  std::uint64_t master_seed = 1;
  unsigned threads = 1;
};

struct EscapeReport {
  EscapeArm excited;
  EscapeArm control;
  double excitation = 0.0;
  std::size_t d_plus = 0;
};

/// Runs from the saddle-adapted state z* = (v*, 0, x*) with x perturbed
/// uniformly in the ball of radius init_radius (excited arm), and from z*
/// exactly without noise (control arm). Requires alpha > 1/2 and a critical
/// point with a negative Hessian eigenvalue (ConfigError).
[[nodiscard]] EscapeReport escape_experiment(const problems::Problem& p, const Vector& saddle,
                                             const EscapeOptions& options);

/// Nearest declared critical point and its classification.
[[nodiscard]] EscapeRun classify_endpoint(const problems::Problem& p, const Vector& x, double radius);

/// Columns run, x_1..x_d, nearest, distance, classification.
void write_escape_csv(const EscapeArm& arm, std::ostream& out);

enum class Verdict { converging, diverging, inconclusive };

[[nodiscard]] const char* to_string(Verdict v);

struct SeriesDiagnostic {
  std::vector<std::size_t> checkpoints;  ///< 10, 100, ..., n_max
  std::vector<double> partial_sums;
  Verdict verdict = Verdict::inconclusive;
};

struct AvtReport {
  SeriesDiagnostic schedule_mismatch;  ///< sum (q_inf p_n - p_inf q_n)^2
  SeriesDiagnostic step_squares;       ///< sum gamma_n^2
};

/// Partial-sum diagnostics over n <= n_max, read off at decades.
/// A series is called converging when the last decade increment is both
/// smaller than 0.9 times the previous one and at most 5% of the sum,
/// diverging when decade increments do not shrink, inconclusive otherwise.
[[nodiscard]] AvtReport check_avt_assumptions(const schedules::ScheduleSpec& spec,
                                              const optimize::StepsizeSpec& stepsize,
                                              std::size_t n_max = 1000000);

/// Verdict of a sequence of decade partial sums (exposed for testing).
[[nodiscard]] Verdict series_verdict(const std::vector<double>& partial_sums);

}  // namespace adaflow::traps
