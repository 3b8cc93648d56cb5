#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "adaflow/problems.hpp"
#include "adaflow/random.hpp"
#include "adaflow/schedules.hpp"
#include "adaflow/types.hpp"

namespace adaflow::optimize {

/// gamma_n = gamma0 / n^alpha, n >= 1.
struct StepsizeSpec {
  double gamma0 = 0.1;
  double alpha = 1.0;

  /// Throws ConfigError unless gamma0 > 0 and alpha in (0, 1].
  void validate() const;
  [[nodiscard]] double at(std::size_t n) const;
  /// sum gamma_n^2 < infinity.
  [[nodiscard]] bool square_summable() const { return alpha > 0.5; }

  bool operator==(const StepsizeSpec&) const = default;
};

enum class Algorithm {
  general,  ///< adaptive momentum method (v, m, x)
  snag,     ///< stochastic Nesterov accelerated gradient (m, x)
  adagrad,  ///< momentum-free adaptive method (v, x)
};

[[nodiscard]] const char* to_string(Algorithm a);
/// Throws ConfigError for unknown names.
[[nodiscard]] Algorithm parse_algorithm(const std::string& name);

/// Time at which the coefficients of step n -> n+1 are sampled: tau_n for
/// n >= 1 and gamma_1 (= tau_1) for the very first step, where tau_0 = 0
/// lies outside the schedules' domain.
[[nodiscard]] double schedule_time(std::size_t n, double tau_n, const StepsizeSpec& gamma);

/// In-place update of the general method with coefficients `s` and step
/// size `gamma_next` = gamma_{n+1}:
///   v <- (1 - gamma q) v + gamma p g^2
///   m <- (1 - gamma r) m + gamma h g
///   x <- x - gamma m / sqrt(v + eps)     (new m and v)
/// Throws ConfigError when 1 - gamma q < 0, naming step n.
void advance_general(IterateState& z, std::size_t n, const ScheduleValues& s, double gamma_next,
                     const problems::GradientSample& sample, double eps);

/// In-place S-NAG update: m <- (1 - alpha gamma / tau) m + gamma g, x <- x - gamma m.
void advance_nag(IterateState& z, double nag_alpha, double gamma_next, double tau_n,
                 const problems::GradientSample& sample);

/// In-place momentum-free update: v as in the general method, x <- x - gamma g / sqrt(v + eps).
void advance_adagrad(IterateState& z, std::size_t n, const ScheduleValues& s, double gamma_next,
                     const problems::GradientSample& sample, double eps);

[[nodiscard]] IterateState step_general(const IterateState& z, std::size_t n, double tau_n,
                                        const schedules::ScheduleSpec& spec, const StepsizeSpec& gamma,
                                        const problems::GradientSample& sample, double eps);

/// Requires tau_n > 0 (DomainError).
[[nodiscard]] IterateState step_nag(const IterateState& y, std::size_t n, double nag_alpha,
                                    const StepsizeSpec& gamma, const problems::GradientSample& sample,
                                    double tau_n);

[[nodiscard]] IterateState step_adagrad(const IterateState& z, std::size_t n, double tau_n,
                                        const schedules::ScheduleSpec& spec, const StepsizeSpec& gamma,
                                        const problems::GradientSample& sample, double eps);

/// V = h_prev F(x) + 1/2 <m^2, 1/sqrt(v + eps)>.
[[nodiscard]] double lyapunov_diag(const IterateState& z, double h_prev, const problems::Problem& p, double eps);

struct RunConfig {
  Algorithm algorithm = Algorithm::general;
  schedules::ScheduleSpec schedule = schedules::ScheduleSpec::constant(1, 1, 1, 1);
  StepsizeSpec stepsize;
  std::size_t n_iter = 1000;
  std::size_t record_stride = 100;
  double eps = 1e-8;
  double nag_alpha = 3.0;
  /// Initial state; blocks not used by the algorithm must be empty.
  IterateState z0;
};

/// Shapes z0 for `algorithm`: drops unused blocks, fills missing v/m with zeros.
[[nodiscard]] IterateState shaped_initial_state(Algorithm algorithm, const Vector& x0,
                                                const std::optional<Vector>& m0 = std::nullopt,
                                                const std::optional<Vector>& v0 = std::nullopt);

enum class Termination { completed, diverged };

[[nodiscard]] const char* to_string(Termination t);

struct RecordedIterate {
  std::size_t n = 0;
  double tau = 0.0;
  IterateState state;
  double lyapunov = 0.0;  ///< V_n
  double residual = 0.0;  ///< distance proxy to the equilibrium set
};

struct RunRecord {
  IterateState final_state;
  std::size_t steps = 0;  ///< index n of final_state
  double final_tau = 0.0;
  Termination termination = Termination::completed;
  std::vector<RecordedIterate> records;  ///< every record_stride steps, plus the last one
};

constexpr double kDivergenceThreshold = 1e12;

/// Runs the chosen method for n_iter steps with the given stream. Stops early
/// with Termination::diverged when |z_n| > 1e12 or z_n is not finite.
[[nodiscard]] RunRecord run(const problems::Problem& p, const RunConfig& config, RandomStream& rng);

/// Same, with a fresh stream keyed by `seed`.
[[nodiscard]] RunRecord run(const problems::Problem& p, const RunConfig& config, std::uint64_t seed);

/// n_runs independent runs; run i uses the stream derive_seed(master_seed, i).
/// Results are ordered by run index whatever the thread count.
[[nodiscard]] std::vector<RunRecord> run_batch(const problems::Problem& p, const RunConfig& config,
                                               std::size_t n_runs, std::uint64_t master_seed, unsigned threads);

/// Residual to the equilibrium set of the method's limiting dynamics.
[[nodiscard]] double final_residual(const problems::Problem& p, const RunConfig& config, const IterateState& z);

/// Columns n, tau_n, x..., m..., v..., V_n, residual.
void write_run_csv(const RunRecord& record, std::ostream& out);

/// Linear-interpolation quantile (q in [0, 1]) of a nonempty sample.
[[nodiscard]] double quantile(std::vector<double> values, double q);

struct ResidualSummary {
  std::size_t runs = 0;
  std::size_t diverged = 0;
  double median = 0.0;
  double q10 = 0.0;
  double q90 = 0.0;
  double max = 0.0;
};

/// Quantiles of the final residuals over completed runs.
[[nodiscard]] ResidualSummary summarize(const problems::Problem& p, const RunConfig& config,
                                        const std::vector<RunRecord>& runs);

}  // namespace adaflow::optimize
