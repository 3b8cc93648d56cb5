#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

#include "adaflow/optimize.hpp"
#include "adaflow/problems.hpp"
#include "adaflow/schedules.hpp"

namespace adaflow::cli {

inline constexpr int kConfigVersion = 1;

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitNumerical = 3;

struct NoiseConfig {
  std::string kind = "none";  ///< none | gaussian
  double sigma = 0.0;

  bool operator==(const NoiseConfig&) const = default;
};

struct ProblemConfig {
  std::string name = "quadratic_diag";  ///< quadratic_diag | saddle_quartic | finite_sum_ls
  std::vector<double> eigenvalues{1.0, 2.0};
  NoiseConfig noise;
  // finite_sum_ls only
  std::size_t rows = 20;
  std::size_t dim = 2;
  std::size_t batch = 1;
  std::uint64_t data_seed = 1;

  bool operator==(const ProblemConfig&) const = default;
};

/// Custom schedules are c(t) = limit + amplitude / (1 + t)^power per coefficient.
struct ScheduleConfig {
  std::string kind = "adam";  ///< adam | constant | heavy_ball | nag | decaying
  double lambda = 1.0;
  double alpha1 = 1.0;
  double alpha2 = 1.0;
  ScheduleValues values{1.0, 1.0, 1.0, 1.0};  ///< constant
  double friction = 1.0;                      ///< heavy_ball
  double nag_alpha = 3.0;                     ///< nag
  ScheduleValues limits{1.0, 1.0, 1.0, 1.0};  ///< decaying
  ScheduleValues amplitude{0.0, 0.0, 0.0, 0.0};
  double power = 1.0;

  bool operator==(const ScheduleConfig&) const = default;
};

struct OdeConfig {
  std::string kind = "general";  ///< general | adagrad | nesterov
  double nesterov_alpha = 3.0;
  std::vector<double> x0;           ///< empty: all ones
  std::string initial = "compatible";  ///< compatible | zero
  double t0 = 0.1;
  double T = 200.0;
  double tol = 1e-8;
  double base_step = 1e-2;
  bool change_of_variable = false;

  bool operator==(const OdeConfig&) const = default;
};

struct OptimizeConfig {
  std::string algorithm = "general";
  std::size_t n_iter = 100000;
  std::size_t n_runs = 100;
  std::size_t record_stride = 1000;
  std::vector<double> x0;  ///< empty: all ones
  double nag_alpha = 3.0;

  bool operator==(const OptimizeConfig&) const = default;
};

struct CltConfig {
  std::vector<double> x_star;  ///< empty: first declared minimum
  bool empirical = true;
  std::size_t n_iter = 200000;
  std::size_t n_runs = 2000;
  double filter_threshold = 0.1;

  bool operator==(const CltConfig&) const = default;
};

struct TrapsConfig {
  std::vector<double> point;  ///< empty: first declared saddle or maximum
  std::string algorithm = "general";  ///< general | snag
  std::size_t n_runs = 200;
  std::size_t n_iter = 100000;
  double init_radius = 0.0;
  double radius = 1e-2;
  double nag_alpha = 3.0;
  std::size_t avt_n_max = 1000000;

  bool operator==(const TrapsConfig&) const = default;
};

struct ExperimentConfig {
  int version = kConfigVersion;
  ProblemConfig problem;
  ScheduleConfig schedule;
  optimize::StepsizeSpec stepsize{0.1, 0.7};
  double eps = 1e-8;
  std::uint64_t seed = 1;
  std::optional<OdeConfig> ode;
  std::optional<OptimizeConfig> optimize;
  std::optional<CltConfig> clt;
  std::optional<TrapsConfig> traps;

  bool operator==(const ExperimentConfig&) const = default;
};

/// Strict parse: unknown keys, wrong types and version mismatch throw ConfigError.
[[nodiscard]] ExperimentConfig parse_config(const nlohmann::json& j);
[[nodiscard]] ExperimentConfig parse_config_text(const std::string& text);
[[nodiscard]] ExperimentConfig load_config(const std::filesystem::path& path);

/// Canonical JSON; parse_config(to_json(c)) == c.
[[nodiscard]] nlohmann::json to_json(const ExperimentConfig& c);

[[nodiscard]] problems::Problem build_problem(const ProblemConfig& c);
[[nodiscard]] schedules::ScheduleSpec build_schedule(const ScheduleConfig& c);

/// --threads value if given, else ADAFLOW_THREADS, else 1. Throws ConfigError
/// for a malformed or zero count.
[[nodiscard]] unsigned resolve_threads(std::optional<long long> flag);

/// Runs one subcommand (ode | optimize | clt | traps). All results are
/// computed before `out_dir` is touched, so failures leave no files.
/// Returns the process exit code; messages go to `log` and `err`.
int run_subcommand(const std::string& command, const ExperimentConfig& config, const std::filesystem::path& out_dir,
                   unsigned threads, std::ostream& log, std::ostream& err);

/// Loads the config file and dispatches; config errors map to exit code 2.
int run_from_file(const std::string& command, const std::filesystem::path& config_path,
                  const std::filesystem::path& out_dir, std::optional<long long> threads, std::ostream& log,
                  std::ostream& err);

}  // namespace adaflow::cli
