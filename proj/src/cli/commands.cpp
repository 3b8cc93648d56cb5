#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <utility>

#include "adaflow/cli.hpp"
#include "adaflow/clt.hpp"
#include "adaflow/csv.hpp"
#include "adaflow/errors.hpp"
#include "adaflow/integrate.hpp"
#include "adaflow/traps.hpp"

namespace adaflow::cli {
namespace {

using nlohmann::json;

struct OutputFile {
  std::string name;  ///< relative to the output directory
  std::string content;
};

struct Outcome {
  std::vector<OutputFile> files;
  std::vector<std::string> notes;     ///< printed to the log
  std::vector<std::string> warnings;  ///< printed to the error stream
};

json matrix_json(const Matrix& A) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < A.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < A.cols(); ++j) row.push_back(A(i, j));
    rows.push_back(row);
  }
  return rows;
}

json vector_json(const Vector& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

std::string matrix_csv(const Matrix& A) {
  std::ostringstream os;
  csv::Writer w(os);
  w.header(csv::indexed_columns("c", A.cols()));
  for (Eigen::Index i = 0; i < A.rows(); ++i) {
    for (Eigen::Index j = 0; j < A.cols(); ++j) w.cell(A(i, j));
    w.end_row();
  }
  return os.str();
}

std::string dump(const json& j) { return j.dump(2) + "\n"; }

Vector to_vector(const std::vector<double>& values, Eigen::Index d, const char* what) {
  if (values.empty()) return Vector::Ones(d);
  if (static_cast<Eigen::Index>(values.size()) != d) {
    std::ostringstream os;
    os << "config: '" << what << "' has " << values.size() << " entries, problem dimension is " << d;
    throw ConfigError(os.str());
  }
  return Eigen::Map<const Vector>(values.data(), d);
}

Vector declared_point(const problems::Problem& p, const std::vector<double>& given, const char* what,
                      bool want_minimum) {
  if (!given.empty()) return to_vector(given, p.dimension, what);
  for (const auto& cp : p.critical_points) {
    const bool is_min = cp.kind == problems::CriticalKind::minimum;
    if (is_min == want_minimum) return cp.x;
  }
  throw ConfigError(std::string("config: '") + what + "' is required for problem " + p.name);
}

std::string format(double x) { return csv::format_double(x); }

Outcome cmd_ode(const ExperimentConfig& c) {
  const OdeConfig o = c.ode.value_or(OdeConfig{});
  const auto p = build_problem(c.problem);
  const auto spec = build_schedule(c.schedule);
  const Vector x0 = to_vector(o.x0, p.dimension, "ode.x0");

  integrate::OdeKind kind = integrate::GeneralOde{};
  if (o.kind == "adagrad") kind = integrate::AdagradOde{};
  if (o.kind == "nesterov") kind = integrate::NesterovOde{o.nesterov_alpha};

  IterateState z0;
  if (o.initial == "compatible" && o.kind != "nesterov") {
    z0 = integrate::compatible_initial_state(spec, p, x0);
  } else {
    z0.x = x0;
    z0.m = Vector::Zero(p.dimension);
    z0.v = Vector::Zero(p.dimension);
  }
  if (o.kind == "adagrad") z0.m.resize(0);
  if (o.kind == "nesterov") z0.v.resize(0);

  integrate::IntegratorOptions opts;
  opts.eps = c.eps;
  opts.tol = o.tol;
  opts.base_step = o.base_step;
  const auto traj = integrate::integrate(kind, spec, p, z0, o.t0, o.T, opts);
  const ScheduleValues limits = o.kind == "nesterov" ? ScheduleValues{} : spec.limits();

  std::ostringstream os;
  {
    csv::Writer w(os);
    std::vector<std::string> cols{"t"};
    const IterateState& z = traj.states.front();
    for (auto& n : csv::indexed_columns("v", z.v.size())) cols.push_back(n);
    for (auto& n : csv::indexed_columns("m", z.m.size())) cols.push_back(n);
    for (auto& n : csv::indexed_columns("x", z.x.size())) cols.push_back(n);
    cols.emplace_back("energy");
    cols.emplace_back("residual");
    w.header(cols);
    for (std::size_t i = 0; i < traj.size(); ++i) {
      const IterateState& s = traj.states[i];
      w.cell(traj.times[i]);
      for (Eigen::Index k = 0; k < s.v.size(); ++k) w.cell(s.v[k]);
      for (Eigen::Index k = 0; k < s.m.size(); ++k) w.cell(s.m[k]);
      for (Eigen::Index k = 0; k < s.x.size(); ++k) w.cell(s.x[k]);
      w.cell(traj.energies[i]).cell(integrate::residual_to_equilibrium(kind, p, s, limits));
      w.end_row();
    }
  }

  Outcome out;
  const double residual = integrate::residual_to_equilibrium(kind, p, traj.final_state(), limits);
  json summary{{"command", "ode"},
               {"kind", o.kind},
               {"problem", p.name},
               {"t0", o.t0},
               {"T", o.T},
               {"stored_points", traj.size()},
               {"final_residual", residual},
               {"final_energy", traj.energies.back()},
               {"final_x", vector_json(traj.final_state().x)}};
  out.notes.push_back("final residual to equilibrium: " + format(residual));
  if (o.change_of_variable) {
    const auto rep = integrate::nesterov_change_of_variable(traj, o.nesterov_alpha, p);
    summary["change_of_variable"] = {{"kappa", rep.kappa},       {"beta", rep.beta},   {"max_residual", rep.max_residual},
                                     {"points", rep.points},     {"t_min", rep.t_min}, {"t_max", rep.t_max}};
    out.notes.push_back("change-of-variable residual: " + format(rep.max_residual));
  }
  out.files.push_back({"trajectory.csv", os.str()});
  out.files.push_back({"summary.json", dump(summary)});
  return out;
}

Outcome cmd_optimize(const ExperimentConfig& c, unsigned threads) {
  const OptimizeConfig o = c.optimize.value_or(OptimizeConfig{});
  const auto p = build_problem(c.problem);
  optimize::RunConfig rc;
  rc.algorithm = optimize::parse_algorithm(o.algorithm);
  rc.schedule = build_schedule(c.schedule);
  rc.stepsize = c.stepsize;
  rc.n_iter = o.n_iter;
  rc.record_stride = o.record_stride;
  rc.eps = c.eps;
  rc.nag_alpha = o.nag_alpha;
  rc.z0 = optimize::shaped_initial_state(rc.algorithm, to_vector(o.x0, p.dimension, "optimize.x0"));

  const auto runs = optimize::run_batch(p, rc, o.n_runs, c.seed, threads);
  const auto summary = optimize::summarize(p, rc, runs);

  Outcome out;
  const int width = static_cast<int>(std::to_string(o.n_runs - 1).size());
  std::ostringstream finals;
  csv::Writer fw(finals);
  std::vector<std::string> cols{"run", "termination", "steps", "tau_n"};
  for (auto& n : csv::indexed_columns("x", p.dimension)) cols.push_back(n);
  cols.emplace_back("residual");
  fw.header(cols);
  for (std::size_t i = 0; i < runs.size(); ++i) {
    std::ostringstream name;
    name << "runs/run_" << std::setw(std::max(width, 4)) << std::setfill('0') << i << ".csv";
    std::ostringstream body;
    optimize::write_run_csv(runs[i], body);
    out.files.push_back({name.str(), body.str()});

    const auto& r = runs[i];
    fw.cell(static_cast<long long>(i)).cell(std::string_view(optimize::to_string(r.termination)));
    fw.cell(static_cast<long long>(r.steps)).cell(r.final_tau);
    for (Eigen::Index k = 0; k < r.final_state.x.size(); ++k) fw.cell(r.final_state.x[k]);
    fw.cell(r.records.empty() ? 0.0 : r.records.back().residual);
    fw.end_row();
  }
  out.files.push_back({"final.csv", finals.str()});

  json sj{{"command", "optimize"},
          {"algorithm", o.algorithm},
          {"problem", p.name},
          {"runs", summary.runs},
          {"diverged", summary.diverged},
          {"residual_median", summary.median},
          {"residual_q10", summary.q10},
          {"residual_q90", summary.q90},
          {"residual_max", summary.max}};
  if (summary.diverged == summary.runs) sj["residual_median"] = nullptr;
  out.files.push_back({"summary.json", dump(sj)});
  out.notes.push_back("median final residual: " + format(summary.median) +
                      ", 90th percentile: " + format(summary.q90));
  if (summary.diverged > 0)
    out.warnings.push_back("warning: " + std::to_string(summary.diverged) + " of " + std::to_string(summary.runs) +
                           " runs diverged (|z_n| > 1e12)");
  return out;
}

Outcome cmd_clt(const ExperimentConfig& c, unsigned threads) {
  const CltConfig o = c.clt.value_or(CltConfig{});
  const auto p = build_problem(c.problem);
  const auto spec = build_schedule(c.schedule);
  const Vector x_star = declared_point(p, o.x_star, "clt.x_star", true);
  const auto in = clt::make_inputs(p, x_star, spec, c.stepsize, c.eps);
  const auto res = clt::analyze(in);

  Outcome out;
  json sj{{"command", "clt"},
          {"problem", p.name},
          {"x_star", vector_json(x_star)},
          {"v_star", vector_json(res.v_star)},
          {"V_diagonal", vector_json(res.V.diagonal())},
          {"pi", vector_json(res.eigen.eigenvalues)},
          {"P", matrix_json(res.eigen.vectors)},
          {"L", res.L},
          {"theta", res.theta},
          {"hurwitz_margin", res.margin},
          {"Gamma", matrix_json(res.Gamma)},
          {"Gamma2_closed_form", matrix_json(res.Gamma2)},
          {"C", matrix_json(res.C)},
          {"closed_form_vs_lyapunov", res.consistency}};
  out.notes.push_back("closed-form vs Lyapunov solve: " + format(res.consistency));
  out.files.push_back({"gamma.csv", matrix_csv(res.Gamma)});
  out.files.push_back({"gamma2.csv", matrix_csv(res.Gamma2)});

  if (o.empirical) {
    clt::EmpiricalOptions eo;
    eo.n_iter = o.n_iter;
    eo.n_runs = o.n_runs;
    eo.master_seed = c.seed;
    eo.threads = threads;
    eo.filter_threshold = o.filter_threshold;
    const auto e = clt::empirical_clt(p, spec, c.stepsize, x_star, c.eps, eo);
    sj["empirical"] = {{"runs", o.n_runs},
                       {"kept", e.samples.size()},
                       {"filtered", e.filtered},
                       {"diverged", e.diverged},
                       {"filter_threshold", o.filter_threshold},
                       {"filter_note", "runs are kept when their final distance to z* is below the threshold, "
                                       "a surrogate for conditioning on convergence to z*"},
                       {"covariance", matrix_json(e.covariance)},
                       {"x_block", matrix_json(e.x_block)},
                       {"mean", vector_json(e.mean)},
                       {"rel_error_gamma", e.rel_error_gamma},
                       {"rel_error_gamma2", e.rel_error_gamma2},
                       {"mc_band", e.mc_band}};
    std::ostringstream samples;
    clt::write_samples_csv(e, samples);
    out.files.push_back({"samples.csv", samples.str()});
    out.notes.push_back("empirical x-block relative error: " + format(e.rel_error_gamma2));
    if (e.diverged > 0 || e.filtered > 0)
      out.warnings.push_back("warning: excluded " + std::to_string(e.diverged) + " diverged and " +
                             std::to_string(e.filtered) + " non-converging runs");
  }
  out.files.push_back({"summary.json", dump(sj)});
  return out;
}

json series_json(const traps::SeriesDiagnostic& s) {
  return {{"checkpoints", s.checkpoints}, {"partial_sums", s.partial_sums}, {"verdict", traps::to_string(s.verdict)}};
}

json arm_json(const traps::EscapeArm& a) {
  return {{"runs", a.runs.size()},         {"at_saddle", a.at_saddle},     {"at_minimum", a.at_minimum},
          {"at_maximum", a.at_maximum},    {"unclassified", a.unclassified}, {"diverged", a.diverged},
          {"saddle_fraction", a.fraction(a.at_saddle)}, {"minimum_fraction", a.fraction(a.at_minimum)}};
}

Outcome cmd_traps(const ExperimentConfig& c, unsigned threads) {
  const TrapsConfig o = c.traps.value_or(TrapsConfig{});
  const auto p = build_problem(c.problem);
  const auto spec = build_schedule(c.schedule);
  const Vector point = declared_point(p, o.point, "traps.point", false);
  if (p.grad(point).norm() > 1e-8) throw ConfigError("config: 'traps.point' is not a critical point");
  const bool nag = o.algorithm == "snag";

  const traps::TrapAnalysis t = nag ? traps::nag_trap_analysis(p, point)
                                    : traps::trap_analysis(p, point, spec.limits(), c.eps);
  const auto avt = traps::check_avt_assumptions(spec, c.stepsize, o.avt_n_max);

  Outcome out;
  json sj{{"command", "traps"},
          {"algorithm", o.algorithm},
          {"problem", p.name},
          {"point", vector_json(point)},
          {"beta", vector_json(t.beta)},
          {"zeta", vector_json(t.zeta)},
          {"d_plus", t.d_plus},
          {"d_minus", t.d_minus},
          {"A_plus", matrix_json(t.A_plus)},
          {"excitation", t.excitation},
          {"avt", {{"schedule_mismatch", series_json(avt.schedule_mismatch)},
                   {"step_squares", series_json(avt.step_squares)}}}};
  out.notes.push_back("unstable dimension d+ = " + std::to_string(t.d_plus) + ", excitation " + format(t.excitation));

  if (t.d_plus == 0) {
    sj["escape"] = nullptr;
    sj["escape_note"] = "point is not a trap (no unstable direction); escape experiment skipped";
    out.notes.push_back("no unstable direction at this point; escape experiment skipped");
  } else {
    traps::EscapeOptions eo;
    eo.algorithm = nag ? optimize::Algorithm::snag : optimize::Algorithm::general;
    eo.schedule = spec;
    eo.stepsize = c.stepsize;
    eo.eps = c.eps;
    eo.nag_alpha = o.nag_alpha;
    eo.n_runs = o.n_runs;
    eo.n_iter = o.n_iter;
    eo.init_radius = o.init_radius;
    eo.radius = o.radius;
    eo.master_seed = c.seed;
    eo.threads = threads;
    const auto rep = traps::escape_experiment(p, point, eo);
    sj["escape"] = {{"excited", arm_json(rep.excited)}, {"control", arm_json(rep.control)}};
    std::ostringstream ex, ctl;
    traps::write_escape_csv(rep.excited, ex);
    traps::write_escape_csv(rep.control, ctl);
    out.files.push_back({"escape_excited.csv", ex.str()});
    out.files.push_back({"escape_control.csv", ctl.str()});
    out.notes.push_back("excited runs at the saddle: " + std::to_string(rep.excited.at_saddle) + "/" +
                        std::to_string(rep.excited.runs.size()) + ", at a minimum: " +
                        std::to_string(rep.excited.at_minimum));
    if (t.excitation <= 0.0) out.warnings.push_back("warning: noise does not excite the unstable directions");
  }
  out.files.push_back({"summary.json", dump(sj)});
  return out;
}

void write_outputs(const std::filesystem::path& dir, const std::vector<OutputFile>& files) {
  for (const auto& f : files) {
    const auto path = dir / f.name;
    std::filesystem::create_directories(path.parent_path());
    std::ofstream os(path, std::ios::binary);
    os << f.content;
    if (!os) throw Error("cannot write " + path.string());
  }
}

}  // namespace

unsigned resolve_threads(std::optional<long long> flag) {
  long long n = 1;
  if (flag) {
    n = *flag;
  } else if (const char* env = std::getenv("ADAFLOW_THREADS"); env && *env) {
    char* end = nullptr;
    n = std::strtoll(env, &end, 10);
    if (*end != '\0') throw ConfigError(std::string("ADAFLOW_THREADS is not an integer: ") + env);
  }
  if (n < 1 || n > 4096) throw ConfigError("thread count must lie in [1, 4096]");
  return static_cast<unsigned>(n);
}

int run_subcommand(const std::string& command, const ExperimentConfig& config, const std::filesystem::path& out_dir,
                   unsigned threads, std::ostream& log, std::ostream& err) {
  Outcome outcome;
  try {
    if (command == "ode") {
      outcome = cmd_ode(config);
    } else if (command == "optimize") {
      outcome = cmd_optimize(config, threads);
    } else if (command == "clt") {
      outcome = cmd_clt(config, threads);
    } else if (command == "traps") {
      outcome = cmd_traps(config, threads);
    } else {
      err << "error: unknown command '" << command << "'\n";
      return kExitConfig;
    }
  } catch (const ConfigError& e) {
    err << "configuration error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const DomainError& e) {
    err << "configuration error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const MissingHessianError& e) {
    err << "configuration error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const UnsupportedNoiseError& e) {
    err << "configuration error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const RangeError& e) {
    err << "configuration error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    err << "numerical failure: " << e.what() << "\n";
    return kExitNumerical;
  }

  try {
    write_outputs(out_dir, outcome.files);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitNumerical;
  }
  for (const auto& n : outcome.notes) log << n << "\n";
  for (const auto& w : outcome.warnings) err << w << "\n";
  return kExitOk;
}

int run_from_file(const std::string& command, const std::filesystem::path& config_path,
                  const std::filesystem::path& out_dir, std::optional<long long> threads, std::ostream& log,
                  std::ostream& err) {
  ExperimentConfig config;
  unsigned n_threads = 1;
  try {
    config = load_config(config_path);
    n_threads = resolve_threads(threads);
  } catch (const ConfigError& e) {
    err << "configuration error: " << e.what() << "\n";
    return kExitConfig;
  }
  return run_subcommand(command, config, out_dir, n_threads, log, err);
}

}  // namespace adaflow::cli
