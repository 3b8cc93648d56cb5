#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <iostream>

#include "adaflow/cli.hpp"
#include "adaflow/clt.hpp"
#include "adaflow/errors.hpp"
#include "adaflow/optimize.hpp"
#include "adaflow/traps.hpp"

namespace py = pybind11;
using namespace adaflow;

namespace {

problems::NoiseModel gaussian_or_none(Eigen::Index d, double sigma) {
  if (sigma == 0.0) return problems::NoNoise{};
  return problems::isotropic_gaussian(d, sigma);
}

py::dict values_dict(const ScheduleValues& s) {
  py::dict d;
  d["h"] = s.h;
  d["r"] = s.r;
  d["p"] = s.p;
  d["q"] = s.q;
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Adaptive momentum methods: dynamics, iterations and local analysis";

  auto base = py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
  py::register_exception<ConfigError>(m, "ConfigError", base.ptr());
  py::register_exception<NumericalError>(m, "NumericalError", base.ptr());
  py::register_exception<DomainError>(m, "DomainError", base.ptr());

  m.def("adam_a", &schedules::adam_a, py::arg("t"), py::arg("lam"), py::arg("alpha"));

  py::class_<schedules::ScheduleSpec>(m, "Schedule")
      .def_static("adam", &schedules::ScheduleSpec::adam, py::arg("lam"), py::arg("alpha1"), py::arg("alpha2"))
      .def_static("constant", &schedules::ScheduleSpec::constant, py::arg("h"), py::arg("r"), py::arg("p"),
                  py::arg("q"))
      .def_static("heavy_ball", &schedules::ScheduleSpec::heavy_ball, py::arg("friction"))
      .def_static("nag", &schedules::ScheduleSpec::nag, py::arg("alpha"))
      .def("__call__", [](const schedules::ScheduleSpec& s, double t) { return values_dict(s.eval(t)); })
      .def("limits", [](const schedules::ScheduleSpec& s) { return values_dict(s.limits()); })
      .def_property_readonly("kind", &schedules::ScheduleSpec::kind_name)
      .def("assumptions_hold",
           [](const schedules::ScheduleSpec& s) { return schedules::validate_assumptions(s).all_hold(); });

  py::class_<problems::Problem>(m, "Problem")
      .def_readonly("name", &problems::Problem::name)
      .def_readonly("dimension", &problems::Problem::dimension)
      .def("value", [](const problems::Problem& p, const Vector& x) { return p.value(x); })
      .def("grad", &problems::Problem::grad)
      .def("hess", &problems::Problem::hess)
      .def("critical_points", [](const problems::Problem& p) {
        py::list out;
        for (const auto& c : p.critical_points) {
          const char* kind = c.kind == problems::CriticalKind::minimum  ? "minimum"
                             : c.kind == problems::CriticalKind::saddle ? "saddle"
                                                                         : "maximum";
          out.append(py::make_tuple(c.x, kind));
        }
        return out;
      });

  m.def(
      "quadratic_diag",
      [](const Vector& eig, double sigma) { return problems::quadratic_diag(eig, gaussian_or_none(eig.size(), sigma)); },
      py::arg("eigenvalues"), py::arg("sigma") = 0.0);
  m.def(
      "saddle_quartic", [](double sigma) { return problems::saddle_quartic(gaussian_or_none(2, sigma)); },
      py::arg("sigma") = 0.0);
  m.def("finite_sum_ls_random", &problems::finite_sum_ls_random, py::arg("rows"), py::arg("dim"),
        py::arg("batch"), py::arg("seed"));

  m.def(
      "optimize",
      [](const problems::Problem& p, const std::string& algorithm, const schedules::ScheduleSpec& schedule,
         double gamma0, double alpha, std::size_t n_iter, std::size_t n_runs, std::uint64_t seed, const Vector& x0,
         double eps, unsigned threads) {
        optimize::RunConfig c;
        c.algorithm = optimize::parse_algorithm(algorithm);
        c.schedule = schedule;
        c.stepsize = {gamma0, alpha};
        c.n_iter = n_iter;
        c.record_stride = n_iter;
        c.eps = eps;
        c.z0 = optimize::shaped_initial_state(c.algorithm, x0);
        std::vector<optimize::RunRecord> runs;
        {
          py::gil_scoped_release release;
          runs = optimize::run_batch(p, c, n_runs, seed, threads);
        }
        Matrix finals(static_cast<Eigen::Index>(runs.size()), p.dimension);
        std::vector<double> residuals;
        for (std::size_t i = 0; i < runs.size(); ++i) {
          finals.row(static_cast<Eigen::Index>(i)) = runs[i].final_state.x.transpose();
          residuals.push_back(runs[i].records.back().residual);
        }
        const auto s = optimize::summarize(p, c, runs);
        py::dict out;
        out["x"] = finals;
        out["residual"] = residuals;
        out["median"] = s.median;
        out["q90"] = s.q90;
        out["diverged"] = s.diverged;
        return out;
      },
      py::arg("problem"), py::arg("algorithm"), py::arg("schedule"), py::arg("gamma0"), py::arg("alpha"),
      py::arg("n_iter"), py::arg("n_runs"), py::arg("seed"), py::arg("x0"), py::arg("eps") = 1e-8,
      py::arg("threads") = 1);

  m.def(
      "clt_covariance",
      [](const problems::Problem& p, const Vector& x_star, const schedules::ScheduleSpec& schedule, double gamma0,
         double alpha, double eps) {
        const auto r = clt::analyze(clt::make_inputs(p, x_star, schedule, {gamma0, alpha}, eps));
        py::dict out;
        out["gamma"] = r.Gamma;
        out["gamma2"] = r.Gamma2;
        out["v_star"] = r.v_star;
        out["L"] = r.L;
        out["theta"] = r.theta;
        out["consistency"] = r.consistency;
        return out;
      },
      py::arg("problem"), py::arg("x_star"), py::arg("schedule"), py::arg("gamma0"), py::arg("alpha"),
      py::arg("eps") = 1e-8);

  m.def(
      "trap_analysis",
      [](const problems::Problem& p, const Vector& x_star, const schedules::ScheduleSpec& schedule, double eps) {
        const auto a = traps::trap_analysis(p, x_star, schedule.limits(), eps);
        py::dict out;
        out["d_plus"] = a.d_plus;
        out["d_minus"] = a.d_minus;
        out["zeta"] = a.zeta;
        out["beta"] = a.beta;
        out["excitation"] = a.excitation;
        return out;
      },
      py::arg("problem"), py::arg("x_star"), py::arg("schedule"), py::arg("eps") = 1e-8);

  m.def(
      "run_cli",
      [](const std::string& command, const std::filesystem::path& config, const std::filesystem::path& out,
         std::optional<long long> threads) {
        py::gil_scoped_release release;
        return cli::run_from_file(command, config, out, threads, std::cout, std::cerr);
      },
      py::arg("command"), py::arg("config"), py::arg("out"), py::arg("threads") = std::nullopt,
      "Runs a CLI subcommand in-process and returns its exit code.");
}
