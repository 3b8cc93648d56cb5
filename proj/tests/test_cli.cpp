#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include "adaflow/cli.hpp"
#include "adaflow/errors.hpp"

using namespace adaflow;
using namespace adaflow::cli;
namespace fs = std::filesystem;

namespace {

const fs::path kConfigs = ADAFLOW_CONFIG_DIR;

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("adaflow_test_cli_" + name);
  fs::remove_all(p);
  return p;
}

std::map<std::string, std::string> slurp_tree(const fs::path& root) {
  std::map<std::string, std::string> files;
  for (const auto& e : fs::recursive_directory_iterator(root)) {
    if (!e.is_regular_file()) continue;
    std::ifstream in(e.path(), std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    files[fs::relative(e.path(), root).string()] = ss.str();
  }
  return files;
}

int run(const std::string& cmd, const ExperimentConfig& c, const fs::path& out, unsigned threads = 1) {
  std::ostringstream log, err;
  return run_subcommand(cmd, c, out, threads, log, err);
}

ExperimentConfig small_optimize() {
  auto c = load_config(kConfigs / "optimize_adam.json");
  c.optimize->n_iter = 2000;
  c.optimize->n_runs = 6;
  c.optimize->record_stride = 500;
  return c;
}

}  // namespace

TEST_CASE("shipped configs round-trip") {
  for (const char* name : {"ode_quadratic.json", "ode_nesterov.json", "optimize_adam.json", "clt_reference.json",
                           "traps_saddle.json"}) {
    CAPTURE(name);
    const auto c = load_config(kConfigs / name);
    CHECK(parse_config(to_json(c)) == c);
    CHECK(parse_config_text(to_json(c).dump()) == c);
    CHECK(to_json(parse_config(to_json(c))) == to_json(c));
  }
}

TEST_CASE("awkward doubles survive the text round trip") {
  auto c = load_config(kConfigs / "clt_reference.json");
  c.stepsize.gamma0 = 0.1 + 0.2;
  c.eps = 1e-300;
  c.schedule.values.h = 1.0 / 3.0;
  c.clt->filter_threshold = 5e-324;
  CHECK(parse_config_text(to_json(c).dump()) == c);

  auto d = load_config(kConfigs / "clt_reference.json");
  d.schedule.kind = "decaying";
  d.schedule.limits = {0.7, 1.1, 0.9, 1.3};
  d.schedule.amplitude = {0.25, 0.0, 1.0 / 7.0, 2.0};
  d.schedule.power = 1.5;
  CHECK(parse_config_text(to_json(d).dump()) == d);

  // Keys that do not apply to the chosen kind are not emitted.
  auto e = d;
  e.schedule.values.h = 0.25;
  CHECK(to_json(e) == to_json(d));
}

TEST_CASE("strict parsing") {
  const std::string base = R"({"version": 1, "problem": {"name": "quadratic_diag", "eigenvalues": [1.0]}})";
  CHECK_NOTHROW((void)parse_config_text(base));
  CHECK_THROWS_AS((void)parse_config_text(R"({"version": 2})"), ConfigError);
  CHECK_THROWS_AS((void)parse_config_text(R"({"problem": {"name": "saddle_quartic"}})"), ConfigError);
  CHECK_THROWS_AS((void)parse_config_text(R"({"version": 1, "bogus": 3})"), ConfigError);
  CHECK_THROWS_AS((void)parse_config_text(R"({"version": 1, "problem": {"name": "quadratic_diag", "eigen": [1]}})"),
                  ConfigError);
  CHECK_THROWS_AS((void)parse_config_text(R"({"version": 1, "seed": "seven"})"), ConfigError);
  CHECK_THROWS_AS((void)parse_config_text(R"({"version": 1, "seed": 1.5})"), ConfigError);
  CHECK_NOTHROW((void)parse_config_text(R"({"version": 1, "seed": 3.0})"));
  CHECK_THROWS_AS((void)parse_config_text("{not json"), ConfigError);
  CHECK_THROWS_AS((void)load_config("/nonexistent/adaflow.json"), ConfigError);
}

TEST_CASE("builders") {
  ProblemConfig pc;
  pc.name = "saddle_quartic";
  CHECK(build_problem(pc).dimension == 2);
  pc.name = "rosenbrock";
  CHECK_THROWS_AS((void)build_problem(pc), ConfigError);
  ScheduleConfig sc;
  sc.kind = "heavy_ball";
  sc.friction = 0.5;
  CHECK(build_schedule(sc).eval(1.0).r == 0.5);
  sc.kind = "decaying";
  sc.limits = {1, 1, 1, 1};
  sc.amplitude = {1, 0, 0, 0};
  CHECK(build_schedule(sc).eval(1.0).h == doctest::Approx(1.5));
}

TEST_CASE("thread count resolution") {
  ::unsetenv("ADAFLOW_THREADS");
  CHECK(resolve_threads(std::nullopt) == 1);
  CHECK(resolve_threads(4) == 4);
  ::setenv("ADAFLOW_THREADS", "3", 1);
  CHECK(resolve_threads(std::nullopt) == 3);
  CHECK(resolve_threads(2) == 2);
  ::setenv("ADAFLOW_THREADS", "three", 1);
  CHECK_THROWS_AS((void)resolve_threads(std::nullopt), ConfigError);
  ::unsetenv("ADAFLOW_THREADS");
  CHECK_THROWS_AS((void)resolve_threads(0), ConfigError);
}

TEST_CASE("malformed config: exit 2 and nothing written") {
  const fs::path dir = scratch("bad");
  const fs::path cfg = dir.string() + ".json";
  {
    std::ofstream f(cfg);
    f << R"({"version": 1, "optimize": {"n_iters": 10}})";
  }
  std::ostringstream log, err;
  CHECK(run_from_file("optimize", cfg, dir, std::nullopt, log, err) == kExitConfig);
  CHECK_FALSE(fs::exists(dir));
  CHECK(err.str().find("n_iters") != std::string::npos);
  fs::remove(cfg);
}

TEST_CASE("unknown command") {
  const fs::path dir = scratch("nocommand");
  CHECK(run("sample", small_optimize(), dir) == kExitConfig);
  CHECK_FALSE(fs::exists(dir));
}

TEST_CASE("step-size constraint violation is a config error") {
  auto c = load_config(kConfigs / "clt_reference.json");
  c.stepsize = {0.05, 1.0};
  c.clt->empirical = false;
  const fs::path dir = scratch("theta");
  std::ostringstream log, err;
  CHECK(run_subcommand("clt", c, dir, 1, log, err) == kExitConfig);
  CHECK_FALSE(fs::exists(dir));
}

TEST_CASE("numerical failure maps to exit 3") {
  auto c = load_config(kConfigs / "ode_quadratic.json");
  c.ode->x0 = {1e200, 1e200};
  c.ode->T = 1.0;
  const fs::path dir = scratch("blowup");
  CHECK(run("ode", c, dir) == kExitNumerical);
  CHECK_FALSE(fs::exists(dir));
}

TEST_CASE("outputs are byte-identical across thread counts") {
  const auto c = small_optimize();
  const fs::path a = scratch("t1"), b = scratch("t8");
  REQUIRE(run("optimize", c, a, 1) == kExitOk);
  REQUIRE(run("optimize", c, b, 8) == kExitOk);
  const auto fa = slurp_tree(a), fb = slurp_tree(b);
  CHECK(fa.size() == 8);
  CHECK(fa.count("final.csv") == 1);
  CHECK(fa.count("summary.json") == 1);
  CHECK(fa == fb);
  fs::remove_all(a);
  fs::remove_all(b);
}

TEST_CASE("each subcommand writes its files") {
  SUBCASE("ode") {
    auto c = load_config(kConfigs / "ode_quadratic.json");
    c.ode->T = 5;
    const fs::path dir = scratch("ode");
    REQUIRE(run("ode", c, dir) == kExitOk);
    CHECK(fs::exists(dir / "trajectory.csv"));
    CHECK(fs::exists(dir / "summary.json"));
    fs::remove_all(dir);
  }
  SUBCASE("clt") {
    auto c = load_config(kConfigs / "clt_reference.json");
    c.clt->n_runs = 20;
    c.clt->n_iter = 2000;
    const fs::path dir = scratch("clt");
    REQUIRE(run("clt", c, dir) == kExitOk);
    for (const char* f : {"gamma.csv", "gamma2.csv", "samples.csv", "summary.json"}) CHECK(fs::exists(dir / f));
    std::ifstream g(dir / "gamma2.csv");
    std::string header, row;
    std::getline(g, header);
    std::getline(g, row);
    CHECK(row.find("0.35355339059327") != std::string::npos);
    fs::remove_all(dir);
  }
  SUBCASE("traps") {
    auto c = load_config(kConfigs / "traps_saddle.json");
    c.traps->n_runs = 4;
    c.traps->n_iter = 1000;
    const fs::path dir = scratch("traps");
    REQUIRE(run("traps", c, dir) == kExitOk);
    for (const char* f : {"summary.json", "escape_excited.csv", "escape_control.csv"}) CHECK(fs::exists(dir / f));
    fs::remove_all(dir);
  }
}
