#include <cmath>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

#include "adaflow/cli.hpp"
#include "adaflow/errors.hpp"

namespace adaflow::cli {
namespace {

using nlohmann::json;

// Strict reader over one JSON object: every key must be consumed.
class Reader {
 public:
  Reader(const json& j, std::string where) : j_(j), where_(std::move(where)) {
    if (!j_.is_object()) fail("", "must be an object");
  }

  [[nodiscard]] bool has(const char* key) const { return j_.contains(key); }

  void number(const char* key, double& out) {
    if (const json* v = take(key)) {
      if (!v->is_number()) fail(key, "must be a number");
      out = v->get<double>();
      if (!std::isfinite(out)) fail(key, "must be finite");
    }
  }

  template <class Int>
  void integer(const char* key, Int& out) {
    if (const json* v = take(key)) {
      if (v->is_number_unsigned()) {
        out = static_cast<Int>(v->get<std::uint64_t>());
        return;
      }
      if (v->is_number_integer() && v->get<std::int64_t>() >= 0) {
        out = static_cast<Int>(v->get<std::int64_t>());
        return;
      }
      if (v->is_number_float()) {
        const double d = v->get<double>();
        if (d >= 0.0 && d == std::floor(d) && d < 1.8e19) {
          out = static_cast<Int>(d);
          return;
        }
      }
      fail(key, "must be a nonnegative integer");
    }
  }

  void boolean(const char* key, bool& out) {
    if (const json* v = take(key)) {
      if (!v->is_boolean()) fail(key, "must be true or false");
      out = v->get<bool>();
    }
  }

  void string(const char* key, std::string& out) {
    if (const json* v = take(key)) {
      if (!v->is_string()) fail(key, "must be a string");
      out = v->get<std::string>();
    }
  }

  void vector(const char* key, std::vector<double>& out) {
    if (const json* v = take(key)) {
      if (!v->is_array()) fail(key, "must be an array of numbers");
      out.clear();
      for (const auto& e : *v) {
        if (!e.is_number()) fail(key, "must be an array of numbers");
        out.push_back(e.get<double>());
      }
    }
  }

  void values(const char* key, ScheduleValues& out) {
    if (const json* v = take(key)) {
      Reader r(*v, path(key));
      r.number("h", out.h);
      r.number("r", out.r);
      r.number("p", out.p);
      r.number("q", out.q);
      r.finish();
    }
  }

  const json* object(const char* key) { return take(key); }

  [[nodiscard]] std::string path(const char* key) const { return where_.empty() ? key : where_ + "." + key; }

  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it)
      if (!seen_.count(it.key())) fail(it.key().c_str(), "is not a recognized key");
  }

  [[noreturn]] void fail(const char* key, const std::string& what) const {
    const std::string name = *key ? path(key) : (where_.empty() ? "config" : where_);
    throw ConfigError("config: '" + name + "' " + what);
  }

 private:
  const json* take(const char* key) {
    seen_.insert(key);
    auto it = j_.find(key);
    return it == j_.end() ? nullptr : &*it;
  }

  const json& j_;
  std::string where_;
  std::set<std::string> seen_;
};

json values_json(const ScheduleValues& v) { return json{{"h", v.h}, {"r", v.r}, {"p", v.p}, {"q", v.q}}; }

NoiseConfig parse_noise(const json& j) {
  NoiseConfig n;
  Reader r(j, "problem.noise");
  r.string("kind", n.kind);
  if (n.kind == "gaussian") {
    r.number("sigma", n.sigma);
    if (n.sigma < 0.0) r.fail("sigma", "must be nonnegative");
  } else if (n.kind != "none") {
    r.fail("kind", "must be none or gaussian");
  }
  r.finish();
  return n;
}

ProblemConfig parse_problem(const json& j) {
  ProblemConfig c;
  Reader r(j, "problem");
  r.string("name", c.name);
  if (c.name == "quadratic_diag") {
    r.vector("eigenvalues", c.eigenvalues);
    if (const json* n = r.object("noise")) c.noise = parse_noise(*n);
  } else if (c.name == "saddle_quartic") {
    if (const json* n = r.object("noise")) c.noise = parse_noise(*n);
  } else if (c.name == "finite_sum_ls") {
    r.integer("rows", c.rows);
    r.integer("dim", c.dim);
    r.integer("batch", c.batch);
    r.integer("data_seed", c.data_seed);
  } else {
    r.fail("name", "must be quadratic_diag, saddle_quartic or finite_sum_ls");
  }
  r.finish();
  return c;
}

ScheduleConfig parse_schedule(const json& j) {
  ScheduleConfig c;
  Reader r(j, "schedule");
  r.string("kind", c.kind);
  if (c.kind == "adam") {
    r.number("lambda", c.lambda);
    r.number("alpha1", c.alpha1);
    r.number("alpha2", c.alpha2);
  } else if (c.kind == "constant") {
    r.values("values", c.values);
  } else if (c.kind == "heavy_ball") {
    r.number("friction", c.friction);
  } else if (c.kind == "nag") {
    r.number("alpha", c.nag_alpha);
  } else if (c.kind == "decaying") {
    r.values("limits", c.limits);
    r.values("amplitude", c.amplitude);
    r.number("power", c.power);
  } else {
    r.fail("kind", "must be adam, constant, heavy_ball, nag or decaying");
  }
  r.finish();
  return c;
}

OdeConfig parse_ode(const json& j) {
  OdeConfig c;
  Reader r(j, "ode");
  r.string("kind", c.kind);
  r.number("nesterov_alpha", c.nesterov_alpha);
  r.vector("x0", c.x0);
  r.string("initial", c.initial);
  r.number("t0", c.t0);
  r.number("T", c.T);
  r.number("tol", c.tol);
  r.number("base_step", c.base_step);
  r.boolean("change_of_variable", c.change_of_variable);
  r.finish();
  if (c.kind != "general" && c.kind != "adagrad" && c.kind != "nesterov")
    r.fail("kind", "must be general, adagrad or nesterov");
  if (c.initial != "compatible" && c.initial != "zero") r.fail("initial", "must be compatible or zero");
  if (!(c.t0 > 0.0)) r.fail("t0", "must be positive");
  if (!(c.T >= c.t0)) r.fail("T", "must be at least t0");
  if (!(c.tol > 0.0)) r.fail("tol", "must be positive");
  if (!(c.base_step > 0.0)) r.fail("base_step", "must be positive");
  if (c.change_of_variable && c.kind != "nesterov") r.fail("change_of_variable", "applies to the nesterov kind only");
  return c;
}

OptimizeConfig parse_optimize(const json& j) {
  OptimizeConfig c;
  Reader r(j, "optimize");
  r.string("algorithm", c.algorithm);
  r.integer("n_iter", c.n_iter);
  r.integer("n_runs", c.n_runs);
  r.integer("record_stride", c.record_stride);
  r.vector("x0", c.x0);
  r.number("nag_alpha", c.nag_alpha);
  r.finish();
  (void)optimize::parse_algorithm(c.algorithm);
  if (c.n_iter < 1) r.fail("n_iter", "must be at least 1");
  if (c.n_runs < 1) r.fail("n_runs", "must be at least 1");
  if (c.record_stride < 1) r.fail("record_stride", "must be at least 1");
  return c;
}

CltConfig parse_clt(const json& j) {
  CltConfig c;
  Reader r(j, "clt");
  r.vector("x_star", c.x_star);
  r.boolean("empirical", c.empirical);
  r.integer("n_iter", c.n_iter);
  r.integer("n_runs", c.n_runs);
  r.number("filter_threshold", c.filter_threshold);
  r.finish();
  if (c.n_iter < 1) r.fail("n_iter", "must be at least 1");
  if (c.empirical && c.n_runs < 2) r.fail("n_runs", "must be at least 2");
  if (!(c.filter_threshold > 0.0)) r.fail("filter_threshold", "must be positive");
  return c;
}

TrapsConfig parse_traps(const json& j) {
  TrapsConfig c;
  Reader r(j, "traps");
  r.vector("point", c.point);
  r.string("algorithm", c.algorithm);
  r.integer("n_runs", c.n_runs);
  r.integer("n_iter", c.n_iter);
  r.number("init_radius", c.init_radius);
  r.number("radius", c.radius);
  r.number("nag_alpha", c.nag_alpha);
  r.integer("avt_n_max", c.avt_n_max);
  r.finish();
  if (c.algorithm != "general" && c.algorithm != "snag") r.fail("algorithm", "must be general or snag");
  if (c.n_iter < 1) r.fail("n_iter", "must be at least 1");
  if (c.init_radius < 0.0) r.fail("init_radius", "must be nonnegative");
  if (!(c.radius > 0.0)) r.fail("radius", "must be positive");
  if (c.avt_n_max < 10) r.fail("avt_n_max", "must be at least 10");
  return c;
}

}  // namespace

ExperimentConfig parse_config(const json& j) {
  ExperimentConfig c;
  Reader r(j, "");
  if (!r.has("version")) r.fail("version", "is required");
  r.integer("version", c.version);
  if (c.version != kConfigVersion) {
    std::ostringstream os;
    os << "config: version " << c.version << " is not supported (expected " << kConfigVersion << ")";
    throw ConfigError(os.str());
  }
  if (const json* v = r.object("problem")) c.problem = parse_problem(*v);
  if (const json* v = r.object("schedule")) c.schedule = parse_schedule(*v);
  if (const json* v = r.object("stepsize")) {
    Reader s(*v, "stepsize");
    s.number("gamma0", c.stepsize.gamma0);
    s.number("alpha", c.stepsize.alpha);
    s.finish();
  }
  r.number("eps", c.eps);
  r.integer("seed", c.seed);
  if (const json* v = r.object("ode")) c.ode = parse_ode(*v);
  if (const json* v = r.object("optimize")) c.optimize = parse_optimize(*v);
  if (const json* v = r.object("clt")) c.clt = parse_clt(*v);
  if (const json* v = r.object("traps")) c.traps = parse_traps(*v);
  r.finish();
  if (!(c.eps > 0.0)) r.fail("eps", "must be positive");
  c.stepsize.validate();
  return c;
}

ExperimentConfig parse_config_text(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config: malformed JSON: ") + e.what());
  }
  return parse_config(j);
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config: cannot open " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_config_text(buf.str());
}

json to_json(const ExperimentConfig& c) {
  json j;
  j["version"] = c.version;

  json p{{"name", c.problem.name}};
  if (c.problem.name == "finite_sum_ls") {
    p["rows"] = c.problem.rows;
    p["dim"] = c.problem.dim;
    p["batch"] = c.problem.batch;
    p["data_seed"] = c.problem.data_seed;
  } else {
    if (c.problem.name == "quadratic_diag") p["eigenvalues"] = c.problem.eigenvalues;
    json n{{"kind", c.problem.noise.kind}};
    if (c.problem.noise.kind == "gaussian") n["sigma"] = c.problem.noise.sigma;
    p["noise"] = n;
  }
  j["problem"] = p;

  const ScheduleConfig& s = c.schedule;
  json sj{{"kind", s.kind}};
  if (s.kind == "adam") {
    sj["lambda"] = s.lambda;
    sj["alpha1"] = s.alpha1;
    sj["alpha2"] = s.alpha2;
  } else if (s.kind == "constant") {
    sj["values"] = values_json(s.values);
  } else if (s.kind == "heavy_ball") {
    sj["friction"] = s.friction;
  } else if (s.kind == "nag") {
    sj["alpha"] = s.nag_alpha;
  } else if (s.kind == "decaying") {
    sj["limits"] = values_json(s.limits);
    sj["amplitude"] = values_json(s.amplitude);
    sj["power"] = s.power;
  }
  j["schedule"] = sj;
  j["stepsize"] = {{"gamma0", c.stepsize.gamma0}, {"alpha", c.stepsize.alpha}};
  j["eps"] = c.eps;
  j["seed"] = c.seed;

  if (c.ode) {
    const auto& o = *c.ode;
    j["ode"] = {{"kind", o.kind},         {"nesterov_alpha", o.nesterov_alpha}, {"x0", o.x0},
                {"initial", o.initial},   {"t0", o.t0},                         {"T", o.T},
                {"tol", o.tol},           {"base_step", o.base_step},           {"change_of_variable", o.change_of_variable}};
  }
  if (c.optimize) {
    const auto& o = *c.optimize;
    j["optimize"] = {{"algorithm", o.algorithm}, {"n_iter", o.n_iter}, {"n_runs", o.n_runs},
                     {"record_stride", o.record_stride}, {"x0", o.x0}, {"nag_alpha", o.nag_alpha}};
  }
  if (c.clt) {
    const auto& o = *c.clt;
    j["clt"] = {{"x_star", o.x_star}, {"empirical", o.empirical}, {"n_iter", o.n_iter},
                {"n_runs", o.n_runs}, {"filter_threshold", o.filter_threshold}};
  }
  if (c.traps) {
    const auto& o = *c.traps;
    j["traps"] = {{"point", o.point},       {"algorithm", o.algorithm}, {"n_runs", o.n_runs},
                  {"n_iter", o.n_iter},     {"init_radius", o.init_radius}, {"radius", o.radius},
                  {"nag_alpha", o.nag_alpha}, {"avt_n_max", o.avt_n_max}};
  }
  return j;
}

problems::Problem build_problem(const ProblemConfig& c) {
  auto noise_for = [&](Eigen::Index d) -> problems::NoiseModel {
    if (c.noise.kind == "gaussian") return problems::isotropic_gaussian(d, c.noise.sigma);
    return problems::NoNoise{};
  };
  if (c.name == "quadratic_diag") {
    if (c.eigenvalues.empty()) throw ConfigError("config: 'problem.eigenvalues' must be nonempty");
    const Vector eig = Eigen::Map<const Vector>(c.eigenvalues.data(), static_cast<Eigen::Index>(c.eigenvalues.size()));
    return problems::quadratic_diag(eig, noise_for(eig.size()));
  }
  if (c.name == "saddle_quartic") return problems::saddle_quartic(noise_for(2));
  if (c.name == "finite_sum_ls") {
    if (c.dim < 1 || c.rows < c.dim) throw ConfigError("config: finite_sum_ls needs rows >= dim >= 1");
    if (c.batch < 1 || c.batch > c.rows) throw ConfigError("config: finite_sum_ls needs 1 <= batch <= rows");
    return problems::finite_sum_ls_random(c.rows, static_cast<Eigen::Index>(c.dim), c.batch, c.data_seed);
  }
  throw ConfigError("config: unknown problem '" + c.name + "'");
}

schedules::ScheduleSpec build_schedule(const ScheduleConfig& c) {
  using namespace schedules;
  if (c.kind == "adam") return ScheduleSpec::adam(c.lambda, c.alpha1, c.alpha2);
  if (c.kind == "constant") return ScheduleSpec::constant(c.values.h, c.values.r, c.values.p, c.values.q);
  if (c.kind == "heavy_ball") return ScheduleSpec::heavy_ball(c.friction);
  if (c.kind == "nag") return ScheduleSpec::nag(c.nag_alpha);
  if (c.kind == "decaying") {
    if (!(c.power > 0.0)) throw ConfigError("config: 'schedule.power' must be positive");
    const double power = c.power;
    auto make = [power](double limit, double amp) {
      return std::function<double(double)>([=](double t) { return limit + amp / std::pow(1.0 + t, power); });
    };
    Custom k;
    k.h = make(c.limits.h, c.amplitude.h);
    k.r = make(c.limits.r, c.amplitude.r);
    k.p = make(c.limits.p, c.amplitude.p);
    k.q = make(c.limits.q, c.amplitude.q);
    k.limits = c.limits;
    return ScheduleSpec(std::move(k));
  }
  throw ConfigError("config: unknown schedule kind '" + c.kind + "'");
}

}  // namespace adaflow::cli
