#include <doctest.h>

#include <sstream>

#include "adaflow/errors.hpp"
#include "adaflow/optimize.hpp"

using namespace adaflow;
using namespace adaflow::optimize;
using adaflow::schedules::ScheduleSpec;

namespace {

problems::GradientSample sample_of(std::initializer_list<double> g) {
  problems::GradientSample s;
  s.g.resize(static_cast<Eigen::Index>(g.size()));
  Eigen::Index i = 0;
  for (double v : g) s.g[i++] = v;
  s.g_sq = s.g.cwiseProduct(s.g);
  return s;
}

IterateState one_d(double v, double m, double x) {
  return {Vector::Constant(1, v), Vector::Constant(1, m), Vector::Constant(1, x)};
}

}  // namespace

TEST_CASE("stepsize spec") {
  const StepsizeSpec g{0.5, 0.7};
  CHECK(g.at(1) == doctest::Approx(0.5));
  CHECK(g.at(4) == doctest::Approx(0.5 / std::pow(4.0, 0.7)));
  CHECK(g.square_summable());
  CHECK_FALSE(StepsizeSpec{1, 0.5}.square_summable());
  CHECK_THROWS_AS((StepsizeSpec{0, 0.7}.validate()), ConfigError);
  CHECK_THROWS_AS((StepsizeSpec{1, 0}.validate()), ConfigError);
  CHECK_THROWS_AS((StepsizeSpec{1, 1.2}.validate()), ConfigError);
  CHECK_NOTHROW((StepsizeSpec{1, 1}.validate()));
  CHECK_THROWS_AS((void)g.at(0), DomainError);
  CHECK(schedule_time(0, 0.0, g) == doctest::Approx(0.5));
  CHECK(schedule_time(3, 1.7, g) == 1.7);
}

TEST_CASE("general step: hand-computed update") {
  const auto spec = ScheduleSpec::constant(1, 1, 1, 1);
  const auto z = step_general(one_d(0, 0, 1.0), 0, 0.0, spec, {0.1, 1.0}, sample_of({2}), 1.0);
  CHECK(z.v[0] == doctest::Approx(0.4));
  CHECK(z.m[0] == doctest::Approx(0.2));
  CHECK(z.x[0] == doctest::Approx(1.0 - 0.1 * 0.2 / std::sqrt(1.4)));
  CHECK(z.x[0] == doctest::Approx(1.0 - 0.016903).epsilon(1e-6));
}

TEST_CASE("general step: degenerate cases") {
  const auto hb = ScheduleSpec::heavy_ball(1);
  IterateState z = one_d(0, 0, 1);
  double tau = 0;
  const StepsizeSpec g{0.1, 0.7};
  for (std::size_t n = 0; n < 50; ++n) {
    z = step_general(z, n, tau, hb, g, sample_of({1.5}), 1e-8);
    tau += g.at(n + 1);
    REQUIRE(z.v[0] == 0.0);
  }
  const auto still = step_general(one_d(0.3, 0, 2), 0, 0, ScheduleSpec::adam(1, 1, 1), g, sample_of({0}), 1e-8);
  CHECK(still.x[0] == 2.0);
  CHECK(still.m[0] == 0.0);
}

TEST_CASE("step guard names the offending index") {
  const auto spec = ScheduleSpec::constant(1, 1, 1, 1);
  try {
    (void)step_general(one_d(0, 0, 1), 0, 0, spec, {3.0, 1.0}, sample_of({1}), 1e-8);
    FAIL("guard did not fire");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("n = 0") != std::string::npos);
  }
  // gamma_3 = 3/3 = 1 passes 1 - gamma q >= 0 exactly at the boundary.
  CHECK_NOTHROW((void)step_general(one_d(0, 0, 1), 2, 5.0, spec, {3.0, 1.0}, sample_of({1}), 1e-8));
}

TEST_CASE("S-NAG step") {
  const double a = 0.7;
  const StepsizeSpec g{0.5 * std::pow(2.0, a), a};  // gamma_2 = 0.5
  IterateState y{Vector(), Vector::Zero(1), Vector::Constant(1, 1.0)};
  const auto next = step_nag(y, 1, 3.0, g, sample_of({1}), 1.0);
  CHECK(next.m[0] == doctest::Approx(0.5));
  CHECK(next.x[0] == doctest::Approx(0.75));

  y.m[0] = 0.4;
  const auto plain = step_nag(y, 1, 0.0, g, sample_of({1}), 1.0);
  CHECK(plain.m[0] == doctest::Approx(0.4 + 0.5));

  IterateState rest{Vector(), Vector::Zero(1), Vector::Constant(1, 1.0)};
  const auto same = step_nag(rest, 4, 3.0, g, sample_of({0}), 2.0);
  CHECK(same.x[0] == 1.0);
  CHECK(same.m[0] == 0.0);
  CHECK_THROWS_AS((void)step_nag(rest, 1, 3.0, g, sample_of({1}), 0.0), DomainError);
}

TEST_CASE("momentum-free step") {
  const auto spec = ScheduleSpec::constant(1, 1, 1, 1);
  IterateState z{Vector::Zero(1), Vector(), Vector::Zero(1)};
  const auto next = step_adagrad(z, 0, 0, spec, {0.1, 1.0}, sample_of({3}), 1.0);
  CHECK(next.v[0] == doctest::Approx(0.9));
  CHECK(next.x[0] == doctest::Approx(-0.3 / std::sqrt(1.9)));
  CHECK(next.x[0] == doctest::Approx(-0.217643).epsilon(1e-6));

  // p = 0 and v0 = 0: plain SGD scaled by 1/sqrt(eps).
  const auto sgd = step_adagrad(z, 0, 0, ScheduleSpec::constant(1, 1, 0, 1), {0.1, 1.0}, sample_of({3}), 4.0);
  CHECK(sgd.v[0] == 0.0);
  CHECK(sgd.x[0] == doctest::Approx(-0.1 * 3 / 2));
}

TEST_CASE("Lyapunov diagnostic") {
  const auto p = problems::quadratic_diag(Vector::Ones(1));
  CHECK(lyapunov_diag(one_d(3, 2, 2), 1.0, p, 1.0) == doctest::Approx(3.0));
  CHECK(lyapunov_diag(one_d(3, 0, 0), 1.0, p, 1.0) == 0.0);
}

TEST_CASE("run bookkeeping") {
  const auto p = problems::quadratic_diag(Vector::Ones(2), problems::isotropic_gaussian(2, 0.5));
  RunConfig c;
  c.schedule = ScheduleSpec::adam(1, 1, 1);
  c.stepsize = {0.3, 0.7};
  c.z0 = shaped_initial_state(Algorithm::general, Vector::Ones(2));

  SUBCASE("a single step") {
    c.n_iter = 1;
    const auto r = run(p, c, 5);
    CHECK(r.steps == 1);
    REQUIRE(r.records.size() == 1);
    CHECK(r.records[0].n == 1);
    CHECK(r.records[0].tau == doctest::Approx(0.3));
  }
  SUBCASE("strides, tau increments and the final record") {
    c.n_iter = 95;
    c.record_stride = 10;
    const auto r = run(p, c, 5);
    REQUIRE(r.records.size() == 10);
    for (std::size_t i = 1; i < r.records.size(); ++i) CHECK(r.records[i].n > r.records[i - 1].n);
    CHECK(r.records.back().n == 95);
    c.record_stride = 1;
    const auto every = run(p, c, 5);
    for (std::size_t i = 1; i < every.records.size(); ++i)
      CHECK(every.records[i].tau - every.records[i - 1].tau == doctest::Approx(c.stepsize.at(i + 1)));
  }
  SUBCASE("identical seeds reproduce bit for bit") {
    c.n_iter = 500;
    c.record_stride = 7;
    const auto a = run(p, c, 9), b = run(p, c, 9);
    REQUIRE(a.records.size() == b.records.size());
    for (std::size_t i = 0; i < a.records.size(); ++i) {
      CHECK(a.records[i].state.x == b.records[i].state.x);
      CHECK(a.records[i].lyapunov == b.records[i].lyapunov);
    }
    const auto other = run(p, c, 10);
    CHECK(other.final_state.x != a.final_state.x);
  }
  SUBCASE("batches do not depend on the thread count") {
    c.n_iter = 200;
    const auto one = run_batch(p, c, 12, 3, 1);
    const auto four = run_batch(p, c, 12, 3, 4);
    for (std::size_t i = 0; i < one.size(); ++i) CHECK(one[i].final_state.x == four[i].final_state.x);
  }
  SUBCASE("bad configuration") {
    c.n_iter = 0;
    CHECK_THROWS_AS((void)run(p, c, 1), ConfigError);
    c.n_iter = 5;
    c.z0.m.resize(0);
    CHECK_THROWS_AS((void)run(p, c, 1), ConfigError);
  }
}

TEST_CASE("run matches an independent transcription of the update") {
  const auto p = problems::saddle_quartic(problems::isotropic_gaussian(2, 0.4));
  RunConfig c;
  c.schedule = ScheduleSpec::adam(1, 2, 0.5);
  c.stepsize = {0.2, 0.6};
  c.n_iter = 300;
  c.record_stride = 300;
  c.eps = 1e-6;
  c.z0 = shaped_initial_state(Algorithm::general, (Vector(2) << 0.4, -0.2).finished());
  const auto r = run(p, c, 21);

  RandomStream rng(21);
  Vector v = c.z0.v, m = c.z0.m, x = c.z0.x;
  double tau = 0;
  for (std::size_t n = 0; n < c.n_iter; ++n) {
    const double gamma = 0.2 / std::pow(static_cast<double>(n + 1), 0.6);
    const double t = n == 0 ? gamma : tau;
    const double hr = schedules::adam_a(t, 1, 2), pq = schedules::adam_a(t, 1, 0.5);
    const auto s = problems::sample_grad(p, x, rng);
    for (int i = 0; i < 2; ++i) {
      v[i] = (1 - gamma * pq) * v[i] + gamma * pq * s.g[i] * s.g[i];
      m[i] = (1 - gamma * hr) * m[i] + gamma * hr * s.g[i];
      x[i] -= gamma * m[i] / std::sqrt(v[i] + 1e-6);
    }
    tau += gamma;
  }
  CHECK((r.final_state.x - x).norm() <= 1e-12);
  CHECK((r.final_state.m - m).norm() <= 1e-12);
  CHECK((r.final_state.v - v).norm() <= 1e-12);
  CHECK(r.final_tau == doctest::Approx(tau));
}

TEST_CASE("noiseless run started on the equilibrium set stays there") {
  const auto p = problems::saddle_quartic();
  for (Algorithm a : {Algorithm::general, Algorithm::snag, Algorithm::adagrad}) {
    RunConfig c;
    c.algorithm = a;
    c.schedule = ScheduleSpec::constant(1, 1, 1, 1);
    c.stepsize = {0.5, 0.7};
    c.n_iter = 1000;
    c.z0 = shaped_initial_state(a, (Vector(2) << 0, 1).finished());
    const auto r = run(p, c, 1);
    CHECK(r.final_state.x == c.z0.x);
    CHECK(r.final_state.m == c.z0.m);
    CHECK(r.final_state.v == c.z0.v);
  }
}

TEST_CASE("heavy-ball schedule keeps v frozen") {
  const auto p = problems::quadratic_diag(Vector::Ones(1), problems::isotropic_gaussian(1, 0.3));
  RunConfig c;
  c.schedule = ScheduleSpec::heavy_ball(0.8);
  c.stepsize = {0.1, 0.7};
  c.n_iter = 2000;
  c.record_stride = 100;
  c.z0 = shaped_initial_state(Algorithm::general, Vector::Ones(1), std::nullopt, Vector::Constant(1, 0.25));
  const auto r = run(p, c, 4);
  for (const auto& rec : r.records) CHECK(rec.state.v[0] == 0.25);
}

TEST_CASE("divergent runs stop early") {
  const auto p = problems::quadratic_diag(Vector::Ones(1));
  RunConfig c;
  c.algorithm = Algorithm::snag;
  c.stepsize = {50, 0.7};
  c.n_iter = 10000;
  c.z0 = shaped_initial_state(Algorithm::snag, Vector::Ones(1));
  const auto r = run(p, c, 1);
  CHECK(r.termination == Termination::diverged);
  CHECK(r.steps < c.n_iter);
  const auto s = summarize(p, c, {r});
  CHECK(s.diverged == 1);
}

TEST_CASE("convergence in probability on a noisy quadratic") {
  const auto p = problems::quadratic_diag((Vector(2) << 1, 2).finished(), problems::isotropic_gaussian(2, 0.5));
  RunConfig c;
  c.schedule = ScheduleSpec::adam(1, 1, 1);
  c.stepsize = {0.5, 0.7};
  c.n_iter = 20000;
  c.record_stride = 20000;
  c.z0 = shaped_initial_state(Algorithm::general, Vector::Ones(2));
  const auto s = summarize(p, c, run_batch(p, c, 20, 77, 1));
  CHECK(s.diverged == 0);
  CHECK(s.median <= 0.1);
}

TEST_CASE("run CSV and quantiles") {
  const auto p = problems::quadratic_diag(Vector::Ones(2));
  RunConfig c;
  c.n_iter = 30;
  c.record_stride = 10;
  c.z0 = shaped_initial_state(Algorithm::general, Vector::Ones(2));
  std::ostringstream os;
  write_run_csv(run(p, c, 1), os);
  const std::string s = os.str();
  CHECK(s.rfind("n,tau_n,x_1,x_2,m_1,m_2,v_1,v_2,V_n,residual\n", 0) == 0);
  CHECK(std::count(s.begin(), s.end(), '\n') == 4);

  CHECK(quantile({3, 1, 2}, 0.5) == 2);
  CHECK(quantile({1, 2, 3, 4}, 0.5) == doctest::Approx(2.5));
  CHECK(quantile({5}, 0.9) == 5);
  CHECK_THROWS_AS((void)quantile({}, 0.5), ConfigError);
}

TEST_CASE("algorithm names") {
  CHECK(parse_algorithm("snag") == Algorithm::snag);
  CHECK(std::string(to_string(Algorithm::adagrad)) == "adagrad");
  CHECK_THROWS_AS((void)parse_algorithm("adamw"), ConfigError);
}
