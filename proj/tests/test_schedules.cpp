#include <doctest.h>

#include <cmath>

#include "adaflow/errors.hpp"
#include "adaflow/schedules.hpp"

using namespace adaflow;
using namespace adaflow::schedules;

namespace {

// Independent evaluation in extended precision.
double adam_reference(long double t, long double lambda, long double alpha) {
  return static_cast<double>((1.0L - std::exp(-lambda * alpha)) / lambda / (1.0L - std::exp(-alpha * t)));
}

}  // namespace

TEST_CASE("adam_a matches the closed form") {
  CHECK(adam_a(1e6, 1, 1) == doctest::Approx(0.632121).epsilon(1e-6));
  CHECK(adam_a(std::log(2.0), 1, 1) == doctest::Approx(1.264241).epsilon(1e-6));
  for (double t : {1e-6, 1e-3, 0.5, 3.0, 40.0})
    for (double lambda : {0.3, 1.0, 2.5})
      for (double alpha : {0.1, 1.0, 7.0}) CHECK(adam_a(t, lambda, alpha) == doctest::Approx(adam_reference(t, lambda, alpha)).epsilon(1e-12));
}

TEST_CASE("t a(t) stays bounded as t goes to 0") {
  const double limit = 1.0 - std::exp(-1.0);
  CHECK(1e-9 * adam_a(1e-9, 1, 1) == doctest::Approx(limit).epsilon(1e-6));
}

TEST_CASE("adam_a rejects nonpositive arguments") {
  CHECK_THROWS_AS((void)adam_a(0.0, 1, 1), DomainError);
  CHECK_THROWS_AS((void)adam_a(-1.0, 1, 1), DomainError);
  CHECK_THROWS_AS((void)adam_a(1.0, 0, 1), DomainError);
  CHECK_THROWS_AS((void)adam_a(1.0, 1, -2), DomainError);
}

TEST_CASE("eval per kind") {
  const auto c = ScheduleSpec::constant(1, 1, 1, 1).eval(5);
  CHECK(c.h == 1);
  CHECK(c.q == 1);

  const auto n = ScheduleSpec::nag(3).eval(6);
  CHECK(n.h == 1);
  CHECK(n.r == doctest::Approx(0.5));
  CHECK(n.p == 0);
  CHECK(n.q == 0);

  const auto a = ScheduleSpec::adam(1, 1, 1).eval(std::log(2.0));
  for (double v : {a.h, a.r, a.p, a.q}) CHECK(v == doctest::Approx(1.264241).epsilon(1e-6));

  const auto hb = ScheduleSpec::heavy_ball(0.7).eval(3);
  CHECK(hb.h == 0.7);
  CHECK(hb.r == 0.7);
  CHECK(hb.p == 0);
  CHECK(hb.q == 0);
}

TEST_CASE("eval domain errors") {
  CHECK_THROWS_AS((void)ScheduleSpec::constant(1, 1, 1, 1).eval(0), DomainError);
  CHECK_THROWS_AS((void)ScheduleSpec::adam(1, 1, 1).eval(-1), DomainError);
  CHECK_THROWS_AS((void)ScheduleSpec::nag(3).eval(1e-13), DomainError);
  CHECK_NOTHROW((void)ScheduleSpec::nag(3).eval(1e-11));

  Custom bad;
  bad.h = [](double) { return -1.0; };
  bad.r = bad.p = bad.q = [](double) { return 1.0; };
  bad.limits = {1, 1, 1, 1};
  CHECK_THROWS_AS((void)ScheduleSpec(bad).eval(1.0), DomainError);
}

TEST_CASE("invalid parameters are configuration errors") {
  CHECK_THROWS_AS(ScheduleSpec::adam(0, 1, 1), ConfigError);
  CHECK_THROWS_AS(ScheduleSpec::adam(1, -1, 1), ConfigError);
  CHECK_THROWS_AS(ScheduleSpec::constant(-1, 1, 1, 1), ConfigError);
  CHECK_THROWS_AS(ScheduleSpec::heavy_ball(0), ConfigError);
  CHECK_THROWS_AS(ScheduleSpec::nag(0), ConfigError);
}

TEST_CASE("limits agree with values at large times") {
  for (const auto& spec : {ScheduleSpec::adam(1, 1, 1), ScheduleSpec::adam(0.5, 2, 0.3), ScheduleSpec::constant(2, 3, 0.5, 1)}) {
    const auto far = spec.eval(1e8);
    const auto lim = spec.limits();
    CHECK(far.h == doctest::Approx(lim.h).epsilon(1e-6));
    CHECK(far.r == doctest::Approx(lim.r).epsilon(1e-6));
    CHECK(far.p == doctest::Approx(lim.p).epsilon(1e-6));
    CHECK(far.q == doctest::Approx(lim.q).epsilon(1e-6));
  }
}

TEST_CASE("adam coefficients are nonincreasing on a grid") {
  const auto spec = ScheduleSpec::adam(1.3, 0.8, 2.0);
  double prev_h = INFINITY, prev_q = INFINITY;
  for (double t : default_grid()) {
    const auto s = spec.eval(t);
    CHECK(s.h <= prev_h);
    CHECK(s.q <= prev_q);
    prev_h = s.h;
    prev_q = s.q;
  }
}

TEST_CASE("default grid") {
  const auto g = default_grid();
  REQUIRE(g.size() == 64);
  CHECK(g.front() == doctest::Approx(1e-3));
  CHECK(g.back() == doctest::Approx(1e6));
  for (std::size_t i = 1; i < g.size(); ++i) CHECK(g[i] > g[i - 1]);
}

TEST_CASE("assumption validation") {
  SUBCASE("constant schedule passes every clause") {
    const auto rep = validate_assumptions(ScheduleSpec::constant(1, 1, 1, 1));
    CHECK(rep.all_hold());
  }
  SUBCASE("adam schedule passes") { CHECK(validate_assumptions(ScheduleSpec::adam(1, 1, 1)).all_hold()); }
  SUBCASE("nag has no positive r limit") {
    const auto rep = validate_assumptions(ScheduleSpec::nag(3));
    REQUIRE(rep.find("r_limit_positive"));
    CHECK_FALSE(rep.find("r_limit_positive")->holds);
    CHECK_FALSE(rep.all_hold());
  }
  SUBCASE("heavy ball has q_inf = 0") {
    const auto rep = validate_assumptions(ScheduleSpec::heavy_ball(1));
    CHECK_FALSE(rep.find("q_limit_positive")->holds);
  }
  SUBCASE("r below q/4 is flagged") {
    const auto rep = validate_assumptions(ScheduleSpec::constant(1, 0.2, 1, 1));
    CHECK_FALSE(rep.find("r_dominates_quarter_q")->holds);
    CHECK_FALSE(rep.find("r_limit_exceeds_quarter_q_limit")->holds);
    CHECK(rep.find("h_nonincreasing")->holds);
  }
  SUBCASE("increasing h is flagged") {
    Custom k;
    k.h = [](double t) { return 2.0 - 1.0 / (1.0 + t); };
    k.r = k.p = k.q = [](double) { return 1.0; };
    k.limits = {2, 1, 1, 1};
    const auto rep = validate_assumptions(ScheduleSpec(k));
    CHECK_FALSE(rep.find("h_nonincreasing")->holds);
    CHECK(rep.find("limits_consistent")->holds);
  }
  SUBCASE("wrong declared limits are flagged") {
    Custom k;
    k.h = k.r = k.p = k.q = [](double t) { return 1.0 + 1.0 / (1.0 + t); };
    k.limits = {2, 2, 2, 2};
    CHECK_FALSE(validate_assumptions(ScheduleSpec(k)).find("limits_consistent")->holds);
  }
  SUBCASE("oscillating p is not convergent") {
    Custom k;
    k.h = k.r = k.q = [](double) { return 1.0; };
    k.p = [](double t) { return 1.0 + 0.5 * std::sin(t); };
    k.limits = {1, 1, 1, 1};
    CHECK_FALSE(validate_assumptions(ScheduleSpec(k)).find("p_convergent")->holds);
  }
  SUBCASE("bad grids are configuration errors") {
    CHECK_THROWS_AS((void)validate_assumptions(ScheduleSpec::adam(1, 1, 1), {}), ConfigError);
    CHECK_THROWS_AS((void)validate_assumptions(ScheduleSpec::adam(1, 1, 1), {1.0, 0.5}), ConfigError);
    CHECK_THROWS_AS((void)validate_assumptions(ScheduleSpec::adam(1, 1, 1), {0.0, 1.0}), ConfigError);
  }
}
