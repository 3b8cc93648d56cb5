#include <doctest.h>

#include <Eigen/Eigenvalues>
#include <sstream>

#include "adaflow/errors.hpp"
#include "adaflow/traps.hpp"
#include "oracles.hpp"

using namespace adaflow;
using namespace adaflow::traps;
using adaflow::schedules::ScheduleSpec;

namespace {

const ScheduleValues kUnit{1, 1, 1, 1};

std::size_t negatives(const Matrix& S) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(S);
  return static_cast<std::size_t>((es.eigenvalues().array() < 0).count());
}

double max_real(const Matrix& D) {
  Eigen::EigenSolver<Matrix> es(D, false);
  return es.eigenvalues().real().maxCoeff();
}

}  // namespace

TEST_CASE("saddle linearization") {
  const auto p = problems::saddle_quartic(problems::isotropic_gaussian(2, 1));
  const Matrix D = linearize_D(p, Vector::Zero(2), kUnit, 1.0);
  REQUIRE(D.rows() == 6);
  const double Vd = 1 / std::sqrt(2.0);
  CHECK(D(0, 0) == -1);
  CHECK(D(2, 2) == -1);
  CHECK(D(2, 4) == 1);
  CHECK(D(3, 5) == -1);
  CHECK(D(4, 2) == doctest::Approx(-Vd));
  CHECK(D.block(0, 4, 2, 2).norm() == doctest::Approx(0).epsilon(1e-12));

  Eigen::EigenSolver<Matrix> es(D, false);
  int at_minus_q = 0;
  for (Eigen::Index i = 0; i < 6; ++i)
    if (std::abs(es.eigenvalues()[i] - std::complex<double>(-1, 0)) < 1e-9) ++at_minus_q;
  CHECK(at_minus_q == 2);

  const auto a = trap_analysis(p, Vector::Zero(2), kUnit, 1.0);
  CHECK(a.d_plus == 1);
  CHECK(a.d_minus == 5);
  REQUIRE(a.zeta.size() == 1);
  const double beta = -Vd;
  CHECK(a.beta[0] == doctest::Approx(beta));
  CHECK(a.zeta[0] == doctest::Approx(oracle::larger_real_root(1, beta)));
  CHECK(a.zeta[0] == doctest::Approx(max_real(D)));
  CHECK(a.excitation == doctest::Approx(Vd));
}

TEST_CASE("unit preconditioner gives the golden-ratio rate") {
  Matrix H(1, 1);
  H << -1;
  const auto a = unstable_spectrum(H, Vector::Ones(1), kUnit);
  REQUIRE(a.zeta.size() == 1);
  CHECK(a.zeta[0] == doctest::Approx((std::sqrt(5.0) - 1) / 2));
  CHECK(a.zeta[0] == doctest::Approx(0.618034).epsilon(1e-6));
}

TEST_CASE("positive definite Hessian has no unstable directions") {
  const auto p = problems::quadratic_diag((Vector(2) << 1, 2).finished(), problems::isotropic_gaussian(2, 0.5));
  const auto a = trap_analysis(p, Vector::Zero(2), kUnit, 1e-8);
  CHECK(a.d_plus == 0);
  CHECK(a.zeta.size() == 0);
  CHECK(a.A_plus.rows() == 0);
  CHECK(a.excitation == 0);
}

TEST_CASE("unstable count matches the inertia of H on random data") {
  adaflow::RandomStream rng(17);
  for (int trial = 0; trial < 20; ++trial) {
    const Eigen::Index d = 4;
    const Matrix H = oracle::random_symmetric(d, rng);
    Vector v(d);
    for (Eigen::Index i = 0; i < d; ++i) v[i] = 0.1 + rng.uniform();
    const ScheduleValues lim{0.3 + rng.uniform(), 0.3 + rng.uniform(), 0.3 + rng.uniform(), 0.3 + rng.uniform()};
    const Matrix coupling = oracle::random_matrix(d, d, rng);

    Matrix D = Matrix::Zero(3 * d, 3 * d);
    D.block(0, 0, d, d) = -lim.q * Matrix::Identity(d, d);
    D.block(0, 2 * d, d, d) = coupling;
    D.block(d, d, d, d) = -lim.r * Matrix::Identity(d, d);
    D.block(d, 2 * d, d, d) = lim.h * H;
    D.block(2 * d, d, d, d) = -Matrix(v.asDiagonal());

    const auto a = unstable_spectrum(H, v, lim);
    const std::size_t expected = negatives(H);
    CHECK(count_unstable(D) == expected);
    REQUIRE(static_cast<std::size_t>(a.zeta.size()) == expected);
    REQUIRE(a.A_plus.rows() == a.zeta.size());
    for (Eigen::Index j = 0; j < a.zeta.size(); ++j) {
      const double z = a.zeta[j];
      CHECK(z > 0);
      CHECK(z * z + lim.r * z + a.beta[a.phi[static_cast<std::size_t>(j)]] == doctest::Approx(0).epsilon(1e-10));
    }
    if (expected > 0) {
      const Matrix lhs = a.A_plus * D;
      const Matrix rhs = a.zeta.asDiagonal() * a.A_plus;
      CHECK((lhs - rhs).norm() <= 1e-9 * (1 + rhs.norm()));
      CHECK(a.zeta.maxCoeff() == doctest::Approx(max_real(D)).epsilon(1e-7));
    }
    const Matrix& P = a.projector;
    CHECK((P * P - P).norm() <= 1e-10);
    CHECK(static_cast<std::size_t>(std::lround(P.trace())) == expected);
  }
}

TEST_CASE("noise excitation") {
  const Vector v = (Vector(2) << 0.5, 2).finished();
  Matrix H(2, 2);
  H << 1, 0, 0, -1;
  const Matrix P = unstable_projector(H, v);
  CHECK(P(1, 1) == doctest::Approx(1));
  CHECK(P(0, 0) == doctest::Approx(0));

  Matrix Q = Matrix::Zero(2, 2);
  Q(0, 0) = 3;
  CHECK(noise_excitation(P, v, Q) == doctest::Approx(0));
  Q(1, 1) = 0.5;
  CHECK(noise_excitation(P, v, Q) == doctest::Approx(1.0));

  // Rotating the problem and the noise together changes nothing.
  const double c = std::cos(0.3), s = std::sin(0.3);
  Matrix R(2, 2);
  R << c, -s, s, c;
  const Matrix Pr = unstable_projector(R * H * R.transpose(), Vector::Ones(2));
  const Matrix Qr = R * Q * R.transpose();
  CHECK(noise_excitation(Pr, Vector::Ones(2), Qr) == doctest::Approx(noise_excitation(P, Vector::Ones(2), Q)));

  const auto noiseless = problems::saddle_quartic();
  CHECK(noise_excitation(noiseless, Vector::Zero(2), Vector::Ones(2)) == 0);
}

TEST_CASE("S-NAG linearization") {
  const auto p = problems::saddle_quartic(problems::isotropic_gaussian(2, 0.3));
  const auto a = nag_trap_analysis(p, Vector::Zero(2));
  CHECK(a.nesterov);
  REQUIRE(a.D.rows() == 4);
  CHECK(a.d_plus == 1);
  REQUIRE(a.zeta.size() == 1);
  CHECK(a.zeta[0] == doctest::Approx(1));
  CHECK((a.A_plus * a.D - a.zeta.asDiagonal() * a.A_plus).norm() <= 1e-12);
  CHECK(a.excitation == doctest::Approx(0.09));
}

TEST_CASE("missing curvature information") {
  auto p = problems::saddle_quartic();
  p.hessian = nullptr;
  CHECK_THROWS_AS((void)trap_analysis(p, Vector::Zero(2), kUnit, 1e-8), MissingHessianError);
}

TEST_CASE("series verdicts") {
  CHECK(series_verdict({1, 1, 1}) == Verdict::converging);
  CHECK(series_verdict({1, 2, 3, 4}) == Verdict::diverging);
  CHECK(series_verdict({1, 1.5, 1.6, 1.61}) == Verdict::converging);

  const auto adam = check_avt_assumptions(ScheduleSpec::adam(1, 1, 1), {0.1, 0.7});
  CHECK(adam.schedule_mismatch.partial_sums.back() == doctest::Approx(0).epsilon(1e-20));
  CHECK(adam.schedule_mismatch.verdict == Verdict::converging);
  CHECK(adam.step_squares.verdict == Verdict::converging);
  CHECK(adam.step_squares.checkpoints.front() == 10);
  CHECK(adam.step_squares.checkpoints.back() == 1000000);

  const auto slow = check_avt_assumptions(ScheduleSpec::adam(1, 1, 1), {0.1, 0.5});
  CHECK(slow.step_squares.verdict == Verdict::diverging);
}

TEST_CASE("endpoint classification") {
  const auto p = problems::saddle_quartic();
  auto r = classify_endpoint(p, (Vector(2) << 0, 0.999).finished(), 1e-2);
  CHECK(r.classification == Endpoint::minimum);
  CHECK(r.nearest == 1);
  CHECK(r.distance == doctest::Approx(1e-3));
  CHECK(classify_endpoint(p, Vector::Zero(2), 1e-2).classification == Endpoint::saddle);
  CHECK(classify_endpoint(p, (Vector(2) << 0.5, 0.5).finished(), 1e-2).classification == Endpoint::unclassified);
}

TEST_CASE("escape experiment on the quartic saddle") {
  const auto p = problems::saddle_quartic(problems::isotropic_gaussian(2, 0.5));
  EscapeOptions opt;
  opt.schedule = ScheduleSpec::adam(1, 3, 1);
  opt.stepsize = {0.15, 0.7};
  opt.n_runs = 30;
  opt.n_iter = 100000;
  opt.master_seed = 11;
  const auto rep = escape_experiment(p, Vector::Zero(2), opt);
  CHECK(rep.d_plus == 1);
  CHECK(rep.excitation > 0);
  CHECK(rep.excited.at_minimum >= 27);
  CHECK(rep.excited.at_saddle == 0);
  CHECK(rep.control.at_saddle == rep.control.runs.size());

  std::ostringstream os;
  write_escape_csv(rep.excited, os);
  CHECK(os.str().rfind("run,x_1,x_2,nearest,distance,classification\n", 0) == 0);

  opt.stepsize = {0.15, 0.5};
  CHECK_THROWS_AS((void)escape_experiment(p, Vector::Zero(2), opt), ConfigError);
  opt.stepsize = {0.15, 0.7};
  CHECK_THROWS_AS((void)escape_experiment(p, (Vector(2) << 0, 1).finished(), opt), ConfigError);
}
