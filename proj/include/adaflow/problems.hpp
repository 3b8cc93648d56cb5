#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <string>
#include <variant>
#include <vector>

#include "adaflow/random.hpp"
#include "adaflow/types.hpp"

namespace adaflow::problems {

using ValueFn = std::function<double(const Vector&)>;
/// Writes the gradient at x into out (resized by the callee if needed).
using GradientFn = std::function<void(const Vector& x, Vector& out)>;
using HessianFn = std::function<Matrix(const Vector&)>;

struct NoNoise {};

/// grad f(x, xi) = grad F(x) + sigma (.) zeta, zeta standard normal.
struct AdditiveGaussian {
  Vector sigma;
};

/// grad f(x, xi) is the average of `batch` component gradients drawn
/// uniformly without replacement.
struct FiniteSum {
  std::vector<GradientFn> components;
  /// Optional; needed only for the Jacobian of S.
  std::vector<HessianFn> component_hessians;
  std::size_t batch = 1;
};

using NoiseModel = std::variant<NoNoise, AdditiveGaussian, FiniteSum>;

enum class CriticalKind { minimum, saddle, maximum };

[[nodiscard]] const char* to_string(CriticalKind kind);

struct CriticalPoint {
  Vector x;
  CriticalKind kind = CriticalKind::minimum;
};

/// Objective F = E[f(x, xi)] with exact derivatives and a stochastic
/// gradient oracle. Value type; cheap to copy (functions are shared).
struct Problem {
  std::string name;
  Eigen::Index dimension = 0;
  ValueFn value;
  GradientFn gradient;
  HessianFn hessian;  ///< may be empty
  NoiseModel noise = NoNoise{};
  std::vector<CriticalPoint> critical_points;
  double min_value = 0.0;  ///< F_star = inf F

  [[nodiscard]] Vector grad(const Vector& x) const {
    Vector out(dimension);
    gradient(x, out);
    return out;
  }
  [[nodiscard]] bool has_hessian() const { return static_cast<bool>(hessian); }
  /// Throws MissingHessianError when no Hessian was supplied.
  [[nodiscard]] Matrix hess(const Vector& x) const;

  /// Same objective with a different noise model.
  [[nodiscard]] Problem with_noise(NoiseModel model) const;
};

/// One draw of grad f(x, xi) and its componentwise square.
struct GradientSample {
  Vector g;
  Vector g_sq;
};

/// In-place draw into `out`; allocation-free after the first call for
/// the gaussian and noiseless models.
void sample_gradient(const Problem& p, const Vector& x, RandomStream& rng, GradientSample& out);

[[nodiscard]] GradientSample sample_grad(const Problem& p, const Vector& x, RandomStream& rng);

/// S(x) = E[grad f(x, xi)^2] in closed form.
[[nodiscard]] Vector second_moment(const Problem& p, const Vector& x);

/// Cov(grad f(x, xi)).
[[nodiscard]] Matrix noise_covariance(const Problem& p, const Vector& x);

/// Jacobian of S at x. For the gaussian and noiseless models this is
/// 2 diag(grad F) Hess F; finite sums need component Hessians.
[[nodiscard]] Matrix second_moment_jacobian(const Problem& p, const Vector& x);

[[nodiscard]] AdditiveGaussian isotropic_gaussian(Eigen::Index dimension, double sigma);

/// F(x) = 1/2 <x, diag(eigenvalues) x>, eigenvalues > 0.
[[nodiscard]] Problem quadratic_diag(const Vector& eigenvalues, NoiseModel noise = NoNoise{});

/// F(x, y) = (x^4 + y^4)/4 + (x^2 - y^2)/2. Saddle at the origin, minima at (0, +-1).
[[nodiscard]] Problem saddle_quartic(NoiseModel noise = NoNoise{});

/// F(x) = 1/(2k) ||A x - b||^2 with one component per row of A.
/// A must have full column rank (the objective is then coercive).
[[nodiscard]] Problem finite_sum_ls(const Matrix& A, const Vector& b, std::size_t batch);

/// finite_sum_ls on k x d standard normal data drawn from `seed`.
[[nodiscard]] Problem finite_sum_ls_random(std::size_t k, Eigen::Index d, std::size_t batch, std::uint64_t seed);

struct CatalogEntry {
  std::string name;
  std::string description;
};

[[nodiscard]] std::vector<CatalogEntry> builtin_problems();

/// Checks that finite-sum components average to the gradient at 5 random
/// probe points (max abs deviation <= 1e-10). No-op for other noise models.
[[nodiscard]] bool finite_sum_consistent(const Problem& p, std::uint64_t seed = 7);

}  // namespace adaflow::problems
