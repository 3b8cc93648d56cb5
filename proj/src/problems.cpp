#include "adaflow/problems.hpp"

#include <cmath>
#include <numeric>
#include <utility>

#include "adaflow/errors.hpp"

namespace adaflow::problems {
namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};

/// Variance factor of a without-replacement minibatch mean of size b drawn
/// from k components: (k - b) / (b (k - 1)).
double minibatch_factor(std::size_t k, std::size_t b) {
  if (k <= 1) return 0.0;
  return static_cast<double>(k - b) / (static_cast<double>(b) * static_cast<double>(k - 1));
}

void check_noise(const NoiseModel& noise, Eigen::Index d) {
  std::visit(Overloaded{
                 [](const NoNoise&) {},
                 [d](const AdditiveGaussian& g) {
                   if (g.sigma.size() != d) throw ConfigError("noise sigma has wrong dimension");
                   if ((g.sigma.array() < 0.0).any() || !g.sigma.allFinite()) {
                     throw ConfigError("noise sigma must be finite and nonnegative");
                   }
                 },
                 [](const FiniteSum& fs) {
                   if (fs.components.empty()) throw ConfigError("finite sum needs at least one component");
                   if (fs.batch == 0 || fs.batch > fs.components.size()) {
                     throw ConfigError("finite sum batch size must lie in [1, k]");
                   }
                 },
             },
             noise);
}

}  // namespace

const char* to_string(CriticalKind kind) {
  switch (kind) {
    case CriticalKind::minimum: return "minimum";
    case CriticalKind::saddle: return "saddle";
    case CriticalKind::maximum: return "maximum";
  }
  return "unknown";
}

Matrix Problem::hess(const Vector& x) const {
  if (!hessian) throw MissingHessianError("problem '" + name + "' does not provide a Hessian");
  return hessian(x);
}

Problem Problem::with_noise(NoiseModel model) const {
  check_noise(model, dimension);
  Problem copy = *this;
  copy.noise = std::move(model);
  return copy;
}

void sample_gradient(const Problem& p, const Vector& x, RandomStream& rng, GradientSample& out) {
  out.g.resize(p.dimension);
  std::visit(Overloaded{
                 [&](const NoNoise&) { p.gradient(x, out.g); },
                 [&](const AdditiveGaussian& noise) {
                   p.gradient(x, out.g);
                   for (Eigen::Index i = 0; i < p.dimension; ++i) out.g[i] += noise.sigma[i] * rng.normal();
                 },
                 [&](const FiniteSum& fs) {
                   const std::size_t k = fs.components.size();
                   Vector component(p.dimension);
                   out.g.setZero();
                   if (fs.batch == k) {
                     for (const auto& c : fs.components) {
                       c(x, component);
                       out.g += component;
                     }
                   } else {
                     // Partial Fisher-Yates: the first `batch` slots form the draw.
                     std::vector<std::size_t> index(k);
                     std::iota(index.begin(), index.end(), std::size_t{0});
                     for (std::size_t i = 0; i < fs.batch; ++i) {
                       const std::size_t j = i + rng.below(k - i);
                       std::swap(index[i], index[j]);
                       fs.components[index[i]](x, component);
                       out.g += component;
                     }
                   }
                   out.g /= static_cast<double>(fs.batch);
                 },
             },
             p.noise);
  out.g_sq = out.g.cwiseProduct(out.g);
}

GradientSample sample_grad(const Problem& p, const Vector& x, RandomStream& rng) {
  GradientSample s;
  sample_gradient(p, x, rng, s);
  return s;
}

Vector second_moment(const Problem& p, const Vector& x) {
  const Vector g = p.grad(x);
  return std::visit(Overloaded{
                        [&](const NoNoise&) -> Vector { return g.cwiseProduct(g); },
                        [&](const AdditiveGaussian& noise) -> Vector {
                          return g.cwiseProduct(g) + noise.sigma.cwiseProduct(noise.sigma);
                        },
                        [&](const FiniteSum& fs) -> Vector {
                          const std::size_t k = fs.components.size();
                          Vector mean_sq = Vector::Zero(p.dimension);
                          Vector component(p.dimension);
                          for (const auto& c : fs.components) {
                            c(x, component);
                            mean_sq += component.cwiseProduct(component);
                          }
                          mean_sq /= static_cast<double>(k);
                          const double c = minibatch_factor(k, fs.batch);
                          const Vector mean2 = g.cwiseProduct(g);
                          return mean2 + c * (mean_sq - mean2);
                        },
                    },
                    p.noise);
}

Matrix noise_covariance(const Problem& p, const Vector& x) {
  const Eigen::Index d = p.dimension;
  return std::visit(Overloaded{
                        [&](const NoNoise&) -> Matrix { return Matrix::Zero(d, d); },
                        [&](const AdditiveGaussian& noise) -> Matrix {
                          return noise.sigma.cwiseProduct(noise.sigma).asDiagonal();
                        },
                        [&](const FiniteSum& fs) -> Matrix {
                          const std::size_t k = fs.components.size();
                          const Vector mean = p.grad(x);
                          Matrix cov = Matrix::Zero(d, d);
                          Vector component(d);
                          for (const auto& c : fs.components) {
                            c(x, component);
                            const Vector centered = component - mean;
                            cov += centered * centered.transpose();
                          }
                          return minibatch_factor(k, fs.batch) * cov / static_cast<double>(k);
                        },
                    },
                    p.noise);
}

Matrix second_moment_jacobian(const Problem& p, const Vector& x) {
  const Vector g = p.grad(x);
  const Matrix H = p.hess(x);
  const Matrix mean_part = 2.0 * g.asDiagonal() * H;
  return std::visit(Overloaded{
                        [&](const NoNoise&) -> Matrix { return mean_part; },
                        [&](const AdditiveGaussian&) -> Matrix { return mean_part; },
                        [&](const FiniteSum& fs) -> Matrix {
                          const std::size_t k = fs.components.size();
                          if (fs.component_hessians.size() != k) {
                            throw MissingHessianError("finite-sum Jacobian of S needs one Hessian per component");
                          }
                          Matrix component_part = Matrix::Zero(p.dimension, p.dimension);
                          Vector component(p.dimension);
                          for (std::size_t i = 0; i < k; ++i) {
                            fs.components[i](x, component);
                            component_part += 2.0 * component.asDiagonal() * fs.component_hessians[i](x);
                          }
                          component_part /= static_cast<double>(k);
                          const double c = minibatch_factor(k, fs.batch);
                          return (1.0 - c) * mean_part + c * component_part;
                        },
                    },
                    p.noise);
}

AdditiveGaussian isotropic_gaussian(Eigen::Index dimension, double sigma) {
  return AdditiveGaussian{Vector::Constant(dimension, sigma)};
}

Problem quadratic_diag(const Vector& eigenvalues, NoiseModel noise) {
  if (eigenvalues.size() == 0) throw ConfigError("quadratic_diag needs at least one eigenvalue");
  if ((eigenvalues.array() <= 0.0).any()) throw ConfigError("quadratic_diag eigenvalues must be positive");
  const Eigen::Index d = eigenvalues.size();
  check_noise(noise, d);
  Problem p;
  p.name = "quadratic_diag";
  p.dimension = d;
  p.value = [eigenvalues](const Vector& x) { return 0.5 * x.dot(eigenvalues.cwiseProduct(x)); };
  p.gradient = [eigenvalues](const Vector& x, Vector& out) { out = eigenvalues.cwiseProduct(x); };
  p.hessian = [eigenvalues](const Vector&) -> Matrix { return eigenvalues.asDiagonal(); };
  p.noise = std::move(noise);
  p.critical_points = {{Vector::Zero(d), CriticalKind::minimum}};
  p.min_value = 0.0;
  return p;
}

Problem saddle_quartic(NoiseModel noise) {
  check_noise(noise, 2);
  Problem p;
  p.name = "saddle_quartic";
  p.dimension = 2;
  p.value = [](const Vector& z) {
    const double x = z[0], y = z[1];
    return (x * x * x * x + y * y * y * y) / 4.0 + (x * x - y * y) / 2.0;
  };
  p.gradient = [](const Vector& z, Vector& out) {
    const double x = z[0], y = z[1];
    out.resize(2);
    out[0] = x + x * x * x;
    out[1] = -y + y * y * y;
  };
  p.hessian = [](const Vector& z) -> Matrix {
    Matrix H = Matrix::Zero(2, 2);
    H(0, 0) = 1.0 + 3.0 * z[0] * z[0];
    H(1, 1) = -1.0 + 3.0 * z[1] * z[1];
    return H;
  };
  p.noise = std::move(noise);
  p.critical_points = {{Vector::Zero(2), CriticalKind::saddle},
                       {Eigen::Vector2d(0.0, 1.0), CriticalKind::minimum},
                       {Eigen::Vector2d(0.0, -1.0), CriticalKind::minimum}};
  p.min_value = -0.25;
  return p;
}

Problem finite_sum_ls(const Matrix& A, const Vector& b, std::size_t batch) {
  const auto k = static_cast<std::size_t>(A.rows());
  const Eigen::Index d = A.cols();
  if (k == 0 || d == 0) throw ConfigError("finite_sum_ls needs nonempty data");
  if (b.size() != A.rows()) throw ConfigError("finite_sum_ls: b must have one entry per row of A");
  const Matrix gram = A.transpose() * A / static_cast<double>(k);
  Eigen::LDLT<Matrix> ldlt(gram);
  Eigen::FullPivLU<Matrix> rank_check(gram);
  if (rank_check.rank() < d) throw ConfigError("finite_sum_ls: A must have full column rank");
  const Vector rhs = A.transpose() * b / static_cast<double>(k);
  Vector x_star = ldlt.solve(rhs);
  // One refinement sweep keeps the declared critical point at roundoff level.
  x_star += ldlt.solve(rhs - gram * x_star);

  FiniteSum fs;
  fs.batch = batch;
  for (std::size_t i = 0; i < k; ++i) {
    const Vector a = A.row(static_cast<Eigen::Index>(i)).transpose();
    const double bi = b[static_cast<Eigen::Index>(i)];
    fs.components.push_back([a, bi](const Vector& x, Vector& out) { out = a * (a.dot(x) - bi); });
    fs.component_hessians.push_back([a](const Vector&) -> Matrix { return a * a.transpose(); });
  }
  check_noise(fs, d);

  Problem p;
  p.name = "finite_sum_ls";
  p.dimension = d;
  p.value = [A, b, k](const Vector& x) { return 0.5 * (A * x - b).squaredNorm() / static_cast<double>(k); };
  p.gradient = [gram, rhs](const Vector& x, Vector& out) { out = gram * x - rhs; };
  p.hessian = [gram](const Vector&) -> Matrix { return gram; };
  p.noise = std::move(fs);
  p.min_value = p.value(x_star);
  p.critical_points = {{x_star, CriticalKind::minimum}};
  return p;
}

Problem finite_sum_ls_random(std::size_t k, Eigen::Index d, std::size_t batch, std::uint64_t seed) {
  RandomStream rng(seed);
  Matrix A(static_cast<Eigen::Index>(k), d);
  Vector b(static_cast<Eigen::Index>(k));
  for (Eigen::Index i = 0; i < A.rows(); ++i) {
    for (Eigen::Index j = 0; j < d; ++j) A(i, j) = rng.normal();
    b[i] = rng.normal();
  }
  return finite_sum_ls(A, b, batch);
}

std::vector<CatalogEntry> builtin_problems() {
  return {
      {"quadratic_diag", "F(x) = 1/2 <x, diag(eigenvalues) x>; one minimum at 0"},
      {"saddle_quartic", "F(x,y) = (x^4+y^4)/4 + (x^2-y^2)/2; saddle (0,0), minima (0,+-1)"},
      {"finite_sum_ls", "least squares 1/(2k)||Ax-b||^2 with minibatch sampling of rows"},
  };
}

bool finite_sum_consistent(const Problem& p, std::uint64_t seed) {
  const auto* fs = std::get_if<FiniteSum>(&p.noise);
  if (!fs) return true;
  RandomStream rng(seed);
  Vector component(p.dimension);
  for (int probe = 0; probe < 5; ++probe) {
    Vector x(p.dimension);
    for (Eigen::Index i = 0; i < x.size(); ++i) x[i] = 2.0 * rng.normal();
    Vector mean = Vector::Zero(p.dimension);
    for (const auto& c : fs->components) {
      c(x, component);
      mean += component;
    }
    mean /= static_cast<double>(fs->components.size());
    if ((mean - p.grad(x)).cwiseAbs().maxCoeff() > 1e-10) return false;
  }
  return true;
}

}  // namespace adaflow::problems
