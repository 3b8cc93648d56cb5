#include "adaflow/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <numeric>
#include <sstream>
#include <vector>

#include <Eigen/Eigenvalues>
#include <Eigen/LU>

#include "adaflow/errors.hpp"

namespace adaflow::spectral {
namespace {

double off_diagonal_norm(const Matrix& A) {
  double s = 0.0;
  for (Eigen::Index j = 0; j < A.cols(); ++j)
    for (Eigen::Index i = 0; i < A.rows(); ++i)
      if (i != j) s += A(i, j) * A(i, j);
  return std::sqrt(s);
}

// Rotation in the (p, q) plane that zeroes A(p, q); applied to both sides of A
// and accumulated into V.
void jacobi_rotate(Matrix& A, Matrix& V, Eigen::Index p, Eigen::Index q) {
  const double apq = A(p, q);
  if (apq == 0.0) return;
  const double tau = (A(q, q) - A(p, p)) / (2.0 * apq);
  const double t = (tau >= 0.0 ? 1.0 : -1.0) / (std::abs(tau) + std::sqrt(1.0 + tau * tau));
  const double c = 1.0 / std::sqrt(1.0 + t * t);
  const double s = t * c;
  for (Eigen::Index k = 0; k < A.rows(); ++k) {
    const double akp = A(k, p);
    const double akq = A(k, q);
    A(k, p) = c * akp - s * akq;
    A(k, q) = s * akp + c * akq;
  }
  for (Eigen::Index k = 0; k < A.cols(); ++k) {
    const double apk = A(p, k);
    const double aqk = A(q, k);
    A(p, k) = c * apk - s * aqk;
    A(q, k) = s * apk + c * aqk;
  }
  A(p, q) = A(q, p) = 0.0;
  for (Eigen::Index k = 0; k < V.rows(); ++k) {
    const double vkp = V(k, p);
    const double vkq = V(k, q);
    V(k, p) = c * vkp - s * vkq;
    V(k, q) = s * vkp + c * vkq;
  }
}

}  // namespace

SymmetricEigen sym_eigen(const Matrix& A) {
  if (A.rows() != A.cols()) throw AsymmetryError("sym_eigen needs a square matrix");
  const double scale = A.norm();
  if ((A - A.transpose()).norm() > 1e-10 * scale) throw AsymmetryError("sym_eigen: matrix is not symmetric");
  const Eigen::Index n = A.rows();
  Matrix work = 0.5 * (A + A.transpose());
  Matrix V = Matrix::Identity(n, n);

  constexpr int kMaxSweeps = 100;
  for (int sweep = 0; sweep < kMaxSweeps; ++sweep) {
    if (off_diagonal_norm(work) <= 1e-15 * std::max(scale, 1e-300)) break;
    for (Eigen::Index p = 0; p + 1 < n; ++p)
      for (Eigen::Index q = p + 1; q < n; ++q) jacobi_rotate(work, V, p, q);
  }

  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](Eigen::Index a, Eigen::Index b) { return work(a, a) < work(b, b); });

  SymmetricEigen out;
  out.eigenvalues.resize(n);
  out.vectors.resize(n, n);
  for (Eigen::Index k = 0; k < n; ++k) {
    const Eigen::Index src = order[static_cast<std::size_t>(k)];
    out.eigenvalues[k] = work(src, src);
    Vector col = V.col(src);
    for (Eigen::Index i = 0; i < n; ++i) {
      if (std::abs(col[i]) > 1e-12) {
        if (col[i] < 0.0) col = -col;
        break;
      }
    }
    out.vectors.col(k) = col;
  }
  return out;
}

double hurwitz_margin(const Matrix& B) {
  if (B.rows() != B.cols()) throw DomainError("hurwitz_margin needs a square matrix");
  if (B.size() == 0) return std::numeric_limits<double>::infinity();
  Eigen::EigenSolver<Matrix> solver(B, false);
  if (solver.info() != Eigen::Success) throw NumericalError("eigenvalue iteration did not converge");
  return -solver.eigenvalues().real().maxCoeff();
}

double hurwitz_margin_block(double r, double h, const Matrix& H, const Vector& v_diag) {
  const Matrix half = diag_sqrt(v_diag);
  const SymmetricEigen eig = sym_eigen(half * (0.5 * (H + H.transpose())) * half);
  double worst = -std::numeric_limits<double>::infinity();
  for (Eigen::Index k = 0; k < eig.eigenvalues.size(); ++k) {
    const double c = h * eig.eigenvalues[k];
    const std::complex<double> disc = std::sqrt(std::complex<double>(r * r - 4.0 * c, 0.0));
    worst = std::max({worst, (0.5 * (-r + disc)).real(), (0.5 * (-r - disc)).real()});
  }
  return -worst;
}

Matrix lyapunov_solve(const Matrix& B, const Matrix& Q) {
  const Eigen::Index n = B.rows();
  if (B.cols() != n || Q.rows() != n || Q.cols() != n) throw DomainError("lyapunov_solve: shape mismatch");
  const double margin = hurwitz_margin(B);
  if (!(margin > 0.0)) {
    std::ostringstream os;
    os << "lyapunov_solve: matrix is not Hurwitz (margin " << margin << ")";
    throw NonHurwitzError(os.str());
  }
  // (I kron B + B kron I) vec(G) = -vec(Q), column-major vec.
  const Matrix I = Matrix::Identity(n, n);
  Matrix K(n * n, n * n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j)
      K.block(i * n, j * n, n, n) = I(i, j) * B + B(i, j) * I;
  const Eigen::FullPivLU<Matrix> lu(K);
  if (lu.rank() < n * n) throw SingularSystemError("lyapunov_solve: Kronecker system is singular");
  const Vector rhs = -Eigen::Map<const Vector>(Matrix(Q).data(), n * n);
  const Vector sol = lu.solve(rhs);
  Matrix G = Eigen::Map<const Matrix>(sol.data(), n, n);
  return 0.5 * (G + G.transpose());
}

Matrix diag_sqrt(const Vector& d) { return d.cwiseSqrt().asDiagonal(); }

Matrix diag_inv_sqrt(const Vector& d) { return d.cwiseSqrt().cwiseInverse().asDiagonal(); }

}  // namespace adaflow::spectral
