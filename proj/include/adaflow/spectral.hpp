#pragma once

#include "adaflow/types.hpp"

namespace adaflow::spectral {

struct SymmetricEigen {
  Vector eigenvalues;  ///< ascending
  Matrix vectors;      ///< orthogonal; column k pairs with eigenvalues[k]
};

/// Cyclic Jacobi eigendecomposition of a symmetric matrix. Eigenvalues are
/// ascending and each eigenvector's first entry of magnitude > 1e-12 is
/// positive. Throws AsymmetryError when |A - A^T| > 1e-10 |A|.
[[nodiscard]] SymmetricEigen sym_eigen(const Matrix& A);

/// -max Re(lambda) over the eigenvalues of B (positive iff B is Hurwitz).
[[nodiscard]] double hurwitz_margin(const Matrix& B);

/// Margin of the block matrix [[-r I, h H], [-V, 0]] with V positive
/// diagonal, from the roots of lambda^2 + r lambda + h pi_k = 0 where pi_k
/// runs over the eigenvalues of V^(1/2) H V^(1/2).
[[nodiscard]] double hurwitz_margin_block(double r, double h, const Matrix& H, const Vector& v_diag);

/// Solves B G + G B^T = -Q by vectorization; the result is symmetrized.
/// Throws NonHurwitzError when B is not Hurwitz and SingularSystemError
/// when the Kronecker system is numerically singular.
[[nodiscard]] Matrix lyapunov_solve(const Matrix& B, const Matrix& Q);

/// Symmetric square root and inverse square root of a positive diagonal.
[[nodiscard]] Matrix diag_sqrt(const Vector& d);
[[nodiscard]] Matrix diag_inv_sqrt(const Vector& d);

}  // namespace adaflow::spectral
