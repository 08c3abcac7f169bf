#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <string>

#include "gramstab/errors.hpp"

namespace gramstab {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

// Throws ContractError if M contains NaN/Inf.
void require_finite(const Matrix& M, const std::string& what);

// Matrix exponential e^A, scaling-and-squaring with Pade degree 13.
Matrix expm(const Matrix& A);

// e^{tA} v. Guard: ||tA||_F <= 1e3, else RangeError.
Vector propagate(const Matrix& A, double t, const Vector& v);

// e^{tA} as a matrix, same guard as propagate.
Matrix propagator(const Matrix& A, double t);

// Transpose (the adjoint under the Euclidean inner product).
Matrix adjoint(const Matrix& M);

// Symmetric PSD square root via eigendecomposition.
// Eigenvalues in [-tol, 0) are clamped to 0; below -tol is NotSpdError.
// tol <= 0 selects the default 1e-10 * ||M||_F.
Matrix sym_sqrt(const Matrix& M, double tol = -1.0);

struct SpdFactorization {
  int dimension = 0;
  Matrix factor;  // lower triangular, factor * factor^T reconstructs
  double min_eigenvalue_estimate = 0.0;

  // Two triangular solves; preserves the shape of rhs.
  template <typename Derived>
  typename Derived::PlainObject solve(
      const Eigen::MatrixBase<Derived>& rhs) const {
    if (rhs.rows() != dimension) {
      throw ContractError("SpdFactorization::solve: size mismatch");
    }
    typename Derived::PlainObject y =
        factor.triangularView<Eigen::Lower>().solve(rhs.derived());
    return factor.transpose().triangularView<Eigen::Upper>().solve(y);
  }
  Matrix reconstruct() const { return factor * factor.transpose(); }
  Matrix inverse() const;
  // <M^{-1} y, y> = ||L^{-1} y||^2
  double inverse_quadratic_form(const Vector& y) const;
};

// Cholesky factorization of a symmetric positive definite matrix.
// A pivot <= tol throws NotSpdError carrying the pivot index.
// tol <= 0 selects the default 1e-12 * (1 + ||M||_F).
SpdFactorization spd_factorize(const Matrix& M, double tol = -1.0);

// Plain-text matrix files: first line "rows cols", then one line per row.
Matrix read_matrix(const std::string& path);
void write_matrix(const std::string& path, const Matrix& M);

// Doubles rendered with 17 significant digits (round-trip exact).
std::string format_double(double x);

}  // namespace gramstab
