#include "gramstab/core.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace gramstab {

void require_finite(const Matrix& M, const std::string& what) {
  if (!M.allFinite()) {
    throw ContractError(what + ": non-finite entries");
  }
}

namespace {

// Pade(13,13) coefficients.
constexpr double kPade13[] = {
    64764752532480000.0, 32382376266240000.0, 7771770303897600.0,
    1187353796428800.0,  129060195264000.0,   10559470521600.0,
    670442572800.0,      33522128640.0,       1323241920.0,
    40840800.0,          960960.0,            16380.0,
    182.0,               1.0};

}  // namespace

Matrix expm(const Matrix& A) {
  if (A.rows() != A.cols()) {
    throw ContractError("expm: matrix must be square");
  }
  require_finite(A, "expm");
  const Eigen::Index n = A.rows();
  const Matrix I = Matrix::Identity(n, n);

  // Scale so the Pade approximant sits well inside its convergence region.
  const double norm = A.cwiseAbs().rowwise().sum().maxCoeff();
  int squarings = 0;
  if (norm > 0.5) {
    squarings = static_cast<int>(std::ceil(std::log2(norm / 0.5)));
  }
  const Matrix As = A / std::ldexp(1.0, squarings);

  const Matrix A2 = As * As;
  const Matrix A4 = A2 * A2;
  const Matrix A6 = A4 * A2;
  const Matrix U =
      As * (A6 * (kPade13[13] * A6 + kPade13[11] * A4 + kPade13[9] * A2) +
            kPade13[7] * A6 + kPade13[5] * A4 + kPade13[3] * A2 +
            kPade13[1] * I);
  const Matrix V =
      A6 * (kPade13[12] * A6 + kPade13[10] * A4 + kPade13[8] * A2) +
      kPade13[6] * A6 + kPade13[4] * A4 + kPade13[2] * A2 + kPade13[0] * I;

  Matrix E = (V - U).partialPivLu().solve(V + U);
  for (int i = 0; i < squarings; ++i) {
    E = E * E;
  }
  return E;
}

Matrix propagator(const Matrix& A, double t) {
  if (A.rows() != A.cols()) {
    throw ContractError("propagator: matrix must be square");
  }
  const Matrix tA = t * A;
  if (tA.norm() > 1e3) {
    throw RangeError("propagator: ||tA|| exceeds overflow guard 1e3");
  }
  return expm(tA);
}

Vector propagate(const Matrix& A, double t, const Vector& v) {
  if (v.size() != A.rows()) {
    throw ContractError("propagate: vector length does not match A");
  }
  return propagator(A, t) * v;
}

Matrix adjoint(const Matrix& M) { return M.transpose(); }

Matrix sym_sqrt(const Matrix& M, double tol) {
  if (M.rows() != M.cols()) {
    throw ContractError("sym_sqrt: matrix must be square");
  }
  require_finite(M, "sym_sqrt");
  const double mnorm = M.norm();
  if (tol <= 0) {
    tol = 1e-10 * mnorm;
  }
  const double asym = (M - M.transpose()).norm();
  if (asym > tol * std::max(mnorm, 1.0) && asym > tol) {
    throw ContractError("sym_sqrt: matrix asymmetry exceeds tolerance");
  }
  const Matrix S = 0.5 * (M + M.transpose());
  Eigen::SelfAdjointEigenSolver<Matrix> es(S);
  Vector d = es.eigenvalues();
  for (Eigen::Index i = 0; i < d.size(); ++i) {
    if (d[i] < -tol) {
      throw NotSpdError("sym_sqrt: eigenvalue " + std::to_string(d[i]) +
                        " below -tol, matrix is not PSD");
    }
    d[i] = d[i] > 0 ? std::sqrt(d[i]) : 0.0;
  }
  Matrix R = es.eigenvectors() * d.asDiagonal() * es.eigenvectors().transpose();
  return 0.5 * (R + R.transpose());
}

SpdFactorization spd_factorize(const Matrix& M, double tol) {
  if (M.rows() != M.cols()) {
    throw ContractError("spd_factorize: matrix must be square");
  }
  require_finite(M, "spd_factorize");
  const Eigen::Index n = M.rows();
  const double mnorm = M.norm();
  if (tol <= 0) {
    tol = 1e-12 * (1.0 + mnorm);
  }
  const double asym = (M - M.transpose()).norm();
  if (asym > tol * std::max(mnorm, 1.0) && asym > 1e-9 * std::max(mnorm, 1.0)) {
    throw ContractError("spd_factorize: matrix asymmetry exceeds tolerance");
  }
  const Matrix S = 0.5 * (M + M.transpose());

  Matrix L = Matrix::Zero(n, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    double pivot = S(j, j) - L.row(j).head(j).squaredNorm();
    if (pivot <= tol) {
      throw NotSpdError("spd_factorize: pivot " + std::to_string(pivot) +
                            " at index " + std::to_string(j),
                        static_cast<int>(j));
    }
    L(j, j) = std::sqrt(pivot);
    for (Eigen::Index i = j + 1; i < n; ++i) {
      L(i, j) = (S(i, j) - L.row(i).head(j).dot(L.row(j).head(j))) / L(j, j);
    }
  }

  SpdFactorization f;
  f.dimension = static_cast<int>(n);
  f.factor = L;
  Eigen::SelfAdjointEigenSolver<Matrix> es(S, Eigen::EigenvaluesOnly);
  f.min_eigenvalue_estimate = es.eigenvalues().minCoeff();
  return f;
}

Matrix SpdFactorization::inverse() const {
  return solve(Matrix::Identity(dimension, dimension));
}

double SpdFactorization::inverse_quadratic_form(const Vector& y) const {
  if (y.size() != dimension) {
    throw ContractError("inverse_quadratic_form: size mismatch");
  }
  Vector w = factor.triangularView<Eigen::Lower>().solve(y);
  return w.squaredNorm();
}

Matrix read_matrix(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw ContractError("read_matrix: cannot open " + path);
  }
  Eigen::Index rows = 0, cols = 0;
  if (!(in >> rows >> cols) || rows <= 0 || cols <= 0) {
    throw ContractError("read_matrix: bad header in " + path);
  }
  Matrix M(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    for (Eigen::Index j = 0; j < cols; ++j) {
      if (!(in >> M(i, j))) {
        throw ContractError("read_matrix: truncated data in " + path);
      }
    }
  }
  require_finite(M, "read_matrix(" + path + ")");
  return M;
}

void write_matrix(const std::string& path, const Matrix& M) {
  std::ofstream out(path);
  if (!out) {
    throw ContractError("write_matrix: cannot open " + path);
  }
  out << M.rows() << " " << M.cols() << "\n";
  for (Eigen::Index i = 0; i < M.rows(); ++i) {
    for (Eigen::Index j = 0; j < M.cols(); ++j) {
      out << (j ? " " : "") << format_double(M(i, j));
    }
    out << "\n";
  }
}

std::string format_double(double x) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

}  // namespace gramstab
