#include "gramstab/gramian.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include <cmath>
#include <random>

namespace gramstab {

WeightProfile WeightProfile::komornik(double lambda, double T) {
  if (lambda <= 0) {
    throw ContractError("Komornik weight requires lambda > 0");
  }
  if (T <= 0) {
    throw ContractError("Komornik weight requires T > 0");
  }
  WeightProfile p;
  p.kind = WeightKind::Komornik;
  p.lambda = lambda;
  p.T = T;
  p.T_star = T + 1.0 / (2.0 * lambda);
  return p;
}

WeightProfile WeightProfile::urquiza(double lambda, double truncation_tol) {
  if (truncation_tol <= 0) {
    throw ContractError("Urquiza weight requires truncation_tol > 0");
  }
  WeightProfile p;
  p.kind = WeightKind::Urquiza;
  p.lambda = lambda;
  p.truncation_tol = truncation_tol;
  return p;
}

WeightProfile WeightProfile::custom(double lambda, double T, double T_star,
                                    std::function<double(double)> rho,
                                    std::function<double(double)> rho_prime) {
  if (T <= 0 || T_star <= T) {
    throw ContractError("Custom weight requires 0 < T < T_star");
  }
  if (!rho) {
    throw ContractError("Custom weight requires a rho function");
  }
  // Sampled checks: rho(0)=1, rho(T)>0, rho(T_star)=0, non-increasing,
  // bounded difference quotients.
  const int kSamples = 512;
  if (std::abs(rho(0.0) - 1.0) > 1e-9) {
    throw ContractError("custom rho must satisfy rho(0) = 1");
  }
  if (rho(T) <= 0) {
    throw ContractError("custom rho must satisfy rho(T) > 0");
  }
  if (std::abs(rho(T_star)) > 1e-9) {
    throw ContractError("custom rho must satisfy rho(T_star) = 0");
  }
  double prev = rho(0.0);
  const double h = T_star / kSamples;
  for (int i = 1; i <= kSamples; ++i) {
    const double cur = rho(i * h);
    if (!std::isfinite(cur) || cur > prev + 1e-12) {
      throw ContractError("custom rho must be non-increasing");
    }
    if (std::abs(cur - prev) / h > 1e8) {
      throw ContractError("custom rho difference quotients unbounded");
    }
    prev = cur;
  }
  WeightProfile p;
  p.kind = WeightKind::Custom;
  p.lambda = lambda;
  p.T = T;
  p.T_star = T_star;
  p.custom_rho = std::move(rho);
  p.custom_rho_prime = std::move(rho_prime);
  return p;
}

double WeightProfile::rho(double s) const {
  switch (kind) {
    case WeightKind::Urquiza:
      return 1.0;
    case WeightKind::Komornik:
      if (s <= T) return 1.0;
      return 2.0 * lambda * std::exp(-2.0 * lambda * (T - s)) * (T_star - s);
    case WeightKind::Custom:
      return custom_rho(s);
  }
  return 0.0;
}

double WeightProfile::rho_prime(double s) const {
  switch (kind) {
    case WeightKind::Urquiza:
      return 0.0;
    case WeightKind::Komornik:
      if (s <= T) return 0.0;
      return 2.0 * lambda * std::exp(-2.0 * lambda * (T - s)) *
             (2.0 * lambda * (T_star - s) - 1.0);
    case WeightKind::Custom: {
      if (custom_rho_prime) return custom_rho_prime(s);
      const double h = 1e-6 * T_star;
      const double lo = std::max(0.0, s - h);
      const double hi = std::min(T_star, s + h);
      return (custom_rho(hi) - custom_rho(lo)) / (hi - lo);
    }
  }
  return 0.0;
}

double weight_eval(const WeightProfile& profile, double s) {
  if (profile.kind == WeightKind::Urquiza) {
    if (s < 0) throw RangeError("weight_eval: s must be >= 0");
  } else if (s < 0 || s > profile.T_star) {
    throw RangeError("weight_eval: s outside [0, T_star]");
  }
  return profile.rho(s) * std::exp(-2.0 * profile.lambda * s);
}

void gauss_legendre(int n, std::vector<double>& nodes,
                    std::vector<double>& weights) {
  if (n < 1) {
    throw ContractError("gauss_legendre: n must be >= 1");
  }
  nodes.assign(n, 0.0);
  weights.assign(n, 0.0);
  const int mid = (n + 1) / 2;
  for (int i = 0; i < mid; ++i) {
    // Tricomi initial guess, then Newton on P_n.
    double x = std::cos(M_PI * (i + 0.75) / (n + 0.5));
    double pp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = 0.0;
      for (int j = 0; j < n; ++j) {
        const double p2 = p1;
        p1 = p0;
        p0 = ((2.0 * j + 1.0) * x * p1 - j * p2) / (j + 1.0);
      }
      pp = n * (x * p0 - p1) / (x * x - 1.0);
      const double dx = p0 / pp;
      x -= dx;
      if (std::abs(dx) < 1e-15) break;
    }
    nodes[i] = -x;
    nodes[n - 1 - i] = x;
    weights[i] = 2.0 / ((1.0 - x * x) * pp * pp);
    weights[n - 1 - i] = weights[i];
  }
}

namespace {

// Composite Gauss-Legendre for integral of w(s) e^{sM} B W B^T e^{sM^T} ds
// over [a, b].  The per-node propagators are shared across panels:
// e^{(p + x)M} = e^{pM} e^{xM} with p the panel start.
Matrix operator_integral(const Matrix& M, const Matrix& B, const Matrix& W,
                         const std::function<double(double)>& w, double a,
                         double b, double panel_width, int nodes_per_panel) {
  const Eigen::Index n = M.rows();
  if (b <= a) return Matrix::Zero(n, n);
  const int panels =
      std::max(1, static_cast<int>(std::ceil((b - a) / panel_width)));
  const double width = (b - a) / panels;

  std::vector<double> x, wq;
  gauss_legendre(nodes_per_panel, x, wq);

  // Node offsets inside one panel and the matching e^{offset M} B.
  std::vector<double> offset(nodes_per_panel);
  std::vector<Matrix> node_prop(nodes_per_panel);
  for (int j = 0; j < nodes_per_panel; ++j) {
    offset[j] = 0.5 * width * (x[j] + 1.0);
    node_prop[j] = expm(offset[j] * M) * B;
  }
  const Matrix panel_step = expm(width * M);

  Matrix Q = Matrix::Zero(n, n);
  Matrix F = expm(a * M);
  for (int p = 0; p < panels; ++p) {
    const double start = a + p * width;
    for (int j = 0; j < nodes_per_panel; ++j) {
      const Matrix C = F * node_prop[j];
      Q.noalias() +=
          (0.5 * width * wq[j] * w(start + offset[j])) * C * W * C.transpose();
    }
    F = F * panel_step;
  }
  return 0.5 * (Q + Q.transpose());
}

// Doubles the node count until two successive estimates agree.
Matrix converged_integral(const Matrix& M, const Matrix& B, const Matrix& W,
                          const std::function<double(double)>& w,
                          const std::vector<std::pair<double, double>>& spans,
                          double panel_width, int quad_points) {
  auto eval = [&](int q) {
    Matrix Q = Matrix::Zero(M.rows(), M.cols());
    for (const auto& [a, b] : spans) {
      Q += operator_integral(M, B, W, w, a, b, panel_width, q);
    }
    return Q;
  };
  Matrix prev = eval(quad_points);
  for (int q = 2 * quad_points; q <= 4096; q *= 2) {
    Matrix cur = eval(q);
    if ((cur - prev).norm() <= 1e-10 * (1.0 + cur.norm())) {
      return cur;
    }
    prev = cur;
  }
  throw AccuracyError(
      "quadrature did not converge under node doubling (cap 4096)");
}

void check_weight_operator(const Matrix& W) {
  if (W.rows() != W.cols()) {
    throw ContractError("W must be square");
  }
  const double wnorm = std::max(W.norm(), 1.0);
  if ((W - W.transpose()).norm() > 1e-9 * wnorm) {
    throw ContractError("W must be symmetric");
  }
  Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (W + W.transpose()),
                                           Eigen::EigenvaluesOnly);
  if (es.eigenvalues().minCoeff() < -1e-9 * wnorm) {
    throw NotSpdError("W must be positive semidefinite");
  }
}

double default_panel_width(const Matrix& A) {
  const double anorm = A.norm();
  return anorm > 0 ? std::min(0.25, 1.0 / anorm) : 0.25;
}

double urquiza_cutoff(const ControlSystem& system, const Matrix& W,
                      const WeightProfile& profile, double mu_mAT) {
  // Tail bound: ||integrand|| <= ||B||^2 ||W|| e^{(2 mu - 2 lambda)s}.
  const double alpha = 2.0 * profile.lambda - 2.0 * mu_mAT;
  const double c = system.B.norm() * system.B.norm() * std::max(W.norm(), 1e-300);
  double s_max =
      std::log(std::max(c / (alpha * profile.truncation_tol), 2.0)) / alpha;
  return std::max(s_max, 1.0);
}

}  // namespace

Matrix build_gramian(const ControlSystem& system, const Matrix& W,
                     const WeightProfile& profile, int quad_points) {
  if (quad_points < 16) {
    throw ContractError("build_gramian: quad_points must be >= 16");
  }
  check_weight_operator(W);
  if (W.rows() != system.m()) {
    throw ContractError("build_gramian: W dimension must match input count");
  }
  const Matrix M = -system.A;  // integrand uses e^{-sA}
  const double pw = default_panel_width(system.A);
  auto w = [&](double s) { return weight_eval(profile, s); };

  std::vector<std::pair<double, double>> spans;
  if (profile.kind == WeightKind::Urquiza) {
    const auto [mu_A, mu_mAT] = growth_bounds(system.A);
    (void)mu_A;
    if (profile.lambda <= mu_mAT) {
      throw RangeError(
          "Urquiza Gramian requires lambda > growth bound of -A^T");
    }
    spans.push_back({0.0, urquiza_cutoff(system, W, profile, mu_mAT)});
  } else {
    // Panels must break at T where rho has a kink.
    spans.push_back({0.0, profile.T});
    spans.push_back({profile.T, profile.T_star});
  }

  Matrix Q = converged_integral(M, system.B, W, w, spans, pw, quad_points);
  try {
    spd_factorize(Q);
  } catch (const NotSpdError&) {
    throw ControllabilityError(
        "Gramian is not positive definite; (A, B) must be exactly "
        "controllable on [0, T] with rho(T) > 0");
  }
  return Q;
}

Matrix build_R(const ControlSystem& system, const Matrix& W,
               const WeightProfile& profile, const SpdFactorization& Q_factor,
               int quad_points) {
  const int n = system.n();
  if (profile.kind == WeightKind::Urquiza) {
    return Matrix::Zero(n, n);
  }
  if (quad_points < 16) {
    throw ContractError("build_R: quad_points must be >= 16");
  }
  check_weight_operator(W);
  const Matrix M = -system.A;
  const double pw = default_panel_width(system.A);
  auto w = [&](double s) {
    return -profile.rho_prime(s) * std::exp(-2.0 * profile.lambda * s);
  };
  std::vector<std::pair<double, double>> spans;
  if (profile.kind == WeightKind::Komornik) {
    spans.push_back({profile.T, profile.T_star});  // rho' = 0 on [0, T)
  } else {
    spans.push_back({0.0, profile.T});
    spans.push_back({profile.T, profile.T_star});
  }
  const Matrix G = converged_integral(M, system.B, W, w, spans, pw, quad_points);

  // R = Q^{-1} G Q^{-1} via two factorized solves.
  Matrix X = Q_factor.solve(G);
  Matrix R = Q_factor.solve(Matrix(X.transpose())).transpose();
  R = 0.5 * (R + R.transpose());

  Eigen::SelfAdjointEigenSolver<Matrix> es(R, Eigen::EigenvaluesOnly);
  if (es.eigenvalues().minCoeff() < -1e-9) {
    throw NotSpdError(
        "build_R: negative eigenvalue; weight monotonicity violated");
  }
  return R;
}

double verify_identity(const ControlSystem& system,
                       const StabilizerPack& pack) {
  const Matrix& A = system.A;
  const Matrix& B = system.B;
  const Matrix& Q = pack.Q;
  if (Q.rows() != A.rows() || pack.W.rows() != B.cols()) {
    throw ContractError("verify_identity: dimension mismatch");
  }
  const Matrix Res = A * Q + Q * A.transpose() - B * pack.W * B.transpose() +
                     Q * pack.R * Q + 2.0 * pack.lambda * Q;
  const double residual = Res.norm() / (1.0 + Q.norm());

  // Bilinear form on random pairs must agree with the matrix residual.
  std::mt19937_64 rng(0x9e3779b97f4a7c15ull);
  std::normal_distribution<double> gauss(0.0, 1.0);
  const Eigen::Index n = A.rows();
  for (int k = 0; k < 10; ++k) {
    Vector x(n), y(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      x[i] = gauss(rng);
      y[i] = gauss(rng);
    }
    const double bilinear =
        (Q * x).dot(A.transpose() * y) + (A.transpose() * x).dot(Q * y) -
        (pack.W * B.transpose() * x).dot(B.transpose() * y) +
        (pack.R * Q * x).dot(Q * y) + 2.0 * pack.lambda * (Q * x).dot(y);
    const double direct = x.dot(Res * y);
    // roundoff scale of the cancelling terms, not of the residual itself
    const double term_scale = 2.0 * A.norm() * Q.norm() +
                              pack.W.norm() * B.norm() * B.norm() +
                              pack.R.norm() * Q.norm() * Q.norm() +
                              2.0 * std::abs(pack.lambda) * Q.norm() +
                              Res.norm();
    const double scale = (1.0 + term_scale) * x.norm() * y.norm();
    if (std::abs(bilinear - direct) > 1e-12 * scale) {
      throw std::logic_error(
          "verify_identity: bilinear form disagrees with matrix residual");
    }
  }
  return residual;
}

Matrix lyapunov_oracle(const ControlSystem& system, const Matrix& W,
                       double lambda) {
  const Eigen::Index n = system.n();
  const Matrix AL = system.A + lambda * Matrix::Identity(n, n);
  const Matrix rhs = system.B * W * system.B.transpose();

  // (I (x) A_l + A_l (x) I) vec(Q) = vec(B W B^T), column-major vec.
  Matrix K = Matrix::Zero(n * n, n * n);
  for (Eigen::Index j = 0; j < n; ++j) {
    K.block(j * n, j * n, n, n) += AL;
    for (Eigen::Index i = 0; i < n; ++i) {
      for (Eigen::Index k = 0; k < n; ++k) {
        K(j * n + i, k * n + i) += AL(j, k);
      }
    }
  }
  Eigen::FullPivLU<Matrix> lu(K);
  if (!lu.isInvertible()) {
    throw SpectrumOverlapError(
        "lyapunov_oracle: spectra of A + lambda I and -(A + lambda I)^T "
        "overlap");
  }
  Vector q = lu.solve(Eigen::Map<const Vector>(rhs.data(), n * n));
  Matrix Q = Eigen::Map<Matrix>(q.data(), n, n);
  return 0.5 * (Q + Q.transpose());
}

ControllabilityReport check_controllability(const ControlSystem& system,
                                            double horizon, double threshold) {
  if (horizon <= 0) {
    throw ContractError("check_controllability: horizon must be > 0");
  }
  const int n = system.n();
  const int m = system.m();

  // Controllability Gramian over [0, T]: integrand e^{sA} B B^T e^{sA^T}.
  const Matrix W = Matrix::Identity(m, m);
  auto one = [](double) { return 1.0; };
  Matrix G = converged_integral(system.A, system.B, W, one,
                                {{0.0, horizon}}, default_panel_width(system.A),
                                32);
  Eigen::SelfAdjointEigenSolver<Matrix> es(G, Eigen::EigenvaluesOnly);
  const double min_eig = es.eigenvalues().minCoeff();

  Matrix kalman(n, n * m);
  Matrix P = system.B;
  for (int k = 0; k < n; ++k) {
    kalman.block(0, k * m, n, m) = P;
    P = system.A * P;
  }
  const int rank =
      static_cast<int>(Eigen::ColPivHouseholderQR<Matrix>(kalman).rank());

  const bool by_gramian = min_eig > threshold;
  const bool by_rank = (rank == n);
  if (by_gramian != by_rank) {
    throw ConditioningError(
        "controllability verdicts disagree: gramian min eigenvalue " +
        format_double(min_eig) + ", kalman rank " + std::to_string(rank) +
        " of " + std::to_string(n));
  }
  ControllabilityReport report;
  report.horizon = horizon;
  report.gramian_min_eigenvalue = min_eig;
  report.kalman_rank = rank;
  report.is_exactly_controllable = by_rank;
  return report;
}

std::pair<double, double> growth_bounds(const Matrix& A, double sample_horizon,
                                        int samples) {
  if (A.rows() != A.cols()) {
    throw ContractError("growth_bounds: matrix must be square");
  }
  if (samples < 8) {
    throw ContractError("growth_bounds: samples must be >= 8");
  }
  const Matrix S = 0.5 * (A + A.transpose());
  Eigen::SelfAdjointEigenSolver<Matrix> es(S, Eigen::EigenvaluesOnly);
  const double mu_A = es.eigenvalues().maxCoeff();
  const double mu_mAT = -es.eigenvalues().minCoeff();

  // Sampled log ||e^{tA}|| / t never exceeds the numerical abscissa; the
  // abscissa is the reported certificate (constant c = 1).
  const double h = sample_horizon / samples;
  for (int i = 1; i <= samples; ++i) {
    const double t = i * h;
    if (t * A.norm() > 1e3) break;
    const double s =
        std::log(Eigen::JacobiSVD<Matrix>(expm(t * A)).singularValues()(0)) / t;
    if (s > mu_A + 1e-8 * (1.0 + std::abs(mu_A))) {
      throw std::logic_error("growth_bounds: sampled growth exceeds abscissa");
    }
  }
  return {mu_A, mu_mAT};
}

StabilizerPack build_pack(const ControlSystem& system, const Matrix& W,
                          const WeightProfile& profile, int quad_points) {
  StabilizerPack pack;
  pack.W = W;
  pack.lambda = profile.lambda;
  pack.weight = profile;
  pack.Q = build_gramian(system, W, profile, quad_points);
  pack.Q_factor = spd_factorize(pack.Q);
  pack.R = build_R(system, W, profile, pack.Q_factor, quad_points);
  pack.identity_residual = verify_identity(system, pack);
  return pack;
}

}  // namespace gramstab
