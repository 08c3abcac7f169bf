#pragma once

#include <functional>
#include <utility>
#include <vector>

#include "gramstab/core.hpp"
#include "gramstab/system.hpp"

namespace gramstab {

enum class WeightKind { Komornik, Urquiza, Custom };

// The scalar weight rho(s) e^{-2 lambda s} driving the Gramian quadrature.
struct WeightProfile {
  WeightKind kind = WeightKind::Urquiza;
  double lambda = 0.0;
  double T = 0.0;       // controllability horizon (Komornik/Custom)
  double T_star = 0.0;  // support endpoint (Komornik/Custom)
  double truncation_tol = 1e-12;  // Urquiza tail cutoff
  std::function<double(double)> custom_rho;
  std::function<double(double)> custom_rho_prime;  // optional

  static WeightProfile komornik(double lambda, double T);
  static WeightProfile urquiza(double lambda, double truncation_tol = 1e-12);
  static WeightProfile custom(double lambda, double T, double T_star,
                              std::function<double(double)> rho,
                              std::function<double(double)> rho_prime = {});

  double rho(double s) const;
  // Distributional derivative; rho is continuous at the Komornik kink so no
  // point mass arises.
  double rho_prime(double s) const;
};

// rho(s) e^{-2 lambda s}; RangeError outside the profile's domain.
double weight_eval(const WeightProfile& profile, double s);

struct StabilizerPack {
  Matrix Q;
  SpdFactorization Q_factor;
  Matrix R;
  Matrix W;
  double lambda = 0.0;
  double identity_residual = 0.0;
  WeightProfile weight;

  int n() const { return static_cast<int>(Q.rows()); }
  int m() const { return static_cast<int>(W.rows()); }
};

struct ControllabilityReport {
  double horizon = 0.0;
  double gramian_min_eigenvalue = 0.0;
  int kalman_rank = 0;
  bool is_exactly_controllable = false;
};

// Gauss-Legendre nodes/weights on [-1, 1].
void gauss_legendre(int n, std::vector<double>& nodes,
                    std::vector<double>& weights);

// Q = integral of rho(s) e^{-2 lambda s} e^{-sA} B W B^T e^{-sA^T} ds.
// Composite Gauss-Legendre, quad_points nodes per panel, node count doubled
// until successive estimates agree to 1e-10 relative (cap 4096).
Matrix build_gramian(const ControlSystem& system, const Matrix& W,
                     const WeightProfile& profile, int quad_points = 64);

// R = -Q^{-1} [ integral rho'(s) e^{-2 lambda s} e^{-sA} B W B^T e^{-sA^T} ds ] Q^{-1}.
// Urquiza profiles return the zero matrix.
Matrix build_R(const ControlSystem& system, const Matrix& W,
               const WeightProfile& profile, const SpdFactorization& Q_factor,
               int quad_points = 64);

// Relative Frobenius residual of AQ + QA^T - BWB^T + QRQ + 2 lambda Q,
// cross-checked against the bilinear form on random vector pairs.
double verify_identity(const ControlSystem& system, const StabilizerPack& pack);

// Exact solver for (A + lambda I) Q + Q (A + lambda I)^T = B W B^T via
// Kronecker vectorization; the brute-force oracle for Urquiza builds.
Matrix lyapunov_oracle(const ControlSystem& system, const Matrix& W,
                       double lambda);

// Kalman rank test plus finite-horizon controllability Gramian; the two
// verdicts must agree.
ControllabilityReport check_controllability(const ControlSystem& system,
                                            double horizon,
                                            double threshold = 1e-10);

// (mu(A), mu(-A^T)) with mu the numerical abscissa; a valid growth-bound
// pair with certificate constant 1.
std::pair<double, double> growth_bounds(const Matrix& A,
                                        double sample_horizon = 5.0,
                                        int samples = 16);

// Q, factorization, R and identity residual in one pass.
StabilizerPack build_pack(const ControlSystem& system, const Matrix& W,
                          const WeightProfile& profile, int quad_points = 64);

}  // namespace gramstab
