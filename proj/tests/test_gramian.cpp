#include <doctest.h>

#include <cmath>

#include "gramstab/gramian.hpp"
#include "gramstab/models.hpp"

using namespace gramstab;

namespace {

ControlSystem scalar_system() {
  Matrix A(1, 1), B(1, 1);
  A << 0.0;
  B << 1.0;
  return make_control_system(A, B, "scalar");
}

ControlSystem rotation_system() {
  Matrix A(2, 2), B(2, 1);
  A << 0, 1, -1, 0;
  B << 0, 1;
  return make_control_system(A, B, "rotation");
}

// Independent quadrature oracle: plain Simpson rule with a numerically
// differentiated rho, double-valued scalar case only.
double simpson_R_oracle(const WeightProfile& p, double a, double b, int n) {
  auto integrand = [&](double s) {
    const double h = 1e-7;
    const double rho_prime = (p.rho(std::min(s + h, p.T_star)) -
                              p.rho(std::max(s - h, 0.0))) /
                             (std::min(s + h, p.T_star) -
                              std::max(s - h, 0.0));
    return -rho_prime * std::exp(-2.0 * p.lambda * s);
  };
  const double h = (b - a) / n;
  double sum = integrand(a) + integrand(b);
  for (int i = 1; i < n; ++i) {
    sum += (i % 2 ? 4.0 : 2.0) * integrand(a + i * h);
  }
  return sum * h / 3.0;
}

}  // namespace

TEST_CASE("weight_eval: Komornik hand evaluation") {
  const auto p = WeightProfile::komornik(0.5, 1.0);
  CHECK(p.T_star == doctest::Approx(2.0));
  CHECK(p.rho(1.5) == doctest::Approx(0.5 * std::exp(0.5)).epsilon(1e-12));
  CHECK(weight_eval(p, 1.5) == doctest::Approx(0.18393972058572117).epsilon(1e-9));
  CHECK(weight_eval(p, p.T_star) == doctest::Approx(0.0));
  CHECK_THROWS_AS(weight_eval(p, -0.1), RangeError);
  CHECK_THROWS_AS(weight_eval(p, 2.5), RangeError);
}

TEST_CASE("weight_eval: Urquiza is the pure exponential") {
  const auto p = WeightProfile::urquiza(0.5);
  CHECK(weight_eval(p, 1.0) == doctest::Approx(std::exp(-1.0)).epsilon(1e-12));
  CHECK_THROWS_AS(weight_eval(p, -1.0), RangeError);
}

TEST_CASE("weight profile constructors reject bad parameters") {
  CHECK_THROWS_AS(WeightProfile::komornik(0.0, 1.0), ContractError);
  CHECK_THROWS_AS(WeightProfile::komornik(-0.5, 1.0), ContractError);
  CHECK_THROWS_AS(WeightProfile::urquiza(0.5, 0.0), ContractError);
}

TEST_CASE("custom weight validation") {
  auto rho = [](double s) { return 1.0 - s / 2.0; };
  const auto p = WeightProfile::custom(0.5, 1.0, 2.0, rho);
  CHECK(p.rho(1.0) == doctest::Approx(0.5));
  // increasing rho is rejected
  CHECK_THROWS_AS(
      WeightProfile::custom(0.5, 1.0, 2.0, [](double s) { return s / 2.0; }),
      ContractError);
}

TEST_CASE("build_gramian: scalar Urquiza integral") {
  const auto sys = scalar_system();
  const Matrix W = Matrix::Identity(1, 1);
  const Matrix Q = build_gramian(sys, W, WeightProfile::urquiza(0.5), 32);
  CHECK(std::abs(Q(0, 0) - 1.0) < 1e-8);  // integral of e^{-s} over [0, inf)
}

TEST_CASE("build_gramian: rotation system against the hand solve") {
  const auto sys = rotation_system();
  const Matrix W = Matrix::Identity(1, 1);
  const Matrix Q = build_gramian(sys, W, WeightProfile::urquiza(1.0), 32);
  Matrix expected(2, 2);
  expected << 0.125, -0.125, -0.125, 0.375;
  CHECK((Q - expected).norm() < 1e-8);
}

TEST_CASE("build_gramian: linear in W") {
  const auto sys = rotation_system();
  const auto p = WeightProfile::urquiza(1.0);
  const Matrix Q1 = build_gramian(sys, Matrix::Identity(1, 1), p, 32);
  const Matrix Q2 = build_gramian(sys, 2.0 * Matrix::Identity(1, 1), p, 32);
  CHECK((Q2 - 2.0 * Q1).norm() < 1e-10 * Q2.norm());
}

TEST_CASE("build_gramian: Urquiza needs lambda above the growth bound") {
  const auto sys = rotation_system();
  CHECK_THROWS_AS(build_gramian(sys, Matrix::Identity(1, 1),
                                WeightProfile::urquiza(0.0), 32),
                  RangeError);
}

TEST_CASE("build_gramian: quad_points floor") {
  CHECK_THROWS_AS(build_gramian(scalar_system(), Matrix::Identity(1, 1),
                                WeightProfile::urquiza(0.5), 8),
                  ContractError);
}

TEST_CASE("build_gramian: uncontrollable pair is rejected") {
  Matrix A = Matrix::Zero(2, 2);
  Matrix B(2, 1);
  B << 1, 0;
  const auto sys = make_control_system(A, B, "deficient");
  CHECK_THROWS_AS(build_gramian(sys, Matrix::Identity(1, 1),
                                WeightProfile::komornik(0.5, 1.0), 32),
                  ControllabilityError);
}

TEST_CASE("build_R: Urquiza profile gives R = 0") {
  const auto sys = rotation_system();
  const auto p = WeightProfile::urquiza(1.0);
  const Matrix Q = build_gramian(sys, Matrix::Identity(1, 1), p, 32);
  const Matrix R = build_R(sys, Matrix::Identity(1, 1), p, spd_factorize(Q));
  CHECK(R.norm() == 0.0);
}

TEST_CASE("build_R: Komornik scalar against a finite-difference oracle") {
  const auto sys = scalar_system();
  const auto p = WeightProfile::komornik(0.5, 1.0);
  const Matrix W = Matrix::Identity(1, 1);
  const Matrix Q = build_gramian(sys, W, p, 64);
  const Matrix R = build_R(sys, W, p, spd_factorize(Q), 64);
  // e^{-sA} = 1 for the scalar system, so G_R is a 1-d integral.
  const double g_oracle = simpson_R_oracle(p, p.T + 1e-6, p.T_star - 1e-6, 4000);
  const double r_oracle = g_oracle / (Q(0, 0) * Q(0, 0));
  CHECK(std::abs(R(0, 0) - r_oracle) < 1e-6 * (1.0 + std::abs(r_oracle)));
  CHECK(R(0, 0) > 0.0);
}

TEST_CASE("build_R and build_gramian homogeneity in W") {
  const auto sys = rotation_system();
  const auto p = WeightProfile::komornik(0.5, M_PI);
  const Matrix W1 = Matrix::Identity(1, 1);
  const Matrix W2 = 2.0 * W1;
  const Matrix Qa = build_gramian(sys, W1, p, 32);
  const Matrix Qb = build_gramian(sys, W2, p, 32);
  const Matrix Ra = build_R(sys, W1, p, spd_factorize(Qa), 32);
  const Matrix Rb = build_R(sys, W2, p, spd_factorize(Qb), 32);
  CHECK((Qb - 2.0 * Qa).norm() < 1e-9 * Qb.norm());
  CHECK((Rb - 0.5 * Ra).norm() < 1e-9 * (1.0 + Ra.norm()));
  // Q R Q scales by c, residual magnitude is preserved
  CHECK((Qb * Rb * Qb - 2.0 * Qa * Ra * Qa).norm() <
        1e-9 * (1.0 + (Qb * Rb * Qb).norm()));
}

TEST_CASE("verify_identity: scalar pack has zero residual") {
  const auto sys = scalar_system();
  StabilizerPack pack;
  pack.Q = Matrix::Identity(1, 1);
  pack.Q_factor = spd_factorize(pack.Q);
  pack.R = Matrix::Zero(1, 1);
  pack.W = Matrix::Identity(1, 1);
  pack.lambda = 0.5;
  CHECK(verify_identity(sys, pack) == doctest::Approx(0.0).epsilon(1e-15));
}

TEST_CASE("verify_identity: rotation pack and tamper detection") {
  const auto sys = rotation_system();
  auto pack = build_pack(sys, Matrix::Identity(1, 1),
                         WeightProfile::urquiza(1.0), 32);
  CHECK(pack.identity_residual <= 1e-8);

  StabilizerPack tampered = pack;
  tampered.Q(0, 0) += 0.1;
  CHECK(verify_identity(sys, tampered) > 0.01);
}

TEST_CASE("lyapunov_oracle: closed forms") {
  const auto sys = scalar_system();
  const Matrix Q = lyapunov_oracle(sys, Matrix::Identity(1, 1), 0.5);
  CHECK(Q(0, 0) == doctest::Approx(1.0).epsilon(1e-12));

  const auto rot = rotation_system();
  const Matrix Q2 = lyapunov_oracle(rot, Matrix::Identity(1, 1), 1.0);
  Matrix expected(2, 2);
  expected << 0.125, -0.125, -0.125, 0.375;
  CHECK((Q2 - expected).norm() < 1e-12);

  const Matrix Q3 = lyapunov_oracle(rot, Matrix::Zero(1, 1), 1.0);
  CHECK(Q3.norm() == doctest::Approx(0.0));
}

TEST_CASE("lyapunov_oracle: spectrum overlap is detected") {
  // lambda = 0 with skew A: spectra of A and -A^T coincide.
  CHECK_THROWS_AS(
      lyapunov_oracle(rotation_system(), Matrix::Identity(1, 1), 0.0),
      SpectrumOverlapError);
}

TEST_CASE("oracle equivalence: Urquiza quadrature vs Kronecker solve") {
  for (std::uint64_t seed : {1ull, 5ull, 9ull}) {
    const auto sys = random_controllable(4, 2, seed);
    const auto [mu_A, mu_mAT] = growth_bounds(sys.A);
    (void)mu_A;
    const double lambda = mu_mAT + 1.0;
    const Matrix W = Matrix::Identity(2, 2);
    const Matrix Q = build_gramian(sys, W, WeightProfile::urquiza(lambda), 32);
    const Matrix Qo = lyapunov_oracle(sys, W, lambda);
    CHECK((Q - Qo).norm() < 1e-8 * (1.0 + Qo.norm()));
  }
}

TEST_CASE("Komornik pack certifies the operator identity") {
  const auto sys = rotation_system();
  for (double lambda : {0.25, 0.5, 1.0}) {
    const auto pack = build_pack(sys, Matrix::Identity(1, 1),
                                 WeightProfile::komornik(lambda, M_PI), 64);
    CHECK(pack.identity_residual <= 1e-6);
    CHECK(pack.Q_factor.min_eigenvalue_estimate > 0.0);
    Eigen::SelfAdjointEigenSolver<Matrix> es(pack.R, Eigen::EigenvaluesOnly);
    CHECK(es.eigenvalues().minCoeff() >= -1e-9);
  }
}

TEST_CASE("check_controllability: Kalman examples") {
  Matrix A(2, 2), B(2, 1);
  A << 0, 1, 0, 0;
  B << 0, 1;
  auto report =
      check_controllability(make_control_system(A, B, "integrator"), 1.0);
  CHECK(report.kalman_rank == 2);
  CHECK(report.is_exactly_controllable);

  Matrix A0 = Matrix::Zero(2, 2);
  Matrix B0(2, 1);
  B0 << 1, 0;
  report = check_controllability(make_control_system(A0, B0, "stuck"), 1.0);
  CHECK(report.kalman_rank == 1);
  CHECK_FALSE(report.is_exactly_controllable);

  report = check_controllability(rotation_system(), M_PI);
  CHECK(report.gramian_min_eigenvalue > 0.0);
  CHECK(report.is_exactly_controllable);

  CHECK_THROWS_AS(check_controllability(rotation_system(), -1.0),
                  ContractError);
}

TEST_CASE("growth_bounds: closed forms") {
  const auto [s1, s2] = growth_bounds(rotation_system().A);
  CHECK(s1 == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(s2 == doctest::Approx(0.0).epsilon(1e-12));

  Matrix A(1, 1);
  A << -2.0;
  const auto [a1, a2] = growth_bounds(A);
  CHECK(a1 == doctest::Approx(-2.0));
  CHECK(a2 == doctest::Approx(2.0));

  Matrix J(2, 2);
  J << 0, 1, 0, 0;
  const auto [j1, j2] = growth_bounds(J);
  CHECK(j1 == doctest::Approx(0.5));
  CHECK(j2 == doctest::Approx(0.5));

  CHECK_THROWS_AS(growth_bounds(J, 5.0, 4), ContractError);
}
