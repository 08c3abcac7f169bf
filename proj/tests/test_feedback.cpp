#include <doctest.h>

#include <Eigen/Eigenvalues>

#include <cmath>
#include <random>

#include "gramstab/feedback.hpp"
#include "gramstab/models.hpp"

using namespace gramstab;

namespace {

ControlSystem rotation_system() {
  Matrix A(2, 2), B(2, 1);
  A << 0, 1, -1, 0;
  B << 0, 1;
  return make_control_system(A, B, "rotation");
}

ControlSystem scalar_system() {
  Matrix A(1, 1), B(1, 1);
  A << 0.0;
  B << 1.0;
  return make_control_system(A, B, "scalar");
}

StabilizerPack scalar_pack() {
  StabilizerPack pack;
  pack.Q = Matrix::Identity(1, 1);
  pack.Q_factor = spd_factorize(pack.Q);
  pack.R = Matrix::Zero(1, 1);
  pack.W = Matrix::Identity(1, 1);
  pack.lambda = 0.5;
  pack.identity_residual = 0.0;
  pack.weight = WeightProfile::urquiza(0.5);
  return pack;
}

StabilizerPack rotation_pack() {
  return build_pack(rotation_system(), Matrix::Identity(1, 1),
                    WeightProfile::urquiza(1.0), 32);
}

double spectral_abscissa(const Matrix& M) {
  return Eigen::EigenSolver<Matrix>(M, false).eigenvalues().real().maxCoeff();
}

}  // namespace

TEST_CASE("assemble_static: scalar block by substitution") {
  const auto loop = assemble_static(scalar_pack(), scalar_system());
  Matrix expected(2, 2);
  expected << 0, -1, 0, -1;
  CHECK((loop.block - expected).norm() < 1e-14);
}

TEST_CASE("assemble_static: graph subspace invariance") {
  const auto sys = rotation_system();
  const auto pack = rotation_pack();
  const auto loop = assemble_static(pack, sys);
  const int n = sys.n();
  std::mt19937_64 rng(3);
  std::normal_distribution<double> gauss(0.0, 1.0);
  for (int trial = 0; trial < 50; ++trial) {
    Vector z(n);
    for (int i = 0; i < n; ++i) z[i] = gauss(rng);
    Vector state(2 * n);
    state << pack.Q * z, z;
    const Vector image = loop.block * state;
    const double defect = (image.head(n) - pack.Q * image.tail(n)).norm();
    CHECK(defect <= 10.0 * pack.identity_residual * z.norm() +
                        1e-12 * z.norm());
  }
}

TEST_CASE("assemble_static: refuses an uncertified pack") {
  auto pack = scalar_pack();
  pack.identity_residual = 1e-3;
  CHECK_THROWS_AS(assemble_static(pack, scalar_system()), ModeError);
}

TEST_CASE("assemble_dynamic: scalar block and rate flag") {
  const auto loop = assemble_dynamic(scalar_pack(), scalar_system(), 3.0);
  Matrix expected(2, 2);
  expected << 0, -1, 3, -4;
  CHECK((loop.block - expected).norm() < 1e-14);
}

TEST_CASE("assemble_dynamic: rate certification arithmetic for skew A") {
  const auto sys = rotation_system();
  const auto pack = rotation_pack();
  // pack has lambda = 1
  CHECK(assemble_dynamic(pack, sys, 3.0).rate_certified);
  CHECK_FALSE(assemble_dynamic(pack, sys, 2.0 * pack.lambda).rate_certified);
}

TEST_CASE("assemble_dynamic: rejects packs with R != 0") {
  const auto sys = rotation_system();
  auto pack = build_pack(sys, Matrix::Identity(1, 1),
                         WeightProfile::komornik(0.5, M_PI), 64);
  CHECK(pack.R.norm() > 1e-9);
  CHECK_THROWS_AS(assemble_dynamic(pack, sys, 3.0), ModeError);
}

TEST_CASE("default_lambda1 satisfies the rate condition with margin") {
  const auto sys = rotation_system();
  const auto pack = rotation_pack();
  const double l1 = default_lambda1(pack, sys);
  const auto [mu_A, mu_mAT] = growth_bounds(sys.A);
  CHECK(l1 - 2.0 * pack.lambda > mu_A - mu_mAT);
  CHECK(assemble_dynamic(pack, sys, l1).rate_certified);
}

TEST_CASE("nonlinearity spot checks") {
  CHECK_NOTHROW(spot_check_nonlinearity(cubic_nonlinearity(1.0), 3));
  Nonlinearity bad = cubic_nonlinearity(1.0);
  bad.lipschitz_constant = 0.01;  // deliberately understated
  CHECK_THROWS_AS(spot_check_nonlinearity(bad, 3),
                  RejectedNonlinearityError);
  Nonlinearity shifted = cubic_nonlinearity(1.0);
  shifted.evaluator = [](const Vector& y) -> Vector {
    return Vector::Ones(y.size()) + y;
  };
  CHECK_THROWS_AS(spot_check_nonlinearity(shifted, 3),
                  RejectedNonlinearityError);
}

TEST_CASE("assemble_nonlinear: f = 0 reduces to the linear field") {
  const auto sys = rotation_system();
  const auto pack = rotation_pack();
  const auto f0 = cubic_nonlinearity(0.0);
  const auto nl = assemble_nonlinear(pack, sys, LoopMode::StaticNonlinear, f0);
  const auto lin = assemble_static(pack, sys);
  std::mt19937_64 rng(5);
  std::normal_distribution<double> gauss(0.0, 1.0);
  for (int trial = 0; trial < 20; ++trial) {
    Vector state(4);
    for (int i = 0; i < 4; ++i) state[i] = gauss(rng);
    CHECK((nl.field(state) - lin.block * state).norm() <
          1e-12 * (1.0 + state.norm()));
  }
}

TEST_CASE("assemble_nonlinear: equilibrium at the origin") {
  const auto sys = rotation_system();
  const auto pack = rotation_pack();
  const auto loop = assemble_nonlinear(pack, sys, LoopMode::StaticNonlinear,
                                       cubic_nonlinearity(1.0));
  CHECK(loop.field(Vector::Zero(4)).norm() == doctest::Approx(0.0));
}

TEST_CASE("assemble_nonlinear: coupled initial data is stationary in defect") {
  const auto sys = rotation_system();
  const auto pack = rotation_pack();
  const auto loop = assemble_nonlinear(pack, sys, LoopMode::StaticNonlinear,
                                       cubic_nonlinearity(1.0));
  const int n = sys.n();
  Vector y0(n);
  y0 << 0.01, -0.02;
  const Vector yt0 = pack.Q_factor.solve(y0);
  Vector state(2 * n);
  state << y0, yt0;
  const Vector rate = loop.field(state);
  // d/dt (y - Q ytilde) = 0 when ytilde = Q^{-1} y
  CHECK((rate.head(n) - pack.Q * rate.tail(n)).norm() < 1e-10);
}

TEST_CASE("assemble_nonlinear: static mode needs lambda > 0") {
  Matrix A(1, 1), B(1, 1);
  A << 1.0;
  B << 1.0;
  const auto sys = make_control_system(A, B, "unstable-scalar");
  // lambda = 0 identity: AQ + QA^T = B B^T has Q = 1/2
  StabilizerPack pack;
  pack.Q = 0.5 * Matrix::Identity(1, 1);
  pack.Q_factor = spd_factorize(pack.Q);
  pack.R = Matrix::Zero(1, 1);
  pack.W = Matrix::Identity(1, 1);
  pack.lambda = 0.0;
  pack.identity_residual = 0.0;
  pack.weight = WeightProfile::urquiza(1.0);
  CHECK_THROWS_AS(assemble_nonlinear(pack, sys, LoopMode::StaticNonlinear,
                                     cubic_nonlinearity(1.0)),
                  ModeError);
}

TEST_CASE("closed_loop_generator: scalar and rotation formulas") {
  const auto gen = closed_loop_generator(scalar_pack(), scalar_system());
  CHECK(gen(0, 0) == doctest::Approx(-1.0));

  const auto sys = rotation_system();
  const auto pack = rotation_pack();
  const Matrix AQ = closed_loop_generator(pack, sys);
  Matrix expected(2, 2);
  expected << 0, 1, -5, -4;
  CHECK((AQ - expected).norm() < 1e-6);
  CHECK(spectral_abscissa(AQ) == doctest::Approx(-2.0).epsilon(1e-6));
}

TEST_CASE("closed_loop_generator: skew identity pack reduces to A") {
  const auto sys = rotation_system();
  StabilizerPack pack;
  pack.Q = Matrix::Identity(2, 2);
  pack.Q_factor = spd_factorize(pack.Q);
  pack.R = Matrix::Zero(2, 2);
  // lambda = 0, W = 0: A Q + Q A^T = 0 holds for skew A
  pack.W = Matrix::Zero(1, 1);
  pack.lambda = 0.0;
  pack.identity_residual = 0.0;
  pack.weight = WeightProfile::urquiza(1.0);
  const Matrix AQ = closed_loop_generator(pack, sys);
  CHECK((AQ - sys.A).norm() < 1e-12);
}

TEST_CASE("generator consistency across zoo packs") {
  for (const auto& sys : model_zoo()) {
    const double T = *sys.declared_controllability_horizon;
    const auto pack = build_pack(sys, Matrix::Identity(sys.m(), sys.m()),
                                 WeightProfile::komornik(0.5, T), 64);
    CHECK_NOTHROW(closed_loop_generator(pack, sys));
  }
}

TEST_CASE("static spectral shift: lower-right block abscissa is -2 lambda") {
  const auto sys = rotation_system();
  const auto pack = rotation_pack();  // skew A, R = 0, lambda = 1
  const auto loop = assemble_static(pack, sys);
  const int n = sys.n();
  const Matrix lower = loop.block.bottomRightCorner(n, n);
  CHECK(spectral_abscissa(lower) ==
        doctest::Approx(-2.0 * pack.lambda).epsilon(1e-10));
}

TEST_CASE("dynamic block abscissa under lambda1 > 2 lambda") {
  const auto sys = rotation_system();
  auto pack = build_pack(sys, Matrix::Identity(1, 1),
                         WeightProfile::urquiza(0.5), 32);
  const auto loop = assemble_dynamic(pack, sys, 3.0);
  CHECK(spectral_abscissa(loop.block) <= -2.0 * pack.lambda + 1e-8);
}
