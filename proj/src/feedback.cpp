#include "gramstab/feedback.hpp"

#include <cmath>
#include <random>

namespace gramstab {

namespace {

constexpr double kMaxPackResidual = 1e-6;
constexpr double kZeroRNorm = 1e-9;

void require_pack_certified(const StabilizerPack& pack) {
  if (pack.identity_residual > kMaxPackResidual) {
    throw ModeError("pack identity residual " +
                    format_double(pack.identity_residual) +
                    " exceeds 1e-6; refusing assembly");
  }
}

void require_dimensions(const StabilizerPack& pack,
                        const ControlSystem& system) {
  if (pack.n() != system.n() || pack.m() != system.m()) {
    throw ContractError("pack dimensions do not match system");
  }
}

Matrix feedback_gain(const StabilizerPack& pack, const ControlSystem& system) {
  return system.B * pack.W * system.B.transpose();
}

}  // namespace

void spot_check_nonlinearity(const Nonlinearity& f, int dim,
                             std::uint64_t seed) {
  if (!f.evaluator || f.lipschitz_radius <= 0 || f.lipschitz_constant < 0) {
    throw RejectedNonlinearityError("nonlinearity descriptor incomplete");
  }
  const Vector zero = Vector::Zero(dim);
  if (f.evaluator(zero).norm() > 1e-14) {
    throw RejectedNonlinearityError("nonlinearity must satisfy f(0) = 0");
  }
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  auto sample_in_ball = [&](double radius) {
    Vector v(dim);
    for (int i = 0; i < dim; ++i) v[i] = gauss(rng);
    v *= radius * std::pow(unif(rng), 1.0 / dim) / std::max(v.norm(), 1e-300);
    return v;
  };
  for (int k = 0; k < 100; ++k) {
    const Vector x = sample_in_ball(f.lipschitz_radius);
    const Vector y = sample_in_ball(f.lipschitz_radius);
    const double dist = (x - y).norm();
    if (dist < 1e-14) continue;
    const double quotient = (f.evaluator(x) - f.evaluator(y)).norm() / dist;
    if (quotient > f.lipschitz_constant * (1.0 + 1e-9)) {
      throw RejectedNonlinearityError(
          "sampled Lipschitz quotient " + format_double(quotient) +
          " exceeds declared constant " + format_double(f.lipschitz_constant));
    }
  }
  if (f.vanishing_modulus) {
    for (double eps : {0.1, 0.01}) {
      const double delta =
          std::min(f.vanishing_modulus(eps), f.lipschitz_radius);
      for (int k = 0; k < 20; ++k) {
        const Vector x = sample_in_ball(delta * (1.0 - 1e-12));
        if (f.evaluator(x).norm() > eps * x.norm() * (1.0 + 1e-9)) {
          throw RejectedNonlinearityError(
              "vanishing modulus violated at eps = " + format_double(eps));
        }
      }
    }
  }
}

Vector ClosedLoop::field(const Vector& state) const {
  if (state.size() != state_dim()) {
    throw ContractError("ClosedLoop::field: state dimension mismatch");
  }
  if (is_linear()) {
    return block * state;
  }
  const int n = system.n();
  const Vector y = state.head(n);
  const Vector yt = state.tail(n);
  const Matrix& A = system.A;
  const Vector fy = nonlinearity->evaluator(y);
  const Vector fQyt = nonlinearity->evaluator(pack.Q * yt);

  Vector out(2 * n);
  out.head(n) = A * y + fy - system.B * (pack.W * (system.B.transpose() * yt));
  Vector yt_dot =
      -A.transpose() * yt - 2.0 * pack.lambda * yt + pack.Q_factor.solve(fQyt);
  if (mode == LoopMode::StaticNonlinear) {
    yt_dot -= pack.R * (pack.Q * yt);
  } else {
    yt_dot += lambda1 * pack.Q_factor.solve(y - pack.Q * yt);
  }
  out.tail(n) = yt_dot;
  return out;
}

ClosedLoop assemble_static(const StabilizerPack& pack,
                           const ControlSystem& system) {
  require_dimensions(pack, system);
  require_pack_certified(pack);
  const int n = system.n();
  ClosedLoop loop;
  loop.mode = LoopMode::StaticLinear;
  loop.system = system;
  loop.pack = pack;
  loop.block = Matrix::Zero(2 * n, 2 * n);
  loop.block.topLeftCorner(n, n) = system.A;
  loop.block.topRightCorner(n, n) = -feedback_gain(pack, system);
  loop.block.bottomRightCorner(n, n) = -system.A.transpose() -
                                       2.0 * pack.lambda * Matrix::Identity(n, n) -
                                       pack.R * pack.Q;
  loop.linearization_norm = loop.block.norm();
  return loop;
}

ClosedLoop assemble_dynamic(const StabilizerPack& pack,
                            const ControlSystem& system, double lambda1) {
  require_dimensions(pack, system);
  require_pack_certified(pack);
  if (pack.R.norm() > kZeroRNorm) {
    throw ModeError(
        "dynamic feedback requires a pack with R = 0 (operator identity with "
        "R = 0); got ||R|| = " +
        format_double(pack.R.norm()));
  }
  const int n = system.n();
  ClosedLoop loop;
  loop.mode = LoopMode::DynamicLinear;
  loop.system = system;
  loop.pack = pack;
  loop.lambda1 = lambda1;
  loop.block = Matrix::Zero(2 * n, 2 * n);
  loop.block.topLeftCorner(n, n) = system.A;
  loop.block.topRightCorner(n, n) = -feedback_gain(pack, system);
  loop.block.bottomLeftCorner(n, n) = lambda1 * pack.Q_factor.inverse();
  loop.block.bottomRightCorner(n, n) =
      -system.A.transpose() -
      (2.0 * pack.lambda + lambda1) * Matrix::Identity(n, n);
  loop.linearization_norm = loop.block.norm();

  const auto [mu_A, mu_mAT] = growth_bounds(system.A);
  loop.rate_certified = lambda1 - 2.0 * pack.lambda > mu_A - mu_mAT;
  return loop;
}

double default_lambda1(const StabilizerPack& pack,
                       const ControlSystem& system) {
  const auto [mu_A, mu_mAT] = growth_bounds(system.A);
  return 2.0 * pack.lambda + (mu_A - mu_mAT) + 1.0;
}

ClosedLoop assemble_nonlinear(const StabilizerPack& pack,
                              const ControlSystem& system, LoopMode mode,
                              const Nonlinearity& f,
                              std::optional<double> lambda1) {
  require_dimensions(pack, system);
  require_pack_certified(pack);
  if (mode != LoopMode::StaticNonlinear && mode != LoopMode::DynamicNonlinear) {
    throw ModeError("assemble_nonlinear: mode must be nonlinear");
  }
  spot_check_nonlinearity(f, system.n());

  ClosedLoop loop;
  loop.mode = mode;
  loop.system = system;
  loop.pack = pack;
  loop.nonlinearity = f;
  if (mode == LoopMode::StaticNonlinear) {
    if (pack.lambda <= 0) {
      throw ModeError("static nonlinear feedback requires lambda > 0");
    }
    loop.linearization_norm = assemble_static(pack, system).block.norm();
  } else {
    if (pack.R.norm() > kZeroRNorm) {
      throw ModeError("dynamic nonlinear feedback requires R = 0");
    }
    loop.lambda1 = lambda1.value_or(default_lambda1(pack, system));
    ClosedLoop lin = assemble_dynamic(pack, system, loop.lambda1);
    loop.linearization_norm = lin.block.norm();
    loop.rate_certified = lin.rate_certified;
  }
  return loop;
}

Matrix closed_loop_generator(const StabilizerPack& pack,
                             const ControlSystem& system) {
  require_dimensions(pack, system);
  const int n = system.n();
  const Matrix Qinv = pack.Q_factor.inverse();
  const Matrix AQ = -pack.Q * system.A.transpose() * Qinv -
                    2.0 * pack.lambda * Matrix::Identity(n, n) -
                    pack.Q * pack.R;
  const Matrix direct = system.A - feedback_gain(pack, system) * Qinv;
  const double gap = (AQ - direct).norm();
  const double allowance =
      20.0 * std::max(pack.identity_residual, 1e-14) *
      std::max(1.0, Qinv.norm()) * (1.0 + pack.Q.norm());
  if (gap > allowance) {
    throw std::logic_error(
        "closed_loop_generator: generator formulas disagree, difference " +
        format_double(gap));
  }
  return AQ;
}

}  // namespace gramstab
