#pragma once

#include <functional>
#include <optional>

#include "gramstab/gramian.hpp"
#include "gramstab/system.hpp"

namespace gramstab {

enum class LoopMode {
  StaticLinear,
  DynamicLinear,
  StaticNonlinear,
  DynamicNonlinear
};

// A locally Lipschitz perturbation f with f(0) = 0 and vanishing modulus
// delta(eps): ||f(x)|| <= eps ||x|| whenever ||x|| < delta(eps).
struct Nonlinearity {
  std::function<Vector(const Vector&)> evaluator;
  double lipschitz_radius = 1.0;
  double lipschitz_constant = 0.0;
  std::function<double(double)> vanishing_modulus;
};

// Sampled verification of the Nonlinearity contract; throws
// RejectedNonlinearityError on failure.
void spot_check_nonlinearity(const Nonlinearity& f, int dim,
                             std::uint64_t seed = 7);

// Coupled (y, ytilde) closed loop.  Linear modes carry the assembled 2n x 2n
// block; nonlinear modes evaluate the vector field through field().
struct ClosedLoop {
  LoopMode mode = LoopMode::StaticLinear;
  ControlSystem system;
  StabilizerPack pack;
  double lambda1 = 0.0;
  bool rate_certified = false;
  std::optional<Nonlinearity> nonlinearity;
  Matrix block;                     // linear modes
  double linearization_norm = 0.0;  // Frobenius norm of the linear block

  bool is_linear() const {
    return mode == LoopMode::StaticLinear || mode == LoopMode::DynamicLinear;
  }
  bool is_dynamic() const {
    return mode == LoopMode::DynamicLinear || mode == LoopMode::DynamicNonlinear;
  }
  int state_dim() const { return 2 * system.n(); }

  // Vector field on the stacked state (y; ytilde), any mode.
  Vector field(const Vector& state) const;
};

// Static trajectory feedback: block [[A, -BWB^T], [0, -A^T - 2 lambda I - RQ]].
ClosedLoop assemble_static(const StabilizerPack& pack,
                           const ControlSystem& system);

// Dynamic feedback with correction lambda1 Q^{-1}(y - Q ytilde); requires a
// pack built with R = 0.
ClosedLoop assemble_dynamic(const StabilizerPack& pack,
                            const ControlSystem& system, double lambda1);

// Default lambda1 satisfying lambda1 - 2 lambda > mu(A) - mu(-A^T) with
// margin 1.
double default_lambda1(const StabilizerPack& pack, const ControlSystem& system);

ClosedLoop assemble_nonlinear(const StabilizerPack& pack,
                              const ControlSystem& system, LoopMode mode,
                              const Nonlinearity& f,
                              std::optional<double> lambda1 = std::nullopt);

// Generator of the closed-loop semigroup: -Q A^T Q^{-1} - 2 lambda I - QR,
// asserted consistent with A - B W B^T Q^{-1}.
Matrix closed_loop_generator(const StabilizerPack& pack,
                             const ControlSystem& system);

}  // namespace gramstab
