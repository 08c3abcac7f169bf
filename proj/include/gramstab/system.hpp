#pragma once

#include <optional>
#include <string>

#include "gramstab/core.hpp"

namespace gramstab {

// The pair (A, B): y' = Ay + Bu on R^n with m inputs.
struct ControlSystem {
  Matrix A;
  Matrix B;
  std::string label;
  bool is_skew_adjoint = false;
  std::optional<double> declared_controllability_horizon;

  int n() const { return static_cast<int>(A.rows()); }
  int m() const { return static_cast<int>(B.cols()); }
};

// Builds a system and certifies the skew-adjointness flag numerically.
inline ControlSystem make_control_system(
    Matrix A, Matrix B, std::string label,
    std::optional<double> horizon = std::nullopt) {
  if (A.rows() != A.cols()) {
    throw ContractError("ControlSystem: A must be square");
  }
  if (B.rows() != A.rows()) {
    throw ContractError("ControlSystem: B row count must match A");
  }
  require_finite(A, "ControlSystem A");
  require_finite(B, "ControlSystem B");
  ControlSystem s;
  s.is_skew_adjoint = (A + A.transpose()).norm() <= 1e-12;
  s.A = std::move(A);
  s.B = std::move(B);
  s.label = std::move(label);
  s.declared_controllability_horizon = horizon;
  return s;
}

}  // namespace gramstab
