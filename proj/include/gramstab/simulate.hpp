#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "gramstab/feedback.hpp"

namespace gramstab {

// Time-stamped coupled states with derived series.
struct Trajectory {
  std::vector<double> times;
  std::vector<Vector> y_states;
  std::vector<Vector> ytilde_states;
  std::vector<double> lyapunov_values;   // V = <Q^{-1} y, y>
  std::vector<Vector> control_values;    // u = -W B^T ytilde
  std::vector<Vector> b_adjoint_ytilde;  // B^T ytilde, feeds the energy audit
  std::vector<double> coupling_defect;   // ||y - Q ytilde||

  std::size_t size() const { return times.size(); }
};

struct DecayReport {
  double fitted_rate = 0.0;  // positive = decay
  double fit_intercept = 0.0;
  double window_lo = 0.0;
  double window_hi = 0.0;
  double fit_rms_residual = 0.0;
  double theoretical_rate = 0.0;
  bool certified = false;
  std::uint64_t seed = 0;
};

// Data for the duality identity audit: forward y' = Ay + f + Bu + My against
// backward z' = -A^T z - g with z(t) = z_terminal.
struct TranspositionProbe {
  Matrix M;
  Vector y_initial;
  std::function<Vector(double)> f_source;
  std::function<Vector(double)> g_source;
  std::function<Vector(double)> u_control;
  Vector z_terminal;
  double horizon = 1.0;
};

// Uniform grid 0, step, ..., covering [0, t_end].
std::vector<double> uniform_grid(double t_end, double step);

// Exact matrix-exponential stepping for linear closed loops.
Trajectory integrate_linear(const ClosedLoop& loop, const Vector& y0,
                            const Vector& ytilde0,
                            const std::vector<double>& grid);

// RK4 with half-step Richardson control for nonlinear closed loops.
Trajectory integrate_nonlinear(const ClosedLoop& loop, const Vector& y0,
                               const Vector& ytilde0,
                               const std::vector<double>& grid,
                               double step_tol = 1e-10);

// Max deviation in the energy balance
// V(t) - V(tau) + int (2 lambda V + ||W^{1/2}B^T ytilde||^2 + ||R^{1/2}y||^2
//                      - 2 <f(y), Q^{-1}y>) ds,
// trapezoid-quadrature, normalized by V(0).
double energy_audit(const Trajectory& traj, const StabilizerPack& pack,
                    const Nonlinearity* f = nullptr);

// Static mode: asserts the defect stays below 1e-6 (1 + ||y0||).
// Dynamic mode: fits the defect decay rate against lambda1.
DecayReport coupling_audit(const Trajectory& traj, const StabilizerPack& pack,
                           std::optional<double> lambda1 = std::nullopt);

// Least-squares slope of log(series) on [window_lo, window_hi].
DecayReport fit_decay_rate(const std::vector<double>& times,
                           const std::vector<double>& series, double window_lo,
                           double window_hi, double theoretical, double tol);

// Residual of the forward/backward duality identity; the report value.
double transposition_audit(const ControlSystem& system,
                           const TranspositionProbe& probe,
                           const std::vector<double>& grid);

// Bisection for the largest initial norm at which sqrt(V) certifies rate
// gamma on 20 seeded trials over [0, horizon].
double stabilization_radius_search(const ControlSystem& system,
                                   const StabilizerPack& pack,
                                   const Nonlinearity& f, double gamma,
                                   double horizon, std::uint64_t seed = 1);

}  // namespace gramstab
