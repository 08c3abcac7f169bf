#pragma once

#include <cstdint>
#include <set>
#include <string>
#include <vector>

#include "gramstab/feedback.hpp"
#include "gramstab/system.hpp"

namespace gramstab {

// n = 2k coupled rotations with frequencies 1..k; exactly skew-adjoint.
// Control columns act on the velocity coordinate of each listed oscillator
// (1-based indices).
ControlSystem skew_oscillator_chain(int k, double coupling,
                                    const std::set<int>& control_nodes);

// Periodic central-difference transport on n grid points; B selects the
// window of nodes (1-based, inclusive).
ControlSystem transport_ring(int n, int window_lo, int window_hi);

// First-order form of a k-node discrete wave equation, similarity-transformed
// so A is exactly skew-adjoint.  Boundary control acts on the last velocity
// node; otherwise all velocity nodes are actuated.
ControlSystem wave_lattice(int k, bool control_boundary);

// Random (A, B) with entries in [-1, 1], resampled until Kalman rank = n.
ControlSystem random_controllable(int n, int m, std::uint64_t seed);

// f(y) = kappa ||y||^2 y with delta(eps) = sqrt(eps/kappa), Lambda = 3 kappa
// on the unit ball.
Nonlinearity cubic_nonlinearity(double kappa);

// Zoo addressing: "oscillator:k=K,c=C,ctrl=I", "ring:n=N,win=A..B",
// "wave:k=K,boundary" / "wave:k=K,all", "random:n=N,m=M,seed=S".
ControlSystem parse_system_spec(const std::string& spec);

// The systems exercised by the acceptance suite.
std::vector<ControlSystem> model_zoo();

}  // namespace gramstab
