#include "gramstab/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace gramstab {

namespace {

void check_grid(const std::vector<double>& grid) {
  if (grid.size() < 2 || grid.front() != 0.0) {
    throw ContractError("time grid must start at 0 and have >= 2 points");
  }
  for (std::size_t k = 1; k < grid.size(); ++k) {
    if (grid[k] <= grid[k - 1]) {
      throw ContractError("time grid must be strictly increasing");
    }
  }
}

void append_sample(Trajectory& traj, const ClosedLoop& loop, double t,
                   const Vector& state) {
  const int n = loop.system.n();
  const Vector y = state.head(n);
  const Vector yt = state.tail(n);
  traj.times.push_back(t);
  traj.y_states.push_back(y);
  traj.ytilde_states.push_back(yt);
  traj.lyapunov_values.push_back(loop.pack.Q_factor.inverse_quadratic_form(y));
  const Vector bty = loop.system.B.transpose() * yt;
  traj.b_adjoint_ytilde.push_back(bty);
  traj.control_values.push_back(-loop.pack.W * bty);
  traj.coupling_defect.push_back((y - loop.pack.Q * yt).norm());
}

Vector rk4_step(const std::function<Vector(double, const Vector&)>& f, double t,
                const Vector& x, double h) {
  const Vector k1 = f(t, x);
  const Vector k2 = f(t + 0.5 * h, x + 0.5 * h * k1);
  const Vector k3 = f(t + 0.5 * h, x + 0.5 * h * k2);
  const Vector k4 = f(t + h, x + h * k3);
  return x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

}  // namespace

std::vector<double> uniform_grid(double t_end, double step) {
  if (t_end <= 0 || step <= 0) {
    throw ContractError("uniform_grid: t_end and step must be positive");
  }
  const auto count = static_cast<std::size_t>(std::llround(t_end / step));
  std::vector<double> grid(count + 1);
  for (std::size_t i = 0; i <= count; ++i) {
    grid[i] = i * step;
  }
  return grid;
}

Trajectory integrate_linear(const ClosedLoop& loop, const Vector& y0,
                            const Vector& ytilde0,
                            const std::vector<double>& grid) {
  if (!loop.is_linear()) {
    throw ContractError("integrate_linear: loop is not in a linear mode");
  }
  check_grid(grid);
  const int n = loop.system.n();
  if (y0.size() != n || ytilde0.size() != n) {
    throw ContractError("integrate_linear: initial state dimension mismatch");
  }
  Vector state(2 * n);
  state << y0, ytilde0;

  Trajectory traj;
  append_sample(traj, loop, 0.0, state);

  // One propagator per distinct step size.
  std::vector<std::pair<double, Matrix>> steppers;
  for (std::size_t k = 1; k < grid.size(); ++k) {
    const double dt = grid[k] - grid[k - 1];
    const Matrix* P = nullptr;
    for (const auto& [h, M] : steppers) {
      if (h == dt) {
        P = &M;
        break;
      }
    }
    if (P == nullptr) {
      steppers.emplace_back(dt, propagator(loop.block, dt));
      P = &steppers.back().second;
    }
    state = (*P) * state;
    append_sample(traj, loop, grid[k], state);
  }
  return traj;
}

Trajectory integrate_nonlinear(const ClosedLoop& loop, const Vector& y0,
                               const Vector& ytilde0,
                               const std::vector<double>& grid,
                               double step_tol) {
  if (loop.is_linear()) {
    throw ContractError("integrate_nonlinear: loop is not in a nonlinear mode");
  }
  check_grid(grid);
  const int n = loop.system.n();
  if (y0.size() != n || ytilde0.size() != n) {
    throw ContractError("integrate_nonlinear: initial state dimension mismatch");
  }
  Vector state(2 * n);
  state << y0, ytilde0;
  const double guard = 10.0 * state.norm();

  auto f = [&loop](double, const Vector& x) { return loop.field(x); };

  const double stiffness_scale =
      loop.linearization_norm + loop.nonlinearity->lipschitz_constant;
  double h0 = 0.9 / std::max(stiffness_scale, 1e-12);
  for (std::size_t k = 1; k < grid.size(); ++k) {
    h0 = std::min(h0, grid[k] - grid[k - 1]);
  }

  Trajectory traj;
  append_sample(traj, loop, 0.0, state);
  for (std::size_t k = 1; k < grid.size(); ++k) {
    double t = grid[k - 1];
    const double t_next = grid[k];
    double h = h0;
    while (t < t_next - 1e-14 * t_next) {
      const double step = std::min(h, t_next - t);
      // Richardson: full step vs. two half steps.
      const Vector full = rk4_step(f, t, state, step);
      Vector half = rk4_step(f, t, state, 0.5 * step);
      half = rk4_step(f, t + 0.5 * step, half, 0.5 * step);
      const double err = (full - half).norm() / 15.0;
      // !(err <= tol) also catches NaN from overflowing stages
      if (!(err <= step_tol) && step > 1e-12) {
        h = 0.5 * step;
        if (h < 1e-12) {
          throw StiffnessError("integrate_nonlinear: step size underflow");
        }
        continue;
      }
      state = half;
      t += step;
      if (!state.allFinite() || state.norm() > guard) {
        throw DivergenceError(
            "integrate_nonlinear: state norm exceeded 10x initial norm at t " +
            format_double(t));
      }
    }
    append_sample(traj, loop, t_next, state);
  }
  return traj;
}

double energy_audit(const Trajectory& traj, const StabilizerPack& pack,
                    const Nonlinearity* f) {
  if (traj.size() < 2) {
    throw ContractError("energy_audit: trajectory too short");
  }
  const double y0_norm = traj.y_states.front().norm();
  const double defect_cap = 1e-6 * (1.0 + y0_norm);
  for (std::size_t k = 0; k < traj.size(); ++k) {
    if (traj.coupling_defect[k] > defect_cap) {
      throw AuditNotApplicableError(
          "energy_audit: coupling defect off the coupled manifold at t " +
          format_double(traj.times[k]));
    }
  }
  const double V0 = traj.lyapunov_values.front();
  if (V0 == 0.0) {
    return 0.0;  // zero trajectory
  }

  const Matrix Rhalf = sym_sqrt(pack.R, 1e-8 * (1.0 + pack.R.norm()));
  std::vector<double> integrand(traj.size());
  for (std::size_t k = 0; k < traj.size(); ++k) {
    const Vector& y = traj.y_states[k];
    const Vector& bty = traj.b_adjoint_ytilde[k];
    double g = 2.0 * pack.lambda * traj.lyapunov_values[k] +
               bty.dot(pack.W * bty) + (Rhalf * y).squaredNorm();
    if (f != nullptr) {
      g -= 2.0 * f->evaluator(y).dot(pack.Q_factor.solve(y));
    }
    integrand[k] = g;
  }
  // G = V + cumulative integral is conserved; max over pairs is the spread.
  double cum = 0.0;
  double g_min = V0, g_max = V0;
  for (std::size_t k = 1; k < traj.size(); ++k) {
    cum += 0.5 * (traj.times[k] - traj.times[k - 1]) *
           (integrand[k] + integrand[k - 1]);
    const double G = traj.lyapunov_values[k] + cum;
    g_min = std::min(g_min, G);
    g_max = std::max(g_max, G);
  }
  return (g_max - g_min) / V0;
}

DecayReport coupling_audit(const Trajectory& traj, const StabilizerPack& pack,
                           std::optional<double> lambda1) {
  (void)pack;
  if (traj.size() < 2) {
    throw ContractError("coupling_audit: trajectory too short");
  }
  if (!lambda1) {
    const double cap = 1e-6 * (1.0 + traj.y_states.front().norm());
    DecayReport report;
    report.theoretical_rate = 0.0;
    double worst = 0.0;
    for (std::size_t k = 0; k < traj.size(); ++k) {
      worst = std::max(worst, traj.coupling_defect[k]);
      if (traj.coupling_defect[k] > cap) {
        throw AuditNotApplicableError(
            "coupling_audit: static coupling violated at t " +
            format_double(traj.times[k]) + " (defect " +
            format_double(traj.coupling_defect[k]) + ")");
      }
    }
    report.certified = true;
    report.fitted_rate = 0.0;
    report.fit_rms_residual = worst;
    report.window_lo = traj.times.front();
    report.window_hi = traj.times.back();
    return report;
  }
  const double span = traj.times.back();
  return fit_decay_rate(traj.times, traj.coupling_defect, 0.2 * span, span,
                        *lambda1, 1e-3);
}

DecayReport fit_decay_rate(const std::vector<double>& times,
                           const std::vector<double>& series, double window_lo,
                           double window_hi, double theoretical, double tol) {
  if (times.size() != series.size()) {
    throw ContractError("fit_decay_rate: series length mismatch");
  }
  std::vector<double> ts, logs;
  for (std::size_t k = 0; k < times.size(); ++k) {
    if (times[k] < window_lo || times[k] > window_hi) continue;
    if (series[k] <= 1e-300) {
      break;  // truncate at the first floored sample
    }
    ts.push_back(times[k]);
    logs.push_back(std::log(series[k]));
  }
  if (ts.size() < 10) {
    throw InsufficientDataError(
        "fit_decay_rate: fewer than 10 usable samples in window");
  }
  const double N = static_cast<double>(ts.size());
  double st = 0, sl = 0, stt = 0, stl = 0;
  for (std::size_t k = 0; k < ts.size(); ++k) {
    st += ts[k];
    sl += logs[k];
    stt += ts[k] * ts[k];
    stl += ts[k] * logs[k];
  }
  const double denom = N * stt - st * st;
  const double slope = (N * stl - st * sl) / denom;
  const double intercept = (sl - slope * st) / N;
  double rss = 0.0;
  for (std::size_t k = 0; k < ts.size(); ++k) {
    const double r = logs[k] - (intercept + slope * ts[k]);
    rss += r * r;
  }
  DecayReport report;
  report.fitted_rate = -slope;
  report.fit_intercept = intercept;
  report.window_lo = window_lo;
  report.window_hi = window_hi;
  report.fit_rms_residual = std::sqrt(rss / N);
  report.theoretical_rate = theoretical;
  report.certified = report.fitted_rate >= theoretical - tol;
  return report;
}

double transposition_audit(const ControlSystem& system,
                           const TranspositionProbe& probe,
                           const std::vector<double>& grid) {
  check_grid(grid);
  const int n = system.n();
  if (probe.M.rows() != n || probe.M.cols() != n || probe.z_terminal.size() != n ||
      probe.y_initial.size() != n) {
    throw ContractError("transposition_audit: probe dimension mismatch");
  }
  const std::size_t N = grid.size();

  auto forward = [&](double t, const Vector& y) -> Vector {
    return system.A * y + probe.f_source(t) + system.B * probe.u_control(t) +
           probe.M * y;
  };
  auto backward = [&](double t, const Vector& z) -> Vector {
    return -system.A.transpose() * z - probe.g_source(t);
  };

  std::vector<Vector> y(N), z(N);
  y[0] = probe.y_initial;
  for (std::size_t k = 1; k < N; ++k) {
    y[k] = rk4_step(forward, grid[k - 1], y[k - 1], grid[k] - grid[k - 1]);
  }
  z[N - 1] = probe.z_terminal;
  for (std::size_t k = N - 1; k > 0; --k) {
    z[k - 1] = rk4_step(backward, grid[k], z[k], grid[k - 1] - grid[k]);
  }

  // Simpson on equal-width interval pairs, trapezoid on the leftovers; the
  // quadrature must not dominate the RK4 error at h = 1e-3.
  auto trapz = [&](const std::function<double(std::size_t)>& g) {
    double s = 0.0;
    std::size_t k = 1;
    while (k < N) {
      const double h1 = grid[k] - grid[k - 1];
      if (k + 1 < N && std::abs((grid[k + 1] - grid[k]) - h1) <= 1e-12 * h1) {
        s += (h1 / 3.0) * (g(k - 1) + 4.0 * g(k) + g(k + 1));
        k += 2;
      } else {
        s += 0.5 * h1 * (g(k) + g(k - 1));
        k += 1;
      }
    }
    return s;
  };
  const double boundary =
      y[N - 1].dot(probe.z_terminal) - probe.y_initial.dot(z[0]);
  const double iu = trapz([&](std::size_t k) {
    return probe.u_control(grid[k]).dot(system.B.transpose() * z[k]);
  });
  const double ig =
      trapz([&](std::size_t k) { return probe.g_source(grid[k]).dot(y[k]); });
  const double iff =
      trapz([&](std::size_t k) { return probe.f_source(grid[k]).dot(z[k]); });
  const double im =
      trapz([&](std::size_t k) { return (probe.M * y[k]).dot(z[k]); });

  const double residual = std::abs(boundary - iu + ig - iff - im);
  return residual /
         ((1.0 + probe.y_initial.norm()) * (1.0 + probe.z_terminal.norm()));
}

double stabilization_radius_search(const ControlSystem& system,
                                   const StabilizerPack& pack,
                                   const Nonlinearity& f, double gamma,
                                   double horizon, std::uint64_t seed) {
  if (gamma <= 0 || gamma >= pack.lambda) {
    throw ContractError(
        "stabilization_radius_search: requires 0 < gamma < lambda");
  }
  const ClosedLoop loop =
      assemble_nonlinear(pack, system, LoopMode::StaticNonlinear, f);
  const std::vector<double> grid = uniform_grid(horizon, horizon / 200.0);
  const int n = system.n();

  auto trial = [&](double eps) -> bool {
    std::mt19937_64 rng(seed ^ 0xd1b54a32d192ed03ull);
    std::normal_distribution<double> gauss(0.0, 1.0);
    for (int trial_idx = 0; trial_idx < 20; ++trial_idx) {
      Vector y0(n);
      for (int i = 0; i < n; ++i) y0[i] = gauss(rng);
      y0 *= eps / std::max(y0.norm(), 1e-300);
      const Vector yt0 = pack.Q_factor.solve(y0);
      Trajectory traj;
      try {
        traj = integrate_nonlinear(loop, y0, yt0, grid);
      } catch (const DivergenceError&) {
        return false;
      }
      const double s0 = std::sqrt(traj.lyapunov_values.front());
      for (std::size_t k = 0; k < traj.size(); ++k) {
        const double bound =
            std::exp(-gamma * traj.times[k]) * s0 * (1.0 + 1e-3);
        if (std::sqrt(traj.lyapunov_values[k]) > bound) {
          return false;
        }
      }
    }
    return true;
  };

  double lo = 1e-8;
  double hi = f.lipschitz_radius;
  if (trial(hi)) {
    return hi;  // the linear theorem is global; search saturates
  }
  if (!trial(lo)) {
    throw ControllabilityError(
        "stabilization_radius_search: no stabilization radius found; pack and "
        "nonlinearity are inconsistent");
  }
  for (int step = 0; step < 11; ++step) {
    const double mid = 0.5 * (lo + hi);
    if (trial(mid)) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return lo;
}

}  // namespace gramstab
