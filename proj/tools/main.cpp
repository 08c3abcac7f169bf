// Command-line front end: build -> verify -> simulate -> report.
//
// Subcommands: gramian, verify, simulate, sweep.  Exit codes: 0 success /
// certified, 1 verification failed, 2 config or build error, 3 runtime
// divergence.

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <Eigen/Eigenvalues>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <random>
#include <sstream>

#include "gramstab/feedback.hpp"
#include "gramstab/gramian.hpp"
#include "gramstab/io.hpp"
#include "gramstab/models.hpp"
#include "gramstab/simulate.hpp"

namespace {

using namespace gramstab;
using nlohmann::json;

struct RunConfig {
  ControlSystem system;
  Matrix W;
  WeightProfile profile;
  std::string mode = "static";
  std::optional<double> lambda1;
  std::optional<double> gamma;
  std::optional<Nonlinearity> nonlinearity;
  double horizon = 10.0;
  double grid_step = 1e-3;
  std::uint64_t seed = 42;
  std::optional<Vector> y0;
  std::optional<Vector> ytilde0;
  double y0_norm = 1.0;
};

Matrix matrix_from_config(const json& j) {
  if (j.is_string()) {
    return read_matrix(j.get<std::string>());
  }
  if (!j.is_array() || j.empty()) {
    throw ContractError("config: matrix must be a file path or nested array");
  }
  const auto rows = static_cast<Eigen::Index>(j.size());
  const auto cols = static_cast<Eigen::Index>(j[0].size());
  Matrix M(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    for (Eigen::Index k = 0; k < cols; ++k) {
      M(i, k) = j[i][k].get<double>();
    }
  }
  return M;
}

Vector vector_from_config(const json& j) {
  Vector v(j.size());
  for (std::size_t i = 0; i < j.size(); ++i) v[i] = j[i].get<double>();
  return v;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw ContractError("cannot open config " + path);
  }
  json j;
  in >> j;

  RunConfig cfg;
  const auto& sys = j.at("system");
  if (sys.is_string()) {
    cfg.system = parse_system_spec(sys.get<std::string>());
  } else {
    cfg.system = make_control_system(matrix_from_config(sys.at("A")),
                                     matrix_from_config(sys.at("B")), "config");
  }

  if (j.contains("W") && !(j["W"].is_string() && j["W"] == "identity")) {
    cfg.W = matrix_from_config(j["W"]);
  } else {
    cfg.W = Matrix::Identity(cfg.system.m(), cfg.system.m());
  }

  const auto& w = j.at("weight");
  const std::string kind = w.at("kind").get<std::string>();
  const double lambda = w.at("lambda").get<double>();
  if (kind == "komornik") {
    double T;
    if (w.contains("T")) {
      T = w["T"].get<double>();
    } else if (cfg.system.declared_controllability_horizon) {
      T = *cfg.system.declared_controllability_horizon;
    } else {
      throw ContractError("config: Komornik weight needs T");
    }
    cfg.profile = WeightProfile::komornik(lambda, T);
  } else if (kind == "urquiza") {
    cfg.profile = WeightProfile::urquiza(
        lambda, w.value("truncation_tol", 1e-12));
  } else {
    throw ContractError("config: weight kind must be komornik or urquiza");
  }

  cfg.mode = j.value("mode", "static");
  if (j.contains("lambda1")) cfg.lambda1 = j["lambda1"].get<double>();
  if (j.contains("gamma")) cfg.gamma = j["gamma"].get<double>();
  if (j.contains("nonlinearity")) {
    const auto& nl = j["nonlinearity"];
    if (nl.at("name") != "cubic") {
      throw ContractError("config: unknown nonlinearity " +
                          nl.at("name").get<std::string>());
    }
    cfg.nonlinearity = cubic_nonlinearity(nl.value("kappa", 1.0));
  }
  cfg.horizon = j.value("horizon", 10.0);
  cfg.grid_step = j.value("grid_step", 1e-3);
  cfg.seed = j.value("seed", 42ull);
  cfg.y0_norm = j.value("y0_norm", 1.0);
  if (j.contains("y0")) cfg.y0 = vector_from_config(j["y0"]);
  if (j.contains("ytilde0")) cfg.ytilde0 = vector_from_config(j["ytilde0"]);
  return cfg;
}

Vector seeded_state(int n, double norm, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  Vector v(n);
  for (int i = 0; i < n; ++i) v[i] = gauss(rng);
  return v * (norm / std::max(v.norm(), 1e-300));
}

double spectral_abscissa(const Matrix& M) {
  return Eigen::EigenSolver<Matrix>(M, false)
      .eigenvalues()
      .real()
      .maxCoeff();
}

std::string out_path(const std::string& dir, const std::string& name) {
  std::filesystem::create_directories(dir);
  return (std::filesystem::path(dir) / name).string();
}

int cmd_gramian(const RunConfig& cfg, const std::string& out_dir,
                int quad_points, double tol) {
  const StabilizerPack pack =
      build_pack(cfg.system, cfg.W, cfg.profile, quad_points);
  write_pack(out_path(out_dir, "pack.json"), pack);
  std::cout << "identity_residual " << format_double(pack.identity_residual)
            << "\n";
  return pack.identity_residual <= tol ? 0 : 1;
}

int cmd_verify(const RunConfig& cfg, const std::string& pack_path,
               const std::string& out_dir, double tol) {
  const StabilizerPack pack = load_pack(pack_path);
  StabilizerPack checked = pack;
  checked.identity_residual = verify_identity(cfg.system, pack);

  const int n = cfg.system.n();
  const Matrix Qinv = pack.Q_factor.inverse();
  const Matrix formula = -pack.Q * cfg.system.A.transpose() * Qinv -
                         2.0 * pack.lambda * Matrix::Identity(n, n) -
                         pack.Q * pack.R;
  const Matrix direct =
      cfg.system.A - cfg.system.B * pack.W * cfg.system.B.transpose() * Qinv;
  const double consistency = (formula - direct).norm();
  const double abscissa = spectral_abscissa(formula);

  const double consistency_allowance =
      20.0 * std::max(checked.identity_residual, 1e-14) *
      std::max(1.0, Qinv.norm()) * (1.0 + pack.Q.norm());
  const bool certified = checked.identity_residual <= tol &&
                         consistency <= consistency_allowance &&
                         abscissa <= -pack.lambda + 1e-8;

  std::ostringstream report;
  report << "{\"identity_residual\": "
         << format_double(checked.identity_residual)
         << ", \"generator_consistency\": " << format_double(consistency)
         << ", \"spectral_abscissa_AQ\": " << format_double(abscissa)
         << ", \"certified\": " << (certified ? "true" : "false") << "}\n";
  write_text_file(out_path(out_dir, "verify.json"), report.str());
  std::cout << report.str();
  return certified ? 0 : 1;
}

struct SimulationOutcome {
  Trajectory traj;
  DecayReport decay;
  DecayReport coupling;
  double energy_residual = -1.0;  // -1 when not applicable
  bool certified = false;
};

SimulationOutcome run_simulation(const RunConfig& cfg,
                                 const StabilizerPack& pack) {
  const int n = cfg.system.n();
  const auto grid = uniform_grid(cfg.horizon, cfg.grid_step);
  const bool dynamic =
      cfg.mode == "dynamic" || cfg.mode == "dynamic_nonlinear";
  const bool nonlinear =
      cfg.mode == "static_nonlinear" || cfg.mode == "dynamic_nonlinear";

  const Vector y0 =
      cfg.y0 ? *cfg.y0 : seeded_state(n, cfg.y0_norm, cfg.seed);
  Vector yt0;
  if (!dynamic) {
    yt0 = pack.Q_factor.solve(y0);  // static modes couple at t = 0
  } else if (cfg.ytilde0) {
    yt0 = *cfg.ytilde0;
  } else {
    yt0 = seeded_state(n, cfg.y0_norm, cfg.seed + 1);
  }

  SimulationOutcome out;
  const auto [mu_A, mu_mAT] = growth_bounds(cfg.system.A);
  (void)mu_A;
  double lambda1 = 0.0;

  if (nonlinear) {
    if (!cfg.nonlinearity) {
      throw ContractError("nonlinear mode requires a nonlinearity in config");
    }
    const LoopMode mode =
        dynamic ? LoopMode::DynamicNonlinear : LoopMode::StaticNonlinear;
    ClosedLoop loop =
        assemble_nonlinear(pack, cfg.system, mode, *cfg.nonlinearity,
                           cfg.lambda1);
    lambda1 = loop.lambda1;
    out.traj = integrate_nonlinear(loop, y0, yt0, grid);
  } else {
    ClosedLoop loop = dynamic
                          ? assemble_dynamic(pack, cfg.system,
                                             cfg.lambda1.value_or(
                                                 default_lambda1(pack,
                                                                 cfg.system)))
                          : assemble_static(pack, cfg.system);
    lambda1 = loop.lambda1;
    out.traj = integrate_linear(loop, y0, yt0, grid);
  }

  const double gamma = cfg.gamma.value_or(0.9 * pack.lambda);
  double theoretical = 0.0;
  std::vector<double> series(out.traj.size());
  if (dynamic) {
    for (std::size_t k = 0; k < out.traj.size(); ++k) {
      series[k] = std::hypot(out.traj.y_states[k].norm(),
                             out.traj.ytilde_states[k].norm());
    }
    const double base = nonlinear ? 2.0 * gamma : 2.0 * pack.lambda;
    theoretical = cfg.system.is_skew_adjoint ? base : base - mu_mAT;
  } else {
    for (std::size_t k = 0; k < out.traj.size(); ++k) {
      series[k] = std::sqrt(out.traj.lyapunov_values[k]);
    }
    theoretical = nonlinear ? gamma : pack.lambda;
  }
  out.decay = fit_decay_rate(out.traj.times, series, 0.2 * cfg.horizon,
                             cfg.horizon, theoretical, 1e-3);
  out.decay.seed = cfg.seed;

  if (dynamic) {
    out.coupling = coupling_audit(out.traj, pack, lambda1);
    out.certified = out.decay.certified;
  } else {
    out.coupling = coupling_audit(out.traj, pack, std::nullopt);
    out.energy_residual = energy_audit(
        out.traj, pack, nonlinear ? &*cfg.nonlinearity : nullptr);
    // trapezoid audit error is O(h^2); 1e-5 at the reference step h = 1e-3
    const double energy_cap =
        1e-5 * std::max(1.0, std::pow(cfg.grid_step / 1e-3, 2.0));
    out.certified = out.decay.certified && out.coupling.certified &&
                    out.energy_residual <= energy_cap;
  }
  return out;
}

int cmd_simulate(const RunConfig& cfg, const std::string& pack_path,
                 const std::string& out_dir, int quad_points) {
  const StabilizerPack pack =
      pack_path.empty() ? build_pack(cfg.system, cfg.W, cfg.profile,
                                     quad_points)
                        : load_pack(pack_path);
  const SimulationOutcome out = run_simulation(cfg, pack);
  write_trajectory_csv(out_path(out_dir, "trajectory.csv"), out.traj);
  write_text_file(out_path(out_dir, "decay.json"),
                  decay_report_to_json(out.decay));
  std::ostringstream audit;
  audit << "{\"energy_residual\": " << format_double(out.energy_residual)
        << ", \"max_coupling_defect\": "
        << format_double(out.coupling.fit_rms_residual)
        << ", \"coupling_certified\": "
        << (out.coupling.certified ? "true" : "false")
        << ", \"certified\": " << (out.certified ? "true" : "false") << "}\n";
  write_text_file(out_path(out_dir, "audit.json"), audit.str());
  std::cout << "fitted_rate " << format_double(out.decay.fitted_rate)
            << " theoretical " << format_double(out.decay.theoretical_rate)
            << (out.certified ? " certified" : " not-certified") << "\n";
  return out.certified ? 0 : 1;
}

int cmd_sweep(const RunConfig& base, const std::string& axis,
              const std::string& out_dir, int quad_points) {
  const auto eq = axis.find('=');
  if (eq == std::string::npos) {
    throw ContractError("sweep axis must look like param=v1,v2,...");
  }
  const std::string param = axis.substr(0, eq);
  if (param != "lambda" && param != "lambda1") {
    throw ContractError("sweep supports axes lambda and lambda1");
  }
  std::vector<double> values;
  {
    std::istringstream in(axis.substr(eq + 1));
    std::string tok;
    while (std::getline(in, tok, ',')) {
      if (!tok.empty()) values.push_back(std::stod(tok));
    }
  }

  std::ostringstream csv;
  csv << "param,value,fitted_rate,theoretical_rate,identity_residual,"
         "rate_certified\n";
  for (double value : values) {
    RunConfig cfg = base;
    bool rate_condition = true;
    if (param == "lambda") {
      if (cfg.profile.kind == WeightKind::Komornik) {
        cfg.profile = WeightProfile::komornik(value, cfg.profile.T);
      } else {
        cfg.profile = WeightProfile::urquiza(value,
                                             cfg.profile.truncation_tol);
      }
    } else {
      cfg.lambda1 = value;
    }
    const StabilizerPack pack =
        build_pack(cfg.system, cfg.W, cfg.profile, quad_points);
    if (param == "lambda1") {
      rate_condition =
          assemble_dynamic(pack, cfg.system, value).rate_certified;
    }
    const SimulationOutcome out = run_simulation(cfg, pack);
    const bool certified =
        (param == "lambda1") ? rate_condition : out.decay.certified;
    csv << param << "," << format_double(value) << ","
        << format_double(out.decay.fitted_rate) << ","
        << format_double(out.decay.theoretical_rate) << ","
        << format_double(pack.identity_residual) << ","
        << (certified ? "true" : "false") << "\n";
  }
  write_text_file(out_path(out_dir, "sweep.csv"), csv.str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"weighted-Gramian feedback stabilization toolkit"};
  app.require_subcommand(1);

  std::string config_path, out_dir = ".", pack_path, axis;
  int quad_points = 64;
  double tol = 1e-6;
  std::optional<std::uint64_t> seed_override;

  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("--config", config_path, "run config JSON")->required();
    cmd->add_option("--out", out_dir, "output directory");
    cmd->add_option("--seed", seed_override, "override config seed");
    cmd->add_option("--quad-points", quad_points, "quadrature nodes per panel");
    cmd->add_option("--tol", tol, "certification tolerance");
  };

  CLI::App* gramian = app.add_subcommand("gramian", "build a stabilizer pack");
  add_common(gramian);
  CLI::App* verify = app.add_subcommand("verify", "verify a stabilizer pack");
  add_common(verify);
  verify->add_option("--pack", pack_path, "pack JSON")->required();
  CLI::App* simulate =
      app.add_subcommand("simulate", "integrate the closed loop");
  add_common(simulate);
  simulate->add_option("--pack", pack_path, "pack JSON (built when absent)");
  CLI::App* sweep = app.add_subcommand("sweep", "parameter sweep");
  add_common(sweep);
  sweep->add_option("--axis", axis, "param=v1,v2,...")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    RunConfig cfg = load_config(config_path);
    if (seed_override) cfg.seed = *seed_override;
    if (gramian->parsed()) return cmd_gramian(cfg, out_dir, quad_points, tol);
    if (verify->parsed()) return cmd_verify(cfg, pack_path, out_dir, tol);
    if (simulate->parsed())
      return cmd_simulate(cfg, pack_path, out_dir, quad_points);
    if (sweep->parsed()) return cmd_sweep(cfg, axis, out_dir, quad_points);
  } catch (const DivergenceError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 2;
}
