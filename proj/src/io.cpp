#include "gramstab/io.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

namespace gramstab {

namespace {

std::string matrix_to_json(const Matrix& M) {
  std::ostringstream out;
  out << "[";
  for (Eigen::Index i = 0; i < M.rows(); ++i) {
    out << (i ? ",[" : "[");
    for (Eigen::Index j = 0; j < M.cols(); ++j) {
      out << (j ? "," : "") << format_double(M(i, j));
    }
    out << "]";
  }
  out << "]";
  return out.str();
}

std::string weight_kind_name(WeightKind kind) {
  switch (kind) {
    case WeightKind::Komornik:
      return "komornik";
    case WeightKind::Urquiza:
      return "urquiza";
    case WeightKind::Custom:
      return "custom";
  }
  return "unknown";
}

Matrix matrix_from_json(const nlohmann::json& j) {
  if (!j.is_array() || j.empty() || !j[0].is_array()) {
    throw ContractError("pack JSON: matrix must be a nested row array");
  }
  const auto rows = static_cast<Eigen::Index>(j.size());
  const auto cols = static_cast<Eigen::Index>(j[0].size());
  Matrix M(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    if (static_cast<Eigen::Index>(j[i].size()) != cols) {
      throw ContractError("pack JSON: ragged matrix rows");
    }
    for (Eigen::Index k = 0; k < cols; ++k) {
      M(i, k) = j[i][k].get<double>();
    }
  }
  return M;
}

}  // namespace

std::string pack_to_json(const StabilizerPack& pack) {
  std::ostringstream out;
  out << "{\n";
  out << "  \"n\": " << pack.n() << ",\n";
  out << "  \"m\": " << pack.m() << ",\n";
  out << "  \"lambda\": " << format_double(pack.lambda) << ",\n";
  out << "  \"weight\": {\"kind\": \"" << weight_kind_name(pack.weight.kind)
      << "\", \"T\": " << format_double(pack.weight.T)
      << ", \"T_star\": " << format_double(pack.weight.T_star)
      << ", \"truncation_tol\": " << format_double(pack.weight.truncation_tol)
      << "},\n";
  out << "  \"Q\": " << matrix_to_json(pack.Q) << ",\n";
  out << "  \"R\": " << matrix_to_json(pack.R) << ",\n";
  out << "  \"W\": " << matrix_to_json(pack.W) << ",\n";
  out << "  \"identity_residual\": " << format_double(pack.identity_residual)
      << "\n";
  out << "}\n";
  return out.str();
}

void write_pack(const std::string& path, const StabilizerPack& pack) {
  write_text_file(path, pack_to_json(pack));
}

StabilizerPack load_pack(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw ContractError("load_pack: cannot open " + path);
  }
  nlohmann::json j;
  in >> j;

  StabilizerPack pack;
  pack.lambda = j.at("lambda").get<double>();
  pack.Q = matrix_from_json(j.at("Q"));
  pack.R = matrix_from_json(j.at("R"));
  pack.W = matrix_from_json(j.at("W"));
  pack.identity_residual = j.at("identity_residual").get<double>();
  if (pack.n() != j.at("n").get<int>() || pack.m() != j.at("m").get<int>()) {
    throw ContractError("load_pack: declared dimensions disagree with data");
  }
  const auto& w = j.at("weight");
  const std::string kind = w.at("kind").get<std::string>();
  if (kind == "komornik") {
    pack.weight =
        WeightProfile::komornik(pack.lambda, w.at("T").get<double>());
  } else if (kind == "urquiza") {
    pack.weight = WeightProfile::urquiza(
        pack.lambda, w.at("truncation_tol").get<double>());
  } else {
    pack.weight.kind = WeightKind::Custom;
    pack.weight.lambda = pack.lambda;
    pack.weight.T = w.at("T").get<double>();
    pack.weight.T_star = w.at("T_star").get<double>();
  }
  pack.Q_factor = spd_factorize(pack.Q);
  return pack;
}

void write_trajectory_csv(const std::string& path, const Trajectory& traj) {
  if (traj.size() == 0) {
    throw ContractError("write_trajectory_csv: empty trajectory");
  }
  const auto n = traj.y_states.front().size();
  const auto m = traj.control_values.front().size();
  std::ostringstream out;
  out << "t";
  for (Eigen::Index i = 1; i <= n; ++i) out << ",y_" << i;
  for (Eigen::Index i = 1; i <= n; ++i) out << ",yt_" << i;
  out << ",V,defect";
  for (Eigen::Index i = 1; i <= m; ++i) out << ",u_" << i;
  out << "\n";
  for (std::size_t k = 0; k < traj.size(); ++k) {
    out << format_double(traj.times[k]);
    for (Eigen::Index i = 0; i < n; ++i) {
      out << "," << format_double(traj.y_states[k][i]);
    }
    for (Eigen::Index i = 0; i < n; ++i) {
      out << "," << format_double(traj.ytilde_states[k][i]);
    }
    out << "," << format_double(traj.lyapunov_values[k]);
    out << "," << format_double(traj.coupling_defect[k]);
    for (Eigen::Index i = 0; i < m; ++i) {
      out << "," << format_double(traj.control_values[k][i]);
    }
    out << "\n";
  }
  write_text_file(path, out.str());
}

std::string decay_report_to_json(const DecayReport& report) {
  std::ostringstream out;
  out << "{\"fitted_rate\": " << format_double(report.fitted_rate)
      << ", \"intercept\": " << format_double(report.fit_intercept)
      << ", \"window\": [" << format_double(report.window_lo) << ", "
      << format_double(report.window_hi) << "]"
      << ", \"rms\": " << format_double(report.fit_rms_residual)
      << ", \"theoretical_rate\": " << format_double(report.theoretical_rate)
      << ", \"certified\": " << (report.certified ? "true" : "false")
      << ", \"seed\": " << report.seed << "}\n";
  return out.str();
}

void write_text_file(const std::string& path, const std::string& content) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) {
      throw ContractError("write_text_file: cannot open " + tmp);
    }
    out << content;
  }
  if (std::rename(tmp.c_str(), path.c_str()) != 0) {
    throw ContractError("write_text_file: rename failed for " + path);
  }
}

}  // namespace gramstab
