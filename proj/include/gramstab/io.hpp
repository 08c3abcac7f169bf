#pragma once

#include <string>

#include "gramstab/gramian.hpp"
#include "gramstab/simulate.hpp"
#include "gramstab/system.hpp"

namespace gramstab {

// Pack interchange document:
// {n, m, lambda, weight:{kind, T, T_star, truncation_tol}, Q, R, W,
//  identity_residual}, matrices as nested row arrays.
std::string pack_to_json(const StabilizerPack& pack);
void write_pack(const std::string& path, const StabilizerPack& pack);

// Restores matrices, factorization and weight descriptor (custom rho
// functions do not round-trip).
StabilizerPack load_pack(const std::string& path);

// Header: t,y_1..y_n,yt_1..yt_n,V,defect,u_1..u_m
void write_trajectory_csv(const std::string& path, const Trajectory& traj);

std::string decay_report_to_json(const DecayReport& report);

// Writes via a temp file renamed into place; no partial outputs.
void write_text_file(const std::string& path, const std::string& content);

}  // namespace gramstab
