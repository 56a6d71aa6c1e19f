#pragma once

#include <json.hpp>

#include <filesystem>

#include "koopmpc/koopman/edmd.hpp"

namespace koopmpc::koopman {

/// Snapshot tables live in CSV with header
///   x_0,...,x_{nx-1},u_0,...,u_{nu-1},xp_0,...,xp_{nx-1}
/// one transition sample per row, full round-trip precision.
void save_snapshots(const SnapshotSet& snapshots, const std::filesystem::path& file);
SnapshotSet load_snapshots(const std::filesystem::path& file);

/// Model document layout:
///   {"n_x", "n_u", "n_psi", "A", "B", "centers", "ridge", "seed"}
/// where A is n_psi x n_psi, B is n_psi x n_u, and centers is n_rbf x n_x
/// with n_psi = n_x + n_rbf.
nlohmann::json model_to_json(const KoopmanModel& model);
KoopmanModel model_from_json(const nlohmann::json& document);
void save_model(const KoopmanModel& model, const std::filesystem::path& file);
KoopmanModel load_model(const std::filesystem::path& file);

}  // namespace koopmpc::koopman
