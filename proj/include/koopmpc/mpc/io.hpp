#pragma once

#include <json.hpp>

#include "koopmpc/mpc/nmpc_spec.hpp"

namespace koopmpc::mpc {

nlohmann::json spec_to_json(const NmpcSpec& spec);

/// Reads a specification whose dimensions are dictated by the model it will
/// be paired with.  Weights and references accept either a scalar (expanded
/// to a constant vector) or an explicit array of the right length.  Absent
/// fields fall back to the flagship experiment's values: horizon 10,
/// rho 100, state weight 1, input weight 0.05, move weight 0, references 0.
NmpcSpec spec_from_json(const nlohmann::json& document, Eigen::Index state_dim,
                        Eigen::Index input_dim);

}  // namespace koopmpc::mpc
