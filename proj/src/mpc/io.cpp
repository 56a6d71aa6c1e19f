#include "koopmpc/mpc/io.hpp"

#include "koopmpc/util/errors.hpp"
#include "koopmpc/util/json_io.hpp"

namespace koopmpc::mpc {
namespace {

using koopmpc::SchemaError;

Eigen::VectorXd vector_or_scalar(const nlohmann::json& document, const std::string& key,
                                 Eigen::Index dim, double fallback) {
  const auto it = document.find(key);
  if (it == document.end()) {
    return Eigen::VectorXd::Constant(dim, fallback);
  }
  if (it->is_number()) {
    return Eigen::VectorXd::Constant(dim, it->get<double>());
  }
  Eigen::VectorXd v = util::vector_from_json(*it, key);
  if (v.size() != dim) {
    throw SchemaError("field '" + key + "' must be a scalar or an array of length " +
                      std::to_string(dim));
  }
  return v;
}

}  // namespace

nlohmann::json spec_to_json(const NmpcSpec& spec) {
  nlohmann::json document;
  document["horizon"] = spec.horizon;
  document["rho"] = spec.rho;
  document["state_weight"] = util::vector_to_json(spec.state_weight);
  document["input_weight"] = util::vector_to_json(spec.input_weight);
  document["move_weight"] = util::vector_to_json(spec.move_weight);
  document["state_ref"] = util::vector_to_json(spec.state_ref);
  document["input_ref"] = util::vector_to_json(spec.input_ref);
  return document;
}

NmpcSpec spec_from_json(const nlohmann::json& document, Eigen::Index state_dim,
                        Eigen::Index input_dim) {
  if (!document.is_object()) {
    throw SchemaError("specification document must be a JSON object");
  }
  NmpcSpec spec;
  spec.horizon = 10;
  if (document.contains("horizon")) {
    spec.horizon = static_cast<int>(util::require_index(document, "horizon"));
  }
  spec.rho = 100.0;
  if (document.contains("rho")) {
    spec.rho = util::require_number(document, "rho");
  }
  spec.state_weight = vector_or_scalar(document, "state_weight", state_dim, 1.0);
  spec.input_weight = vector_or_scalar(document, "input_weight", input_dim, 0.05);
  spec.move_weight = vector_or_scalar(document, "move_weight", input_dim, 0.0);
  spec.state_ref = vector_or_scalar(document, "state_ref", state_dim, 0.0);
  spec.input_ref = vector_or_scalar(document, "input_ref", input_dim, 0.0);
  spec.validate();
  return spec;
}

}  // namespace koopmpc::mpc
