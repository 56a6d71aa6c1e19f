#include "koopmpc/koopman/io.hpp"

#include <string>
#include <vector>

#include "koopmpc/util/csv.hpp"
#include "koopmpc/util/errors.hpp"
#include "koopmpc/util/json_io.hpp"
#include "koopmpc/util/manifest.hpp"

namespace koopmpc::koopman {

using koopmpc::SchemaError;
using koopmpc::util::matrix_from_json;
using koopmpc::util::require_field;
using koopmpc::util::require_index;
using koopmpc::util::require_number;
using koopmpc::util::matrix_to_json;
using koopmpc::util::vector_to_json;

void save_snapshots(const SnapshotSet& snapshots, const std::filesystem::path& file) {
  const Eigen::Index n_x = snapshots.state_dim();
  const Eigen::Index n_u = snapshots.input_dim();
  std::vector<std::string> header;
  header.reserve(static_cast<size_t>(2 * n_x + n_u));
  for (Eigen::Index i = 0; i < n_x; ++i) {
    header.push_back("x_" + std::to_string(i));
  }
  for (Eigen::Index i = 0; i < n_u; ++i) {
    header.push_back("u_" + std::to_string(i));
  }
  for (Eigen::Index i = 0; i < n_x; ++i) {
    header.push_back("xp_" + std::to_string(i));
  }
  Eigen::MatrixXd table(snapshots.size(), 2 * n_x + n_u);
  table.leftCols(n_x) = snapshots.states;
  table.middleCols(n_x, n_u) = snapshots.inputs;
  table.rightCols(n_x) = snapshots.next_states;
  util::write_csv(file, header, table);
}

SnapshotSet load_snapshots(const std::filesystem::path& file) {
  const util::CsvTable table = util::read_csv(file);
  Eigen::Index n_x = 0;
  Eigen::Index n_u = 0;
  for (const auto& name : table.header) {
    if (name.rfind("x_", 0) == 0) {
      ++n_x;
    } else if (name.rfind("u_", 0) == 0) {
      ++n_u;
    }
  }
  if (n_x == 0 || static_cast<Eigen::Index>(table.header.size()) != 2 * n_x + n_u) {
    throw SchemaError("load_snapshots: header of " + file.string() +
                      " is not x_*,u_*,xp_* shaped");
  }
  SnapshotSet snapshots;
  snapshots.states = table.rows.leftCols(n_x);
  snapshots.inputs = table.rows.middleCols(n_x, n_u);
  snapshots.next_states = table.rows.rightCols(n_x);
  return snapshots;
}

nlohmann::json model_to_json(const KoopmanModel& model) {
  nlohmann::json document;
  document["n_x"] = model.state_dim();
  document["n_u"] = model.input_dim();
  document["n_psi"] = model.lifted_dim();
  document["A"] = matrix_to_json(model.transition);
  document["B"] = matrix_to_json(model.input_map);
  document["centers"] = matrix_to_json(model.lift.centers);
  document["ridge"] = model.ridge;
  document["seed"] = model.center_seed;
  return document;
}

KoopmanModel model_from_json(const nlohmann::json& document) {
  if (!document.is_object()) {
    throw SchemaError("model document must be a JSON object");
  }
  const Eigen::Index n_x = require_index(document, "n_x");
  const Eigen::Index n_u = require_index(document, "n_u");
  const Eigen::Index n_psi = require_index(document, "n_psi");

  KoopmanModel model;
  model.lift.state_dim = n_x;
  model.lift.centers = matrix_from_json(require_field(document, "centers"), "centers");
  model.transition = matrix_from_json(require_field(document, "A"), "A");
  model.input_map = matrix_from_json(require_field(document, "B"), "B");
  model.ridge = require_number(document, "ridge");
  const auto& seed = require_field(document, "seed");
  if (!seed.is_number_unsigned()) {
    throw SchemaError("field 'seed' must be a nonnegative integer");
  }
  model.center_seed = seed.get<uint64_t>();

  if (model.lift.centers.rows() > 0 && model.lift.centers.cols() != n_x) {
    throw SchemaError("model centers width disagrees with 'n_x'");
  }
  if (model.lift.centers.rows() == 0) {
    model.lift.centers.resize(0, n_x);
  }
  if (model.lift.lifted_dim() != n_psi) {
    throw SchemaError("'n_psi' disagrees with n_x + number of centers");
  }
  if (model.transition.rows() != n_psi || model.transition.cols() != n_psi) {
    throw SchemaError("field 'A' must be n_psi x n_psi");
  }
  if (model.input_map.rows() != n_psi || model.input_map.cols() != n_u) {
    throw SchemaError("field 'B' must be n_psi x n_u");
  }
  return model;
}

void save_model(const KoopmanModel& model, const std::filesystem::path& file) {
  util::write_json(file, model_to_json(model));
}

KoopmanModel load_model(const std::filesystem::path& file) {
  return model_from_json(util::load_json(file));
}

}  // namespace koopmpc::koopman
