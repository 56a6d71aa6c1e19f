#pragma once

#include <Eigen/Core>
#include <json.hpp>

#include <string>

#include "koopmpc/util/errors.hpp"

namespace koopmpc::util {

inline nlohmann::json vector_to_json(const Eigen::Ref<const Eigen::VectorXd>& v) {
  nlohmann::json out = nlohmann::json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    out.push_back(v[i]);
  }
  return out;
}

/// Matrices serialize as nested arrays, one inner array per row.
inline nlohmann::json matrix_to_json(const Eigen::Ref<const Eigen::MatrixXd>& m) {
  nlohmann::json out = nlohmann::json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    nlohmann::json row = nlohmann::json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      row.push_back(m(i, j));
    }
    out.push_back(std::move(row));
  }
  return out;
}

inline Eigen::VectorXd vector_from_json(const nlohmann::json& j, const std::string& name) {
  if (!j.is_array()) {
    throw SchemaError(name + ": expected an array of numbers");
  }
  Eigen::VectorXd v(static_cast<Eigen::Index>(j.size()));
  Eigen::Index i = 0;
  for (const auto& entry : j) {
    if (!entry.is_number()) {
      throw SchemaError(name + ": expected an array of numbers");
    }
    v[i++] = entry.get<double>();
  }
  return v;
}

inline Eigen::MatrixXd matrix_from_json(const nlohmann::json& j, const std::string& name) {
  if (!j.is_array()) {
    throw SchemaError(name + ": expected an array of rows");
  }
  const Eigen::Index rows = static_cast<Eigen::Index>(j.size());
  if (rows == 0) {
    return Eigen::MatrixXd(0, 0);
  }
  if (!j.front().is_array()) {
    throw SchemaError(name + ": expected nested arrays (one per row)");
  }
  const Eigen::Index cols = static_cast<Eigen::Index>(j.front().size());
  Eigen::MatrixXd m(rows, cols);
  Eigen::Index r = 0;
  for (const auto& row : j) {
    if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != cols) {
      throw SchemaError(name + ": rows have inconsistent lengths");
    }
    Eigen::Index c = 0;
    for (const auto& entry : row) {
      if (!entry.is_number()) {
        throw SchemaError(name + ": expected numeric entries");
      }
      m(r, c++) = entry.get<double>();
    }
    ++r;
  }
  return m;
}

/// Fetches a required field, raising SchemaError (not json's own exception)
/// when it is absent.
inline const nlohmann::json& require_field(const nlohmann::json& j, const std::string& key) {
  const auto it = j.find(key);
  if (it == j.end()) {
    throw SchemaError("missing required field '" + key + "'");
  }
  return *it;
}

inline double require_number(const nlohmann::json& j, const std::string& key) {
  const auto& field = require_field(j, key);
  if (!field.is_number()) {
    throw SchemaError("field '" + key + "' must be a number");
  }
  return field.get<double>();
}

inline Eigen::Index require_index(const nlohmann::json& j, const std::string& key) {
  const auto& field = require_field(j, key);
  if (!field.is_number_integer()) {
    throw SchemaError("field '" + key + "' must be an integer");
  }
  return field.get<Eigen::Index>();
}

}  // namespace koopmpc::util
