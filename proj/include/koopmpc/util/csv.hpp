#pragma once

#include <Eigen/Core>

#include <filesystem>
#include <string>
#include <vector>

namespace koopmpc::util {

/// Shortest decimal form that round-trips a double (up to 17 significant
/// digits).
std::string format_double(double value);

/// Writes a rectangular table with a header row.  Values are written with
/// full round-trip precision.
void write_csv(const std::filesystem::path& file, const std::vector<std::string>& header,
               const Eigen::MatrixXd& rows);

struct CsvTable {
  std::vector<std::string> header;
  Eigen::MatrixXd rows;
};

/// Reads a table written by write_csv (header row + numeric body).  Throws
/// SchemaError on ragged rows or non-numeric fields.
CsvTable read_csv(const std::filesystem::path& file);

}  // namespace koopmpc::util
