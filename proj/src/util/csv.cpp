#include "koopmpc/util/csv.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "koopmpc/util/errors.hpp"

namespace koopmpc::util {

std::string format_double(double value) {
  char buffer[32];
  std::snprintf(buffer, sizeof(buffer), "%.17g", value);
  return buffer;
}

void write_csv(const std::filesystem::path& file, const std::vector<std::string>& header,
               const Eigen::MatrixXd& rows) {
  if (static_cast<Eigen::Index>(header.size()) != rows.cols()) {
    throw std::invalid_argument("write_csv: header width disagrees with column count");
  }
  std::ofstream out(file);
  if (!out) {
    throw std::runtime_error("write_csv: cannot open " + file.string() + " for writing");
  }
  std::string line;
  line.reserve(header.size() * 26);
  for (size_t j = 0; j < header.size(); ++j) {
    if (j > 0) {
      line += ',';
    }
    line += header[j];
  }
  line += '\n';
  out << line;

  char buffer[32];
  for (Eigen::Index i = 0; i < rows.rows(); ++i) {
    line.clear();
    for (Eigen::Index j = 0; j < rows.cols(); ++j) {
      if (j > 0) {
        line += ',';
      }
      std::snprintf(buffer, sizeof(buffer), "%.17g", rows(i, j));
      line += buffer;
    }
    line += '\n';
    out << line;
  }
  if (!out) {
    throw std::runtime_error("write_csv: write to " + file.string() + " failed");
  }
}

CsvTable read_csv(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) {
    throw std::runtime_error("read_csv: cannot open " + file.string());
  }
  CsvTable table;
  std::string line;
  if (!std::getline(in, line)) {
    throw SchemaError("read_csv: " + file.string() + " is empty");
  }
  {
    std::stringstream ss(line);
    std::string field;
    while (std::getline(ss, field, ',')) {
      table.header.push_back(field);
    }
  }
  const size_t cols = table.header.size();
  if (cols == 0) {
    throw SchemaError("read_csv: " + file.string() + " has an empty header");
  }

  std::vector<double> values;
  size_t n_rows = 0;
  while (std::getline(in, line)) {
    if (line.empty()) {
      continue;
    }
    size_t start = 0;
    size_t fields = 0;
    while (true) {
      const size_t comma = line.find(',', start);
      const std::string field =
          line.substr(start, comma == std::string::npos ? std::string::npos : comma - start);
      try {
        size_t consumed = 0;
        values.push_back(std::stod(field, &consumed));
        if (consumed != field.size()) {
          throw std::invalid_argument(field);
        }
      } catch (const std::exception&) {
        throw SchemaError("read_csv: non-numeric field '" + field + "' in " + file.string());
      }
      ++fields;
      if (comma == std::string::npos) {
        break;
      }
      start = comma + 1;
    }
    if (fields != cols) {
      throw SchemaError("read_csv: ragged row in " + file.string());
    }
    ++n_rows;
  }

  table.rows.resize(static_cast<Eigen::Index>(n_rows), static_cast<Eigen::Index>(cols));
  for (size_t i = 0; i < n_rows; ++i) {
    for (size_t j = 0; j < cols; ++j) {
      table.rows(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
          values[i * cols + j];
    }
  }
  return table;
}

}  // namespace koopmpc::util
