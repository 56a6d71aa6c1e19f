#pragma once

#include <stdexcept>
#include <string>

namespace koopmpc {

/// An input file or configuration object does not match the expected schema
/// (missing field, wrong type, inconsistent dimensions).  Raised before any
/// numerical work starts, so callers can map it to a dedicated exit status.
class SchemaError : public std::runtime_error {
public:
  explicit SchemaError(const std::string& what_arg) : std::runtime_error(what_arg) {}
};

}  // namespace koopmpc
