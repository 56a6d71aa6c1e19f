#pragma once

#include <json.hpp>

#include <filesystem>
#include <string>
#include <vector>

namespace koopmpc::util {

inline constexpr const char* kToolVersion = "0.1.0";

/// Reproducibility record written next to a command's outputs: command name,
/// tool version, the effective configuration, every seed in play, and
/// git-style content hashes of all input and output files.
nlohmann::json make_manifest(const std::string& command, const nlohmann::json& config,
                             const nlohmann::json& seeds,
                             const std::vector<std::filesystem::path>& inputs,
                             const std::vector<std::filesystem::path>& outputs,
                             double wall_seconds);

/// Pretty-prints a manifest (or any JSON document) to a file.
void write_json(const std::filesystem::path& file, const nlohmann::json& document);

/// Loads and parses a JSON file, mapping parse failures to SchemaError.
nlohmann::json load_json(const std::filesystem::path& file);

}  // namespace koopmpc::util
