#include "koopmpc/util/manifest.hpp"

#include <fstream>

#include "koopmpc/util/errors.hpp"
#include "koopmpc/util/sha1.hpp"

namespace koopmpc::util {
namespace {

nlohmann::json hash_listing(const std::vector<std::filesystem::path>& files) {
  nlohmann::json out = nlohmann::json::object();
  for (const auto& file : files) {
    out[file.filename().string()] = git_blob_hash(file);
  }
  return out;
}

}  // namespace

nlohmann::json make_manifest(const std::string& command, const nlohmann::json& config,
                             const nlohmann::json& seeds,
                             const std::vector<std::filesystem::path>& inputs,
                             const std::vector<std::filesystem::path>& outputs,
                             double wall_seconds) {
  nlohmann::json manifest;
  manifest["command"] = command;
  manifest["version"] = kToolVersion;
  manifest["config"] = config;
  manifest["seeds"] = seeds;
  manifest["inputs"] = hash_listing(inputs);
  manifest["outputs"] = hash_listing(outputs);
  manifest["wall_seconds"] = wall_seconds;
  return manifest;
}

void write_json(const std::filesystem::path& file, const nlohmann::json& document) {
  std::ofstream out(file);
  if (!out) {
    throw std::runtime_error("write_json: cannot open " + file.string() + " for writing");
  }
  out << document.dump(2) << '\n';
  if (!out) {
    throw std::runtime_error("write_json: write to " + file.string() + " failed");
  }
}

nlohmann::json load_json(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) {
    throw std::runtime_error("load_json: cannot open " + file.string());
  }
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::parse_error& e) {
    throw SchemaError("load_json: " + file.string() + " is not valid JSON: " + e.what());
  }
  return j;
}

}  // namespace koopmpc::util
