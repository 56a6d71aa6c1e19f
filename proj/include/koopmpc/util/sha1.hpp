#pragma once

#include <filesystem>
#include <string>
#include <string_view>

namespace koopmpc::util {

/// SHA-1 digest of a byte string, as 40 lowercase hex characters.
std::string sha1_hex(std::string_view bytes);

/// Git-style content hash: SHA-1 over "blob <size>\0" followed by the file
/// bytes, so hashes can be cross-checked with `git hash-object`.
std::string git_blob_hash(const std::filesystem::path& file);

}  // namespace koopmpc::util
