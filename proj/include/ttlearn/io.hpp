// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <string>
#include <string_view>

#include <nlohmann/json.hpp>

namespace ttlearn {

/// Writes to "<path>.tmp" then renames over `path`. Throws std::runtime_error.
void write_file_atomic(const std::filesystem::path& path, std::string_view content);
void append_file(const std::filesystem::path& path, std::string_view content);
/// Throws std::runtime_error if the file cannot be read.
std::string read_file(const std::filesystem::path& path);

/// Serializes `j`, replacing invalid UTF-8 instead of throwing. Game and
/// model text is untrusted.
template <typename Json>
std::string dump_json(const Json& j, int indent = -1) {
  return j.dump(indent, ' ', false, Json::error_handler_t::replace);
}

}  // namespace ttlearn
