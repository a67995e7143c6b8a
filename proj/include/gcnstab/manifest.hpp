#pragma once

#include "json.hpp"

#include <string>

namespace gcnstab {

/// Git blob id of a file: SHA-1 over "blob <size>\0" followed by the contents.
std::string git_blob_id(const std::string& path);

/// `<out>.manifest.json`
std::string manifest_path_for(const std::string& out_path);

/// Pretty-printed JSON with a trailing newline.
void write_json_file(const nlohmann::ordered_json& doc, const std::string& path);

}  // namespace gcnstab
