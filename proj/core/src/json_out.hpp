#pragma once

#include <filesystem>
#include <string>

#include <nlohmann/json.hpp>

namespace mpeig::detail {

using Json = nlohmann::ordered_json;

/// Two-space indented JSON with every float printed by format_double and
/// non-finite values as null. Ends with a newline.
std::string dump_json(const Json& j);

/// Writes bytes verbatim (binary mode, so LF stays LF). Throws IoError.
void write_file(const std::filesystem::path& file, const std::string& bytes);

}  // namespace mpeig::detail
