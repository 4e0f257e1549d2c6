#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace psgkit {

// Text resources compiled into the library (prompts, rule catalog, rubric).
// Throws psgkit::Error("resource") for unknown names.
std::string_view resource(std::string_view name);

std::vector<std::string_view> resource_names();

// Lowercase hex SHA-256 of arbitrary bytes; used to content-address prompts.
std::string sha256_hex(std::string_view bytes);

}  // namespace psgkit
