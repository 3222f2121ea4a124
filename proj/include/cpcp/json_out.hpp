#pragma once

#include <string>

#include <json.hpp>

namespace cpcp {

// Serializes like nlohmann::json::dump(indent) except that floating-point
// values are written with 17 significant digits, so every double survives a
// text round trip bit for bit and outputs diff cleanly across runs.
std::string dump_json(const nlohmann::json& j, int indent = 2);

}  // namespace cpcp
