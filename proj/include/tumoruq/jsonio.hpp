#pragma once

#include <string>

#include <json.hpp>

namespace tuq {

// Writes JSON with sorted keys and a trailing newline; nlohmann's shortest
// round-trip number formatting is deterministic, so fixed inputs give
// byte-identical files.
void write_json_file(const nlohmann::json& j, const std::string& path);

nlohmann::json read_json_file(const std::string& path);

// FNV-1a over the canonical dump; used for provenance records.
std::string json_content_hash(const nlohmann::json& j);

}  // namespace tuq
