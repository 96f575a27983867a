#pragma once

#include "geomq/types.hpp"

#include <json.hpp>

#include <string>

namespace geomq {

// Floats in CSV output carry 17 significant digits (round-trip exact).
std::string format_float(double v);

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& text);

// Canonical JSON serialization used for every emitted file: 2-space indent,
// keys in lexicographic order (nlohmann default), shortest round-trip floats.
// parse(dump(x)) == x and dump(parse(text)) == text for our own files.
std::string dump_json(const nlohmann::json& j);

// Minimal JSON-Schema subset validator: type, properties, required,
// additionalProperties, items, enum, minimum, maximum.  Unknown keys in the
// instance are rejected wherever the schema says additionalProperties=false.
// Throws ConfigError with a JSON-pointer-style path on the first violation.
void validate_against_schema(const nlohmann::json& instance,
                             const nlohmann::json& schema,
                             const std::string& where = "$");

// FNV-1a hash of a canonical JSON serialization; used to match outputs
// produced from the same curve.
std::string json_fingerprint(const nlohmann::json& j);

} // namespace geomq
