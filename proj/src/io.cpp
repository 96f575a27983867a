#include "geomq/io.hpp"

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace geomq {

std::string format_float(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write file: " + path);
  out << text;
  if (!out) throw ConfigError("short write: " + path);
}

std::string dump_json(const nlohmann::json& j) { return j.dump(2) + "\n"; }

namespace {

std::string type_name(const nlohmann::json& v) {
  if (v.is_object()) return "object";
  if (v.is_array()) return "array";
  if (v.is_string()) return "string";
  if (v.is_boolean()) return "boolean";
  if (v.is_number_integer()) return "integer";
  if (v.is_number()) return "number";
  return "null";
}

bool matches_type(const nlohmann::json& v, const std::string& t) {
  if (t == "object") return v.is_object();
  if (t == "array") return v.is_array();
  if (t == "string") return v.is_string();
  if (t == "boolean") return v.is_boolean();
  if (t == "integer") return v.is_number_integer();
  if (t == "number") return v.is_number();
  if (t == "null") return v.is_null();
  return false;
}

} // namespace

void validate_against_schema(const nlohmann::json& instance,
                             const nlohmann::json& schema,
                             const std::string& where) {
  if (schema.contains("type")) {
    const std::string t = schema["type"].get<std::string>();
    if (!matches_type(instance, t))
      throw ConfigError("config: " + where + " must have type " + t +
                        ", got " + type_name(instance));
  }
  if (schema.contains("enum")) {
    bool ok = false;
    for (const auto& e : schema["enum"]) ok = ok || e == instance;
    if (!ok)
      throw ConfigError("config: " + where + " = " + instance.dump() +
                        " is not one of " + schema["enum"].dump());
  }
  if (instance.is_number()) {
    if (schema.contains("minimum") &&
        instance.get<double>() < schema["minimum"].get<double>())
      throw ConfigError("config: " + where + " below minimum " +
                        schema["minimum"].dump());
    if (schema.contains("maximum") &&
        instance.get<double>() > schema["maximum"].get<double>())
      throw ConfigError("config: " + where + " above maximum " +
                        schema["maximum"].dump());
  }
  if (instance.is_object()) {
    const auto props = schema.contains("properties")
                           ? schema["properties"]
                           : nlohmann::json::object();
    const bool extra_ok = schema.contains("additionalProperties") &&
                          schema["additionalProperties"].is_boolean() &&
                          schema["additionalProperties"].get<bool>();
    for (auto it = instance.begin(); it != instance.end(); ++it) {
      if (props.contains(it.key()))
        validate_against_schema(it.value(), props[it.key()],
                                where + "." + it.key());
      else if (!extra_ok)
        throw ConfigError("config: unknown key " + where + "." + it.key());
    }
    if (schema.contains("required"))
      for (const auto& r : schema["required"])
        if (!instance.contains(r.get<std::string>()))
          throw ConfigError("config: missing required key " + where + "." +
                            r.get<std::string>());
  }
  if (instance.is_array() && schema.contains("items")) {
    size_t i = 0;
    for (const auto& v : instance)
      validate_against_schema(v, schema["items"],
                              where + "[" + std::to_string(i++) + "]");
  }
}

std::string json_fingerprint(const nlohmann::json& j) {
  const std::string text = j.dump();
  uint64_t h = 1469598103934665603ull;
  for (unsigned char c : text) {
    h ^= c;
    h *= 1099511628211ull;
  }
  char buf[20];
  std::snprintf(buf, sizeof buf, "%016llx", (unsigned long long)h);
  return buf;
}

} // namespace geomq
