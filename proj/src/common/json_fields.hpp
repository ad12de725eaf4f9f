#pragma once

// Field accessors shared by the document parsers. Every failure throws a
// ParseError naming the JSON path of the offending value.

#include <cmath>
#include <initializer_list>
#include <string>

#include <nlohmann/json.hpp>

#include "gridrecon/error.hpp"

namespace gridrecon::detail {

using nlohmann::json;

inline void require_object(const json& j, const std::string& path) {
  if (!j.is_object()) throw ParseError(path, "expected an object");
}

inline void reject_unknown(const json& j, const std::string& path, std::initializer_list<const char*> allowed) {
  for (auto it = j.begin(); it != j.end(); ++it) {
    bool ok = false;
    for (const char* a : allowed) ok = ok || it.key() == a;
    if (!ok) throw ParseError(path + "." + it.key(), "unknown key");
  }
}

inline const json& field(const json& j, const std::string& path, const char* key) {
  auto it = j.find(key);
  if (it == j.end()) throw ParseError(path + "." + key, "missing required field");
  return *it;
}

inline double number(const json& j, const std::string& path) {
  if (!j.is_number()) throw ParseError(path, "expected a number");
  double v = j.get<double>();
  if (!std::isfinite(v)) throw ParseError(path, "expected a finite number");
  return v;
}

inline double number_at(const json& j, const std::string& path, const char* key) {
  return number(field(j, path, key), path + "." + key);
}

inline double number_or(const json& j, const std::string& path, const char* key, double fallback) {
  return j.contains(key) ? number(j.at(key), path + "." + key) : fallback;
}

inline int integer(const json& j, const std::string& path) {
  if (!j.is_number_integer()) throw ParseError(path, "expected an integer");
  return j.get<int>();
}

inline std::string string_at(const json& j, const std::string& path, const char* key) {
  const auto& v = field(j, path, key);
  if (!v.is_string()) throw ParseError(path + "." + key, "expected a string");
  return v.get<std::string>();
}

/// Parses a whole document, mapping syntax errors to ParseError.
inline json parse_document(const std::string& text, const std::string& what) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError("", "malformed " + what + ": " + e.what());
  }
}

}  // namespace gridrecon::detail
