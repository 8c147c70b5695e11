// SPDX-FileCopyrightText: Copyright (c) 2026 The marqoe Authors
// SPDX-License-Identifier: Apache-2.0

// Tool descriptors and argument validation. Descriptors serialize to an
// MCP-style {name, description, inputSchema, outputSchema} document.

#pragma once

#include <algorithm>
#include <cctype>
#include <cmath>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace marqoe::agent {

using nlohmann::json;

enum class FieldType { string, number, integer, boolean, array, object };

inline const char* to_string(FieldType t) {
  switch (t) {
    case FieldType::string: return "string";
    case FieldType::number: return "number";
    case FieldType::integer: return "integer";
    case FieldType::boolean: return "boolean";
    case FieldType::array: return "array";
    case FieldType::object: return "object";
  }
  return "?";
}

inline std::optional<FieldType> parse_field_type(const std::string& s) {
  for (auto t : {FieldType::string, FieldType::number, FieldType::integer, FieldType::boolean, FieldType::array,
                 FieldType::object})
    if (s == to_string(t)) return t;
  return std::nullopt;
}

struct FieldSpec {
  std::string name;
  FieldType type{FieldType::string};
  bool required{false};
  std::string description;  // includes the unit where one applies
  std::vector<std::string> allowed{};  // string enums; empty = any
};

struct ToolDescriptor {
  std::string name;
  std::string description;
  std::vector<FieldSpec> parameters;
  std::vector<FieldSpec> result;

  const FieldSpec* parameter(const std::string& field) const {
    for (const auto& f : parameters)
      if (f.name == field) return &f;
    return nullptr;
  }
};

inline json fields_schema(const std::vector<FieldSpec>& fields) {
  json props = json::object();
  json required = json::array();
  for (const auto& f : fields) {
    json p{{"type", to_string(f.type)}, {"description", f.description}};
    if (!f.allowed.empty()) p["enum"] = f.allowed;
    props[f.name] = std::move(p);
    if (f.required) required.push_back(f.name);
  }
  return {{"type", "object"}, {"properties", props}, {"required", required}, {"additionalProperties", false}};
}

inline json to_json(const ToolDescriptor& d) {
  return {{"name", d.name},
          {"description", d.description},
          {"inputSchema", fields_schema(d.parameters)},
          {"outputSchema", fields_schema(d.result)}};
}

inline bool value_has_type(const json& v, FieldType t) {
  switch (t) {
    case FieldType::string: return v.is_string();
    case FieldType::number: return v.is_number() && std::isfinite(v.get<double>());
    case FieldType::integer:
      if (v.is_number_integer()) return true;
      return v.is_number_float() && std::isfinite(v.get<double>()) && v.get<double>() == std::floor(v.get<double>());
    case FieldType::boolean: return v.is_boolean();
    case FieldType::array: return v.is_array();
    case FieldType::object: return v.is_object();
  }
  return false;
}

struct SchemaViolation {
  std::string field;
  std::string message;
};

// First violation of `args` against the descriptor's parameters, in
// declaration order (unknown fields reported last).
inline std::optional<SchemaViolation> validate_arguments(const ToolDescriptor& d, const json& args) {
  if (!args.is_object()) return SchemaViolation{"arguments", "arguments must be an object"};
  for (const auto& f : d.parameters) {
    if (!args.contains(f.name)) {
      if (f.required) return SchemaViolation{f.name, "missing required field '" + f.name + "'"};
      continue;
    }
    const json& v = args.at(f.name);
    if (!value_has_type(v, f.type))
      return SchemaViolation{f.name, "field '" + f.name + "' must be of type " + to_string(f.type)};
    if (!f.allowed.empty() &&
        std::find(f.allowed.begin(), f.allowed.end(), v.get<std::string>()) == f.allowed.end())
      return SchemaViolation{f.name, "field '" + f.name + "' has an unsupported value"};
  }
  for (const auto& [k, v] : args.items())
    if (!d.parameter(k)) return SchemaViolation{k, "unknown field '" + k + "'"};
  return std::nullopt;
}

// Checks a serialized descriptor against the descriptor meta-schema.
inline bool descriptor_document_valid(const json& doc) {
  auto ident = [](const json& s) {
    if (!s.is_string() || s.get<std::string>().empty()) return false;
    const auto str = s.get<std::string>();
    return std::all_of(str.begin(), str.end(), [](char c) { return std::islower(static_cast<unsigned char>(c)) || std::isdigit(static_cast<unsigned char>(c)) || c == '_'; });
  };
  auto schema_ok = [&](const json& s) {
    if (!s.is_object() || s.value("type", "") != "object" || !s.contains("properties") ||
        !s["properties"].is_object() || !s.contains("required") || !s["required"].is_array())
      return false;
    for (const auto& [name, p] : s["properties"].items()) {
      if (!ident(json(name)) || !p.is_object() || !p.contains("type") || !p["type"].is_string()) return false;
      if (!parse_field_type(p["type"].get<std::string>())) return false;
      if (!p.contains("description") || !p["description"].is_string()) return false;
    }
    std::set<std::string> seen;
    for (const auto& r : s["required"]) {
      if (!r.is_string() || !s["properties"].contains(r.get<std::string>())) return false;
      if (!seen.insert(r.get<std::string>()).second) return false;
    }
    return true;
  };
  return doc.is_object() && doc.contains("name") && ident(doc["name"]) && doc.contains("description") &&
         doc["description"].is_string() && !doc["description"].get<std::string>().empty() &&
         doc.contains("inputSchema") && schema_ok(doc["inputSchema"]) && doc.contains("outputSchema") &&
         schema_ok(doc["outputSchema"]);
}

}  // namespace marqoe::agent
