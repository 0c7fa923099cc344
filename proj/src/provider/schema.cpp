#include <cmath>

#include "psychoforge/provider.hpp"

namespace psychoforge::provider {
namespace {

bool type_matches(const std::string& type, const Json& doc) {
  if (type == "object") return doc.is_object();
  if (type == "array") return doc.is_array();
  if (type == "string") return doc.is_string();
  if (type == "integer") {
    if (doc.is_number_integer()) return true;
    if (doc.is_number_float()) {
      const double v = doc.get<double>();
      return std::isfinite(v) && std::floor(v) == v;
    }
    return false;
  }
  if (type == "number") return doc.is_number();
  if (type == "boolean") return doc.is_boolean();
  if (type == "null") return doc.is_null();
  return false;
}

void check(const Json& schema, const Json& doc, const std::string& path, std::vector<std::string>& out) {
  if (!schema.is_object()) return;
  const std::string where = path.empty() ? "$" : path;

  if (schema.contains("type")) {
    const Json& t = schema["type"];
    bool ok = false;
    if (t.is_string()) {
      ok = type_matches(t.get<std::string>(), doc);
    } else if (t.is_array()) {
      for (const auto& alt : t) ok = ok || (alt.is_string() && type_matches(alt.get<std::string>(), doc));
    }
    if (!ok) {
      out.push_back(where + ": expected type " + t.dump());
      return;
    }
  }
  if (schema.contains("const") && doc != schema["const"]) {
    out.push_back(where + ": must equal " + schema["const"].dump());
  }
  if (schema.contains("enum")) {
    bool found = false;
    for (const auto& e : schema["enum"]) found = found || e == doc;
    if (!found) out.push_back(where + ": value " + doc.dump() + " not in enum");
  }
  if (doc.is_number()) {
    const double v = doc.get<double>();
    if (!std::isfinite(v)) out.push_back(where + ": non-finite number");
    if (schema.contains("minimum") && v < schema["minimum"].get<double>()) {
      out.push_back(where + ": " + doc.dump() + " < minimum " + schema["minimum"].dump());
    }
    if (schema.contains("maximum") && v > schema["maximum"].get<double>()) {
      out.push_back(where + ": " + doc.dump() + " > maximum " + schema["maximum"].dump());
    }
  }
  if (doc.is_string() && schema.contains("minLength")) {
    if (doc.get<std::string>().size() < schema["minLength"].get<std::size_t>()) {
      out.push_back(where + ": string shorter than minLength");
    }
  }
  if (doc.is_object()) {
    if (schema.contains("required")) {
      for (const auto& r : schema["required"]) {
        if (!doc.contains(r.get<std::string>())) out.push_back(where + ": missing required field '" + r.get<std::string>() + "'");
      }
    }
    const Json* props = schema.contains("properties") ? &schema["properties"] : nullptr;
    const bool closed = schema.contains("additionalProperties") && schema["additionalProperties"].is_boolean() &&
                        !schema["additionalProperties"].get<bool>();
    const Json* extra = schema.contains("additionalProperties") && schema["additionalProperties"].is_object()
                            ? &schema["additionalProperties"]
                            : nullptr;
    for (const auto& [k, v] : doc.items()) {
      if (props && props->contains(k)) {
        check((*props)[k], v, where + "." + k, out);
      } else if (closed) {
        out.push_back(where + ": unexpected field '" + k + "'");
      } else if (extra) {
        check(*extra, v, where + "." + k, out);
      }
    }
  }
  if (doc.is_array()) {
    if (schema.contains("minItems") && doc.size() < schema["minItems"].get<std::size_t>()) {
      out.push_back(where + ": " + std::to_string(doc.size()) + " items < minItems " + schema["minItems"].dump());
    }
    if (schema.contains("maxItems") && doc.size() > schema["maxItems"].get<std::size_t>()) {
      out.push_back(where + ": " + std::to_string(doc.size()) + " items > maxItems " + schema["maxItems"].dump());
    }
    if (schema.contains("items")) {
      for (std::size_t i = 0; i < doc.size(); ++i) check(schema["items"], doc[i], where + "[" + std::to_string(i) + "]", out);
    }
  }
}

}  // namespace

std::vector<std::string> schema_violations(const Json& schema, const Json& doc) {
  std::vector<std::string> out;
  check(schema, doc, "", out);
  return out;
}

}  // namespace psychoforge::provider
