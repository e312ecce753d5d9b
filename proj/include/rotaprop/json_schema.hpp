#pragma once

// Small JSON-schema checker covering the subset the config schema uses:
// type, properties, required, additionalProperties, items, enum, numeric
// ranges, minItems, oneOf, and $ref into #/$defs. Validation failures carry
// the JSON pointer of the offending node.

#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace rotaprop {

struct SchemaError {
    std::string pointer;
    std::string message;
};

namespace detail {

inline bool type_matches(const nlohmann::json& v, const std::string& t) {
    if (t == "object") return v.is_object();
    if (t == "array") return v.is_array();
    if (t == "string") return v.is_string();
    if (t == "boolean") return v.is_boolean();
    if (t == "integer") return v.is_number_integer() || v.is_number_unsigned();
    if (t == "number") return v.is_number();
    return false;
}

inline const nlohmann::json* resolve_ref(const nlohmann::json& root,
                                         const std::string& ref) {
    const std::string prefix = "#/$defs/";
    if (ref.rfind(prefix, 0) != 0) return nullptr;
    const std::string name = ref.substr(prefix.size());
    auto defs = root.find("$defs");
    if (defs == root.end()) return nullptr;
    auto it = defs->find(name);
    return it == defs->end() ? nullptr : &*it;
}

inline void check(const nlohmann::json& root, const nlohmann::json& schema,
                  const nlohmann::json& value, const std::string& ptr,
                  std::vector<SchemaError>& errs) {
    if (schema.contains("$ref")) {
        const nlohmann::json* target =
            resolve_ref(root, schema["$ref"].get<std::string>());
        if (!target) {
            errs.push_back({ptr, "unresolvable $ref " + schema["$ref"].dump()});
            return;
        }
        check(root, *target, value, ptr, errs);
        return;
    }
    if (schema.contains("oneOf")) {
        int matches = 0;
        std::vector<SchemaError> best;
        for (const auto& sub : schema["oneOf"]) {
            std::vector<SchemaError> local;
            check(root, sub, value, ptr, local);
            if (local.empty())
                ++matches;
            else if (best.empty() || local.size() < best.size())
                best = std::move(local);
        }
        if (matches == 0) {
            errs.push_back({ptr, "matches no oneOf branch"});
            for (auto& e : best) errs.push_back(std::move(e));
        }
        return;
    }
    if (schema.contains("type")) {
        const std::string t = schema["type"].get<std::string>();
        if (!type_matches(value, t)) {
            errs.push_back({ptr, "expected " + t});
            return;
        }
    }
    if (schema.contains("enum")) {
        bool ok = false;
        for (const auto& e : schema["enum"]) ok = ok || (e == value);
        if (!ok) errs.push_back({ptr, "not one of " + schema["enum"].dump()});
    }
    if (value.is_number()) {
        const double x = value.get<double>();
        if (schema.contains("minimum") && x < schema["minimum"].get<double>())
            errs.push_back({ptr, "below minimum " + schema["minimum"].dump()});
        if (schema.contains("exclusiveMinimum") &&
            x <= schema["exclusiveMinimum"].get<double>())
            errs.push_back({ptr, "must exceed " + schema["exclusiveMinimum"].dump()});
        if (schema.contains("maximum") && x > schema["maximum"].get<double>())
            errs.push_back({ptr, "above maximum " + schema["maximum"].dump()});
    }
    if (value.is_array()) {
        if (schema.contains("minItems") &&
            value.size() < schema["minItems"].get<std::size_t>())
            errs.push_back({ptr, "fewer than minItems items"});
        if (schema.contains("items")) {
            for (std::size_t i = 0; i < value.size(); ++i)
                check(root, schema["items"], value[i], ptr + "/" + std::to_string(i),
                      errs);
        }
    }
    if (value.is_object()) {
        if (schema.contains("required"))
            for (const auto& req : schema["required"])
                if (!value.contains(req.get<std::string>()))
                    errs.push_back({ptr, "missing required key " + req.dump()});
        const bool extra_ok = !schema.contains("additionalProperties") ||
                              schema["additionalProperties"] != false;
        const nlohmann::json* addl_schema =
            schema.contains("additionalProperties") &&
                    schema["additionalProperties"].is_object()
                ? &schema["additionalProperties"]
                : nullptr;
        for (auto it = value.begin(); it != value.end(); ++it) {
            const std::string child = ptr + "/" + it.key();
            if (schema.contains("properties") &&
                schema["properties"].contains(it.key())) {
                check(root, schema["properties"][it.key()], it.value(), child, errs);
            } else if (addl_schema) {
                check(root, *addl_schema, it.value(), child, errs);
            } else if (!extra_ok) {
                errs.push_back({child, "unexpected key"});
            }
        }
    }
}

}  // namespace detail

inline std::vector<SchemaError> schema_validate(const nlohmann::json& schema,
                                                const nlohmann::json& value) {
    std::vector<SchemaError> errs;
    detail::check(schema, schema, value, "", errs);
    return errs;
}

}  // namespace rotaprop
