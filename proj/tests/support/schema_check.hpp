#ifndef FIXLAB_TESTS_SCHEMA_CHECK_HPP
#define FIXLAB_TESTS_SCHEMA_CHECK_HPP

// Minimal JSON-Schema subset validator, enough for the shipped CLI schema:
// type (incl. unions), required, properties, additionalProperties (bool or
// schema), items, enum, oneOf, and $ref into #/$defs.

#include <string>
#include <vector>

#include "json.hpp"

namespace fixlab::testsupport {

using nlohmann::json;

class SchemaChecker {
public:
    explicit SchemaChecker(json schema) : root_(std::move(schema)) {}

    bool validate(const json& value, std::string* error = nullptr) const {
        std::string path = "$";
        std::string err;
        bool ok = check(root_, value, path, err);
        if (!ok && error) *error = err;
        return ok;
    }

private:
    json root_;

    const json& resolve(const json& schema) const {
        if (schema.contains("$ref")) {
            std::string ref = schema["$ref"].get<std::string>();
            const std::string prefix = "#/$defs/";
            if (ref.rfind(prefix, 0) == 0) {
                return root_["$defs"].at(ref.substr(prefix.size()));
            }
        }
        return schema;
    }

    static bool type_matches(const std::string& type, const json& v) {
        if (type == "object") return v.is_object();
        if (type == "array") return v.is_array();
        if (type == "string") return v.is_string();
        if (type == "integer") return v.is_number_integer() || v.is_number_unsigned();
        if (type == "number") return v.is_number();
        if (type == "boolean") return v.is_boolean();
        if (type == "null") return v.is_null();
        return false;
    }

    bool check(const json& schema_in, const json& v, std::string& path, std::string& err) const {
        const json& schema = resolve(schema_in);

        if (schema.contains("oneOf")) {
            int matches = 0;
            for (const json& alt : schema["oneOf"]) {
                std::string subpath = path, suberr;
                if (check(alt, v, subpath, suberr)) matches++;
            }
            if (matches != 1) {
                err = path + ": oneOf matched " + std::to_string(matches) + " alternatives";
                return false;
            }
            return true;
        }

        if (schema.contains("enum")) {
            for (const json& allowed : schema["enum"])
                if (allowed == v) return true;
            err = path + ": value not in enum";
            return false;
        }

        if (schema.contains("type")) {
            const json& t = schema["type"];
            bool ok = false;
            if (t.is_string()) {
                ok = type_matches(t.get<std::string>(), v);
            } else {
                for (const json& alt : t)
                    ok = ok || type_matches(alt.get<std::string>(), v);
            }
            if (!ok) {
                err = path + ": type mismatch";
                return false;
            }
        }

        if (v.is_object()) {
            if (schema.contains("required")) {
                for (const json& key : schema["required"]) {
                    if (!v.contains(key.get<std::string>())) {
                        err = path + ": missing required key '" + key.get<std::string>() + "'";
                        return false;
                    }
                }
            }
            const json* props = schema.contains("properties") ? &schema["properties"] : nullptr;
            for (auto it = v.begin(); it != v.end(); ++it) {
                std::string child_path = path + "." + it.key();
                if (props && props->contains(it.key())) {
                    if (!check((*props)[it.key()], it.value(), child_path, err)) return false;
                } else if (schema.contains("additionalProperties")) {
                    const json& ap = schema["additionalProperties"];
                    if (ap.is_boolean()) {
                        if (!ap.get<bool>()) {
                            err = path + ": unexpected key '" + it.key() + "'";
                            return false;
                        }
                    } else if (!check(ap, it.value(), child_path, err)) {
                        return false;
                    }
                }
            }
        }

        if (v.is_array() && schema.contains("items")) {
            for (size_t i = 0; i < v.size(); i++) {
                std::string child_path = path + "[" + std::to_string(i) + "]";
                if (!check(schema["items"], v[i], child_path, err)) return false;
            }
        }
        return true;
    }
};

}  // namespace fixlab::testsupport

#endif  // FIXLAB_TESTS_SCHEMA_CHECK_HPP
