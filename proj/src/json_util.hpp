#pragma once

// Strict JSON object reading shared by the config, event, and API decoders.

#include <optional>
#include <set>
#include <string>

#include "json.hpp"

#include "mediator/errors.hpp"

namespace mediator::detail {

using nlohmann::json;

inline std::string join_path(const std::string& prefix, const std::string& key) {
    return prefix.empty() ? key : prefix + "." + key;
}

// Reads fields from one JSON object and rejects any key that was not read.
class ObjectReader {
public:
    ObjectReader(const json& obj, std::string path) : obj_(obj), path_(std::move(path)) {
        if (!obj_.is_object()) {
            throw ValidationError(path_.empty() ? "$" : path_, "expected an object");
        }
    }

    bool has(const std::string& key) const { return obj_.contains(key); }

    const json& raw(const std::string& key) {
        seen_.insert(key);
        auto it = obj_.find(key);
        if (it == obj_.end()) throw ValidationError(field(key), "missing required field");
        return *it;
    }

    const json* optional_raw(const std::string& key) {
        seen_.insert(key);
        auto it = obj_.find(key);
        return it == obj_.end() ? nullptr : &*it;
    }

    double number(const std::string& key) { return as_number(raw(key), key); }

    double number_or(const std::string& key, double fallback) {
        const json* v = optional_raw(key);
        return v ? as_number(*v, key) : fallback;
    }

    std::int64_t integer(const std::string& key) { return as_integer(raw(key), key); }

    std::int64_t integer_or(const std::string& key, std::int64_t fallback) {
        const json* v = optional_raw(key);
        return v ? as_integer(*v, key) : fallback;
    }

    std::string string(const std::string& key) { return as_string(raw(key), key); }

    std::string string_or(const std::string& key, std::string fallback) {
        const json* v = optional_raw(key);
        return v ? as_string(*v, key) : fallback;
    }

    std::optional<std::string> optional_string(const std::string& key) {
        const json* v = optional_raw(key);
        if (!v || v->is_null()) return std::nullopt;
        return as_string(*v, key);
    }

    bool boolean_or(const std::string& key, bool fallback) {
        const json* v = optional_raw(key);
        if (!v) return fallback;
        if (!v->is_boolean()) throw ValidationError(field(key), "expected a boolean");
        return v->get<bool>();
    }

    std::string field(const std::string& key) const { return join_path(path_, key); }

    // Call after reading every known key.
    void finish() const {
        for (auto it = obj_.begin(); it != obj_.end(); ++it) {
            if (!seen_.count(it.key())) throw ValidationError(field(it.key()), "unknown field");
        }
    }

private:
    double as_number(const json& v, const std::string& key) const {
        if (!v.is_number()) throw ValidationError(field(key), "expected a number");
        return v.get<double>();
    }

    std::int64_t as_integer(const json& v, const std::string& key) const {
        if (!v.is_number_integer()) throw ValidationError(field(key), "expected an integer");
        return v.get<std::int64_t>();
    }

    std::string as_string(const json& v, const std::string& key) const {
        if (!v.is_string()) throw ValidationError(field(key), "expected a string");
        return v.get<std::string>();
    }

    const json& obj_;
    std::string path_;
    std::set<std::string> seen_;
};

inline std::set<std::string> string_set(const json& v, const std::string& field) {
    if (!v.is_array()) throw ValidationError(field, "expected an array of strings");
    std::set<std::string> out;
    for (const auto& item : v) {
        if (!item.is_string()) throw ValidationError(field, "expected an array of strings");
        out.insert(item.get<std::string>());
    }
    return out;
}

}  // namespace mediator::detail
