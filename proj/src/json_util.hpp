#pragma once

#include <algorithm>
#include <initializer_list>
#include <string>
#include <string_view>

#include <json.hpp>

#include "mtdc/errors.hpp"

namespace mtdc::detail {

using nlohmann::json;

inline std::string child(const std::string& path, std::string_view key) {
    return path + "/" + std::string(key);
}

inline std::string child(const std::string& path, std::size_t index) {
    return path + "/" + std::to_string(index);
}

inline void require_object(const json& j, const std::string& path) {
    if (!j.is_object()) throw ParseError(path.empty() ? "/" : path, "expected an object");
}

inline void reject_unknown_keys(const json& j, const std::string& path, std::initializer_list<std::string_view> allowed) {
    for (const auto& [key, value] : j.items()) {
        if (std::find(allowed.begin(), allowed.end(), key) == allowed.end())
            throw ParseError(child(path, key), "unknown key");
    }
}

inline double get_number(const json& j, const std::string& path, std::string_view key) {
    auto it = j.find(key);
    if (it == j.end()) throw ParseError(child(path, key), "missing required number");
    if (!it->is_number()) throw ParseError(child(path, key), "expected a number");
    return it->get<double>();
}

inline double get_number_or(const json& j, const std::string& path, std::string_view key, double fallback) {
    auto it = j.find(key);
    if (it == j.end()) return fallback;
    if (!it->is_number()) throw ParseError(child(path, key), "expected a number");
    return it->get<double>();
}

// Node ids may be written as strings or integers; both map to the same string id.
inline std::string get_id(const json& j, const std::string& path, std::string_view key) {
    auto it = j.find(key);
    if (it == j.end()) throw ParseError(child(path, key), "missing required id");
    if (it->is_string()) return it->get<std::string>();
    if (it->is_number_integer()) return std::to_string(it->get<long long>());
    throw ParseError(child(path, key), "expected a string or integer id");
}

} // namespace mtdc::detail
