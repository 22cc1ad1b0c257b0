#pragma once

#include <string>

#include <nlohmann/json.hpp>

#include "fv/common/error.hpp"

namespace fv::app {

// Overlays a user document onto a default document, requiring every user
// key to already exist in the defaults.
inline void merge_strict(nlohmann::json& base, const nlohmann::json& user,
                         const std::string& prefix) {
  if (!user.is_object())
    throw DataError("config: expected an object at '" +
                    (prefix.empty() ? std::string("<root>") : prefix) + "'");
  for (const auto& [key, value] : user.items()) {
    if (!base.contains(key))
      throw DataError("config: unknown key '" + prefix + key + "'");
    if (base[key].is_object() && value.is_object())
      merge_strict(base[key], value, prefix + key + ".");
    else
      base[key] = value;
  }
}

template <typename T>
T json_get(const nlohmann::json& j, const char* key, const std::string& where) {
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw DataError("config: bad value for '" + where + key + "': " + e.what());
  }
}

}  // namespace fv::app
