#pragma once

#include <initializer_list>
#include <string>
#include <string_view>

#include <json.hpp>

#include "dsp/error.hpp"

namespace dsp::json_util {

/// Rejects objects carrying keys outside `allowed`, so typos in config files
/// surface instead of silently falling back to defaults.
inline void require_known_keys(const nlohmann::json& j,
                               std::initializer_list<std::string_view> allowed,
                               std::string_view context) {
  if (!j.is_object()) throw Error(std::string(context) + ": expected a JSON object");
  for (const auto& [key, _] : j.items()) {
    bool known = false;
    for (auto a : allowed) known = known || key == a;
    if (!known) throw Error(std::string(context) + ": unknown key '" + key + "'");
  }
}

template <typename T>
void read_if_present(const nlohmann::json& j, const char* key, T& out,
                     std::string_view context) {
  auto it = j.find(key);
  if (it == j.end()) return;
  try {
    out = it->get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(std::string(context) + "." + key + ": " + e.what());
  }
}

}  // namespace dsp::json_util
