#pragma once

#include <string>
#include <vector>

#include "json.hpp"

#include "specflow/errors.hpp"

namespace specflow {

// insertion-ordered JSON everywhere: serialized artifacts must be stable
using ojson = nlohmann::ordered_json;

inline ojson parse_json(const std::string& text, const std::string& what) {
  ojson j = ojson::parse(text, nullptr, false);
  if (j.is_discarded())
    fail(ErrClass::ParseError, "invalid JSON in " + what);
  return j;
}

// strict-schema rule: a key the schema does not know is an error, never a
// silent no-op. Configs report BadConfig; data files pass ParseError.
inline void reject_unknown_keys(const ojson& obj,
                                const std::vector<std::string>& known,
                                const std::string& context,
                                ErrClass cls = ErrClass::BadConfig) {
  if (!obj.is_object()) fail(cls, context + " must be a JSON object");
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    bool ok = false;
    for (const auto& k : known)
      if (it.key() == k) {
        ok = true;
        break;
      }
    if (!ok) fail(cls, "unknown key '" + it.key() + "' in " + context);
  }
}

template <typename T>
T get_or(const ojson& obj, const std::string& key, T fallback) {
  auto it = obj.find(key);
  if (it == obj.end()) return fallback;
  return it->get<T>();
}

}  // namespace specflow
