#pragma once

#include <istream>
#include <string>
#include <utility>
#include <vector>

#include "casecross/errors.hpp"

namespace casecross {

// Line-oriented `key = value` settings; '#' starts a comment, keys may
// repeat (the grid config uses repeated `exposure` and `cohort` keys).
struct KeyValueConfig {
  std::vector<std::pair<std::string, std::string>> entries;

  bool has(const std::string& key) const {
    for (const auto& [k, v] : entries)
      if (k == key) return true;
    return false;
  }

  std::string get(const std::string& key, const std::string& fallback = {}) const {
    for (const auto& [k, v] : entries)
      if (k == key) return v;
    return fallback;
  }

  std::vector<std::string> get_all(const std::string& key) const {
    std::vector<std::string> out;
    for (const auto& [k, v] : entries)
      if (k == key) out.push_back(v);
    return out;
  }
};

inline KeyValueConfig parse_kv_config(std::istream& in) {
  KeyValueConfig cfg;
  std::string line;
  std::size_t line_no = 0;
  auto trim = [](std::string s) {
    const auto a = s.find_first_not_of(" \t\r");
    const auto b = s.find_last_not_of(" \t\r");
    return a == std::string::npos ? std::string() : s.substr(a, b - a + 1);
  };
  while (std::getline(in, line)) {
    ++line_no;
    const std::string stripped = trim(line);
    if (stripped.empty() || stripped[0] == '#') continue;
    const auto eq = stripped.find('=');
    if (eq == std::string::npos)
      throw data_error("config line " + std::to_string(line_no) + ": expected 'key = value'");
    cfg.entries.emplace_back(trim(stripped.substr(0, eq)), trim(stripped.substr(eq + 1)));
  }
  return cfg;
}

}  // namespace casecross
