#pragma once

#include <fstream>
#include <map>
#include <sstream>
#include <string>

#include "prgc/errors.hpp"

namespace prgc {

/// Plain "key = value" configuration files. '#' starts a comment; blank lines
/// are ignored. Unknown keys are rejected by the callers that know the schema.
class KvConfig {
public:
  KvConfig() = default;

  static KvConfig from_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path);
    KvConfig cfg;
    cfg.path_ = path;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      std::string s = line;
      auto hash = s.find('#');
      if (hash != std::string::npos) s.erase(hash);
      auto strip = [](std::string& x) {
        while (!x.empty() && std::isspace(static_cast<unsigned char>(x.front()))) x.erase(0, 1);
        while (!x.empty() && std::isspace(static_cast<unsigned char>(x.back()))) x.pop_back();
      };
      strip(s);
      if (s.empty()) continue;
      auto eq = s.find('=');
      if (eq == std::string::npos)
        throw ConfigError(path + ":" + std::to_string(lineno) + ": expected key = value");
      std::string key = s.substr(0, eq), value = s.substr(eq + 1);
      strip(key);
      strip(value);
      if (key.empty())
        throw ConfigError(path + ":" + std::to_string(lineno) + ": empty key");
      cfg.values_[key] = value;
    }
    return cfg;
  }

  bool has(const std::string& key) const { return values_.count(key) > 0; }

  std::string get_string(const std::string& key) const {
    auto it = values_.find(key);
    if (it == values_.end()) throw ConfigError(context(key) + ": missing");
    return it->second;
  }

  double get_double(const std::string& key) const {
    try {
      std::size_t used = 0;
      double v = std::stod(get_string(key), &used);
      if (used != get_string(key).size()) throw std::invalid_argument("trailing characters");
      return v;
    } catch (const std::logic_error&) {
      throw ConfigError(context(key) + ": expected a number, got '" + get_string(key) + "'");
    }
  }

  long long get_int(const std::string& key) const {
    try {
      std::size_t used = 0;
      long long v = std::stoll(get_string(key), &used);
      if (used != get_string(key).size()) throw std::invalid_argument("trailing characters");
      return v;
    } catch (const std::logic_error&) {
      throw ConfigError(context(key) + ": expected an integer, got '" + get_string(key) + "'");
    }
  }

  bool get_bool(const std::string& key) const {
    std::string v = get_string(key);
    if (v == "1" || v == "true" || v == "yes") return true;
    if (v == "0" || v == "false" || v == "no") return false;
    throw ConfigError(context(key) + ": expected a boolean, got '" + v + "'");
  }

  const std::map<std::string, std::string>& values() const { return values_; }

private:
  std::string context(const std::string& key) const {
    return (path_.empty() ? std::string("config") : path_) + ": key '" + key + "'";
  }

  std::map<std::string, std::string> values_;
  std::string path_;
};

} // namespace prgc
