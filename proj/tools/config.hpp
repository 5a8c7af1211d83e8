#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace tool {

// Raised for malformed or unknown configuration; maps to exit code 3.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Flat key-value configuration. Section names in INI / nested JSON objects are
// dropped, so every key must be unique across sections.
class Config {
 public:
  static Config load(const std::string& path);
  static Config from_json(const nlohmann::json& j);
  static Config from_ini_text(const std::string& text);

  void set(const std::string& key, const std::string& value);
  bool has(const std::string& key) const { return values_.count(key) > 0; }

  std::string text(const std::string& key, const std::string& fallback) const;
  double real(const std::string& key, double fallback) const;
  long long integer(const std::string& key, long long fallback) const;
  std::uint64_t unsigned_integer(const std::string& key, std::uint64_t fallback) const;
  bool flag(const std::string& key, bool fallback) const;
  nlohmann::json json(const std::string& key) const;  // value parsed as JSON

  // Keys that are allowed; anything else is rejected.
  static const std::vector<std::string>& known_keys();
  void validate() const;

  // Resolved values as a sorted JSON object, excluding keys that cannot change outputs.
  nlohmann::json canonical() const;
  const std::map<std::string, std::string>& values() const { return values_; }

 private:
  std::map<std::string, std::string> values_;
};

std::string sha256_hex(const std::string& data);

}  // namespace tool
