#include "config.hpp"

#include <algorithm>
#include <array>
#include <fstream>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <openssl/evp.h>

namespace tool {

namespace {

void flatten(const boost::property_tree::ptree& tree, std::map<std::string, std::string>& out) {
  for (const auto& [key, child] : tree) {
    if (child.empty()) {
      if (out.count(key)) throw ConfigError("key '" + key + "' appears in more than one section");
      out[key] = child.data();
    } else {
      flatten(child, out);
    }
  }
}

void flatten(const nlohmann::json& j, std::map<std::string, std::string>& out) {
  for (const auto& [key, v] : j.items()) {
    if (v.is_object()) {
      flatten(v, out);
      continue;
    }
    if (out.count(key)) throw ConfigError("key '" + key + "' appears in more than one section");
    out[key] = v.is_string() ? v.get<std::string>() : v.dump();
  }
}

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

}  // namespace

Config Config::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  const std::string text = buf.str();
  const std::string head = trim(text);
  if (!head.empty() && head.front() == '{') {
    try {
      return from_json(nlohmann::json::parse(text));
    } catch (const nlohmann::json::exception& e) {
      throw ConfigError("config file '" + path + "' is not valid JSON: " + e.what());
    }
  }
  return from_ini_text(text);
}

Config Config::from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw ConfigError("JSON config must be an object");
  Config c;
  flatten(j, c.values_);
  c.validate();
  return c;
}

Config Config::from_ini_text(const std::string& text) {
  boost::property_tree::ptree tree;
  std::istringstream in(text);
  try {
    boost::property_tree::read_ini(in, tree);
  } catch (const boost::property_tree::ini_parser_error& e) {
    throw ConfigError(std::string("malformed INI config: ") + e.what());
  }
  Config c;
  flatten(tree, c.values_);
  for (auto& [k, v] : c.values_) v = trim(v);
  c.validate();
  return c;
}

void Config::set(const std::string& key, const std::string& value) {
  values_[key] = value;
  validate();
}

std::string Config::text(const std::string& key, const std::string& fallback) const {
  const auto it = values_.find(key);
  return it == values_.end() ? fallback : it->second;
}

double Config::real(const std::string& key, double fallback) const {
  const auto it = values_.find(key);
  if (it == values_.end()) return fallback;
  try {
    std::size_t pos = 0;
    const double v = std::stod(it->second, &pos);
    if (pos != it->second.size()) throw std::invalid_argument("trailing characters");
    return v;
  } catch (const std::exception&) {
    throw ConfigError("key '" + key + "' must be a number, got '" + it->second + "'");
  }
}

long long Config::integer(const std::string& key, long long fallback) const {
  const auto it = values_.find(key);
  if (it == values_.end()) return fallback;
  try {
    std::size_t pos = 0;
    const long long v = std::stoll(it->second, &pos);
    if (pos != it->second.size()) throw std::invalid_argument("trailing characters");
    return v;
  } catch (const std::exception&) {
    throw ConfigError("key '" + key + "' must be an integer, got '" + it->second + "'");
  }
}

std::uint64_t Config::unsigned_integer(const std::string& key, std::uint64_t fallback) const {
  const auto it = values_.find(key);
  if (it == values_.end()) return fallback;
  try {
    if (!it->second.empty() && it->second.front() == '-') throw std::invalid_argument("negative");
    std::size_t pos = 0;
    const std::uint64_t v = std::stoull(it->second, &pos);
    if (pos != it->second.size()) throw std::invalid_argument("trailing characters");
    return v;
  } catch (const std::exception&) {
    throw ConfigError("key '" + key + "' must be a non-negative integer, got '" + it->second + "'");
  }
}

bool Config::flag(const std::string& key, bool fallback) const {
  const auto it = values_.find(key);
  if (it == values_.end()) return fallback;
  std::string v = it->second;
  std::transform(v.begin(), v.end(), v.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw ConfigError("key '" + key + "' must be a boolean, got '" + it->second + "'");
}

nlohmann::json Config::json(const std::string& key) const {
  const auto it = values_.find(key);
  if (it == values_.end()) throw ConfigError("missing key '" + key + "'");
  try {
    return nlohmann::json::parse(it->second);
  } catch (const nlohmann::json::exception&) {
    throw ConfigError("key '" + key + "' must hold JSON, got '" + it->second + "'");
  }
}

const std::vector<std::string>& Config::known_keys() {
  static const std::vector<std::string> keys{
      "preset",      "preset_dir",     "matrix",      "top",           "bottom",        "loop",
      "name",        "kind",           "max_loop_length", "epsilon",   "perturbation",  "observable",
      "starts",      "seed",           "t_min",       "t_max",         "ratio",         "fit_min",
      "fit_max",     "expect",         "slope_tol",   "depth",         "curves",        "curve_min",
      "curve_max",   "pairs",          "max_freq",    "terms",         "n_max",         "smoothing_decades",
      "window_decades", "floor_fraction", "min_windows", "growth_factor", "peel_min",    "out",
      "workers",     "grid",           "decay_depth"};
  return keys;
}

void Config::validate() const {
  const auto& keys = known_keys();
  for (const auto& [k, v] : values_)
    if (std::find(keys.begin(), keys.end(), k) == keys.end()) throw ConfigError("unknown config key '" + k + "'");
}

nlohmann::json Config::canonical() const {
  nlohmann::json j = nlohmann::json::object();
  for (const auto& [k, v] : values_)
    if (k != "out" && k != "workers") j[k] = v;
  return j;
}

std::string sha256_hex(const std::string& data) {
  std::array<unsigned char, EVP_MAX_MD_SIZE> md{};
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), md.data(), &len, EVP_sha256(), nullptr) != 1)
    throw std::runtime_error("SHA-256 digest failed");
  static const char* hex = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < len; ++i) {
    out.push_back(hex[md[i] >> 4]);
    out.push_back(hex[md[i] & 15]);
  }
  return out;
}

}  // namespace tool
