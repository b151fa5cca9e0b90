#include "gal/config.hpp"

#include <algorithm>
#include <cstdlib>
#include <sstream>

#include "gal/csv.hpp"

namespace gal {

namespace {

std::string trim(const std::string& s) {
  std::size_t begin = s.find_first_not_of(" \t\r");
  if (begin == std::string::npos) return "";
  std::size_t end = s.find_last_not_of(" \t\r");
  return s.substr(begin, end - begin + 1);
}

std::vector<std::string> split_list(const std::string& value) {
  std::vector<std::string> parts;
  std::string token;
  std::istringstream stream(value);
  while (std::getline(stream, token, ',')) parts.push_back(trim(token));
  if (!parts.empty() && parts.back().empty()) parts.pop_back();
  return parts;
}

[[noreturn]] void bad_value(const std::string& key, const std::string& value,
                            const char* expected) {
  throw ConfigError("config key '" + key + "' expects " + expected + ", got '" + value + "'");
}

}  // namespace

ConfigFile ConfigFile::load(const std::string& path) {
  return from_string(read_text_file(path), path);
}

ConfigFile ConfigFile::from_string(const std::string& text, const std::string& origin) {
  ConfigFile config;
  config.origin_ = origin;
  std::istringstream stream(text);
  std::string line;
  std::size_t line_number = 0;
  while (std::getline(stream, line)) {
    ++line_number;
    const std::size_t hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    const std::string stripped = trim(line);
    if (stripped.empty()) continue;
    const std::size_t eq = stripped.find('=');
    if (eq == std::string::npos) {
      throw ParseError(origin + ":" + std::to_string(line_number) +
                       ": expected 'key = value', got '" + stripped + "'");
    }
    const std::string key = trim(stripped.substr(0, eq));
    const std::string value = trim(stripped.substr(eq + 1));
    if (key.empty()) {
      throw ParseError(origin + ":" + std::to_string(line_number) + ": empty key");
    }
    if (config.values_.count(key) != 0) {
      throw ParseError(origin + ":" + std::to_string(line_number) + ": duplicate key '" + key +
                       "'");
    }
    config.values_[key] = value;
  }
  return config;
}

bool ConfigFile::has(const std::string& key) const { return values_.count(key) != 0; }

std::string ConfigFile::get_string(const std::string& key) const {
  auto it = values_.find(key);
  if (it == values_.end()) throw ConfigError("missing config key '" + key + "'");
  return it->second;
}

std::string ConfigFile::get_string(const std::string& key, const std::string& fallback) const {
  auto it = values_.find(key);
  return it == values_.end() ? fallback : it->second;
}

double ConfigFile::get_double(const std::string& key) const {
  const std::string value = get_string(key);
  char* end = nullptr;
  const double parsed = std::strtod(value.c_str(), &end);
  if (value.empty() || end != value.c_str() + value.size()) bad_value(key, value, "a number");
  return parsed;
}

double ConfigFile::get_double(const std::string& key, double fallback) const {
  return has(key) ? get_double(key) : fallback;
}

long long ConfigFile::get_int(const std::string& key) const {
  const std::string value = get_string(key);
  char* end = nullptr;
  const long long parsed = std::strtoll(value.c_str(), &end, 10);
  if (value.empty() || end != value.c_str() + value.size()) bad_value(key, value, "an integer");
  return parsed;
}

long long ConfigFile::get_int(const std::string& key, long long fallback) const {
  return has(key) ? get_int(key) : fallback;
}

std::uint64_t ConfigFile::get_u64(const std::string& key, std::uint64_t fallback) const {
  if (!has(key)) return fallback;
  const std::string value = get_string(key);
  char* end = nullptr;
  const unsigned long long parsed = std::strtoull(value.c_str(), &end, 10);
  if (value.empty() || end != value.c_str() + value.size() || value.front() == '-') {
    bad_value(key, value, "an unsigned integer");
  }
  return parsed;
}

bool ConfigFile::get_bool(const std::string& key, bool fallback) const {
  if (!has(key)) return fallback;
  const std::string value = get_string(key);
  if (value == "true" || value == "1") return true;
  if (value == "false" || value == "0") return false;
  bad_value(key, value, "true or false");
}

std::vector<std::size_t> ConfigFile::get_size_list(
    const std::string& key, const std::vector<std::size_t>& fallback) const {
  if (!has(key)) return fallback;
  const std::string value = get_string(key);
  std::vector<std::size_t> out;
  for (const std::string& token : split_list(value)) {
    char* end = nullptr;
    const long long parsed = std::strtoll(token.c_str(), &end, 10);
    if (token.empty() || end != token.c_str() + token.size() || parsed < 0) {
      bad_value(key, value, "a comma-separated list of non-negative integers");
    }
    out.push_back(static_cast<std::size_t>(parsed));
  }
  if (out.empty()) bad_value(key, value, "a non-empty list");
  return out;
}

std::vector<double> ConfigFile::get_double_list(const std::string& key,
                                                const std::vector<double>& fallback) const {
  if (!has(key)) return fallback;
  const std::string value = get_string(key);
  std::vector<double> out;
  for (const std::string& token : split_list(value)) {
    char* end = nullptr;
    const double parsed = std::strtod(token.c_str(), &end);
    if (token.empty() || end != token.c_str() + token.size()) {
      bad_value(key, value, "a comma-separated list of numbers");
    }
    out.push_back(parsed);
  }
  if (out.empty()) bad_value(key, value, "a non-empty list");
  return out;
}

void ConfigFile::set(const std::string& key, const std::string& value) { values_[key] = value; }

void ConfigFile::require_known(const std::vector<std::string>& known) const {
  for (const auto& [key, value] : values_) {
    if (std::find(known.begin(), known.end(), key) == known.end()) {
      throw ConfigError("unknown config key '" + key + "'");
    }
  }
}

}  // namespace gal
