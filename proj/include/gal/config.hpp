#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "gal/common.hpp"

namespace gal {

/// Flat `key = value` run configuration. Lines may carry `#` comments; keys
/// and values are whitespace-trimmed; duplicate keys are rejected with the
/// offending line. Getters throw ConfigError naming the key on a missing
/// entry or an unparsable value.
class ConfigFile {
 public:
  ConfigFile() = default;

  static ConfigFile load(const std::string& path);
  static ConfigFile from_string(const std::string& text, const std::string& origin);

  bool has(const std::string& key) const;

  std::string get_string(const std::string& key) const;
  std::string get_string(const std::string& key, const std::string& fallback) const;
  double get_double(const std::string& key) const;
  double get_double(const std::string& key, double fallback) const;
  long long get_int(const std::string& key) const;
  long long get_int(const std::string& key, long long fallback) const;
  std::uint64_t get_u64(const std::string& key, std::uint64_t fallback) const;
  bool get_bool(const std::string& key, bool fallback) const;
  /// Comma-separated values, e.g. `encoder.hidden_dims = 16, 8`.
  std::vector<std::size_t> get_size_list(const std::string& key,
                                         const std::vector<std::size_t>& fallback) const;
  std::vector<double> get_double_list(const std::string& key,
                                      const std::vector<double>& fallback) const;

  void set(const std::string& key, const std::string& value);

  /// Rejects any key not in `known`, naming the first offender.
  void require_known(const std::vector<std::string>& known) const;

  const std::map<std::string, std::string>& entries() const { return values_; }

 private:
  std::map<std::string, std::string> values_;
  std::string origin_ = "<empty>";
};

}  // namespace gal
