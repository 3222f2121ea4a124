#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace cpcp {

struct ConfigKey {
  const char* name;
  const char* default_value;
  const char* doc;
};

// Every recognized key with its default and a one-line description, in the
// order used for snapshots and `cpcp config-keys`.
const std::vector<ConfigKey>& config_schema();

// Flat key = value configuration. Lines are `key = value`; `#` starts a
// comment; list values are comma separated. Unknown keys, duplicate keys in
// one file and unparsable values raise ConfigError.
class Config {
 public:
  // All keys at their defaults.
  Config();

  static Config from_file(const std::filesystem::path& path);
  void parse(std::istream& in, const std::string& origin);

  void set(const std::string& key, const std::string& value);
  // "key=value"
  void set_assignment(const std::string& assignment);

  const std::string& raw(const std::string& key) const;
  std::string str(const std::string& key) const { return raw(key); }
  double real(const std::string& key) const;
  std::int64_t integer(const std::string& key) const;
  std::uint64_t u64(const std::string& key) const;
  bool flag(const std::string& key) const;
  // Empty or "auto" yields nullopt.
  std::optional<double> optional_real(const std::string& key) const;
  std::vector<double> reals(const std::string& key) const;
  std::vector<std::int64_t> integers(const std::string& key) const;
  std::vector<std::string> strings(const std::string& key) const;

  // Resolved values of every key in schema order.
  std::string snapshot() const;
  void write_snapshot(const std::filesystem::path& path) const;

 private:
  std::map<std::string, std::string> values_;
};

}  // namespace cpcp
