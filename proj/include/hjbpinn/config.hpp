#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "hjbpinn/error.hpp"

namespace hjbpinn {

/// Malformed config text, a value of the wrong type, or an unknown key.
class ConfigError : public InvalidArgument {
 public:
  using InvalidArgument::InvalidArgument;
};

/// Flat key = value configuration, a subset of TOML:
///
///   # comment
///   steps = 5000
///   activation = "tanh"
///   widths = [1, 2, 4]
///   shared_dataset = true
///
/// Every getter records the value it resolved (default or explicit), so
/// resolved() lists the complete effective configuration.
class Config {
 public:
  static Config parse(std::string_view text, const std::string& origin = "<config>");
  static Config load(const std::filesystem::path& path);

  /// Parses "key=value" (a command-line override) and stores it, replacing any earlier value.
  void set_override(std::string_view assignment);
  void set(const std::string& key, const std::string& raw);
  bool has(const std::string& key) const { return raw_.count(key) != 0; }

  std::int64_t get_int(const std::string& key, std::int64_t def);
  std::uint64_t get_u64(const std::string& key, std::uint64_t def);
  double get_double(const std::string& key, double def);
  std::optional<double> get_optional_double(const std::string& key);
  bool get_bool(const std::string& key, bool def);
  std::string get_string(const std::string& key, const std::string& def);
  std::vector<std::int64_t> get_int_list(const std::string& key, const std::vector<std::int64_t>& def);
  std::vector<std::uint64_t> get_u64_list(const std::string& key, const std::vector<std::uint64_t>& def);

  /// Throws ConfigError naming every key that no getter asked for.
  void reject_unused() const;

  /// key -> value in config syntax, for every key resolved so far.
  const std::map<std::string, std::string>& resolved() const { return resolved_; }
  /// Config text that reproduces resolved() exactly.
  std::string resolved_text() const;

 private:
  std::string raw_value(const std::string& key) const;

  std::map<std::string, std::string> raw_;
  std::map<std::string, std::string> resolved_;
  std::set<std::string> used_;
};

}  // namespace hjbpinn
