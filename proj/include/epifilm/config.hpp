#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace epifilm {

/// Flat `section.key = value` text. `#` starts a comment; blank lines are
/// ignored; a key may appear once. Getters record which keys were read so
/// unknown keys can be rejected.
class ConfigFile {
 public:
  struct Entry {
    std::string value;
    int line = 0;
  };

  static ConfigFile parse(const std::string& text, const std::string& source = "<config>");
  static ConfigFile load(const std::filesystem::path& path);

  const std::string& source() const { return source_; }
  bool has(const std::string& key) const { return entries_.count(key) != 0; }
  const std::map<std::string, Entry>& entries() const { return entries_; }
  void set(const std::string& key, const std::string& value);

  std::optional<std::string> text(const std::string& key) const;
  std::optional<double> number(const std::string& key) const;
  std::optional<long> integer(const std::string& key) const;
  std::optional<bool> boolean(const std::string& key) const;
  /// Whitespace- or comma-separated numbers.
  std::optional<std::vector<double>> numbers(const std::string& key) const;
  /// Groups separated by ';', each a list of numbers.
  std::optional<std::vector<std::vector<double>>> groups(const std::string& key) const;

  double require_number(const std::string& key) const;

  /// Throws ConfigError for any key no getter asked about.
  void reject_unknown() const;

 private:
  [[noreturn]] void fail(const std::string& key, const std::string& what) const;
  const Entry* find(const std::string& key) const;

  std::string source_;
  std::map<std::string, Entry> entries_;
  mutable std::set<std::string> used_;
};

}  // namespace epifilm
