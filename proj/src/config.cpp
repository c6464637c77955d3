#include "epifilm/config.hpp"

#include <cctype>
#include <cerrno>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "epifilm/errors.hpp"

namespace epifilm {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

bool valid_key(const std::string& k) {
  if (k.empty() || k.front() == '.' || k.back() == '.') return false;
  for (const char c : k) {
    if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '.' || c == '-')) {
      return false;
    }
  }
  return true;
}

std::optional<double> parse_double(const std::string& s) {
  if (s.empty()) return std::nullopt;
  char* end = nullptr;
  errno = 0;
  const double v = std::strtod(s.c_str(), &end);
  if (errno != 0 || end != s.c_str() + s.size() || !std::isfinite(v)) return std::nullopt;
  return v;
}

std::vector<std::string> split_numbers(const std::string& s) {
  std::string t = s;
  for (char& c : t) {
    if (c == ',') c = ' ';
  }
  std::istringstream is(t);
  std::vector<std::string> out;
  for (std::string w; is >> w;) out.push_back(w);
  return out;
}

}  // namespace

ConfigFile ConfigFile::parse(const std::string& text, const std::string& source) {
  ConfigFile cfg;
  cfg.source_ = source;
  std::istringstream is(text);
  std::string raw;
  int line = 0;
  while (std::getline(is, raw)) {
    ++line;
    const auto hash = raw.find('#');
    const std::string body = trim(hash == std::string::npos ? raw : raw.substr(0, hash));
    if (body.empty()) continue;
    const auto eq = body.find('=');
    const auto where = source + ":" + std::to_string(line) + ": ";
    if (eq == std::string::npos) throw ConfigError(where + "expected `key = value`");
    const std::string key = trim(body.substr(0, eq));
    const std::string value = trim(body.substr(eq + 1));
    if (!valid_key(key)) throw ConfigError(where + "malformed key `" + key + "`");
    if (value.empty()) throw ConfigError(where + key + ": empty value");
    if (cfg.entries_.count(key)) throw ConfigError(where + key + ": duplicate key");
    cfg.entries_[key] = Entry{value, line};
  }
  return cfg;
}

ConfigFile ConfigFile::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse(ss.str(), path.string());
}

void ConfigFile::set(const std::string& key, const std::string& value) {
  entries_[key] = Entry{value, 0};
}

void ConfigFile::fail(const std::string& key, const std::string& what) const {
  const auto it = entries_.find(key);
  const std::string where =
      it != entries_.end() && it->second.line > 0
          ? source_ + ":" + std::to_string(it->second.line) + ": "
          : source_ + ": ";
  throw ConfigError(where + key + ": " + what);
}

const ConfigFile::Entry* ConfigFile::find(const std::string& key) const {
  used_.insert(key);
  const auto it = entries_.find(key);
  return it == entries_.end() ? nullptr : &it->second;
}

std::optional<std::string> ConfigFile::text(const std::string& key) const {
  const auto* e = find(key);
  if (!e) return std::nullopt;
  return e->value;
}

std::optional<double> ConfigFile::number(const std::string& key) const {
  const auto* e = find(key);
  if (!e) return std::nullopt;
  const auto v = parse_double(e->value);
  if (!v) fail(key, "expected a number, got `" + e->value + "`");
  return v;
}

std::optional<long> ConfigFile::integer(const std::string& key) const {
  const auto* e = find(key);
  if (!e) return std::nullopt;
  char* end = nullptr;
  errno = 0;
  const long v = std::strtol(e->value.c_str(), &end, 10);
  if (errno != 0 || end != e->value.c_str() + e->value.size()) {
    fail(key, "expected an integer, got `" + e->value + "`");
  }
  return v;
}

std::optional<bool> ConfigFile::boolean(const std::string& key) const {
  const auto* e = find(key);
  if (!e) return std::nullopt;
  if (e->value == "true" || e->value == "1" || e->value == "yes") return true;
  if (e->value == "false" || e->value == "0" || e->value == "no") return false;
  fail(key, "expected true or false, got `" + e->value + "`");
}

std::optional<std::vector<double>> ConfigFile::numbers(const std::string& key) const {
  const auto* e = find(key);
  if (!e) return std::nullopt;
  std::vector<double> out;
  for (const auto& w : split_numbers(e->value)) {
    const auto v = parse_double(w);
    if (!v) fail(key, "expected numbers, got `" + w + "`");
    out.push_back(*v);
  }
  return out;
}

std::optional<std::vector<std::vector<double>>> ConfigFile::groups(const std::string& key) const {
  const auto* e = find(key);
  if (!e) return std::nullopt;
  std::vector<std::vector<double>> out;
  std::istringstream is(e->value);
  for (std::string part; std::getline(is, part, ';');) {
    if (trim(part).empty()) continue;
    std::vector<double> g;
    for (const auto& w : split_numbers(part)) {
      const auto v = parse_double(w);
      if (!v) fail(key, "expected numbers, got `" + w + "`");
      g.push_back(*v);
    }
    out.push_back(std::move(g));
  }
  return out;
}

double ConfigFile::require_number(const std::string& key) const {
  const auto v = number(key);
  if (!v) throw ConfigError(source_ + ": " + key + ": required field missing");
  return *v;
}

void ConfigFile::reject_unknown() const {
  for (const auto& [key, entry] : entries_) {
    if (!used_.count(key)) {
      throw ConfigError(source_ + ":" + std::to_string(entry.line) + ": unknown key `" + key + "`");
    }
  }
}

}  // namespace epifilm
