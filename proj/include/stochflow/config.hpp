// Flat key = value configuration files: parse, validate against a known
// key set, and render back in a canonical order.
#pragma once

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace stochflow {

class Config {
 public:
  Config() = default;

  /// Parses "key = value" lines; '#' starts a comment, blank lines are
  /// skipped. Duplicate keys are an error.
  static Config parse(const std::string& text) {
    Config cfg;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      const auto hash = line.find('#');
      if (hash != std::string::npos) line.erase(hash);
      const std::string trimmed = trim(line);
      if (trimmed.empty()) continue;
      const auto eq = trimmed.find('=');
      if (eq == std::string::npos)
        throw std::invalid_argument("config line " + std::to_string(lineno) +
                                    ": expected key = value");
      const std::string key = trim(trimmed.substr(0, eq));
      const std::string value = trim(trimmed.substr(eq + 1));
      if (key.empty())
        throw std::invalid_argument("config line " + std::to_string(lineno) +
                                    ": empty key");
      if (cfg.values_.count(key))
        throw std::invalid_argument("config: duplicate key '" + key + "'");
      cfg.values_[key] = value;
    }
    return cfg;
  }

  static Config parse_file(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw std::invalid_argument("config: cannot open " + path);
    std::ostringstream os;
    os << f.rdbuf();
    return parse(os.str());
  }

  /// Rejects any key outside the allowed set.
  void restrict_keys(const std::vector<std::string>& allowed) const {
    for (const auto& [key, value] : values_) {
      (void)value;
      if (std::find(allowed.begin(), allowed.end(), key) == allowed.end())
        throw std::invalid_argument("config: unknown key '" + key + "'");
    }
  }

  bool has(const std::string& key) const { return values_.count(key) != 0; }

  std::string get_string(const std::string& key, const std::string& fallback) const {
    const auto it = values_.find(key);
    return it == values_.end() ? fallback : it->second;
  }

  double get_double(const std::string& key, double fallback) const {
    const auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    std::size_t pos = 0;
    const double v = std::stod(it->second, &pos);
    if (pos != it->second.size())
      throw std::invalid_argument("config: key '" + key + "' is not a number");
    return v;
  }

  std::int64_t get_int(const std::string& key, std::int64_t fallback) const {
    const auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    std::size_t pos = 0;
    const std::int64_t v = std::stoll(it->second, &pos);
    if (pos != it->second.size())
      throw std::invalid_argument("config: key '" + key + "' is not an integer");
    return v;
  }

  /// Comma-separated list of doubles.
  std::vector<double> get_doubles(const std::string& key,
                                  std::vector<double> fallback) const {
    const auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    std::vector<double> out;
    for (const std::string& item : split(it->second)) {
      std::size_t pos = 0;
      out.push_back(std::stod(item, &pos));
      if (pos != item.size())
        throw std::invalid_argument("config: key '" + key + "' has a non-numeric item");
    }
    return out;
  }

  std::vector<std::string> get_strings(const std::string& key,
                                       std::vector<std::string> fallback) const {
    const auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    return split(it->second);
  }

  void set(const std::string& key, const std::string& value) {
    values_[key] = value;
  }

  /// Canonical rendering: sorted keys, one "key = value" per line.
  /// parse(render(cfg)) reproduces the same map.
  std::string render() const {
    std::ostringstream os;
    for (const auto& [key, value] : values_) os << key << " = " << value << '\n';
    return os.str();
  }

  const std::map<std::string, std::string>& items() const { return values_; }

 private:
  static std::string trim(const std::string& s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string::npos) return "";
    const auto last = s.find_last_not_of(" \t\r");
    return s.substr(first, last - first + 1);
  }

  static std::vector<std::string> split(const std::string& s) {
    std::vector<std::string> out;
    std::string item;
    std::istringstream in(s);
    while (std::getline(in, item, ',')) {
      const std::string t = trim(item);
      if (!t.empty()) out.push_back(t);
    }
    return out;
  }

  std::map<std::string, std::string> values_;
};

}  // namespace stochflow
