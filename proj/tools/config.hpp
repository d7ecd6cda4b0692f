#pragma once

// Flat key=value experiment configuration with command-line overrides.

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <functional>
#include <initializer_list>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <fracsmooth/csv.hpp>

namespace fracsmooth::cli {

class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string field, const std::string& message)
      : std::runtime_error(message), field_(std::move(field)) {}
  const std::string& field() const { return field_; }

 private:
  std::string field_;
};

namespace detail {

inline std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

inline std::vector<std::string> split_list(std::string_view s) {
  std::vector<std::string> out;
  while (true) {
    const auto comma = s.find(',');
    out.emplace_back(trim(s.substr(0, comma)));
    if (comma == std::string_view::npos) break;
    s.remove_prefix(comma + 1);
  }
  return out;
}

/// Shortest text that reads back to x, so echoed settings look like the input.
inline std::string echo_double(double x) {
  char buf[40];
  const auto end = std::to_chars(buf, buf + sizeof buf, x).ptr;
  return std::string(buf, end);
}

template <class T>
std::optional<T> parse_number(std::string_view text) {
  T value{};
  const auto* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (ec != std::errc{} || ptr != end) return std::nullopt;
  return value;
}

}  // namespace detail

class Config {
 public:
  static Config from_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("config", "cannot open config file " + path);
    Config cfg;
    std::string line;
    int number = 0;
    while (std::getline(in, line)) {
      ++number;
      const auto text = detail::trim(std::string_view(line).substr(0, line.find('#')));
      if (text.empty()) continue;
      const auto eq = text.find('=');
      if (eq == std::string_view::npos)
        throw ConfigError("config", path + ":" + std::to_string(number) + ": expected key=value");
      const std::string key(detail::trim(text.substr(0, eq)));
      if (cfg.values_.count(key))
        throw ConfigError(key, path + ":" + std::to_string(number) + ": duplicate key " + key);
      cfg.set(key, std::string(detail::trim(text.substr(eq + 1))));
    }
    return cfg;
  }

  /// Later calls override earlier ones.
  void set(const std::string& key, std::string value) {
    if (key.empty()) throw ConfigError("config", "empty key");
    values_[key] = std::move(value);
  }

  bool has(const std::string& key) const { return values_.count(key) > 0; }

  double real(const std::string& key, double fallback,
              const std::function<bool(double)>& valid = {}, const char* rule = "") {
    double v = fallback;
    if (auto raw = take(key)) {
      auto parsed = detail::parse_number<double>(*raw);
      if (!parsed || !std::isfinite(*parsed)) throw ConfigError(key, key + ": not a finite number: " + *raw);
      v = *parsed;
    }
    if (valid && !valid(v)) throw ConfigError(key, key + " must be " + rule);
    resolved_[key] = detail::echo_double(v);
    return v;
  }

  std::uint64_t integer(const std::string& key, std::uint64_t fallback,
                        std::uint64_t min = 0,
                        std::uint64_t max = std::numeric_limits<std::uint64_t>::max()) {
    std::uint64_t v = fallback;
    if (auto raw = take(key)) {
      auto parsed = detail::parse_number<std::uint64_t>(*raw);
      if (!parsed) throw ConfigError(key, key + ": not a non-negative integer: " + *raw);
      v = *parsed;
    }
    if (v < min || v > max)
      throw ConfigError(key, key + " must lie in [" + std::to_string(min) + ", " +
                                 std::to_string(max) + "]");
    resolved_[key] = std::to_string(v);
    return v;
  }

  bool flag(const std::string& key, bool fallback) {
    bool v = fallback;
    if (auto raw = take(key)) {
      if (*raw == "1" || *raw == "true") v = true;
      else if (*raw == "0" || *raw == "false") v = false;
      else throw ConfigError(key, key + " must be 0, 1, true or false");
    }
    resolved_[key] = v ? "1" : "0";
    return v;
  }

  std::string choice(const std::string& key, const std::string& fallback,
                     std::initializer_list<std::string_view> options) {
    std::string v = take(key).value_or(fallback);
    if (std::find(options.begin(), options.end(), v) == options.end()) {
      std::string msg = key + " must be one of";
      for (auto o : options) msg += " " + std::string(o);
      throw ConfigError(key, msg);
    }
    resolved_[key] = v;
    return v;
  }

  std::vector<double> reals(const std::string& key, std::vector<double> fallback,
                            const std::function<bool(double)>& valid = {}, const char* rule = "") {
    std::vector<double> v = std::move(fallback);
    if (auto raw = take(key)) {
      v.clear();
      for (const auto& item : detail::split_list(*raw)) {
        auto parsed = detail::parse_number<double>(item);
        if (!parsed || !std::isfinite(*parsed))
          throw ConfigError(key, key + ": not a finite number: " + item);
        v.push_back(*parsed);
      }
    }
    if (v.empty()) throw ConfigError(key, key + " must not be empty");
    std::string echo;
    for (double x : v) {
      if (valid && !valid(x)) throw ConfigError(key, key + " entries must be " + rule);
      echo += (echo.empty() ? "" : ",") + detail::echo_double(x);
    }
    resolved_[key] = echo;
    return v;
  }

  std::vector<std::size_t> counts(const std::string& key, std::vector<std::size_t> fallback,
                                  std::size_t min = 1) {
    std::vector<std::size_t> v = std::move(fallback);
    if (auto raw = take(key)) {
      v.clear();
      for (const auto& item : detail::split_list(*raw)) {
        auto parsed = detail::parse_number<std::size_t>(item);
        if (!parsed) throw ConfigError(key, key + ": not a non-negative integer: " + item);
        v.push_back(*parsed);
      }
    }
    if (v.empty()) throw ConfigError(key, key + " must not be empty");
    std::string echo;
    for (auto x : v) {
      if (x < min) throw ConfigError(key, key + " entries must be >= " + std::to_string(min));
      echo += (echo.empty() ? "" : ",") + std::to_string(x);
    }
    resolved_[key] = echo;
    return v;
  }

  /// Marks a key as accepted without using it, e.g. a seed given to a deterministic command.
  void ignore(const std::string& key) { used_.insert(key); }

  /// Rejects keys that no command parameter consumed (usually typos).
  void reject_unused() const {
    for (const auto& [key, value] : values_)
      if (!used_.count(key)) throw ConfigError(key, "unknown key " + key);
  }

  /// Every parameter with the value actually used, defaults included.
  const std::map<std::string, std::string>& resolved() const { return resolved_; }

 private:
  std::optional<std::string> take(const std::string& key) {
    used_.insert(key);
    auto it = values_.find(key);
    if (it == values_.end()) return std::nullopt;
    return it->second;
  }

  std::map<std::string, std::string> values_;
  std::set<std::string> used_;
  std::map<std::string, std::string> resolved_;
};

}  // namespace fracsmooth::cli
