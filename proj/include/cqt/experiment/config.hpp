#pragma once

// Experiment configuration: one experiment per file, `key = value` lines,
// `#` starts a comment. Every value remembers the line it came from so that
// validation failures can point back into the file.

#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <numbers>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "cqt/error.hpp"

namespace cqt::experiment {

/// Malformed or invalid configuration; maps to exit code 2.
class ConfigError : public Error {
 public:
  using Error::Error;
};

enum class ExperimentKind { ccr, box, propagate, gaussian };
enum class OutputFormat { csv, json };

inline const char* to_string(ExperimentKind k) {
  switch (k) {
    case ExperimentKind::ccr: return "ccr";
    case ExperimentKind::box: return "box";
    case ExperimentKind::propagate: return "propagate";
    default: return "gaussian";
  }
}

inline const char* to_string(OutputFormat f) { return f == OutputFormat::csv ? "csv" : "json"; }

inline std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

struct ConfigEntry {
  std::string value;
  int line = 0;
};

class ExperimentConfig {
 public:
  ExperimentKind experiment = ExperimentKind::ccr;
  std::string output_dir = "results";
  std::uint64_t seed = 0;
  std::optional<OutputFormat> format;  ///< unset: the experiment's natural format
  std::string source = "<config>";

  static ExperimentConfig parse(std::istream& in, const std::string& source_name) {
    ExperimentConfig cfg;
    cfg.source = source_name;
    std::string raw;
    int line_no = 0;
    bool have_experiment = false;
    while (std::getline(in, raw)) {
      ++line_no;
      const auto hash = raw.find('#');
      const std::string line = trim(hash == std::string::npos ? raw : raw.substr(0, hash));
      if (line.empty()) continue;
      const auto eq = line.find('=');
      if (eq == std::string::npos) cfg.fail(line_no, "expected `key = value`");
      const std::string key = trim(line.substr(0, eq));
      const std::string value = trim(line.substr(eq + 1));
      if (key.empty()) cfg.fail(line_no, "missing key before `=`");
      if (value.empty()) cfg.fail(line_no, "missing value for `" + key + "`");
      if (cfg.entries_.count(key))
        cfg.fail(line_no, "duplicate key `" + key + "` (first set on line " +
                              std::to_string(cfg.entries_.at(key).line) + ")");
      cfg.entries_[key] = {value, line_no};
      cfg.order_.push_back(key);

      if (key == "experiment") {
        have_experiment = true;
        if (value == "ccr") cfg.experiment = ExperimentKind::ccr;
        else if (value == "box") cfg.experiment = ExperimentKind::box;
        else if (value == "propagate") cfg.experiment = ExperimentKind::propagate;
        else if (value == "gaussian") cfg.experiment = ExperimentKind::gaussian;
        else cfg.fail(line_no, "experiment must be one of ccr, box, propagate, gaussian (got `" + value + "`)");
      } else if (key == "output_dir") {
        cfg.output_dir = value;
      } else if (key == "seed") {
        cfg.seed = cfg.get_u64("seed");
      } else if (key == "format") {
        cfg.format = parse_format(value, [&](const std::string& m) { cfg.fail(line_no, m); });
      }
    }
    if (!have_experiment) throw ConfigError(source_name + ": missing required key `experiment`");
    return cfg;
  }

  static ExperimentConfig load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError(path + ": cannot open config file");
    return parse(in, path);
  }

  template <typename OnError>
  static OutputFormat parse_format(const std::string& v, OnError&& on_error) {
    if (v == "csv") return OutputFormat::csv;
    if (v == "json") return OutputFormat::json;
    on_error("format must be csv or json (got `" + v + "`)");
    return OutputFormat::csv;
  }

  bool has(const std::string& key) const { return entries_.count(key) != 0; }

  /// Keys in file order with their raw values, for the manifest snapshot.
  std::vector<std::pair<std::string, std::string>> snapshot() const {
    std::vector<std::pair<std::string, std::string>> out;
    for (const auto& k : order_) out.emplace_back(k, entries_.at(k).value);
    return out;
  }

  std::string get_string(const std::string& key, const std::string& fallback) const {
    used_.insert(key);
    const auto it = entries_.find(key);
    return it == entries_.end() ? fallback : it->second.value;
  }

  /// Real number; also accepts `pi`, `-pi` and `<number>pi` / `<number>*pi`.
  double get_real(const std::string& key, double fallback) const {
    used_.insert(key);
    const auto it = entries_.find(key);
    if (it == entries_.end()) return fallback;
    return parse_real(it->second.value, key, it->second.line);
  }

  long long get_int(const std::string& key, long long fallback) const {
    used_.insert(key);
    const auto it = entries_.find(key);
    if (it == entries_.end()) return fallback;
    return parse_int(it->second.value, key, it->second.line);
  }

  std::uint64_t get_u64(const std::string& key) const {
    used_.insert(key);
    const auto& e = entries_.at(key);
    std::uint64_t v = 0;
    const auto* end = e.value.data() + e.value.size();
    const auto [p, ec] = std::from_chars(e.value.data(), end, v);
    if (ec != std::errc() || p != end) fail(e.line, "`" + key + "` must be an unsigned 64-bit integer");
    return v;
  }

  bool get_bool(const std::string& key, bool fallback) const {
    used_.insert(key);
    const auto it = entries_.find(key);
    if (it == entries_.end()) return fallback;
    const std::string& v = it->second.value;
    if (v == "true" || v == "yes" || v == "1") return true;
    if (v == "false" || v == "no" || v == "0") return false;
    fail(it->second.line, "`" + key + "` must be true or false");
  }

  std::vector<double> get_real_list(const std::string& key, std::vector<double> fallback) const {
    used_.insert(key);
    const auto it = entries_.find(key);
    if (it == entries_.end()) return fallback;
    std::vector<double> out;
    for (const auto& item : split_list(it->second)) out.push_back(parse_real(item, key, it->second.line));
    return out;
  }

  std::vector<long long> get_int_list(const std::string& key, std::vector<long long> fallback) const {
    used_.insert(key);
    const auto it = entries_.find(key);
    if (it == entries_.end()) return fallback;
    std::vector<long long> out;
    for (const auto& item : split_list(it->second)) out.push_back(parse_int(item, key, it->second.line));
    return out;
  }

  /// Choice among fixed words.
  std::string get_choice(const std::string& key, const std::string& fallback,
                         std::initializer_list<const char*> allowed) const {
    const std::string v = get_string(key, fallback);
    for (const char* a : allowed)
      if (v == a) return v;
    std::string list;
    for (const char* a : allowed) list += (list.empty() ? "" : ", ") + std::string(a);
    fail(line_of(key), "`" + key + "` must be one of " + list + " (got `" + v + "`)");
  }

  /// Rejects keys that no part of the experiment asked for.
  void reject_unused() const {
    static const std::set<std::string> common{"experiment", "output_dir", "seed", "format"};
    for (const auto& k : order_)
      if (!common.count(k) && !used_.count(k))
        fail(entries_.at(k).line, "unknown key `" + k + "` for experiment " + to_string(experiment));
  }

  int line_of(const std::string& key) const {
    const auto it = entries_.find(key);
    return it == entries_.end() ? 0 : it->second.line;
  }

  /// Throws a ConfigError pointing at the line of `key` (or the file when unset).
  [[noreturn]] void fail_key(const std::string& key, const std::string& message) const {
    fail(line_of(key), message);
  }

  [[noreturn]] void fail(int line, const std::string& message) const {
    throw ConfigError(source + (line > 0 ? ":" + std::to_string(line) : std::string()) + ": " + message);
  }

 private:
  std::map<std::string, ConfigEntry> entries_;
  std::vector<std::string> order_;
  mutable std::set<std::string> used_;

  std::vector<std::string> split_list(const ConfigEntry& e) const {
    std::vector<std::string> out;
    std::stringstream ss(e.value);
    std::string item;
    while (std::getline(ss, item, ',')) {
      item = trim(item);
      if (item.empty()) fail(e.line, "empty item in list");
      out.push_back(item);
    }
    return out;
  }

  double parse_real(const std::string& text, const std::string& key, int line) const {
    std::string s = text;
    double scale = 1.0;
    if (s.size() >= 2 && s.compare(s.size() - 2, 2, "pi") == 0) {
      scale = std::numbers::pi;
      s.resize(s.size() - 2);
      if (!s.empty() && s.back() == '*') s.pop_back();
      if (s.empty() || s == "+") s = "1";
      else if (s == "-") s = "-1";
    }
    double v = 0.0;
    const auto* end = s.data() + s.size();
    const auto [p, ec] = std::from_chars(s.data(), end, v);
    if (ec != std::errc() || p != end || !std::isfinite(v))
      fail(line, "`" + key + "` must be a real number (got `" + text + "`)");
    return v * scale;
  }

  long long parse_int(const std::string& text, const std::string& key, int line) const {
    long long v = 0;
    const auto* end = text.data() + text.size();
    const auto [p, ec] = std::from_chars(text.data(), end, v);
    if (ec != std::errc() || p != end) fail(line, "`" + key + "` must be an integer (got `" + text + "`)");
    return v;
  }
};

}  // namespace cqt::experiment
