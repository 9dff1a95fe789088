#pragma once

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <optional>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include <openssl/evp.h>

#include <nlohmann/json.hpp>

#include "cqt/error.hpp"
#include "cqt/experiment/config.hpp"

namespace cqt::experiment {

using Cell = std::variant<std::monostate, std::int64_t, double, std::string>;

/// A named result table; serialized as CSV or as a JSON array of records.
struct Table {
  std::string name;
  std::vector<std::string> columns;
  std::vector<std::vector<Cell>> rows;

  void add(std::vector<Cell> row) {
    if (row.size() != columns.size())
      throw Error("Table " + name + ": row has " + std::to_string(row.size()) + " cells, expected " +
                  std::to_string(columns.size()));
    rows.push_back(std::move(row));
  }
};

/// Seventeen significant digits, enough to round-trip any double.
inline std::string format_real(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.16e", v);
  return buf;
}

inline std::string to_csv(const Table& t) {
  std::string out;
  for (std::size_t c = 0; c < t.columns.size(); ++c) out += (c ? "," : "") + t.columns[c];
  out += '\n';
  for (const auto& row : t.rows) {
    for (std::size_t c = 0; c < row.size(); ++c) {
      if (c) out += ',';
      std::visit(
          [&](const auto& v) {
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<T, std::int64_t>) out += std::to_string(v);
            else if constexpr (std::is_same_v<T, double>) out += format_real(v);
            else if constexpr (std::is_same_v<T, std::string>) out += v;
          },
          row[c]);
    }
    out += '\n';
  }
  return out;
}

inline nlohmann::ordered_json to_json_value(const Table& t) {
  auto arr = nlohmann::ordered_json::array();
  for (const auto& row : t.rows) {
    nlohmann::ordered_json rec = nlohmann::ordered_json::object();
    for (std::size_t c = 0; c < row.size(); ++c) {
      std::visit(
          [&](const auto& v) {
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<T, std::monostate>) rec[t.columns[c]] = nullptr;
            else rec[t.columns[c]] = v;
          },
          row[c]);
    }
    arr.push_back(std::move(rec));
  }
  return arr;
}

inline std::string to_json(const Table& t) { return to_json_value(t).dump(2) + "\n"; }

inline std::string serialize(const Table& t, OutputFormat f) { return f == OutputFormat::csv ? to_csv(t) : to_json(t); }

inline std::string sha256_hex(std::string_view data) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  if (!ctx) throw Error("sha256: cannot allocate digest context");
  const bool ok = EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr) == 1 &&
                  EVP_DigestUpdate(ctx, data.data(), data.size()) == 1 && EVP_DigestFinal_ex(ctx, md, &len) == 1;
  EVP_MD_CTX_free(ctx);
  if (!ok) throw Error("sha256: digest computation failed");
  std::ostringstream hex;
  for (unsigned int i = 0; i < len; ++i) hex << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(md[i]);
  return hex.str();
}

inline std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw Error("cannot read " + p.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

/// Writes `contents` to a sibling temporary file and renames it over `target`,
/// so readers see either the old file or the complete new one.
inline void write_atomic(const std::filesystem::path& target, std::string_view contents) {
  namespace fs = std::filesystem;
  if (target.has_parent_path()) fs::create_directories(target.parent_path());
  const fs::path tmp = target.parent_path() / ("." + target.filename().string() + ".partial");
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write " + tmp.string());
    out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    out.flush();
    if (!out) {
      out.close();
      fs::remove(tmp);
      throw Error("write failed for " + tmp.string());
    }
  }
  std::error_code ec;
  fs::rename(tmp, target, ec);
  if (ec) {
    fs::remove(tmp);
    throw Error("cannot rename " + tmp.string() + " to " + target.string() + ": " + ec.message());
  }
}

/// Parses a result file written by to_csv or to_json back into a table.
/// Numbers become doubles, empty CSV cells and JSON nulls become monostate.
inline Table read_table(const std::filesystem::path& p) {
  const std::string text = read_file(p);
  Table t;
  t.name = p.stem().string();
  if (text.find_first_not_of(" \t\r\n") == std::string::npos) throw Error(p.string() + ": result file is empty");

  const auto parse_cell = [](const std::string& s) -> Cell {
    if (s.empty()) return std::monostate{};
    char* end = nullptr;
    const double v = std::strtod(s.c_str(), &end);
    if (end && *end == '\0') return v;
    return s;
  };

  const auto first = text.find_first_not_of(" \t\r\n");
  if (text[first] == '[') {
    nlohmann::ordered_json j;
    try {
      j = nlohmann::ordered_json::parse(text);
    } catch (const nlohmann::json::exception& e) {
      throw Error(p.string() + ": malformed JSON: " + e.what());
    }
    if (!j.is_array() || j.empty() || !j.front().is_object())
      throw Error(p.string() + ": expected a non-empty array of records");
    for (const auto& [k, v] : j.front().items()) t.columns.push_back(k);
    for (const auto& rec : j) {
      std::vector<Cell> row;
      for (const auto& c : t.columns) {
        if (!rec.is_object() || !rec.contains(c)) throw Error(p.string() + ": record missing field " + c);
        const auto& v = rec.at(c);
        if (v.is_null()) row.emplace_back(std::monostate{});
        else if (v.is_number()) row.emplace_back(v.get<double>());
        else if (v.is_string()) row.emplace_back(v.get<std::string>());
        else throw Error(p.string() + ": unsupported value in field " + c);
      }
      t.rows.push_back(std::move(row));
    }
    return t;
  }

  std::istringstream in(text);
  std::string line;
  std::getline(in, line);
  {
    std::stringstream ss(trim(line));
    std::string col;
    while (std::getline(ss, col, ',')) t.columns.push_back(trim(col));
  }
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    line = trim(line);
    if (line.empty()) continue;
    std::vector<Cell> row;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) row.push_back(parse_cell(trim(cell)));
    if (!line.empty() && line.back() == ',') row.emplace_back(std::monostate{});
    if (row.size() != t.columns.size())
      throw Error(p.string() + ":" + std::to_string(line_no) + ": expected " + std::to_string(t.columns.size()) +
                  " fields, found " + std::to_string(row.size()));
    t.rows.push_back(std::move(row));
  }
  if (t.rows.empty()) throw Error(p.string() + ": result file has no data rows");
  return t;
}

inline std::optional<std::size_t> column_index(const Table& t, const std::string& name) {
  for (std::size_t i = 0; i < t.columns.size(); ++i)
    if (t.columns[i] == name) return i;
  return std::nullopt;
}

}  // namespace cqt::experiment
