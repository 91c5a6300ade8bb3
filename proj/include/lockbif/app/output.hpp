#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "lockbif/app/config.hpp"

namespace lockbif::app {

/// 17 significant digits, locale-independent.
std::string format_number(double x);
std::string format_number(long double x);
inline std::string format_number(int x) { return std::to_string(x); }
inline std::string format_number(long x) { return std::to_string(x); }
inline std::string format_number(long long x) { return std::to_string(x); }
inline std::string format_number(const std::string& x) { return x; }
inline std::string format_number(const char* x) { return x; }
template <typename T>
std::string format_number(const std::optional<T>& x) {
  return x ? format_number(*x) : std::string();
}

struct Table {
  std::vector<std::string> columns;
  std::vector<std::vector<std::string>> rows;

  template <typename... Cells>
  void add(const Cells&... cells) {
    rows.push_back({format_number(cells)...});
  }
};

/// Header document shared by every JSON artifact.
nlohmann::ordered_json document(const std::string& command, const RunConfig& cfg);

/// Writers embed the resolved config: JSON under "config", CSV and .dat as
/// leading '#' comment lines.
void write_json(const std::filesystem::path& path, const nlohmann::ordered_json& doc);
void write_csv(const std::filesystem::path& path, const RunConfig& cfg, const Table& table);
void write_dat(const std::filesystem::path& path, const RunConfig& cfg, const Table& table);
/// Quotes a field holding a comma, quote or newline.
std::string csv_field(const std::string& text);

nlohmann::ordered_json table_to_json(const Table& table);

}  // namespace lockbif::app
