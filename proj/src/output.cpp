#include "lockbif/app/output.hpp"

#include <cstdio>
#include <fstream>

#include "lockbif/types.hpp"

namespace lockbif::app {

namespace {

std::ofstream open_for_write(const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  require(out.good(), Errc::invalid_config, "cannot write " + path.string());
  return out;
}

void write_config_comment(std::ostream& out, const RunConfig& cfg) {
  out << "# schema 1\n";
  for (const auto& line : to_ini_lines(cfg)) out << "# " << line << '\n';
}

}  // namespace

std::string format_number(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

std::string format_number(long double x) { return format_number(static_cast<double>(x)); }

nlohmann::ordered_json document(const std::string& command, const RunConfig& cfg) {
  nlohmann::ordered_json doc;
  doc["schema"] = 1;
  doc["command"] = command;
  doc["config"] = to_json(cfg);
  return doc;
}

void write_json(const std::filesystem::path& path, const nlohmann::ordered_json& doc) {
  auto out = open_for_write(path);
  out << doc.dump(2) << '\n';
}

std::string csv_field(const std::string& text) {
  if (text.find_first_of(",\"\n") == std::string::npos) return text;
  std::string out = "\"";
  for (char ch : text) {
    if (ch == '"') out += '"';
    out += ch;
  }
  return out + '"';
}

void write_csv(const std::filesystem::path& path, const RunConfig& cfg, const Table& table) {
  auto out = open_for_write(path);
  write_config_comment(out, cfg);
  for (std::size_t c = 0; c < table.columns.size(); ++c) out << (c ? "," : "") << table.columns[c];
  out << '\n';
  for (const auto& row : table.rows) {
    for (std::size_t c = 0; c < row.size(); ++c) out << (c ? "," : "") << csv_field(row[c]);
    out << '\n';
  }
}

void write_dat(const std::filesystem::path& path, const RunConfig& cfg, const Table& table) {
  auto out = open_for_write(path);
  write_config_comment(out, cfg);
  out << '#';
  for (const auto& c : table.columns) out << ' ' << c;
  out << '\n';
  for (const auto& row : table.rows) {
    for (std::size_t c = 0; c < row.size(); ++c) {
      out << (c ? " " : "") << (row[c].empty() ? std::string("nan") : row[c]);
    }
    out << '\n';
  }
}

nlohmann::ordered_json table_to_json(const Table& table) {
  nlohmann::ordered_json rows = nlohmann::ordered_json::array();
  for (const auto& row : table.rows) {
    nlohmann::ordered_json obj;
    for (std::size_t c = 0; c < row.size(); ++c) {
      const std::string& text = row[c];
      if (text.empty()) {
        obj[table.columns[c]] = nullptr;
        continue;
      }
      char* end = nullptr;
      const double v = std::strtod(text.c_str(), &end);
      if (end && *end == '\0') {
        const bool integral = text.find_first_of(".eEn") == std::string::npos;
        if (integral) {
          obj[table.columns[c]] = std::stoll(text);
        } else {
          obj[table.columns[c]] = v;
        }
      } else {
        obj[table.columns[c]] = text;
      }
    }
    rows.push_back(std::move(obj));
  }
  return rows;
}

}  // namespace lockbif::app
