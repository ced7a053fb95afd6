#pragma once

// Typed result tables and their CSV / JSON forms.
//
// CSV follows RFC 4180: CRLF line ends, fields containing a comma, quote, CR
// or LF are quoted, quotes are doubled. Reals use '.' and 17 significant
// digits, so every double round-trips exactly.

#include <charconv>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <system_error>
#include <variant>
#include <vector>

#include <json.hpp>

namespace mplab {

enum class ColumnType { integer, real, text, boolean };

inline std::string_view to_string(ColumnType t) {
  switch (t) {
    case ColumnType::integer: return "integer";
    case ColumnType::real: return "real";
    case ColumnType::text: return "text";
    case ColumnType::boolean: return "boolean";
  }
  return "?";
}

inline ColumnType column_type_from_string(std::string_view s) {
  if (s == "integer") return ColumnType::integer;
  if (s == "real") return ColumnType::real;
  if (s == "text") return ColumnType::text;
  if (s == "boolean") return ColumnType::boolean;
  throw std::invalid_argument("unknown column type '" + std::string(s) + "'");
}

struct Column {
  std::string name;
  ColumnType type;
  friend bool operator==(const Column&, const Column&) = default;
};

using Cell = std::variant<std::int64_t, double, std::string, bool>;
using Row = std::vector<Cell>;

struct TableMetadata {
  std::string kind;
  std::string config_hash;
  std::string code_version;
  double wall_seconds = 0.0;
  int workers = 1;
  nlohmann::json config;  // the effective configuration, for re-runs
};

struct ResultTable {
  std::vector<Column> columns;
  std::vector<Row> rows;
  nlohmann::json footer = nlohmann::json::object();
  TableMetadata meta;

  std::size_t column(std::string_view name) const {
    for (std::size_t i = 0; i < columns.size(); ++i)
      if (columns[i].name == name) return i;
    throw std::out_of_range("no column '" + std::string(name) + "'");
  }

  void add_row(Row row) {
    if (row.size() != columns.size())
      throw std::invalid_argument("ResultTable: row has " + std::to_string(row.size()) + " cells, expected " +
                                  std::to_string(columns.size()));
    for (std::size_t i = 0; i < row.size(); ++i)
      if (row[i].index() != static_cast<std::size_t>(columns[i].type))
        throw std::invalid_argument("ResultTable: cell type mismatch in column '" + columns[i].name + "'");
    rows.push_back(std::move(row));
  }
};

// ---------------------------------------------------------------------------
// Scalars

inline std::string format_real(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 17);
  return std::string(buf, res.ptr);
}

inline double parse_real(std::string_view s) {
  double v = 0.0;
  const char* first = s.data();
  if (!s.empty() && s.front() == '+') ++first;
  const auto res = std::from_chars(first, s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size())
    throw std::invalid_argument("not a real number: '" + std::string(s) + "'");
  return v;
}

inline std::int64_t parse_integer(std::string_view s) {
  std::int64_t v = 0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size())
    throw std::invalid_argument("not an integer: '" + std::string(s) + "'");
  return v;
}

inline std::string format_cell(const Cell& c) {
  return std::visit(
      [](const auto& v) -> std::string {
        using V = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<V, std::int64_t>) return std::to_string(v);
        else if constexpr (std::is_same_v<V, double>) return format_real(v);
        else if constexpr (std::is_same_v<V, bool>) return v ? "true" : "false";
        else return v;
      },
      c);
}

inline Cell parse_cell(std::string_view s, ColumnType t) {
  switch (t) {
    case ColumnType::integer: return parse_integer(s);
    case ColumnType::real: return parse_real(s);
    case ColumnType::text: return std::string(s);
    case ColumnType::boolean:
      if (s == "true") return true;
      if (s == "false") return false;
      throw std::invalid_argument("not a boolean: '" + std::string(s) + "'");
  }
  throw std::logic_error("parse_cell");
}

// ---------------------------------------------------------------------------
// CSV

inline std::string csv_field(std::string_view s) {
  if (s.find_first_of(",\"\r\n") == std::string_view::npos) return std::string(s);
  std::string out = "\"";
  for (char ch : s) {
    if (ch == '"') out += '"';
    out += ch;
  }
  out += '"';
  return out;
}

inline std::string to_csv(const ResultTable& t) {
  std::string out;
  auto line = [&](const auto& cells, auto&& text) {
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (i) out += ',';
      out += csv_field(text(cells[i]));
    }
    out += "\r\n";
  };
  line(t.columns, [](const Column& c) { return c.name; });
  for (const auto& r : t.rows) line(r, [](const Cell& c) { return format_cell(c); });
  return out;
}

/// RFC 4180 records; accepts CRLF or LF line ends.
inline std::vector<std::vector<std::string>> parse_csv(std::string_view text) {
  std::vector<std::vector<std::string>> records;
  std::vector<std::string> rec;
  std::string field;
  bool quoted = false, any = false;
  std::size_t i = 0;
  auto end_field = [&] {
    rec.push_back(std::move(field));
    field.clear();
  };
  auto end_record = [&] {
    end_field();
    records.push_back(std::move(rec));
    rec.clear();
    any = false;
  };
  while (i < text.size()) {
    const char ch = text[i];
    if (quoted) {
      if (ch == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          field += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        field += ch;
      }
      ++i;
      continue;
    }
    if (ch == '"' && field.empty()) {
      quoted = any = true;
    } else if (ch == ',') {
      end_field();
      any = true;
    } else if (ch == '\r' && i + 1 < text.size() && text[i + 1] == '\n') {
      end_record();
      ++i;
    } else if (ch == '\n') {
      end_record();
    } else {
      field += ch;
      any = true;
    }
    ++i;
  }
  if (quoted) throw std::invalid_argument("parse_csv: unterminated quoted field");
  if (any || !field.empty()) end_record();
  return records;
}

/// Rebuilds a table from CSV given the column types.
inline ResultTable table_from_csv(std::string_view text, const std::vector<ColumnType>& types) {
  const auto records = parse_csv(text);
  if (records.empty()) throw std::invalid_argument("table_from_csv: missing header");
  if (records.front().size() != types.size()) throw std::invalid_argument("table_from_csv: header width mismatch");
  ResultTable t;
  for (std::size_t i = 0; i < types.size(); ++i) t.columns.push_back({records.front()[i], types[i]});
  for (std::size_t r = 1; r < records.size(); ++r) {
    if (records[r].size() != types.size())
      throw std::invalid_argument("table_from_csv: record " + std::to_string(r) + " has wrong width");
    Row row;
    for (std::size_t i = 0; i < types.size(); ++i) row.push_back(parse_cell(records[r][i], types[i]));
    t.rows.push_back(std::move(row));
  }
  return t;
}

// ---------------------------------------------------------------------------
// JSON. Non-finite reals are written as the strings "inf", "-inf", "nan".

inline nlohmann::json cell_json(const Cell& c) {
  return std::visit(
      [](const auto& v) -> nlohmann::json {
        using V = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<V, double>) {
          if (!std::isfinite(v)) return format_real(v);
        }
        return v;
      },
      c);
}

inline Cell cell_from_json(const nlohmann::json& j, ColumnType t) {
  switch (t) {
    case ColumnType::integer: return j.get<std::int64_t>();
    case ColumnType::real: return j.is_string() ? parse_real(j.get<std::string>()) : j.get<double>();
    case ColumnType::text: return j.get<std::string>();
    case ColumnType::boolean: return j.get<bool>();
  }
  throw std::logic_error("cell_from_json");
}

inline nlohmann::ordered_json to_json_document(const ResultTable& t) {
  nlohmann::ordered_json cols = nlohmann::ordered_json::array();
  for (const auto& c : t.columns) cols.push_back({{"name", c.name}, {"type", to_string(c.type)}});
  nlohmann::ordered_json rows = nlohmann::ordered_json::array();
  for (const auto& r : t.rows) {
    nlohmann::ordered_json obj = nlohmann::ordered_json::object();
    for (std::size_t i = 0; i < r.size(); ++i) obj[t.columns[i].name] = cell_json(r[i]);
    rows.push_back(std::move(obj));
  }
  return {{"kind", t.meta.kind}, {"columns", cols}, {"rows", rows}, {"footer", t.footer}};
}

inline ResultTable table_from_json(const nlohmann::json& doc) {
  ResultTable t;
  t.meta.kind = doc.value("kind", std::string());
  for (const auto& c : doc.at("columns"))
    t.columns.push_back({c.at("name").get<std::string>(), column_type_from_string(c.at("type").get<std::string>())});
  for (const auto& r : doc.at("rows")) {
    Row row;
    for (const auto& c : t.columns) row.push_back(cell_from_json(r.at(c.name), c.type));
    t.rows.push_back(std::move(row));
  }
  t.footer = doc.value("footer", nlohmann::json::object());
  return t;
}

inline nlohmann::ordered_json metadata_json(const TableMetadata& m) {
  return {{"kind", m.kind},
          {"config_hash", m.config_hash},
          {"code_version", m.code_version},
          {"wall_seconds", m.wall_seconds},
          {"workers", m.workers},
          {"config", m.config}};
}

// ---------------------------------------------------------------------------
// Files

class OutputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline void write_file(const std::filesystem::path& path, std::string_view content) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw OutputError("cannot open '" + path.string() + "' for writing");
  os.write(content.data(), static_cast<std::streamsize>(content.size()));
  if (!os) throw OutputError("write failed for '" + path.string() + "'");
}

/// Writes <stem>.csv and/or <stem>.json plus the <stem>.meta.json sidecar;
/// returns the paths written.
inline std::vector<std::filesystem::path> emit(const ResultTable& t, const std::filesystem::path& directory,
                                               const std::string& stem, const std::vector<std::string>& formats) {
  std::error_code ec;
  std::filesystem::create_directories(directory, ec);
  if (ec) throw OutputError("cannot create '" + directory.string() + "': " + ec.message());
  std::vector<std::filesystem::path> written;
  for (const auto& f : formats) {
    const auto path = directory / (stem + "." + f);
    if (f == "csv")
      write_file(path, to_csv(t));
    else if (f == "json")
      write_file(path, to_json_document(t).dump(2) + "\n");
    else
      throw OutputError("unknown output format '" + f + "'");
    written.push_back(path);
  }
  const auto meta = directory / (stem + ".meta.json");
  write_file(meta, metadata_json(t.meta).dump(2) + "\n");
  written.push_back(meta);
  return written;
}

/// 64-bit FNV-1a.
inline std::uint64_t fnv1a(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace mplab
