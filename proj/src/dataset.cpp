#include "ermatch/dataset.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>
#include <unordered_set>

#include "ermatch/text.hpp"

namespace ermatch {

namespace {

bool is_missing_cell(const std::string& raw) {
  const std::string t = normalize_whitespace(raw);
  return t.empty() || t == "NULL" || t == "null" || t == "NaN";
}

bool contains_whitespace(const std::string& s) {
  for (const char c : s)
    if (c == ' ' || c == '\t' || c == '\n' || c == '\r') return true;
  return false;
}

/// RFC-4180 field scanner over the whole file contents. Quoted fields may
/// contain commas, quotes ("" escape) and newlines. Rows end at an unquoted
/// newline; CRLF and LF both accepted.
std::vector<std::vector<std::string>> parse_csv(const std::string& content, const std::string& path) {
  std::vector<std::vector<std::string>> rows;
  std::vector<std::string> row;
  std::string field;
  bool in_quotes = false;
  bool field_started = false; // row has content (distinguishes empty line from one empty field)
  std::size_t line = 1;

  const auto end_field = [&] {
    row.push_back(field);
    field.clear();
  };
  const auto end_row = [&] {
    end_field();
    rows.push_back(std::move(row));
    row.clear();
    field_started = false;
  };

  for (std::size_t i = 0; i < content.size(); ++i) {
    const char c = content[i];
    if (in_quotes) {
      if (c == '"') {
        if (i + 1 < content.size() && content[i + 1] == '"') {
          field.push_back('"');
          ++i;
        } else {
          in_quotes = false;
        }
      } else {
        if (c == '\n') ++line;
        field.push_back(c);
      }
      continue;
    }
    switch (c) {
      case '"':
        if (!field.empty())
          throw std::runtime_error(path + ":" + std::to_string(line) + ": quote inside unquoted field");
        in_quotes = true;
        field_started = true;
        break;
      case ',':
        end_field();
        field_started = true;
        break;
      case '\r':
        break; // swallowed; the following \n ends the row
      case '\n':
        if (field_started || !field.empty() || !row.empty()) end_row();
        ++line;
        break;
      default:
        field.push_back(c);
        field_started = true;
        break;
    }
  }
  if (in_quotes) throw std::runtime_error(path + ": unbalanced quote (file ends inside a quoted field)");
  if (field_started || !field.empty() || !row.empty()) end_row();
  return rows;
}

std::string csv_quote(const std::string& v) {
  bool needs = false;
  for (const char c : v)
    if (c == ',' || c == '"' || c == '\n' || c == '\r') needs = true;
  if (!needs) return v;
  std::string out = "\"";
  for (const char c : v) {
    if (c == '"') out += "\"\"";
    else out.push_back(c);
  }
  out += "\"";
  return out;
}

} // namespace

std::optional<std::size_t> Dataset::attribute_index(std::string_view name) const {
  for (std::size_t i = 0; i < attributes.size(); ++i)
    if (attributes[i] == name) return i;
  return std::nullopt;
}

Dataset load_csv(const std::string& path, const std::optional<std::string>& id_column,
                 std::string dataset_id) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open CSV file: " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  const auto rows = parse_csv(buf.str(), path);
  if (rows.empty()) throw std::runtime_error(path + ": empty file (header row required)");

  const auto& header = rows.front();
  std::unordered_set<std::string> seen;
  for (const auto& name : header)
    if (!seen.insert(name).second)
      throw std::runtime_error(path + ": duplicate header name \"" + name + "\"");

  std::optional<std::size_t> id_idx;
  if (id_column) {
    for (std::size_t i = 0; i < header.size(); ++i)
      if (header[i] == *id_column) id_idx = i;
    if (!id_idx) throw std::runtime_error(path + ": id column \"" + *id_column + "\" not in header");
  }

  Dataset d;
  d.id = dataset_id.empty() ? path : std::move(dataset_id);
  for (std::size_t i = 0; i < header.size(); ++i)
    if (!id_idx || i != *id_idx) d.attributes.push_back(header[i]);

  std::unordered_set<std::string> ids;
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const auto& cells = rows[r];
    if (cells.size() != header.size())
      throw std::runtime_error(path + ": row " + std::to_string(r) + " has " +
                               std::to_string(cells.size()) + " fields, header has " +
                               std::to_string(header.size()));
    Tuple t;
    if (id_idx) {
      const std::string& raw = cells[*id_idx];
      if (is_missing_cell(raw)) throw std::runtime_error(path + ": row " + std::to_string(r) + ": missing id");
      t.id = raw;
    } else {
      t.id = std::to_string(r - 1);
    }
    if (contains_whitespace(t.id))
      throw std::runtime_error(path + ": id \"" + t.id + "\" contains whitespace (unsupported in artifacts)");
    if (!ids.insert(t.id).second)
      throw std::runtime_error(path + ": duplicate tuple id \"" + t.id + "\"");
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (id_idx && i == *id_idx) continue;
      if (is_missing_cell(cells[i]))
        t.values.emplace_back(std::nullopt);
      else
        t.values.emplace_back(cells[i]);
    }
    d.tuples.push_back(std::move(t));
  }
  return d;
}

void write_csv(const Dataset& d, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write CSV file: " + path);
  for (std::size_t i = 0; i < d.attributes.size(); ++i) {
    if (i) out << ',';
    out << csv_quote(d.attributes[i]);
  }
  out << '\n';
  for (const auto& t : d.tuples) {
    for (std::size_t i = 0; i < t.values.size(); ++i) {
      if (i) out << ',';
      if (t.values[i]) out << csv_quote(*t.values[i]);
    }
    out << '\n';
  }
}

std::string serialize_tuple(const Dataset& d, const Tuple& e) {
  if (e.values.size() != d.attributes.size())
    throw std::runtime_error("serialize_tuple: tuple arity does not match dataset attributes");
  std::string out;
  for (std::size_t i = 0; i < d.attributes.size(); ++i) {
    if (!e.values[i]) continue;
    const std::string v = normalize_whitespace(*e.values[i]);
    if (v.empty()) continue;
    if (!out.empty()) out += ' ';
    out += "[COL] ";
    out += d.attributes[i];
    out += " [VAL] ";
    out += v;
  }
  return out;
}

std::string serialize_pair(const std::string& s1, const std::string& s2) {
  std::string out = "[CLS]";
  if (!s1.empty()) {
    out += ' ';
    out += s1;
  }
  out += " [SEP]";
  if (!s2.empty()) {
    out += ' ';
    out += s2;
  }
  return out;
}

} // namespace ermatch
