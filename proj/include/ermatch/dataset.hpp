#pragma once

#include <optional>
#include <string>
#include <vector>

namespace ermatch {

/// One row of a relational dataset. `values` is index-aligned with the
/// parent Dataset's attribute list; nullopt marks a missing cell.
struct Tuple {
  std::string id;
  std::vector<std::optional<std::string>> values;
};

struct Dataset {
  std::string id;
  std::vector<std::string> attributes;
  std::vector<Tuple> tuples;

  std::size_t size() const { return tuples.size(); }
  std::optional<std::size_t> attribute_index(std::string_view name) const;
};

/// Load an RFC-4180-style CSV (header row required, UTF-8). Empty cells and
/// the literal sentinels "NULL"/"null"/"NaN" become missing values. If
/// `id_column` is given, that column supplies tuple ids and is removed from
/// the attribute list; otherwise ids are 0-based row indices. Throws
/// std::runtime_error on unbalanced quotes, ragged rows, duplicate header
/// names, duplicate or whitespace-containing ids.
Dataset load_csv(const std::string& path, const std::optional<std::string>& id_column = {},
                 std::string dataset_id = "");

/// Write a Dataset back to CSV (no id column; values quoted as needed).
void write_csv(const Dataset& d, const std::string& path);

/// Sentence form of a tuple: one "[COL] a [VAL] v" block per non-missing
/// value, in attribute order, values whitespace-normalized. Values that
/// normalize to the empty string are treated as missing.
std::string serialize_tuple(const Dataset& d, const Tuple& e);

/// "[CLS] s1 [SEP] s2"; empty sides are skipped but the markers remain.
std::string serialize_pair(const std::string& s1, const std::string& s2);

} // namespace ermatch
