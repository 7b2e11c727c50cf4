#pragma once

// Sweep CSV schema, row formatting and the tolerance-based comparison of a
// result file against a golden file.

#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "dagsm/params.hpp"

namespace dagsm {

inline constexpr std::array<std::string_view, 13> kCsvColumns{
    "model",    "tie_break_mode", "difficulty_source", "ledger_function", "acceptable_path_param",
    "max_fork", "max_pool",       "fee",               "guaranteed_fee",  "alpha",
    "Honest",   "ARR Revenue",    "Threshold"};

/// Cell text for a failed computation.
inline constexpr std::string_view kErrorCell = "error";

class SchemaError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Shortest text that reads back to the same double.
inline std::string format_number(double v) {
  std::array<char, 64> buf{};
  const auto [end, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  if (ec != std::errc{}) throw std::runtime_error("number formatting failed");
  return std::string(buf.data(), end);
}

struct SweepRecord {
  ModelParams params;
  bool with_alpha = true;
  std::optional<double> honest;
  std::optional<double> revenue;
  std::optional<double> threshold;
  bool failed = false;
  bool wants_revenue = true;
  bool wants_threshold = false;
};

inline std::vector<std::string> record_cells(const SweepRecord& r) {
  const auto& p = r.params;
  const bool nc = p.model == ModelKind::kNc;
  auto result = [&](bool wanted, const std::optional<double>& v) -> std::string {
    if (!wanted) return {};
    if (v) return format_number(*v);
    return r.failed ? std::string(kErrorCell) : std::string{};
  };
  return {std::string(name(p.model)),
          std::string(name(p.tie_break)),
          std::string(name(p.difficulty_source)),
          std::string(name(p.ledger)),
          nc ? std::string{} : std::to_string(p.fork_sensitivity),
          std::to_string(p.max_fork),
          std::to_string(p.max_pool),
          format_number(p.whale_fee),
          format_number(p.guaranteed_fee),
          r.with_alpha ? format_number(p.alpha) : std::string{},
          r.with_alpha ? result(r.wants_revenue, r.honest) : std::string{},
          result(r.wants_revenue, r.revenue),
          result(r.wants_threshold, r.threshold)};
}

inline void write_csv_header(std::ostream& out) {
  for (std::size_t i = 0; i < kCsvColumns.size(); ++i) out << (i ? "," : "") << kCsvColumns[i];
  out << '\n';
}

inline void write_csv_row(std::ostream& out, const SweepRecord& r) {
  const auto cells = record_cells(r);
  for (std::size_t i = 0; i < cells.size(); ++i) out << (i ? "," : "") << cells[i];
  out << '\n';
}

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};

/// Numeric cell value, or nullopt when the text is not a plain number.
inline std::optional<double> parse_cell(const std::string& c) {
  double v = 0.0;
  const auto [p, ec] = std::from_chars(c.data(), c.data() + c.size(), v);
  if (c.empty() || ec != std::errc{} || p != c.data() + c.size()) return std::nullopt;
  return v;
}

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        cell += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        cell += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      out.push_back(std::move(cell));
      cell.clear();
    } else if (c != '\r') {
      cell += c;
    }
  }
  if (quoted) throw SchemaError("unterminated quote");
  out.push_back(std::move(cell));
  return out;
}

/// Reads a sweep CSV and checks it against the schema: exact header, cell
/// count, enum vocabularies and numeric cells.
inline CsvTable read_sweep_csv(std::istream& in, const std::string& label = "csv") {
  CsvTable t;
  std::string line;
  if (!std::getline(in, line)) throw SchemaError(label + ": empty file");
  t.header = split_csv_line(line);
  if (t.header.size() != kCsvColumns.size()) throw SchemaError(label + ": expected 13 columns");
  for (std::size_t i = 0; i < kCsvColumns.size(); ++i) {
    if (t.header[i] != kCsvColumns[i]) {
      throw SchemaError(label + ": column " + std::to_string(i + 1) + " is '" + t.header[i] + "', expected '" +
                        std::string(kCsvColumns[i]) + "'");
    }
  }
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    auto cells = split_csv_line(line);
    const std::string where = label + ":" + std::to_string(line_no) + ": ";
    if (cells.size() != kCsvColumns.size()) {
      throw SchemaError(where + "expected 13 cells, found " + std::to_string(cells.size()));
    }
    try {
      parse_model(cells[0]);
      if (!cells[1].empty()) parse_tie_break(cells[1]);
      if (!cells[2].empty()) parse_difficulty(cells[2]);
      if (!cells[3].empty()) parse_ledger(cells[3]);
    } catch (const ParamError& e) {
      throw SchemaError(where + e.what());
    }
    for (std::size_t i = 4; i < cells.size(); ++i) {
      const auto& c = cells[i];
      if (c.empty() || c == kErrorCell) continue;
      if (!parse_cell(c)) {
        throw SchemaError(where + "column '" + std::string(kCsvColumns[i]) + "' is not numeric: '" + c + "'");
      }
    }
    t.rows.push_back(std::move(cells));
  }
  return t;
}

struct CsvMismatch {
  std::size_t row;  // 1-based data row
  std::string column;
  std::string actual;
  std::string expected;
};

struct VerifyReport {
  std::size_t rows = 0;
  std::vector<CsvMismatch> mismatches;
  std::string note;  // row-count mismatch and similar
  bool passed() const { return mismatches.empty() && note.empty(); }
};

/// Absolute tolerance per numeric column; unlisted numeric columns compare
/// with 1e-12.
using ColumnTolerances = std::map<std::string, double>;

inline ColumnTolerances default_tolerances() {
  return {{"Honest", 1e-9}, {"ARR Revenue", 1e-6}, {"Threshold", 1e-3}};
}

inline VerifyReport verify_csv(std::istream& actual, std::istream& golden, const ColumnTolerances& tol = default_tolerances()) {
  for (const auto& [col, v] : tol) {
    bool known = false;
    for (auto c : kCsvColumns) known |= c == col;
    if (!known) throw SchemaError("tolerance for unknown column '" + col + "'");
    if (!(v >= 0.0)) throw SchemaError("tolerance for '" + col + "' must be nonnegative");
  }
  const auto a = read_sweep_csv(actual, "actual");
  const auto g = read_sweep_csv(golden, "golden");
  VerifyReport rep;
  rep.rows = std::min(a.rows.size(), g.rows.size());
  if (a.rows.size() != g.rows.size()) {
    rep.note = "row count " + std::to_string(a.rows.size()) + " vs golden " + std::to_string(g.rows.size());
  }
  for (std::size_t r = 0; r < rep.rows; ++r) {
    for (std::size_t c = 0; c < kCsvColumns.size(); ++c) {
      const auto& x = a.rows[r][c];
      const auto& y = g.rows[r][c];
      bool same = x == y;
      if (!same && c >= 4 && !x.empty() && !y.empty() && x != kErrorCell && y != kErrorCell) {
        const auto it = tol.find(std::string(kCsvColumns[c]));
        const double t = it == tol.end() ? 1e-12 : it->second;
        same = std::abs(*parse_cell(x) - *parse_cell(y)) <= t;
      }
      if (!same) rep.mismatches.push_back({r + 1, std::string(kCsvColumns[c]), x, y});
    }
  }
  return rep;
}

inline VerifyReport verify_csv_files(const std::string& actual, const std::string& golden,
                                     const ColumnTolerances& tol = default_tolerances()) {
  std::ifstream a(actual), g(golden);
  if (!a) throw SchemaError("cannot open " + actual);
  if (!g) throw SchemaError("cannot open " + golden);
  return verify_csv(a, g, tol);
}

}  // namespace dagsm
