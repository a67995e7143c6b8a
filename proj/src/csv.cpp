#include "gcnstab/csv.hpp"
#include "gcnstab/text.hpp"

#include <cmath>
#include <fstream>
#include <ostream>
#include <stdexcept>

namespace gcnstab {

namespace {

void check_row(const CsvRow& row, std::size_t index, const std::vector<std::string>& schema) {
  if (row.size() == schema.size()) return;
  const std::string where = "row " + std::to_string(index) + ": ";
  if (row.size() < schema.size()) {
    throw std::invalid_argument(where + "missing value for column '" + schema[row.size()] + "'");
  }
  const std::string last = schema.empty() ? std::string("<none>") : schema.back();
  throw std::invalid_argument(where + std::to_string(row.size() - schema.size()) +
                              " value(s) beyond last column '" + last + "'");
}

}  // namespace

CsvStats write_csv(std::ostream& out, const std::vector<CsvRow>& rows, const std::vector<std::string>& schema) {
  for (std::size_t r = 0; r < rows.size(); ++r) check_row(rows[r], r, schema);

  CsvStats stats;
  std::string line;
  for (std::size_t c = 0; c < schema.size(); ++c) {
    if (c > 0) line += ',';
    line += schema[c];
  }
  out << line << '\n';
  for (const CsvRow& row : rows) {
    line.clear();
    for (std::size_t c = 0; c < row.size(); ++c) {
      if (c > 0) line += ',';
      const CsvCell& cell = row[c];
      if (const auto* d = std::get_if<double>(&cell)) {
        if (std::isnan(*d)) stats.had_nan = true;
        line += text::format_double(*d);
      } else if (const auto* i = std::get_if<std::int64_t>(&cell)) {
        line += std::to_string(*i);
      } else if (const auto* s = std::get_if<std::string>(&cell)) {
        line += *s;
      }
    }
    out << line << '\n';
    ++stats.rows;
  }
  return stats;
}

CsvStats emit_csv(const std::vector<CsvRow>& rows, const std::vector<std::string>& schema, const std::string& path) {
  for (std::size_t r = 0; r < rows.size(); ++r) check_row(rows[r], r, schema);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error(path + ": cannot open for writing");
  const CsvStats stats = write_csv(out, rows, schema);
  out.flush();
  if (!out) throw std::runtime_error(path + ": write failed");
  return stats;
}

}  // namespace gcnstab
