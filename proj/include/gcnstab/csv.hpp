#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <variant>
#include <vector>

namespace gcnstab {

/// One CSV cell. std::monostate renders as an empty field.
using CsvCell = std::variant<std::monostate, std::int64_t, double, std::string>;
using CsvRow = std::vector<CsvCell>;

struct CsvStats {
  std::size_t rows = 0;
  /// Some double cell was NaN.
  bool had_nan = false;
};

/// Header then one line per row, doubles at 17 significant digits, LF endings.
/// A row whose length differs from the schema is rejected naming the first
/// missing or surplus column.
CsvStats write_csv(std::ostream& out, const std::vector<CsvRow>& rows, const std::vector<std::string>& schema);

/// write_csv into a file.
CsvStats emit_csv(const std::vector<CsvRow>& rows, const std::vector<std::string>& schema, const std::string& path);

}  // namespace gcnstab
