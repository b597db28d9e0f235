#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <string_view>
#include <vector>

namespace epikernel::csv {

/// A header row plus string cells; numeric conversion happens at use sites so
/// error messages can name the file, row and column.
struct Table {
  std::filesystem::path source;
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  /// Index of a named column; throws ParseError when absent.
  std::size_t column(std::string_view name) const;
  double number(std::size_t row, std::size_t col) const;
  std::int64_t integer(std::size_t row, std::size_t col) const;
};

/// Reads a comma-separated file with a header row. Blank lines are skipped.
Table read(const std::filesystem::path& path);

double parse_double(std::string_view text);
std::int64_t parse_int(std::string_view text);

/// 17 significant digits; used for every emitted result table.
std::string format_fixed17(double value);
/// Shortest text that parses back to the same double; used for data files.
std::string format_shortest(double value);

class Writer {
 public:
  explicit Writer(const std::filesystem::path& path);
  void row(const std::vector<std::string>& cells);
  void close();

 private:
  std::filesystem::path path_;
  std::ofstream out_;
};

}  // namespace epikernel::csv
