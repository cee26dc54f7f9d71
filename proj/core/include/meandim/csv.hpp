#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace meandim::csv {

struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};

/// Parses header + rows. Rejects ragged rows and empty input. Cells are
/// trimmed of surrounding ASCII whitespace; quoting is not supported.
Table read(const std::filesystem::path& path);
Table parse(std::string_view text, std::string_view source_name = "<memory>");

/// Parses a finite double; throws InvalidArgument naming row/column otherwise.
double parse_real(std::string_view cell, std::size_t row, std::string_view column);

/// Shortest representation that parses back to the identical double.
std::string format_real(double value);

/// Writes via a temporary file and rename, so readers never see a partial file.
void write_atomic(const std::filesystem::path& path, std::string_view contents);

/// Joins cells with commas and appends a newline.
std::string join_row(const std::vector<std::string>& cells);

}  // namespace meandim::csv
