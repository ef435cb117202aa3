#pragma once

#include <string>
#include <vector>

namespace schro {

// Row-wise CSV tokens; '#'-prefixed lines are returned separately as comments.
struct CsvTable {
  std::vector<std::string> comments;
  std::vector<std::vector<std::string>> rows;
};

CsvTable read_csv(const std::string& path);
CsvTable parse_csv(const std::string& text);

// Round-trip-safe formatting for doubles ("%.17g").
std::string format_double(double v);

// Writes to <path>.tmp.<pid> then renames, so failures leave no partial file.
void write_file_atomic(const std::string& path, const std::string& content);

std::string read_file(const std::string& path);

}  // namespace schro
