#pragma once

#include <filesystem>
#include <fstream>
#include <string>
#include <string_view>
#include <vector>

namespace noisyrank {

/// Formats a double as the shortest string that round-trips; NaN becomes "".
std::string format_real(double x);

/// RFC-4180 writer: CRLF record terminators, fields quoted only when they
/// contain a comma, quote, CR or LF.
class CsvWriter {
 public:
  explicit CsvWriter(const std::filesystem::path& path);

  void row(const std::vector<std::string>& fields);

 private:
  std::ofstream out_;
};

std::string csv_escape(std::string_view field);

}  // namespace noisyrank
