#include "noisyrank/csv.hpp"

#include <cmath>
#include <stdexcept>

#include <fmt/format.h>

namespace noisyrank {

std::string format_real(double x) {
  if (std::isnan(x)) return {};
  return fmt::format("{}", x);
}

std::string csv_escape(std::string_view field) {
  if (field.find_first_of(",\"\r\n") == std::string_view::npos) return std::string(field);
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

CsvWriter::CsvWriter(const std::filesystem::path& path) : out_(path, std::ios::binary) {
  if (!out_) throw std::runtime_error("cannot open " + path.string() + " for writing");
}

void CsvWriter::row(const std::vector<std::string>& fields) {
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i) out_ << ',';
    out_ << csv_escape(fields[i]);
  }
  out_ << "\r\n";
}

}  // namespace noisyrank
