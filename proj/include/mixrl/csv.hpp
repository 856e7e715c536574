#pragma once

#include <cstdio>
#include <fstream>
#include <initializer_list>
#include <sstream>
#include <string>
#include <vector>

#include "mixrl/errors.hpp"

namespace mixrl {

inline constexpr const char* kCsvSchemaTag = "# mixrl csv v1";

// Formats a double the way every file in this project does: shortest text
// that round-trips, so identical values serialize identically.
inline std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  // Trim to the shortest representation that still round-trips.
  for (int prec = 1; prec < 17; ++prec) {
    char s[40];
    std::snprintf(s, sizeof(s), "%.*g", prec, v);
    if (std::stod(s) == v) return s;
  }
  return buf;
}

// Minimal CSV writer: schema tag comment, one header, raw rows. Fields are
// written verbatim; callers keep commas out of their labels.
class CsvWriter {
 public:
  CsvWriter(const std::string& path, const std::vector<std::string>& header)
      : out_(path) {
    if (!out_) throw Error("cannot open csv for writing: " + path);
    out_ << kCsvSchemaTag << "\n";
    write_row_(header);
  }

  void row(const std::vector<std::string>& fields) { write_row_(fields); }

  static std::string num(double v) { return fmt_double(v); }
  static std::string num(long v) { return std::to_string(v); }
  static std::string num(int v) { return std::to_string(v); }

 private:
  void write_row_(const std::vector<std::string>& fields) {
    for (size_t i = 0; i < fields.size(); ++i) {
      if (i) out_ << ",";
      out_ << fields[i];
    }
    out_ << "\n";
  }
  std::ofstream out_;
};

}  // namespace mixrl
