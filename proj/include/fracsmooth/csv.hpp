#pragma once

#include <concepts>
#include <cstdio>
#include <initializer_list>
#include <ostream>
#include <string>

namespace fracsmooth {

/// Round-trip exact text for a double (17 significant digits).
inline std::string format_double(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

struct CsvCell {
  std::string text;
  CsvCell(double x) : text(format_double(x)) {}
  CsvCell(const char* s) : text(s) {}
  CsvCell(std::string s) : text(std::move(s)) {}
  template <std::integral I>
  CsvCell(I i) : text(std::to_string(i)) {}
};

inline void write_csv_row(std::ostream& out, std::initializer_list<CsvCell> cells) {
  bool first = true;
  for (const auto& c : cells) {
    if (!first) out << ',';
    out << c.text;
    first = false;
  }
  out << '\n';
}

}  // namespace fracsmooth
