#pragma once

#include <cstdio>
#include <string>
#include <vector>

namespace trajdiv {

// Shortest text form that round-trips an IEEE double exactly.
inline std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::vector<std::string> split(const std::string& line, char sep);

// strtod with full-string validation; throws with context on failure.
double parse_double(const std::string& s, const std::string& context);
long long parse_int(const std::string& s, const std::string& context);

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& content);

}  // namespace trajdiv
