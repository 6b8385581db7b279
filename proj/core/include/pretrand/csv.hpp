#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace pretrand {

// RFC-4180-style CSV: fields containing comma, quote, CR or LF are quoted,
// quotes doubled. Every exported table must survive parse(emit(x)) == x.
std::string csv_escape(const std::string& field);
void csv_write_row(std::ostream& os, const std::vector<std::string>& fields);
std::vector<std::vector<std::string>> csv_parse(const std::string& text);

// Shortest-exact float formatting (round-trips through parse_double).
std::string fmt_double(double v);
double parse_double(const std::string& s);

}  // namespace pretrand
