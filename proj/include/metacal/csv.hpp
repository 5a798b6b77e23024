#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace metacal::csv {

// Minimal RFC-4180 reading/writing. Quoted fields may contain commas,
// escaped quotes, and newlines. Lines starting with '#' outside of a quoted
// field are treated as comments and collected separately.
struct Table {
    std::vector<std::string> comments;           // leading '#' lines, verbatim
    std::vector<std::vector<std::string>> rows;  // first row is the header
};

Table read(std::istream& in);
Table read_file(const std::string& path);

std::string escape(const std::string& field);
void write_row(std::ostream& out, const std::vector<std::string>& fields);

// Fixed-format float used in all CSV/SVG emissions so identical inputs
// produce byte-identical artifacts.
std::string format_double(double v);

}  // namespace metacal::csv
