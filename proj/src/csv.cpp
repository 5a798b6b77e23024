#include "metacal/csv.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "metacal/errors.hpp"

namespace metacal::csv {

Table read(std::istream& in) {
    Table table;
    std::string content((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    std::vector<std::string> row;
    std::string field;
    bool in_quotes = false;
    bool at_line_start = true;
    bool line_is_comment = false;
    std::string comment_line;

    auto end_field = [&]() {
        row.push_back(field);
        field.clear();
    };
    auto end_row = [&]() {
        if (line_is_comment) {
            table.comments.push_back(comment_line);
            comment_line.clear();
            line_is_comment = false;
        } else if (!row.empty() || !field.empty()) {
            end_field();
            table.rows.push_back(row);
            row.clear();
        }
        at_line_start = true;
    };

    for (std::size_t i = 0; i < content.size(); ++i) {
        const char c = content[i];
        if (line_is_comment) {
            if (c == '\n') {
                end_row();
            } else if (c != '\r') {
                comment_line.push_back(c);
            }
            continue;
        }
        if (in_quotes) {
            if (c == '"') {
                if (i + 1 < content.size() && content[i + 1] == '"') {
                    field.push_back('"');
                    ++i;
                } else {
                    in_quotes = false;
                }
            } else {
                field.push_back(c);
            }
            continue;
        }
        if (at_line_start && c == '#' && row.empty() && field.empty()) {
            line_is_comment = true;
            continue;
        }
        at_line_start = false;
        switch (c) {
            case '"':
                in_quotes = true;
                break;
            case ',':
                end_field();
                break;
            case '\r':
                break;
            case '\n':
                end_row();
                break;
            default:
                field.push_back(c);
        }
    }
    if (in_quotes) throw DataError("csv: unterminated quoted field");
    if (line_is_comment || !row.empty() || !field.empty()) end_row();
    return table;
}

Table read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("csv: cannot open " + path);
    return read(in);
}

std::string escape(const std::string& field) {
    if (field.find_first_of(",\"\n\r") == std::string::npos && !field.starts_with('#')) {
        return field;
    }
    std::string out = "\"";
    for (char c : field) {
        if (c == '"') out += "\"\"";
        else out.push_back(c);
    }
    out.push_back('"');
    return out;
}

void write_row(std::ostream& out, const std::vector<std::string>& fields) {
    for (std::size_t i = 0; i < fields.size(); ++i) {
        if (i) out << ',';
        out << escape(fields[i]);
    }
    out << '\n';
}

std::string format_double(double v) {
    if (std::isnan(v)) return "NA";
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.12g", v);
    return buf;
}

}  // namespace metacal::csv
