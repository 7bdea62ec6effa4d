#pragma once

#include <string>
#include <vector>

namespace scmgame::csv {

struct Table {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    int column(const std::string& name) const;  // -1 if absent
};

// Reads a comma-separated file with a mandatory header row. Fields may not
// contain commas or quotes; that is all the formats in this project need.
Table read_file(const std::string& path);
Table parse(const std::string& text);

void write_file(const std::string& path, const Table& table);

std::string format_double(double v);

}  // namespace scmgame::csv
