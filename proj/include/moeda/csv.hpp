#pragma once

#include <cstdio>
#include <fstream>
#include <istream>
#include <stdexcept>
#include <string>
#include <vector>

namespace moeda {

struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;
};

inline std::vector<std::string> split_csv_fields(const std::string& line) {
    std::vector<std::string> fields;
    std::size_t start = 0;
    while (true) {
        const std::size_t comma = line.find(',', start);
        if (comma == std::string::npos) {
            fields.push_back(line.substr(start));
            return fields;
        }
        fields.push_back(line.substr(start, comma - start));
        start = comma + 1;
    }
}

// Parses comma-separated text with a header row.  Fields are plain (no
// quoting; none of the writers in this library emit commas inside fields),
// and every data row must match the header width.
inline CsvTable read_csv(std::istream& is) {
    CsvTable table;
    std::string line;
    if (!std::getline(is, line)) throw std::invalid_argument("read_csv: missing header row");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    table.header = split_csv_fields(line);
    while (std::getline(is, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::vector<std::string> fields = split_csv_fields(line);
        if (fields.size() != table.header.size())
            throw std::invalid_argument("read_csv: row width differs from header");
        table.rows.push_back(std::move(fields));
    }
    return table;
}

// Writes text to path through a temporary file plus rename, so a reader never
// observes a partially written file.  The path "-" streams to stdout instead.
inline void write_text_atomic(const std::string& path, const std::string& text) {
    if (path == "-") {
        if (std::fwrite(text.data(), 1, text.size(), stdout) != text.size())
            throw std::runtime_error("write_text_atomic: stdout write failed");
        std::fflush(stdout);
        return;
    }
    const std::string tmp = path + ".tmp";
    {
        std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
        if (!os) throw std::runtime_error("write_text_atomic: cannot open " + tmp);
        os.write(text.data(), static_cast<std::streamsize>(text.size()));
        os.flush();
        if (!os) throw std::runtime_error("write_text_atomic: write failed for " + tmp);
    }
    if (std::rename(tmp.c_str(), path.c_str()) != 0) {
        std::remove(tmp.c_str());
        throw std::runtime_error("write_text_atomic: rename failed for " + path);
    }
}

}  // namespace moeda
