#ifndef VISHAPE_IO_HPP
#define VISHAPE_IO_HPP

#include <string>
#include <vector>

namespace vishape {

// 17 significant digits, enough to round-trip a double.
std::string format_float(double v);

void write_text_file(const std::string& path, const std::string& content);
std::string read_text_file(const std::string& path);

// Rows of a CSV table; the writer adds no quoting (values are numeric).
struct CsvTable {
    std::string header;
    std::vector<std::vector<double>> rows;
    std::string to_string() const;
};

} // namespace vishape

#endif
