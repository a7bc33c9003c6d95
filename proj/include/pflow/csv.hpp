#ifndef PFLOW_CSV_HPP
#define PFLOW_CSV_HPP

#include <fstream>
#include <string>
#include <vector>

namespace pflow {

// General format with 17 significant digits; "nan", "inf", "-inf".
std::string format_number(double v);

// Comma-separated rows terminated by '\n' regardless of platform.
class CsvWriter {
public:
    explicit CsvWriter(const std::string& path);

    void row(const std::vector<std::string>& cells);

private:
    std::ofstream out_;
    std::string path_;
};

}  // namespace pflow

#endif  // PFLOW_CSV_HPP
