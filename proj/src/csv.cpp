#include "pflow/csv.hpp"

#include <charconv>
#include <cmath>
#include <stdexcept>

namespace pflow {

std::string format_number(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 17);
    return std::string(buf, res.ptr);
}

CsvWriter::CsvWriter(const std::string& path) : out_(path, std::ios::binary | std::ios::trunc), path_(path) {
    if (!out_) throw std::runtime_error("cannot open " + path + " for writing");
}

void CsvWriter::row(const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) {
        if (i) out_.put(',');
        out_ << cells[i];
    }
    out_.put('\n');
    if (!out_) throw std::runtime_error("write to " + path_ + " failed");
}

}  // namespace pflow
