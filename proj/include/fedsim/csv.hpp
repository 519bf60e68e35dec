#pragma once

#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace fedsim {

/// Round-trippable double formatting (shortest exact representation would
/// need C++17 to_chars with libc support; %.17g is stable and lossless).
inline std::string csv_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return std::string(buf);
}

inline std::string join(const std::vector<std::string>& cells, char sep) {
    std::ostringstream os;
    for (std::size_t i = 0; i < cells.size(); ++i) {
        if (i) os << sep;
        os << cells[i];
    }
    return os.str();
}

class CsvWriter {
public:
    explicit CsvWriter(const std::string& path) : out_(path) {
        if (!out_) throw std::runtime_error("cannot open for writing: " + path);
    }

    void row(const std::vector<std::string>& cells) {
        out_ << join(cells, ',') << "\n";
        if (!out_) throw std::runtime_error("write failure");
    }

private:
    std::ofstream out_;
};

}  // namespace fedsim
