#ifndef ILT_LAB_CSV_HPP
#define ILT_LAB_CSV_HPP

#include <cstdio>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace iltlab {

/// CSV emitter: header row, '.' decimal point, 17 significant digits, no
/// locale. Lines starting with '#' carry the producing config and seed.
class CsvWriter {
public:
    explicit CsvWriter(const std::string& path) : out_(path) {
        if (!out_) throw std::runtime_error("cannot open output file: " + path);
        out_.imbue(std::locale::classic());
    }

    void comment(const std::string& text) { out_ << "# " << text << "\n"; }

    void header(const std::vector<std::string>& columns) {
        for (std::size_t i = 0; i < columns.size(); ++i)
            out_ << columns[i] << (i + 1 < columns.size() ? "," : "\n");
    }

    void row(const std::vector<double>& values) {
        for (std::size_t i = 0; i < values.size(); ++i)
            out_ << format(values[i]) << (i + 1 < values.size() ? "," : "\n");
    }

    void raw_row(const std::string& line) { out_ << line << "\n"; }

    static std::string format(double v) {
        char buffer[40];
        std::snprintf(buffer, sizeof(buffer), "%.17g", v);
        return buffer;
    }

private:
    std::ofstream out_;
};

}  // namespace iltlab

#endif
