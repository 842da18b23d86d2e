#pragma once

#include <cstdio>
#include <fstream>
#include <string>

#include "gradsample/config.hpp"
#include "gradsample/error.hpp"

namespace gradsample {

// Shortest round-trip-exact decimal for a double.
inline std::string format_f64(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

// Every emitted CSV starts with a commented echo of the effective config,
// so a run can be reproduced from its own output.
inline void write_config_echo(std::ostream& out, const KeyValueConfig& cfg) {
    out << "# config\n";
    for (const auto& [key, value] : cfg.entries())
        out << "# " << key << "=" << value << "\n";
    out << "# end config\n";
}

class CsvWriter {
public:
    CsvWriter(const std::string& path, const KeyValueConfig& echo,
              const std::string& header)
        : out_(path) {
        if (!out_) throw ParseError("csv: cannot open for writing: " + path);
        write_config_echo(out_, echo);
        out_ << header << "\n";
    }

    std::ostream& stream() { return out_; }

    void row(const std::string& line) { out_ << line << "\n"; }

    void close() {
        out_.flush();
        if (!out_) throw ParseError("csv: write failed");
        out_.close();
    }

private:
    std::ofstream out_;
};

} // namespace gradsample
