#pragma once

#include <cstdio>
#include <string>
#include <vector>

namespace grainstat::cli {

// Fixed column order, 17 significant digits, LF line endings: two runs with
// the same numbers produce the same bytes.
inline std::string format_csv(const std::vector<std::string>& header,
                              const std::vector<std::vector<double>>& rows) {
    std::string out;
    for (std::size_t i = 0; i < header.size(); ++i) {
        if (i) out += ',';
        out += header[i];
    }
    out += '\n';
    char buf[64];
    for (const auto& row : rows) {
        for (std::size_t i = 0; i < row.size(); ++i) {
            if (i) out += ',';
            std::snprintf(buf, sizeof buf, "%.17g", row[i]);
            out += buf;
        }
        out += '\n';
    }
    return out;
}

}  // namespace grainstat::cli
