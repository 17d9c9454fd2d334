// SPDX-License-Identifier: Apache-2.0
// Copyright Contributors to the hdrforge project.

#pragma once

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <optional>
#include <string>

#include "hdrforge/calibration.hpp"
#include "hdrforge/io/bytes.hpp"

namespace hdrforge::io {

inline constexpr const char *kCrfHeader = "z,g_r,g_g,g_b";

/// CSV table: header line then one row per intensity, 17 significant digits.
inline std::string format_crf(const ResponseCurve &crf) {
    crf.validate();
    std::string out = std::string(kCrfHeader) + "\n";
    char buf[128];
    for (int z = 0; z < kLevels; ++z) {
        const auto i = static_cast<std::size_t>(z);
        std::snprintf(buf, sizeof buf, "%d,%.17g,%.17g,%.17g\n", z, crf.g[0][i], crf.g[1][i], crf.g[2][i]);
        out += buf;
    }
    return out;
}

/// The anchor is not stored; it is recovered as the row whose three values
/// are zero, preferring the default anchor when several rows qualify.
inline ResponseCurve parse_crf(const std::string &text) {
    ResponseCurve crf;
    std::size_t pos = 0;
    const auto next_line = [&](std::size_t &start) -> std::optional<std::string> {
        if (pos >= text.size())
            return std::nullopt;
        start = pos;
        std::size_t nl = text.find('\n', pos);
        if (nl == std::string::npos)
            nl = text.size();
        std::string line = text.substr(pos, nl - pos);
        pos = nl + 1;
        if (!line.empty() && line.back() == '\r')
            line.pop_back();
        return line;
    };
    std::size_t start = 0;
    const auto header = next_line(start);
    if (!header || *header != kCrfHeader)
        throw ParseError("expected header '" + std::string(kCrfHeader) + "'", 0);

    int rows = 0;
    std::optional<std::string> line;
    while ((line = next_line(start))) {
        if (line->empty() && pos >= text.size())
            break;
        if (rows >= kLevels)
            throw ParseError("more than 256 rows", start);
        const char *p = line->c_str();
        char *end = nullptr;
        const long z = std::strtol(p, &end, 10);
        if (end == p || *end != ',' || z != rows)
            throw ParseError("row " + std::to_string(rows) + ": bad intensity column", start);
        for (int c = 0; c < 3; ++c) {
            p = end + 1;
            const double v = std::strtod(p, &end);
            const char expect = c == 2 ? '\0' : ',';
            if (end == p || *end != expect)
                throw ParseError("row " + std::to_string(rows) + ": bad value in column " + std::to_string(c + 1),
                                 start);
            crf.g[static_cast<std::size_t>(c)][static_cast<std::size_t>(rows)] = v;
        }
        ++rows;
    }
    if (rows != kLevels)
        throw ParseError("expected 256 rows, found " + std::to_string(rows), text.size());

    const auto zero_row = [&](int z) {
        const auto i = static_cast<std::size_t>(z);
        return crf.g[0][i] == 0.0 && crf.g[1][i] == 0.0 && crf.g[2][i] == 0.0;
    };
    std::optional<int> anchor;
    if (zero_row(kDefaultAnchor))
        anchor = kDefaultAnchor;
    for (int z = 0; z < kLevels && !anchor; ++z)
        if (zero_row(z))
            anchor = z;
    if (!anchor)
        throw ParseError("no anchor row (all three values zero)", text.size());
    crf.anchor_index = *anchor;
    return crf;
}

inline ResponseCurve read_crf(const std::filesystem::path &path) { return parse_crf(read_text(path)); }

inline void write_crf(const ResponseCurve &crf, const std::filesystem::path &path) {
    write_text(path, format_crf(crf));
}

} // namespace hdrforge::io
