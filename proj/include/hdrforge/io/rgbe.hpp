// SPDX-License-Identifier: Apache-2.0
// Copyright Contributors to the hdrforge project.

#pragma once

#include <array>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <string>

#include "hdrforge/image.hpp"
#include "hdrforge/io/bytes.hpp"

namespace hdrforge::io {

using Rgbe = std::array<std::uint8_t, 4>;

/// Shared-exponent encoding: with max component m = f * 2^(e - 128),
/// f in [0.5, 1), each mantissa is floor(component * 256 / 2^(e - 128)).
inline Rgbe encode_rgbe(double r, double g, double b) {
    const double m = std::max({r, g, b});
    if (!(m > 1e-32))
        return {0, 0, 0, 0};
    int e = 0;
    std::frexp(m, &e);
    require(e + 128 <= 255, ErrorKind::invalid_argument, "radiance too large for RGBE");
    const double scale = std::ldexp(256.0, -e);
    const auto mant = [scale](double c) {
        return static_cast<std::uint8_t>(std::min(255.0, std::floor(std::max(c, 0.0) * scale)));
    };
    return {mant(r), mant(g), mant(b), static_cast<std::uint8_t>(e + 128)};
}

/// Decodes to mantissa centers, (m + 0.5) * 2^(e - 136).
inline std::array<double, 3> decode_rgbe(const Rgbe &p) {
    if (p[3] == 0)
        return {0.0, 0.0, 0.0};
    const double f = std::ldexp(1.0, static_cast<int>(p[3]) - 136);
    return {(p[0] + 0.5) * f, (p[1] + 0.5) * f, (p[2] + 0.5) * f};
}

namespace detail {

inline constexpr int kMinRun = 4;
inline constexpr int kMinRleWidth = 8;
inline constexpr int kMaxRleWidth = 0x7fff;

/// Adaptive run-length encoding of one scanline, component by component,
/// following the classic Radiance writer.
inline void write_rle_scanline(Bytes &out, const std::vector<Rgbe> &scan) {
    const int len = static_cast<int>(scan.size());
    out.push_back(2);
    out.push_back(2);
    out.push_back(static_cast<std::uint8_t>(len >> 8));
    out.push_back(static_cast<std::uint8_t>(len & 0xff));
    for (int i = 0; i < 4; ++i) {
        const auto at = [&](int k) { return scan[static_cast<std::size_t>(k)][static_cast<std::size_t>(i)]; };
        int cnt = 0;
        for (int j = 0; j < len; j += cnt) {
            int beg = j;
            for (; beg < len; beg += cnt) {
                for (cnt = 1; cnt < 127 && beg + cnt < len && at(beg + cnt) == at(beg); ++cnt) {
                }
                if (cnt >= kMinRun)
                    break;
            }
            if (beg - j > 1 && beg - j < kMinRun) {
                int c2 = j + 1;
                while (at(c2++) == at(j)) {
                    if (c2 == beg) { // short run
                        out.push_back(static_cast<std::uint8_t>(128 + beg - j));
                        out.push_back(at(j));
                        j = beg;
                        break;
                    }
                }
            }
            while (j < beg) { // literal
                const int c2 = std::min(beg - j, 128);
                out.push_back(static_cast<std::uint8_t>(c2));
                for (int k = 0; k < c2; ++k)
                    out.push_back(at(j++));
            }
            if (cnt >= kMinRun) {
                out.push_back(static_cast<std::uint8_t>(128 + cnt));
                out.push_back(at(beg));
            } else {
                cnt = 0;
            }
        }
    }
}

/// Flat pixels with old-style run markers (1, 1, 1, n) repeating the
/// previous pixel n << shift times.
inline void read_old_scanline(Cursor &cur, Rgbe *scan, int len, bool have_prev) {
    int shift = 0;
    int x = 0;
    while (x < len) {
        const std::size_t at = cur.offset();
        Rgbe p{cur.next("pixel"), cur.next("pixel"), cur.next("pixel"), cur.next("pixel")};
        if (p[0] == 1 && p[1] == 1 && p[2] == 1) {
            if (x == 0 && !have_prev)
                throw ParseError("run marker without a preceding pixel", at);
            const long count = static_cast<long>(p[3]) << shift;
            if (count > len - x)
                throw ParseError("old-style run overflows scanline", at);
            const Rgbe prev = scan[x - 1];
            for (long k = 0; k < count; ++k)
                scan[x++] = prev;
            shift += 8;
        } else {
            scan[x++] = p;
            shift = 0;
        }
    }
}

inline void read_scanline(Cursor &cur, Rgbe *scan, int len, bool have_prev) {
    if (len < kMinRleWidth || len > kMaxRleWidth || cur.remaining() < 4 || cur.peek() != 2) {
        read_old_scanline(cur, scan, len, have_prev);
        return;
    }
    const std::size_t start = cur.offset();
    Rgbe head{cur.next("scanline"), cur.next("scanline"), cur.next("scanline"), cur.next("scanline")};
    if (head[1] != 2 || (head[2] & 128)) {
        // A flat pixel that happens to start with 2.
        scan[0] = head;
        read_old_scanline(cur, scan + 1, len - 1, true);
        return;
    }
    if (((head[2] << 8) | head[3]) != len)
        throw ParseError("scanline length mismatch", start);
    for (int i = 0; i < 4; ++i) {
        int x = 0;
        while (x < len) {
            const std::size_t at = cur.offset();
            int code = cur.next("run code");
            if (code > 128) {
                code &= 127;
                const std::uint8_t v = cur.next("run value");
                if (x + code > len)
                    throw ParseError("run overflows scanline", at);
                while (code-- > 0)
                    scan[x++][static_cast<std::size_t>(i)] = v;
            } else {
                if (code == 0 || x + code > len)
                    throw ParseError("bad literal count in scanline", at);
                while (code-- > 0)
                    scan[x++][static_cast<std::size_t>(i)] = cur.next("literal");
            }
        }
    }
}

} // namespace detail

inline Bytes encode_rgbe_file(const HdrImage &hdr) {
    Bytes out;
    append(out, "#?RADIANCE\nFORMAT=32-bit_rle_rgbe\n\n");
    append(out, "-Y " + std::to_string(hdr.height()) + " +X " + std::to_string(hdr.width()) + "\n");
    const int w = hdr.width();
    std::vector<Rgbe> scan(static_cast<std::size_t>(w));
    for (int y = 0; y < hdr.height(); ++y) {
        for (int x = 0; x < w; ++x)
            scan[static_cast<std::size_t>(x)] = encode_rgbe(hdr.at(x, y, 0), hdr.at(x, y, 1), hdr.at(x, y, 2));
        if (w >= detail::kMinRleWidth && w <= detail::kMaxRleWidth) {
            detail::write_rle_scanline(out, scan);
        } else {
            for (const auto &p : scan)
                out.insert(out.end(), p.begin(), p.end());
        }
    }
    return out;
}

inline HdrImage decode_rgbe_file(const Bytes &bytes) {
    Cursor cur(bytes);
    const std::string magic = cur.line("header");
    if (magic.rfind("#?", 0) != 0)
        throw ParseError("missing #?RADIANCE signature", 0);
    for (;;) {
        const std::string line = cur.line("header");
        if (line.empty())
            break;
        if (line.rfind("FORMAT=", 0) == 0 && line != "FORMAT=32-bit_rle_rgbe")
            fail(ErrorKind::unsupported_format, "unsupported pixel format '" + line.substr(7) + "'");
    }
    const std::size_t res_at = cur.offset();
    const std::string res = cur.line("resolution");
    int h = 0, w = 0;
    char tail = 0;
    char ya = 0, yc = 0, xa = 0, xc = 0;
    if (std::sscanf(res.c_str(), "%c%c %d %c%c %d%c", &ya, &yc, &h, &xa, &xc, &w, &tail) != 6)
        throw ParseError("malformed resolution line", res_at);
    if (ya != '-' || yc != 'Y' || xa != '+' || xc != 'X')
        fail(ErrorKind::unsupported_format, "unsupported image orientation '" + res + "'");
    if (w <= 0 || h <= 0)
        throw ParseError("non-positive resolution", res_at);

    std::vector<Rgbe> pixels(static_cast<std::size_t>(w) * static_cast<std::size_t>(h));
    for (int y = 0; y < h; ++y)
        detail::read_scanline(cur, pixels.data() + static_cast<std::size_t>(y) * w, w, y > 0);
    std::vector<double> data(pixels.size() * 3);
    for (std::size_t p = 0; p < pixels.size(); ++p) {
        const auto rgb = decode_rgbe(pixels[p]);
        for (std::size_t c = 0; c < 3; ++c)
            data[p * 3 + c] = rgb[c];
    }
    return HdrImage(w, h, std::move(data));
}

inline HdrImage read_rgbe(const std::filesystem::path &path) { return decode_rgbe_file(read_file(path)); }

inline void write_rgbe(const HdrImage &hdr, const std::filesystem::path &path) {
    write_file(path, encode_rgbe_file(hdr));
}

} // namespace hdrforge::io
