// SPDX-License-Identifier: Apache-2.0
// Copyright Contributors to the hdrforge project.

#pragma once

#include <cctype>
#include <cstring>
#include <filesystem>
#include <string>

#include <png.h>

#include "hdrforge/image.hpp"
#include "hdrforge/io/bytes.hpp"

namespace hdrforge::io {

// ---------------------------------------------------------------------------
// Binary PPM (P6, maxval 255)

inline Bytes encode_ppm(const LdrImage &img) {
    Bytes out;
    append(out, "P6\n" + std::to_string(img.width()) + " " + std::to_string(img.height()) + "\n255\n");
    out.insert(out.end(), img.values().begin(), img.values().end());
    return out;
}

namespace detail {

inline void skip_ppm_space(Cursor &cur) {
    while (!cur.done()) {
        const std::uint8_t c = cur.peek();
        if (c == '#') {
            while (!cur.done() && cur.next("comment") != '\n') {
            }
        } else if (std::isspace(c)) {
            cur.next("whitespace");
        } else {
            return;
        }
    }
}

inline long read_ppm_int(Cursor &cur, const char *what) {
    skip_ppm_space(cur);
    const std::size_t at = cur.offset();
    long v = 0;
    int digits = 0;
    while (!cur.done() && std::isdigit(cur.peek())) {
        v = v * 10 + (cur.next(what) - '0');
        if (++digits > 9)
            throw ParseError(std::string("oversized ") + what, at);
    }
    if (digits == 0)
        throw ParseError(std::string("expected ") + what, at);
    return v;
}

} // namespace detail

inline LdrImage decode_ppm(const Bytes &bytes) {
    Cursor cur(bytes);
    const std::uint8_t m0 = cur.next("magic");
    const std::uint8_t m1 = cur.next("magic");
    if (m0 != 'P')
        throw ParseError("not a PNM file", 0);
    if (m1 != '6')
        fail(ErrorKind::unsupported_format, std::string("unsupported PNM variant P") + static_cast<char>(m1));
    const long w = detail::read_ppm_int(cur, "width");
    const long h = detail::read_ppm_int(cur, "height");
    const long maxval = detail::read_ppm_int(cur, "maxval");
    if (maxval != 255)
        fail(ErrorKind::unsupported_format, "PPM maxval " + std::to_string(maxval) + " (only 255 is supported)");
    if (w <= 0 || h <= 0)
        throw ParseError("non-positive PPM dimensions", cur.offset());
    const std::uint8_t sep = cur.next("header terminator");
    if (!std::isspace(sep))
        throw ParseError("missing whitespace after maxval", cur.offset() - 1);
    const std::size_t need = static_cast<std::size_t>(w) * static_cast<std::size_t>(h) * 3;
    if (cur.remaining() < need)
        throw ParseError("truncated PPM pixel data", bytes.size());
    std::vector<std::uint8_t> data(bytes.begin() + static_cast<std::ptrdiff_t>(cur.offset()),
                                   bytes.begin() + static_cast<std::ptrdiff_t>(cur.offset() + need));
    return LdrImage(static_cast<int>(w), static_cast<int>(h), std::move(data));
}

// ---------------------------------------------------------------------------
// PNG (8-bit RGB) through libpng's simplified API

inline LdrImage read_png(const std::filesystem::path &path) {
    png_image image;
    std::memset(&image, 0, sizeof image);
    image.version = PNG_IMAGE_VERSION;
    if (!png_image_begin_read_from_file(&image, path.string().c_str())) {
        const std::string msg = image.message;
        png_image_free(&image);
        if (!std::filesystem::exists(path))
            fail(ErrorKind::io, "cannot open " + path.string());
        fail(ErrorKind::unsupported_format, "cannot decode PNG " + path.string() + ": " + msg);
    }
    if (image.format & (PNG_FORMAT_FLAG_LINEAR | PNG_FORMAT_FLAG_ALPHA)) {
        png_image_free(&image);
        fail(ErrorKind::unsupported_format, "only 8-bit PNG without alpha is supported");
    }
    image.format = PNG_FORMAT_RGB;
    std::vector<std::uint8_t> data(PNG_IMAGE_SIZE(image));
    if (!png_image_finish_read(&image, nullptr, data.data(), 0, nullptr)) {
        const std::string msg = image.message;
        png_image_free(&image);
        fail(ErrorKind::unsupported_format, "cannot decode PNG " + path.string() + ": " + msg);
    }
    return LdrImage(static_cast<int>(image.width), static_cast<int>(image.height), std::move(data));
}

inline void write_png(const LdrImage &img, const std::filesystem::path &path) {
    png_image image;
    std::memset(&image, 0, sizeof image);
    image.version = PNG_IMAGE_VERSION;
    image.width = static_cast<png_uint_32>(img.width());
    image.height = static_cast<png_uint_32>(img.height());
    image.format = PNG_FORMAT_RGB;
    if (!png_image_write_to_file(&image, path.string().c_str(), 0, img.values().data(), 0, nullptr)) {
        const std::string msg = image.message;
        png_image_free(&image);
        fail(ErrorKind::io, "cannot write PNG " + path.string() + ": " + msg);
    }
}

// ---------------------------------------------------------------------------
// Dispatch on extension

inline LdrImage read_ldr(const std::filesystem::path &path) {
    const std::string ext = lower_extension(path);
    if (ext == ".png")
        return read_png(path);
    if (ext == ".ppm" || ext == ".pnm")
        return decode_ppm(read_file(path));
    fail(ErrorKind::unsupported_format, "unknown LDR extension '" + ext + "' (expected .ppm or .png)");
}

inline void write_ldr(const LdrImage &img, const std::filesystem::path &path) {
    const std::string ext = lower_extension(path);
    if (ext == ".png")
        return write_png(img, path);
    if (ext == ".ppm" || ext == ".pnm")
        return write_file(path, encode_ppm(img));
    fail(ErrorKind::unsupported_format, "unknown LDR extension '" + ext + "' (expected .ppm or .png)");
}

} // namespace hdrforge::io
