// SPDX-License-Identifier: Apache-2.0
// Copyright Contributors to the hdrforge project.

#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <string>
#include <vector>

#include "hdrforge/error.hpp"

namespace hdrforge::io {

using Bytes = std::vector<std::uint8_t>;

inline Bytes read_file(const std::filesystem::path &path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        fail(ErrorKind::io, "cannot open " + path.string());
    return Bytes(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

inline void write_file(const std::filesystem::path &path, const Bytes &bytes) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out)
        fail(ErrorKind::io, "cannot create " + path.string());
    out.write(reinterpret_cast<const char *>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out)
        fail(ErrorKind::io, "write failed for " + path.string());
}

inline void write_text(const std::filesystem::path &path, const std::string &text) {
    write_file(path, Bytes(text.begin(), text.end()));
}

inline std::string read_text(const std::filesystem::path &path) {
    const Bytes b = read_file(path);
    return std::string(b.begin(), b.end());
}

inline void append(Bytes &out, const std::string &s) { out.insert(out.end(), s.begin(), s.end()); }

/// Sequential reader that tracks its byte offset for error reporting.
class Cursor {
  public:
    explicit Cursor(const Bytes &bytes) : bytes_(bytes) {}

    std::size_t offset() const noexcept { return pos_; }
    bool done() const noexcept { return pos_ >= bytes_.size(); }
    std::size_t remaining() const noexcept { return bytes_.size() - pos_; }

    std::uint8_t next(const char *what) {
        if (done())
            throw ParseError(std::string("unexpected end of data reading ") + what, pos_);
        return bytes_[pos_++];
    }
    std::uint8_t peek() const { return bytes_[pos_]; }

    /// Line without its terminating '\n'.
    std::string line(const char *what) {
        std::string s;
        for (;;) {
            const std::uint8_t c = next(what);
            if (c == '\n')
                return s;
            s.push_back(static_cast<char>(c));
        }
    }

  private:
    const Bytes &bytes_;
    std::size_t pos_ = 0;
};

inline std::string lower_extension(const std::filesystem::path &path) {
    std::string ext = path.extension().string();
    for (auto &ch : ext)
        ch = static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
    return ext;
}

} // namespace hdrforge::io
