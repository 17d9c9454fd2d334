// SPDX-License-Identifier: Apache-2.0
// Copyright Contributors to the hdrforge project.

#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "hdrforge/image.hpp"
#include "hdrforge/io/bytes.hpp"
#include "hdrforge/io/ldr.hpp"

namespace hdrforge::io {

struct ManifestEntry {
    std::string path;
    double ev = 0.0;
    ExposureUnit unit = ExposureUnit::natural_log;
    friend bool operator==(const ManifestEntry &, const ManifestEntry &) = default;
};

/// Stack description: image paths (relative to base_dir unless absolute)
/// with their exposure values.
struct StackManifest {
    std::vector<ManifestEntry> entries;
    std::filesystem::path base_dir;
    friend bool operator==(const StackManifest &, const StackManifest &) = default;
};

inline const char *unit_name(ExposureUnit unit) { return unit == ExposureUnit::stops ? "stops" : "ln"; }

inline StackManifest parse_manifest(const std::string &text, const std::filesystem::path &base_dir = {}) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error &e) {
        throw ParseError(std::string("manifest is not valid JSON: ") + e.what(), e.byte);
    }
    require(doc.is_object() && doc.contains("entries") && doc["entries"].is_array(), ErrorKind::validation,
            "manifest must be an object with an 'entries' array");
    StackManifest m;
    m.base_dir = base_dir;
    std::size_t index = 0;
    for (const auto &e : doc["entries"]) {
        const std::string where = "manifest entry " + std::to_string(index++);
        require(e.is_object(), ErrorKind::validation, where + " is not an object");
        require(e.contains("path") && e["path"].is_string() && !e["path"].get<std::string>().empty(),
                ErrorKind::validation, where + ": 'path' must be a non-empty string");
        require(e.contains("ev") && e["ev"].is_number(), ErrorKind::validation, where + ": 'ev' must be a number");
        ManifestEntry entry{e["path"].get<std::string>(), e["ev"].get<double>(), ExposureUnit::natural_log};
        if (e.contains("unit")) {
            require(e["unit"].is_string(), ErrorKind::validation, where + ": 'unit' must be a string");
            const auto unit = e["unit"].get<std::string>();
            require(unit == "stops" || unit == "ln", ErrorKind::validation,
                    where + ": unit must be \"stops\" or \"ln\", got \"" + unit + "\"");
            entry.unit = unit == "stops" ? ExposureUnit::stops : ExposureUnit::natural_log;
        }
        m.entries.push_back(std::move(entry));
    }
    require(!m.entries.empty(), ErrorKind::validation, "manifest has no entries");
    for (std::size_t j = 1; j < m.entries.size(); ++j) {
        const double prev = to_natural_log(m.entries[j - 1].ev, m.entries[j - 1].unit);
        const double cur = to_natural_log(m.entries[j].ev, m.entries[j].unit);
        require(cur > prev, ErrorKind::validation,
                "manifest EVs must be strictly increasing: entry " + std::to_string(j) + " (" +
                    std::to_string(cur) + " ln) does not exceed entry " + std::to_string(j - 1) + " (" +
                    std::to_string(prev) + " ln)");
    }
    return m;
}

inline StackManifest read_manifest_file(const std::filesystem::path &path) {
    return parse_manifest(read_text(path), path.parent_path());
}

inline std::string format_manifest(const StackManifest &m) {
    nlohmann::json entries = nlohmann::json::array();
    for (const auto &e : m.entries)
        entries.push_back({{"path", e.path}, {"ev", e.ev}, {"unit", unit_name(e.unit)}});
    return nlohmann::json{{"entries", entries}}.dump(2) + "\n";
}

inline void write_manifest(const StackManifest &m, const std::filesystem::path &path) {
    write_text(path, format_manifest(m));
}

inline std::filesystem::path resolve(const StackManifest &m, const ManifestEntry &e) {
    const std::filesystem::path p(e.path);
    return p.is_absolute() ? p : m.base_dir / p;
}

/// Loads every image and normalizes EVs to natural-log units.
inline ExposureStack load_stack(const StackManifest &m) {
    ExposureStack stack;
    for (std::size_t j = 0; j < m.entries.size(); ++j) {
        const auto &e = m.entries[j];
        LdrImage img = read_ldr(resolve(m, e));
        if (!stack.images.empty())
            require(img.same_shape(stack.images.front()), ErrorKind::validation,
                    "shape mismatch: " + e.path + " is " + std::to_string(img.width()) + "x" +
                        std::to_string(img.height()) + ", expected " + std::to_string(stack.width()) + "x" +
                        std::to_string(stack.height()));
        stack.images.push_back(std::move(img));
        stack.evs.push_back(to_natural_log(e.ev, e.unit));
    }
    stack.validate();
    return stack;
}

inline ExposureStack read_manifest(const std::filesystem::path &path) { return load_stack(read_manifest_file(path)); }

} // namespace hdrforge::io
