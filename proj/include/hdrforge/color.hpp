// SPDX-License-Identifier: Apache-2.0
// Copyright Contributors to the hdrforge project.

#pragma once

#include <array>
#include <cmath>

#include "hdrforge/image.hpp"

namespace hdrforge {

/// BT.709 luma weights.
inline constexpr std::array<double, 3> kBt709{0.2126, 0.7152, 0.0722};

inline double luminance(double r, double g, double b) {
    return kBt709[0] * r + kBt709[1] * g + kBt709[2] * b;
}

/// Weighted channel sum into a single-channel plane.
template <typename Kind>
Field grayscale(const Image<Kind> &img, const std::array<double, 3> &weights = kBt709) {
    Field out(img.width(), img.height(), 1);
    for (std::size_t p = 0; p < img.pixel_count(); ++p) {
        double y = 0.0;
        for (int c = 0; c < 3; ++c)
            y += weights[static_cast<std::size_t>(c)] * static_cast<double>(img[p * 3 + static_cast<std::size_t>(c)]);
        out.set(p, y);
    }
    return out;
}

/// Per-pixel BT.709 luminance of linear radiance.
inline Field luminance(const HdrImage &hdr) { return grayscale(hdr); }

inline double srgb_encode(double linear) {
    if (linear <= 0.0031308)
        return 12.92 * linear;
    return 1.055 * std::pow(linear, 1.0 / 2.4) - 0.055;
}

inline double srgb_decode(double encoded) {
    if (encoded <= 0.04045)
        return encoded / 12.92;
    return std::pow((encoded + 0.055) / 1.055, 2.4);
}

} // namespace hdrforge
