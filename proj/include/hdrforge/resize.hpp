// SPDX-License-Identifier: Apache-2.0
// Copyright Contributors to the hdrforge project.

#pragma once

#include <cmath>
#include <numbers>
#include <vector>

#include "hdrforge/image.hpp"

namespace hdrforge {

inline constexpr int kLanczosLobes = 3;

/// Lanczos window; exactly 0 at nonzero integers and exactly 1 at 0.
inline double lanczos_kernel(double x, int lobes = kLanczosLobes) {
    if (x == 0.0)
        return 1.0;
    if (std::abs(x) >= lobes || x == std::floor(x))
        return 0.0;
    const double px = std::numbers::pi * x;
    return lobes * std::sin(px) * std::sin(px / lobes) / (px * px);
}

namespace detail {

struct Tap {
    int source;
    double weight;
};

/// Normalized taps for each output sample along one axis. Sample centers sit
/// at half-integers; the kernel is widened by the minification factor and
/// source indices are clamped to the edge.
inline std::vector<std::vector<Tap>> lanczos_taps(int in_size, int out_size) {
    const double ratio = static_cast<double>(in_size) / static_cast<double>(out_size);
    const double stretch = std::max(1.0, ratio);
    const double support = kLanczosLobes * stretch;
    std::vector<std::vector<Tap>> taps(static_cast<std::size_t>(out_size));
    for (int i = 0; i < out_size; ++i) {
        const double center = (i + 0.5) * ratio - 0.5;
        const int lo = static_cast<int>(std::ceil(center - support));
        const int hi = static_cast<int>(std::floor(center + support));
        auto &row = taps[static_cast<std::size_t>(i)];
        double total = 0.0;
        for (int k = lo; k <= hi; ++k) {
            const double w = lanczos_kernel((k - center) / stretch);
            if (w == 0.0)
                continue;
            row.push_back({std::clamp(k, 0, in_size - 1), w});
            total += w;
        }
        for (auto &t : row)
            t.weight /= total;
    }
    return taps;
}

template <typename Kind> typename Kind::value_type finish_sample(double v) {
    if constexpr (std::is_same_v<Kind, LdrKind>)
        return quantize_value(v);
    else if constexpr (std::is_same_v<Kind, RelaxedKind>)
        return std::clamp(v, 0.0, 255.0);
    else if constexpr (std::is_same_v<Kind, HdrKind>)
        return std::max(v, 0.0); // negative lobes can undershoot
    else
        return v;
}

} // namespace detail

/// Separable Lanczos-3 resampling with edge clamping. LDR results are rounded
/// half away from zero and clamped; HDR results are clamped at zero.
template <typename Kind> Image<Kind> resize_lanczos(const Image<Kind> &img, int out_w, int out_h) {
    require(out_w >= 1 && out_h >= 1, ErrorKind::invalid_argument, "resize target dimensions must be positive");
    const int ch = img.channels();
    const auto htaps = detail::lanczos_taps(img.width(), out_w);
    const auto vtaps = detail::lanczos_taps(img.height(), out_h);

    std::vector<double> tmp(static_cast<std::size_t>(out_w) * static_cast<std::size_t>(img.height()) *
                            static_cast<std::size_t>(ch));
    for (int y = 0; y < img.height(); ++y)
        for (int x = 0; x < out_w; ++x)
            for (int c = 0; c < ch; ++c) {
                double acc = 0.0;
                for (const auto &t : htaps[static_cast<std::size_t>(x)])
                    acc += t.weight * static_cast<double>(img.at(t.source, y, c));
                tmp[(static_cast<std::size_t>(y) * out_w + x) * ch + c] = acc;
            }

    std::vector<typename Kind::value_type> out(static_cast<std::size_t>(out_w) * out_h * ch);
    for (int y = 0; y < out_h; ++y)
        for (int x = 0; x < out_w; ++x)
            for (int c = 0; c < ch; ++c) {
                double acc = 0.0;
                for (const auto &t : vtaps[static_cast<std::size_t>(y)])
                    acc += t.weight * tmp[(static_cast<std::size_t>(t.source) * out_w + x) * ch + c];
                out[(static_cast<std::size_t>(y) * out_w + x) * ch + c] = detail::finish_sample<Kind>(acc);
            }
    return Image<Kind>(out_w, out_h, ch, std::move(out));
}

} // namespace hdrforge
