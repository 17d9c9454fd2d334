// SPDX-License-Identifier: Apache-2.0
// Copyright Contributors to the hdrforge project.

#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <utility>
#include <vector>

#include "hdrforge/color.hpp"
#include "hdrforge/image.hpp"

namespace hdrforge {

struct ReinhardOptions {
    double key = 0.18;
    /// Luminance mapped to white; defaults to the largest scaled luminance.
    std::optional<double> white;
    double delta = 1e-6;
};

/// Display luminance of the extended global operator.
inline double reinhard_curve(double scaled, double white) {
    if (white <= 0.0)
        return 0.0;
    return scaled * (1.0 + scaled / (white * white)) / (1.0 + scaled);
}

/// Global Reinhard operator on linear radiance; returns display-linear RGB
/// (channel ratios preserved, not yet clamped or encoded).
inline std::vector<double> reinhard_linear(const HdrImage &hdr, const ReinhardOptions &opt = {}) {
    require(opt.key > 0.0, ErrorKind::invalid_argument, "Reinhard key must be > 0");
    const Field lum = luminance(hdr);
    double log_sum = 0.0;
    for (double L : lum.values())
        log_sum += std::log(opt.delta + L);
    const double log_avg = std::exp(log_sum / static_cast<double>(lum.size()));
    const double scale = opt.key / log_avg;

    double white = 0.0;
    if (opt.white) {
        require(*opt.white > 0.0, ErrorKind::invalid_argument, "Reinhard white point must be > 0");
        white = *opt.white;
    } else {
        for (double L : lum.values())
            white = std::max(white, scale * L);
    }

    std::vector<double> out(hdr.size());
    for (std::size_t p = 0; p < lum.size(); ++p) {
        const double L = lum[p];
        const double ratio = L > 0.0 ? reinhard_curve(scale * L, white) / L : 0.0;
        for (std::size_t c = 0; c < 3; ++c)
            out[p * 3 + c] = hdr[p * 3 + c] * ratio;
    }
    return out;
}

/// Reinhard tone mapping followed by sRGB encoding and 8-bit quantization.
inline LdrImage reinhard(const HdrImage &hdr, const ReinhardOptions &opt = {}) {
    const auto display = reinhard_linear(hdr, opt);
    std::vector<std::uint8_t> out(display.size());
    for (std::size_t i = 0; i < display.size(); ++i)
        out[i] = quantize_value(255.0 * srgb_encode(std::clamp(display[i], 0.0, 1.0)));
    return LdrImage(hdr.width(), hdr.height(), std::move(out));
}

/// T(H) = ln(1 + mu H) / ln(1 + mu) for H in [0, 1].
inline double mu_law(double h, double mu) { return std::log1p(mu * h) / std::log1p(mu); }
inline double mu_law_inverse(double t, double mu) { return std::expm1(t * std::log1p(mu)) / mu; }

inline RelaxedImage mu_law_compress(const HdrImage &hdr, double mu = 5000.0) {
    require(mu > 0.0, ErrorKind::invalid_argument, "mu must be > 0");
    std::vector<double> out(hdr.size());
    for (std::size_t i = 0; i < hdr.size(); ++i) {
        require(hdr[i] <= 1.0, ErrorKind::invalid_argument,
                "mu-law input must be normalized to [0, 1]; apply scale_percentile first");
        out[i] = mu_law(hdr[i], mu);
    }
    return RelaxedImage(hdr.width(), hdr.height(), std::move(out));
}

/// Percentile with linear interpolation between sorted values
/// (position p/100 * (n - 1)).
inline double percentile(std::vector<double> values, double p) {
    require(!values.empty(), ErrorKind::invalid_argument, "percentile of empty set");
    std::sort(values.begin(), values.end());
    const double pos = p / 100.0 * static_cast<double>(values.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const std::size_t hi = std::min(lo + 1, values.size() - 1);
    const double t = pos - static_cast<double>(lo);
    return values[lo] + t * (values[hi] - values[lo]);
}

/// Luminance values at the lo and hi percentiles.
inline std::pair<double, double> percentile_bounds(const HdrImage &hdr, double lo = 0.1, double hi = 99.9) {
    require(lo > 0.0 && hi < 100.0 && lo < hi, ErrorKind::invalid_argument,
            "percentiles must satisfy 0 < lo < hi < 100");
    const Field lum = luminance(hdr);
    std::vector<double> values(lum.values().begin(), lum.values().end());
    std::sort(values.begin(), values.end());
    return {percentile(values, lo), percentile(std::move(values), hi)};
}

/// Affine map sending the lo/hi luminance percentiles to 0/1, clamped to [0, 1].
inline HdrImage scale_percentile(const HdrImage &hdr, double lo = 0.1, double hi = 99.9) {
    const auto [p_lo, p_hi] = percentile_bounds(hdr, lo, hi);
    require(p_hi > p_lo, ErrorKind::numerical_failure,
            "degenerate image: luminance percentiles coincide, cannot normalize");
    std::vector<double> out(hdr.size());
    for (std::size_t i = 0; i < hdr.size(); ++i)
        out[i] = std::clamp((hdr[i] - p_lo) / (p_hi - p_lo), 0.0, 1.0);
    return HdrImage(hdr.width(), hdr.height(), std::move(out));
}

/// Display-referred 8-bit rendering used for HDR comparisons: percentile
/// normalization, mu-law compression, scale to [0, 255], quantize.
inline LdrImage mu_law_display(const HdrImage &hdr, double mu = 5000.0) {
    const RelaxedImage t = mu_law_compress(scale_percentile(hdr), mu);
    std::vector<std::uint8_t> out(t.size());
    for (std::size_t i = 0; i < t.size(); ++i)
        out[i] = quantize_value(255.0 * t[i]);
    return LdrImage(hdr.width(), hdr.height(), std::move(out));
}

} // namespace hdrforge
