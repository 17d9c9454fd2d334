// SPDX-License-Identifier: Apache-2.0
// Copyright Contributors to the hdrforge project.

#pragma once

#include <array>
#include <cmath>
#include <vector>

#include "hdrforge/color.hpp"
#include "hdrforge/image.hpp"

namespace hdrforge {

/// Reported for identical images instead of +infinity.
inline constexpr double kPsnrCap = 99.0;

inline double psnr(const LdrImage &a, const LdrImage &b) {
    require_same_shape(a, b, "psnr");
    double sse = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = static_cast<double>(a[i]) - static_cast<double>(b[i]);
        sse += d * d;
    }
    if (sse == 0.0)
        return kPsnrCap;
    const double mse = sse / static_cast<double>(a.size());
    return std::min(kPsnrCap, 10.0 * std::log10(255.0 * 255.0 / mse));
}

struct SsimOptions {
    int window = 11;
    double sigma = 1.5;
    double k1 = 0.01;
    double k2 = 0.03;
    double peak = 255.0;
};

/// Mean luminance and contrast-structure terms over all valid windows.
struct SsimTerms {
    double ssim = 0.0;
    double contrast_structure = 0.0;
};

namespace detail {

struct Plane {
    int width = 0;
    int height = 0;
    std::vector<double> v;
    double at(int x, int y) const {
        return v[static_cast<std::size_t>(y) * static_cast<std::size_t>(width) + static_cast<std::size_t>(x)];
    }
};

inline Plane luma_plane(const LdrImage &img) {
    const Field g = grayscale(img);
    return {img.width(), img.height(), std::vector<double>(g.values().begin(), g.values().end())};
}

inline std::vector<double> ssim_window(const SsimOptions &opt) {
    std::vector<double> w(static_cast<std::size_t>(opt.window));
    const int r = opt.window / 2;
    double total = 0.0;
    for (int i = 0; i < opt.window; ++i) {
        const double d = i - r;
        w[static_cast<std::size_t>(i)] = std::exp(-0.5 * d * d / (opt.sigma * opt.sigma));
        total += w[static_cast<std::size_t>(i)];
    }
    for (auto &v : w)
        v /= total;
    return w;
}

/// Separable "valid" filtering: output is (w - k + 1) x (h - k + 1).
inline Plane filter_valid(const Plane &p, const std::vector<double> &k) {
    const int n = static_cast<int>(k.size());
    const int ow = p.width - n + 1;
    const int oh = p.height - n + 1;
    Plane tmp{ow, p.height, std::vector<double>(static_cast<std::size_t>(ow) * p.height)};
    for (int y = 0; y < p.height; ++y)
        for (int x = 0; x < ow; ++x) {
            double acc = 0.0;
            for (int i = 0; i < n; ++i)
                acc += k[static_cast<std::size_t>(i)] * p.at(x + i, y);
            tmp.v[static_cast<std::size_t>(y) * ow + x] = acc;
        }
    Plane out{ow, oh, std::vector<double>(static_cast<std::size_t>(ow) * oh)};
    for (int y = 0; y < oh; ++y)
        for (int x = 0; x < ow; ++x) {
            double acc = 0.0;
            for (int i = 0; i < n; ++i)
                acc += k[static_cast<std::size_t>(i)] * tmp.at(x, y + i);
            out.v[static_cast<std::size_t>(y) * ow + x] = acc;
        }
    return out;
}

inline Plane multiply(const Plane &a, const Plane &b) {
    Plane out = a;
    for (std::size_t i = 0; i < out.v.size(); ++i)
        out.v[i] *= b.v[i];
    return out;
}

inline SsimTerms ssim_terms(const Plane &a, const Plane &b, const SsimOptions &opt) {
    const auto k = ssim_window(opt);
    const Plane mu_a = filter_valid(a, k);
    const Plane mu_b = filter_valid(b, k);
    const Plane aa = filter_valid(multiply(a, a), k);
    const Plane bb = filter_valid(multiply(b, b), k);
    const Plane ab = filter_valid(multiply(a, b), k);
    const double c1 = (opt.k1 * opt.peak) * (opt.k1 * opt.peak);
    const double c2 = (opt.k2 * opt.peak) * (opt.k2 * opt.peak);
    double s = 0.0, cs = 0.0;
    for (std::size_t i = 0; i < mu_a.v.size(); ++i) {
        const double ma = mu_a.v[i], mb = mu_b.v[i];
        const double va = aa.v[i] - ma * ma;
        const double vb = bb.v[i] - mb * mb;
        const double cov = ab.v[i] - ma * mb;
        const double l = (2.0 * ma * mb + c1) / (ma * ma + mb * mb + c1);
        const double c = (2.0 * cov + c2) / (va + vb + c2);
        s += l * c;
        cs += c;
    }
    const double n = static_cast<double>(mu_a.v.size());
    return {s / n, cs / n};
}

inline Plane downsample2(const Plane &p) {
    Plane out{p.width / 2, p.height / 2, {}};
    out.v.resize(static_cast<std::size_t>(out.width) * out.height);
    for (int y = 0; y < out.height; ++y)
        for (int x = 0; x < out.width; ++x)
            out.v[static_cast<std::size_t>(y) * out.width + x] =
                0.25 * (p.at(2 * x, 2 * y) + p.at(2 * x + 1, 2 * y) + p.at(2 * x, 2 * y + 1) +
                        p.at(2 * x + 1, 2 * y + 1));
    return out;
}

} // namespace detail

/// Single-scale SSIM on BT.709 luma with a Gaussian window, averaged over
/// windows that lie fully inside the image.
inline double ssim(const LdrImage &a, const LdrImage &b, const SsimOptions &opt = {}) {
    require_same_shape(a, b, "ssim");
    require(std::min(a.width(), a.height()) >= opt.window, ErrorKind::invalid_argument,
            "ssim: image smaller than the window");
    return detail::ssim_terms(detail::luma_plane(a), detail::luma_plane(b), opt).ssim;
}

inline constexpr std::array<double, 5> kMsSsimWeights{0.0448, 0.2856, 0.3001, 0.2363, 0.1333};

/// Multi-scale SSIM: contrast-structure at the finer levels, full SSIM at
/// the coarsest, 2x2 mean pooling in between. Fewer than five levels use
/// the leading weights renormalized to sum to one. Negative terms are
/// clamped to zero before exponentiation.
inline double ms_ssim(const LdrImage &a, const LdrImage &b, int levels = 5, const SsimOptions &opt = {}) {
    require_same_shape(a, b, "ms_ssim");
    require(levels >= 1 && levels <= 5, ErrorKind::invalid_argument, "ms_ssim levels must be in [1, 5]");
    require(std::min(a.width(), a.height()) >= opt.window * (1 << (levels - 1)), ErrorKind::invalid_argument,
            "ms_ssim: image too small for the requested level count");
    std::vector<double> weights(kMsSsimWeights.begin(), kMsSsimWeights.begin() + levels);
    if (levels != 5) {
        double total = 0.0;
        for (double w : weights)
            total += w;
        for (auto &w : weights)
            w /= total;
    }
    detail::Plane pa = detail::luma_plane(a);
    detail::Plane pb = detail::luma_plane(b);
    double result = 1.0;
    for (int level = 0; level < levels; ++level) {
        const auto terms = detail::ssim_terms(pa, pb, opt);
        const bool last = level == levels - 1;
        const double v = std::max(0.0, last ? terms.ssim : terms.contrast_structure);
        result *= std::pow(v, weights[static_cast<std::size_t>(level)]);
        if (!last) {
            pa = detail::downsample2(pa);
            pb = detail::downsample2(pb);
        }
    }
    return result;
}

} // namespace hdrforge
