// SPDX-License-Identifier: Apache-2.0
// Copyright Contributors to the hdrforge project.
//
// Shared fixtures: synthetic cameras, random images, scratch directories.

#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "hdrforge/hdrforge.hpp"

namespace testing_support {

using namespace hdrforge;

inline constexpr double kLn2 = 0.69314718055994530942;

/// Camera with Z = round(255 * (E * e^EV)^(1/gamma)), clipped to [0, 255].
struct GammaCamera {
    double gamma = 2.2;

    std::uint8_t expose(double radiance, double ev) const {
        const double v = 255.0 * std::pow(radiance * std::exp(ev), 1.0 / gamma);
        return quantize_value(v);
    }
    /// True inverse response g(z) = gamma * ln(z / 255); -inf at zero.
    double log_inverse(double z) const { return gamma * std::log(z / 255.0); }
    double anchored(double z, int anchor = kDefaultAnchor) const {
        return log_inverse(z) - log_inverse(anchor);
    }
};

/// Smooth scene with a wide log-radiance range and per-channel offsets.
inline HdrImage gradient_scene(int w, int h, double log_lo = -5.0, double log_hi = 1.0) {
    HdrImage img(w, h);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            const double t = (x + w * y) / static_cast<double>(w * h - 1);
            for (int c = 0; c < 3; ++c) {
                const double shift = 0.15 * (c - 1) + 0.2 * std::sin(0.37 * x + 0.11 * y + c);
                img.set(x, y, c, std::exp(log_lo + (log_hi - log_lo) * t + shift));
            }
        }
    return img;
}

inline ExposureStack render_stack(const HdrImage &scene, const std::vector<double> &evs, const GammaCamera &cam) {
    ExposureStack stack;
    stack.evs = evs;
    for (double ev : evs) {
        LdrImage img(scene.width(), scene.height());
        for (std::size_t i = 0; i < scene.size(); ++i)
            img.set(i, cam.expose(scene[i], ev));
        stack.images.push_back(std::move(img));
    }
    return stack;
}

/// g(z) = gamma * ln(z / 128) for z >= 1; linear continuation toward zero.
inline ResponseCurve gamma_curve(double gamma = 2.2) {
    ResponseCurve crf;
    for (auto &ch : crf.g) {
        for (int z = 1; z < kLevels; ++z)
            ch[static_cast<std::size_t>(z)] = gamma * std::log(z / 128.0);
        ch[0] = ch[1] - (ch[2] - ch[1]);
    }
    crf.anchor_index = 128;
    return crf;
}

inline LdrImage random_ldr(int w, int h, std::mt19937_64 &rng, int lo = 0, int hi = 255) {
    std::uniform_int_distribution<int> d(lo, hi);
    LdrImage img(w, h);
    for (std::size_t i = 0; i < img.size(); ++i)
        img.set(i, static_cast<std::uint8_t>(d(rng)));
    return img;
}

inline RelaxedImage random_relaxed(int w, int h, std::mt19937_64 &rng, double lo = 0.0, double hi = 255.0) {
    std::uniform_real_distribution<double> d(lo, hi);
    RelaxedImage img(w, h);
    for (std::size_t i = 0; i < img.size(); ++i)
        img.set(i, d(rng));
    return img;
}

inline HdrImage random_hdr(int w, int h, std::mt19937_64 &rng, double log_lo = -6.0, double log_hi = 3.0) {
    std::uniform_real_distribution<double> d(log_lo, log_hi);
    HdrImage img(w, h);
    for (std::size_t i = 0; i < img.size(); ++i)
        img.set(i, std::exp(d(rng)));
    return img;
}

/// Fresh directory under the system temp path, removed on destruction.
class ScratchDir {
  public:
    explicit ScratchDir(const std::string &tag) {
        std::random_device rd;
        path_ = std::filesystem::temp_directory_path() /
                ("hdrforge-" + tag + "-" + std::to_string(rd()) + std::to_string(rd()));
        std::filesystem::create_directories(path_);
    }
    ~ScratchDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    ScratchDir(const ScratchDir &) = delete;
    ScratchDir &operator=(const ScratchDir &) = delete;

    const std::filesystem::path &path() const { return path_; }
    std::filesystem::path operator/(const std::string &name) const { return path_ / name; }

  private:
    std::filesystem::path path_;
};

inline double rel_diff(double a, double b) {
    const double d = std::max(std::abs(a), std::abs(b));
    return d == 0.0 ? 0.0 : std::abs(a - b) / d;
}

} // namespace testing_support
