// SPDX-License-Identifier: Apache-2.0
// Copyright Contributors to the hdrforge project.

#pragma once

#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "hdrforge/error.hpp"

namespace hdrforge {

/// C x H x W activations, channel-major.
class FeatureMap {
  public:
    FeatureMap(int channels, int height, int width)
        : FeatureMap(channels, height, width,
                     std::vector<double>(static_cast<std::size_t>(channels) * height * width, 0.0)) {}

    FeatureMap(int channels, int height, int width, std::vector<double> data)
        : c_(channels), h_(height), w_(width), data_(std::move(data)) {
        require(c_ >= 1 && h_ >= 1 && w_ >= 1, ErrorKind::invalid_argument, "FeatureMap dimensions must be >= 1");
        require(data_.size() == static_cast<std::size_t>(c_) * h_ * w_, ErrorKind::invalid_argument,
                "FeatureMap data length mismatch");
        for (double v : data_)
            require(std::isfinite(v), ErrorKind::invalid_argument, "FeatureMap value is not finite");
    }

    int channels() const noexcept { return c_; }
    int height() const noexcept { return h_; }
    int width() const noexcept { return w_; }
    std::size_t plane_size() const noexcept { return static_cast<std::size_t>(h_) * static_cast<std::size_t>(w_); }

    double at(int c, int y, int x) const { return data_[index(c, y, x)]; }
    double &at(int c, int y, int x) { return data_[index(c, y, x)]; }
    std::span<const double> plane(int c) const {
        return std::span<const double>(data_).subspan(static_cast<std::size_t>(c) * plane_size(), plane_size());
    }
    std::span<const double> values() const noexcept { return data_; }

  private:
    std::size_t index(int c, int y, int x) const {
        return (static_cast<std::size_t>(c) * static_cast<std::size_t>(h_) + static_cast<std::size_t>(y)) *
                   static_cast<std::size_t>(w_) +
               static_cast<std::size_t>(x);
    }

    int c_, h_, w_;
    std::vector<double> data_;
};

/// Per-exposure scale and shift selected by the exposure value `ev_key`.
struct ExposureParams {
    std::vector<double> gamma;
    std::vector<double> beta;
    double ev_key = 0.0;
};

struct InstanceNormOptions {
    double eps = 1e-5;
    /// false: Y = (gamma (X - mu) + beta) / (sigma + eps), the shift divided
    /// along with the scale. true: Y = gamma (X - mu) / (sigma + eps) + beta.
    bool standard_form = false;
};

/// Conditional instance normalization with population statistics over H x W.
inline FeatureMap conditional_instance_norm(const FeatureMap &x, const ExposureParams &params,
                                            const InstanceNormOptions &opt = {}) {
    const auto C = static_cast<std::size_t>(x.channels());
    require(params.gamma.size() == C && params.beta.size() == C, ErrorKind::invalid_argument,
            "ExposureParams length does not match channel count");
    require(opt.eps >= 0.0, ErrorKind::invalid_argument, "eps must be >= 0");
    for (std::size_t c = 0; c < C; ++c)
        require(std::isfinite(params.gamma[c]) && std::isfinite(params.beta[c]), ErrorKind::invalid_argument,
                "ExposureParams values must be finite");
    std::vector<double> out;
    out.reserve(x.values().size());
    for (int c = 0; c < x.channels(); ++c) {
        const auto plane = x.plane(c);
        const double n = static_cast<double>(plane.size());
        double mean = 0.0;
        for (double v : plane)
            mean += v;
        mean /= n;
        double var = 0.0;
        for (double v : plane)
            var += (v - mean) * (v - mean);
        const double sigma = std::sqrt(var / n);
        const double denom = sigma + opt.eps;
        require(denom > 0.0, ErrorKind::numerical_failure,
                "channel " + std::to_string(c) + " has zero deviation and eps = 0");
        const double g = params.gamma[static_cast<std::size_t>(c)];
        const double b = params.beta[static_cast<std::size_t>(c)];
        for (double v : plane)
            out.push_back(opt.standard_form ? g * (v - mean) / denom + b : (g * (v - mean) + b) / denom);
    }
    return FeatureMap(x.channels(), x.height(), x.width(), std::move(out));
}

inline double sigmoid(double x) {
    if (x >= 0.0)
        return 1.0 / (1.0 + std::exp(-x));
    const double e = std::exp(x);
    return e / (1.0 + e);
}

inline double swish(double x) { return x * sigmoid(x); }

inline FeatureMap swish(const FeatureMap &x) {
    std::vector<double> out(x.values().begin(), x.values().end());
    for (auto &v : out)
        v = swish(v);
    return FeatureMap(x.channels(), x.height(), x.width(), std::move(out));
}

} // namespace hdrforge
