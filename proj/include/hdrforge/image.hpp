// SPDX-License-Identifier: Apache-2.0
// Copyright Contributors to the hdrforge project.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numbers>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "hdrforge/error.hpp"

namespace hdrforge {

// Pixel layout is fixed everywhere: row-major, channel-interleaved, RGB.
// index = (y * width + x) * channels + c

/// 8-bit display intensities.
struct LdrKind {
    using value_type = std::uint8_t;
    static constexpr int fixed_channels = 3;
    static constexpr const char *name = "LdrImage";
    static value_type admit(value_type v) { return v; }
};

/// Continuous relaxation of 8-bit intensities; always clamped to [0, 255].
struct RelaxedKind {
    using value_type = double;
    static constexpr int fixed_channels = 3;
    static constexpr const char *name = "RelaxedImage";
    static value_type admit(value_type v) {
        require(std::isfinite(v), ErrorKind::invalid_argument, "RelaxedImage value is not finite");
        return std::clamp(v, 0.0, 255.0);
    }
};

/// Linear scene radiance; finite and non-negative.
struct HdrKind {
    using value_type = double;
    static constexpr int fixed_channels = 3;
    static constexpr const char *name = "HdrImage";
    static value_type admit(value_type v) {
        require(std::isfinite(v) && v >= 0.0, ErrorKind::invalid_argument,
                "HdrImage value must be finite and non-negative");
        return v;
    }
};

/// Unconstrained real field (log radiance, gradients, luminance planes).
struct FieldKind {
    using value_type = double;
    static constexpr int fixed_channels = 0;
    static constexpr const char *name = "Field";
    static value_type admit(value_type v) {
        require(std::isfinite(v), ErrorKind::invalid_argument, "Field value is not finite");
        return v;
    }
};

template <typename Kind> class Image {
  public:
    using kind_type = Kind;
    using value_type = typename Kind::value_type;

    Image() = default;

    Image(int width, int height, int channels = default_channels())
        : width_(width), height_(height), channels_(channels) {
        check_shape();
        data_.assign(size(), value_type{});
    }

    Image(int width, int height, std::vector<value_type> data)
        : Image(width, height, default_channels(), std::move(data)) {}

    Image(int width, int height, int channels, std::vector<value_type> data)
        : width_(width), height_(height), channels_(channels), data_(std::move(data)) {
        check_shape();
        require(data_.size() == size(), ErrorKind::invalid_argument,
                std::string(Kind::name) + ": data length does not match width*height*channels");
        for (auto &v : data_)
            v = Kind::admit(v);
    }

    /// Filled with one value.
    static Image filled(int width, int height, value_type value, int channels = default_channels()) {
        Image img(width, height, channels);
        std::fill(img.data_.begin(), img.data_.end(), Kind::admit(value));
        return img;
    }

    int width() const noexcept { return width_; }
    int height() const noexcept { return height_; }
    int channels() const noexcept { return channels_; }
    std::size_t pixel_count() const noexcept {
        return static_cast<std::size_t>(width_) * static_cast<std::size_t>(height_);
    }
    std::size_t size() const noexcept { return pixel_count() * static_cast<std::size_t>(channels_); }
    bool empty() const noexcept { return data_.empty(); }

    std::size_t index(int x, int y, int c) const noexcept {
        return (static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) +
                static_cast<std::size_t>(x)) *
                   static_cast<std::size_t>(channels_) +
               static_cast<std::size_t>(c);
    }

    value_type at(int x, int y, int c) const { return data_[index(x, y, c)]; }
    value_type operator[](std::size_t i) const { return data_[i]; }

    void set(int x, int y, int c, value_type v) { data_[index(x, y, c)] = Kind::admit(v); }
    void set(std::size_t i, value_type v) { data_[i] = Kind::admit(v); }

    std::span<const value_type> values() const noexcept { return data_; }

    bool same_shape(int width, int height, int channels) const noexcept {
        return width_ == width && height_ == height && channels_ == channels;
    }
    template <typename Other> bool same_shape(const Image<Other> &o) const noexcept {
        return same_shape(o.width(), o.height(), o.channels());
    }

    friend bool operator==(const Image &, const Image &) = default;

  private:
    static constexpr int default_channels() {
        return Kind::fixed_channels > 0 ? Kind::fixed_channels : 1;
    }

    void check_shape() const {
        require(width_ > 0 && height_ > 0, ErrorKind::invalid_argument,
                std::string(Kind::name) + ": dimensions must be positive");
        if constexpr (Kind::fixed_channels > 0)
            require(channels_ == Kind::fixed_channels, ErrorKind::invalid_argument,
                    std::string(Kind::name) + ": channel count must be 3");
        else
            require(channels_ > 0, ErrorKind::invalid_argument, "Field: channel count must be positive");
    }

    int width_ = 0;
    int height_ = 0;
    int channels_ = 0;
    std::vector<value_type> data_;
};

using LdrImage = Image<LdrKind>;
using RelaxedImage = Image<RelaxedKind>;
using HdrImage = Image<HdrKind>;
using Field = Image<FieldKind>;

template <typename A, typename B> void require_same_shape(const Image<A> &a, const Image<B> &b, const char *what) {
    require(a.same_shape(b), ErrorKind::invalid_argument, std::string(what) + ": shape mismatch");
}

/// Copies values of any image kind into a kind with a compatible value range.
template <typename To, typename From> Image<To> convert(const Image<From> &src) {
    std::vector<typename To::value_type> out(src.size());
    for (std::size_t i = 0; i < src.size(); ++i)
        out[i] = static_cast<typename To::value_type>(src[i]);
    return Image<To>(src.width(), src.height(), src.channels(), std::move(out));
}

inline RelaxedImage to_relaxed(const LdrImage &img) { return convert<RelaxedKind>(img); }

inline std::uint8_t quantize_value(double v) {
    double r = std::round(v); // half away from zero
    return static_cast<std::uint8_t>(std::clamp(r, 0.0, 255.0));
}

/// Rounds half away from zero and clamps to [0, 255].
template <typename Kind> LdrImage quantize(const Image<Kind> &img) {
    std::vector<std::uint8_t> out(img.size());
    for (std::size_t i = 0; i < img.size(); ++i)
        out[i] = quantize_value(static_cast<double>(img[i]));
    return LdrImage(img.width(), img.height(), std::move(out));
}

// ---------------------------------------------------------------------------
// Exposure stacks

enum class ExposureUnit { natural_log, stops };

inline double to_natural_log(double ev, ExposureUnit unit) {
    return unit == ExposureUnit::stops ? ev * std::numbers::ln2 : ev;
}

/// Aligned images of one scene with strictly increasing log-exposure values.
/// EVs are always stored in natural-log units.
template <typename Img> struct BasicStack {
    std::vector<Img> images;
    std::vector<double> evs;

    std::size_t size() const noexcept { return images.size(); }
    int width() const { return images.front().width(); }
    int height() const { return images.front().height(); }
    int channels() const { return images.front().channels(); }

    void validate() const {
        require(!images.empty(), ErrorKind::invalid_argument, "exposure stack is empty");
        require(evs.size() == images.size(), ErrorKind::invalid_argument,
                "exposure stack: EV count does not match image count");
        for (const auto &img : images)
            require(img.same_shape(images.front()), ErrorKind::invalid_argument,
                    "exposure stack: images differ in shape");
        for (std::size_t j = 0; j < evs.size(); ++j) {
            require(std::isfinite(evs[j]), ErrorKind::invalid_argument, "exposure stack: EV is not finite");
            if (j > 0)
                require(evs[j] > evs[j - 1], ErrorKind::invalid_argument,
                        "exposure stack: EVs must be strictly increasing");
        }
    }

    friend bool operator==(const BasicStack &, const BasicStack &) = default;
};

using ExposureStack = BasicStack<LdrImage>;
using RelaxedStack = BasicStack<RelaxedImage>;

template <typename Img>
BasicStack<Img> make_stack(std::vector<Img> images, std::vector<double> evs,
                           ExposureUnit unit = ExposureUnit::natural_log) {
    for (auto &ev : evs)
        ev = to_natural_log(ev, unit);
    BasicStack<Img> stack{std::move(images), std::move(evs)};
    stack.validate();
    return stack;
}

inline RelaxedStack to_relaxed(const ExposureStack &stack) {
    RelaxedStack out;
    out.evs = stack.evs;
    for (const auto &img : stack.images)
        out.images.push_back(to_relaxed(img));
    return out;
}

inline ExposureStack quantize(const RelaxedStack &stack) {
    ExposureStack out;
    out.evs = stack.evs;
    for (const auto &img : stack.images)
        out.images.push_back(quantize(img));
    return out;
}

} // namespace hdrforge
