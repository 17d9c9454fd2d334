// SPDX-License-Identifier: Apache-2.0
// Copyright Contributors to the hdrforge project.

#include <gtest/gtest.h>

#include <algorithm>

#include "support.hpp"

using namespace hdrforge;
using namespace testing_support;

namespace {

HdrImage gray_image(const std::vector<double> &values, int w) {
    const int h = static_cast<int>(values.size()) / w;
    HdrImage img(w, h);
    for (std::size_t p = 0; p < values.size(); ++p)
        for (std::size_t c = 0; c < 3; ++c)
            img.set(p * 3 + c, values[p]);
    return img;
}

// Straight-line re-derivation of the global operator.
LdrImage reinhard_oracle(const HdrImage &hdr, double key) {
    const std::size_t n = hdr.pixel_count();
    std::vector<double> L(n);
    double log_sum = 0.0, max_l = 0.0;
    for (std::size_t p = 0; p < n; ++p) {
        L[p] = 0.2126 * hdr[3 * p] + 0.7152 * hdr[3 * p + 1] + 0.0722 * hdr[3 * p + 2];
        log_sum += std::log(1e-6 + L[p]);
    }
    const double avg = std::exp(log_sum / static_cast<double>(n));
    for (std::size_t p = 0; p < n; ++p)
        max_l = std::max(max_l, key * L[p] / avg);
    LdrImage out(hdr.width(), hdr.height());
    for (std::size_t p = 0; p < n; ++p) {
        const double ls = key * L[p] / avg;
        const double ld = ls * (1.0 + ls / (max_l * max_l)) / (1.0 + ls);
        for (std::size_t c = 0; c < 3; ++c) {
            double v = L[p] > 0.0 ? hdr[3 * p + c] * ld / L[p] : 0.0;
            v = std::min(std::max(v, 0.0), 1.0);
            const double enc = v <= 0.0031308 ? 12.92 * v : 1.055 * std::pow(v, 1.0 / 2.4) - 0.055;
            out.set(3 * p + c, static_cast<std::uint8_t>(std::min(255.0, std::floor(255.0 * enc + 0.5))));
        }
    }
    return out;
}

} // namespace

TEST(Reinhard, ZeroImageStaysBlack) {
    const LdrImage out = reinhard(HdrImage(6, 4));
    for (auto v : out.values())
        EXPECT_EQ(v, 0);
}

TEST(Reinhard, SimpleOperatorClosedForm) {
    EXPECT_DOUBLE_EQ(reinhard_curve(1.0, std::numeric_limits<double>::infinity()), 0.5);
    EXPECT_DOUBLE_EQ(reinhard_curve(3.0, 3.0), 1.0);
}

TEST(Reinhard, RampMatchesLoopOracle) {
    HdrImage ramp(8, 8);
    for (int y = 0; y < 8; ++y)
        for (int x = 0; x < 8; ++x)
            for (int c = 0; c < 3; ++c)
                ramp.set(x, y, c, std::exp(0.15 * (x + 8 * y) - 4.0) * (1.0 + 0.3 * c));
    for (double key : {0.09, 0.18, 0.5}) {
        ReinhardOptions opt;
        opt.key = key;
        EXPECT_EQ(reinhard(ramp, opt), reinhard_oracle(ramp, key)) << key;
    }
}

TEST(Reinhard, DisplayLuminanceBoundedAndMonotone) {
    std::mt19937_64 rng(3);
    const HdrImage hdr = gray_image([&] {
        std::vector<double> v(400);
        std::uniform_real_distribution<double> d(-6.0, 4.0);
        for (auto &x : v)
            x = std::exp(d(rng));
        std::sort(v.begin(), v.end());
        return v;
    }(), 20);
    const auto display = reinhard_linear(hdr);
    double prev = -1.0;
    for (std::size_t p = 0; p < hdr.pixel_count(); ++p) {
        const double ld = luminance(display[3 * p], display[3 * p + 1], display[3 * p + 2]);
        EXPECT_GE(ld, 0.0);
        EXPECT_LE(ld, 1.0 + 1e-12);
        EXPECT_GE(ld, prev);
        prev = ld;
    }
}

TEST(Reinhard, PreservesChannelRatios) {
    HdrImage hdr(1, 2);
    hdr.set(0, 0, 0, 0.2);
    hdr.set(0, 0, 1, 0.4);
    hdr.set(0, 0, 2, 0.8);
    hdr.set(0, 1, 0, 1.0);
    const auto d = reinhard_linear(hdr);
    EXPECT_NEAR(d[1] / d[0], 2.0, 1e-12);
    EXPECT_NEAR(d[2] / d[0], 4.0, 1e-12);
}

TEST(Reinhard, RejectsBadKey) {
    ReinhardOptions opt;
    opt.key = 0.0;
    EXPECT_THROW(reinhard(HdrImage(2, 2), opt), Error);
    opt.key = -1.0;
    EXPECT_THROW(reinhard(HdrImage(2, 2), opt), Error);
}

TEST(MuLawCompress, EndpointsAndClosedForm) {
    EXPECT_EQ(mu_law(0.0, 5000.0), 0.0);
    EXPECT_DOUBLE_EQ(mu_law(1.0, 5000.0), 1.0);
    EXPECT_NEAR(mu_law(1.0 / 5000.0, 5000.0), std::log(2.0) / std::log(5001.0), 1e-15);
    EXPECT_NEAR(mu_law(1.0 / 5000.0, 5000.0), 0.08138, 1e-5);
}

TEST(MuLawCompress, MonotoneAndInvertible) {
    std::mt19937_64 rng(4);
    std::uniform_real_distribution<double> d(0.0, 1.0);
    std::vector<double> v(1000);
    for (auto &x : v)
        x = d(rng);
    std::sort(v.begin(), v.end());
    HdrImage img(1000, 1);
    for (std::size_t i = 0; i < v.size(); ++i)
        img.set(static_cast<int>(i), 0, 0, v[i]);
    const RelaxedImage t = mu_law_compress(img);
    for (int i = 1; i < 1000; ++i)
        EXPECT_LT(t.at(i - 1, 0, 0), t.at(i, 0, 0));
    for (double x : v)
        EXPECT_NEAR(mu_law_inverse(mu_law(x, 5000.0), 5000.0), x, 1e-12);
}

TEST(MuLawCompress, RejectsUnnormalizedInput) {
    HdrImage img(1, 1);
    img.set(0, 1.5);
    EXPECT_THROW(mu_law_compress(img), Error);
    EXPECT_THROW(mu_law_compress(HdrImage(1, 1), 0.0), Error);
}

TEST(Percentile, LinearInterpolation) {
    EXPECT_DOUBLE_EQ(percentile({4.0, 1.0, 3.0, 2.0}, 50.0), 2.5);
    EXPECT_DOUBLE_EQ(percentile({1.0, 2.0, 3.0}, 0.0), 1.0);
    EXPECT_DOUBLE_EQ(percentile({1.0, 2.0, 3.0}, 100.0), 3.0);
    EXPECT_DOUBLE_EQ(percentile({7.0}, 30.0), 7.0);
}

TEST(ScalePercentile, FixedPointOnUnitSpan) {
    std::vector<double> v(1000);
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> d(0.0, 1.0);
    for (auto &x : v)
        x = d(rng);
    std::fill(v.begin(), v.begin() + 10, 0.0);
    std::fill(v.end() - 10, v.end(), 1.0);
    const HdrImage img = gray_image(v, 50);
    const HdrImage out = scale_percentile(img);
    for (std::size_t i = 0; i < img.size(); ++i)
        EXPECT_NEAR(out[i], img[i], 1e-15);
}

TEST(ScalePercentile, ConstantImageIsDegenerate) {
    try {
        scale_percentile(HdrImage::filled(5, 5, 0.3));
        FAIL();
    } catch (const Error &e) {
        EXPECT_EQ(e.kind(), ErrorKind::numerical_failure);
    }
}

TEST(ScalePercentile, CountsBelowLowPercentile) {
    std::mt19937_64 rng(6);
    const HdrImage img = random_hdr(100, 100, rng);
    const auto [lo, hi] = percentile_bounds(img);
    const Field lum = luminance(img);
    std::size_t below = 0, above = 0;
    for (double L : lum.values()) {
        below += (L - lo) / (hi - lo) < 0.0 ? 1 : 0;
        above += (L - lo) / (hi - lo) > 1.0 ? 1 : 0;
    }
    EXPECT_EQ(below, 10u);
    EXPECT_EQ(above, 10u);
    const HdrImage out = scale_percentile(img);
    for (double v : out.values()) {
        EXPECT_GE(v, 0.0);
        EXPECT_LE(v, 1.0);
    }
}

TEST(ScalePercentile, IdempotentOnItsOutput) {
    // With n - 1 a multiple of 1000 both percentile positions are sample
    // indices, so the clamped tails contain them and the second pass is exact.
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> d(-3.0, 2.0);
    std::vector<double> v(1001);
    for (auto &x : v)
        x = std::exp(d(rng));
    const HdrImage once = scale_percentile(gray_image(v, 1001));
    const HdrImage twice = scale_percentile(once);
    for (std::size_t i = 0; i < once.size(); ++i)
        EXPECT_NEAR(twice[i], once[i], 1e-12);

    // Otherwise the interpolated percentile straddles a clamped sample and
    // moves by at most one sample gap.
    std::vector<double> w(900);
    for (auto &x : w)
        x = std::exp(d(rng));
    const HdrImage a = scale_percentile(gray_image(w, 30));
    const HdrImage b = scale_percentile(a);
    for (std::size_t i = 0; i < a.size(); ++i)
        EXPECT_NEAR(b[i], a[i], 1e-3);
}

TEST(ScalePercentile, RejectsBadBounds) {
    std::mt19937_64 rng(8);
    const HdrImage img = random_hdr(4, 4, rng);
    EXPECT_THROW(scale_percentile(img, 50.0, 10.0), Error);
    EXPECT_THROW(scale_percentile(img, 0.0, 99.0), Error);
    EXPECT_THROW(scale_percentile(img, 1.0, 100.0), Error);
}

TEST(Srgb, RoundTrip) {
    for (int k = 0; k <= 100; ++k) {
        const double x = k / 100.0;
        EXPECT_NEAR(srgb_decode(srgb_encode(x)), x, 1e-12);
    }
}
