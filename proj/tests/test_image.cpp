// SPDX-License-Identifier: Apache-2.0
// Copyright Contributors to the hdrforge project.

#include <gtest/gtest.h>

#include <numbers>

#include "support.hpp"

using namespace hdrforge;
using namespace testing_support;

namespace {

// Direct 2D evaluation: every source pixel, product kernel, one global
// normalization per output sample.
double lanczos3(double x) {
    if (x == 0.0)
        return 1.0;
    if (std::abs(x) >= 3.0)
        return 0.0;
    const double px = std::numbers::pi * x;
    return 3.0 * std::sin(px) * std::sin(px / 3.0) / (px * px);
}

LdrImage brute_force_resize(const LdrImage &src, int ow, int oh) {
    LdrImage out(ow, oh);
    const double rx = static_cast<double>(src.width()) / ow;
    const double ry = static_cast<double>(src.height()) / oh;
    const double sx = std::max(1.0, rx), sy = std::max(1.0, ry);
    for (int y = 0; y < oh; ++y)
        for (int x = 0; x < ow; ++x)
            for (int c = 0; c < 3; ++c) {
                const double cx = (x + 0.5) * rx - 0.5, cy = (y + 0.5) * ry - 0.5;
                double acc = 0.0, total = 0.0;
                for (int ky = -40; ky < src.height() + 40; ++ky)
                    for (int kx = -40; kx < src.width() + 40; ++kx) {
                        const double wgt = lanczos3((kx - cx) / sx) * lanczos3((ky - cy) / sy);
                        if (wgt == 0.0)
                            continue;
                        const int px = std::clamp(kx, 0, src.width() - 1);
                        const int py = std::clamp(ky, 0, src.height() - 1);
                        acc += wgt * src.at(px, py, c);
                        total += wgt;
                    }
                out.set(x, y, c, quantize_value(acc / total));
            }
    return out;
}

} // namespace

TEST(Image, LdrShapeAndAccess) {
    LdrImage img(4, 3);
    EXPECT_EQ(img.size(), 36u);
    img.set(2, 1, 2, 77);
    EXPECT_EQ(img.at(2, 1, 2), 77);
    EXPECT_EQ(img[img.index(2, 1, 2)], 77);
    EXPECT_EQ(img.index(2, 1, 2), (1u * 4 + 2) * 3 + 2);
}

TEST(Image, RejectsBadShapes) {
    EXPECT_THROW(LdrImage(0, 3), Error);
    EXPECT_THROW(LdrImage(3, -1), Error);
    EXPECT_THROW(LdrImage(2, 2, std::vector<std::uint8_t>(11)), Error);
}

TEST(Image, RelaxedClampsIntoRange) {
    RelaxedImage img(1, 1);
    img.set(0, -3.5);
    EXPECT_EQ(img[0], 0.0);
    img.set(1, 300.0);
    EXPECT_EQ(img[1], 255.0);
    img.set(2, 17.25);
    EXPECT_EQ(img[2], 17.25);
    EXPECT_THROW(img.set(0, std::nan("")), Error);
}

TEST(Image, HdrRejectsNegativeAndNonFinite) {
    HdrImage img(1, 1);
    EXPECT_THROW(img.set(0, -1e-9), Error);
    EXPECT_THROW(img.set(0, std::numeric_limits<double>::infinity()), Error);
    img.set(0, 3.0);
    EXPECT_EQ(img[0], 3.0);
}

TEST(Quantize, RoundsHalfAwayFromZeroAndClamps) {
    EXPECT_EQ(quantize_value(127.5), 128);
    EXPECT_EQ(quantize_value(255.0), 255);
    EXPECT_EQ(quantize_value(-0.0), 0);
    EXPECT_EQ(quantize_value(0.49), 0);
    EXPECT_EQ(quantize_value(254.5), 255);
    EXPECT_EQ(quantize_value(-7.0), 0);
    EXPECT_EQ(quantize_value(900.0), 255);
}

TEST(Quantize, EmbeddingRoundTripIsIdentity) {
    std::mt19937_64 rng(11);
    const LdrImage img = random_ldr(13, 7, rng);
    EXPECT_EQ(quantize(to_relaxed(img)), img);
}

TEST(Luminance, Bt709Weights) {
    EXPECT_DOUBLE_EQ(luminance(1.0, 1.0, 1.0), 1.0);
    EXPECT_EQ(luminance(0.0, 0.0, 0.0), 0.0);
    EXPECT_EQ(luminance(1.0, 0.0, 0.0), 0.2126);
    EXPECT_EQ(luminance(0.0, 1.0, 0.0), 0.7152);
    EXPECT_EQ(luminance(0.0, 0.0, 1.0), 0.0722);
}

TEST(Luminance, IsLinear) {
    std::mt19937_64 rng(5);
    const HdrImage p = random_hdr(6, 5, rng), q = random_hdr(6, 5, rng);
    const double a = 0.7, b = 2.3;
    HdrImage mix(6, 5);
    for (std::size_t i = 0; i < mix.size(); ++i)
        mix.set(i, a * p[i] + b * q[i]);
    const Field lp = luminance(p), lq = luminance(q), lm = luminance(mix);
    ASSERT_EQ(lm.channels(), 1);
    for (std::size_t i = 0; i < lm.size(); ++i)
        EXPECT_LE(rel_diff(lm[i], a * lp[i] + b * lq[i]), 1e-12);
}

TEST(Resize, IdentityAtSameSize) {
    std::mt19937_64 rng(1);
    const LdrImage img = random_ldr(256, 256, rng);
    EXPECT_EQ(resize_lanczos(img, 256, 256), img);
    const LdrImage odd = random_ldr(9, 5, rng);
    EXPECT_EQ(resize_lanczos(odd, 9, 5), odd);
}

TEST(Resize, PreservesConstants) {
    const LdrImage img = LdrImage::filled(17, 11, 100);
    for (auto [w, h] : {std::pair{1, 1}, {4, 4}, {17, 11}, {40, 3}, {256, 256}, {5, 30}})
        EXPECT_EQ(resize_lanczos(img, w, h), LdrImage::filled(w, h, 100)) << w << "x" << h;

    const HdrImage hdr = HdrImage::filled(10, 6, 0.37);
    const HdrImage out = resize_lanczos(hdr, 23, 4);
    for (double v : out.values())
        EXPECT_NEAR(v, 0.37, 1e-15);
}

TEST(Resize, CheckerboardMatchesDirectOracle) {
    LdrImage board(8, 8);
    for (int y = 0; y < 8; ++y)
        for (int x = 0; x < 8; ++x)
            for (int c = 0; c < 3; ++c)
                board.set(x, y, c, ((x + y) % 2) ? 255 : 0);
    EXPECT_EQ(resize_lanczos(board, 4, 4), brute_force_resize(board, 4, 4));

    std::mt19937_64 rng(2);
    const LdrImage noise = random_ldr(12, 9, rng);
    EXPECT_EQ(resize_lanczos(noise, 5, 4), brute_force_resize(noise, 5, 4));
    EXPECT_EQ(resize_lanczos(noise, 20, 13), brute_force_resize(noise, 20, 13));
}

TEST(Resize, RejectsNonPositiveTargets) {
    const LdrImage img(4, 4);
    EXPECT_THROW(resize_lanczos(img, 0, 4), Error);
    EXPECT_THROW(resize_lanczos(img, 4, -2), Error);
}

TEST(Resize, KernelZerosAtIntegers) {
    EXPECT_EQ(lanczos_kernel(0.0), 1.0);
    for (int k = 1; k <= 4; ++k) {
        EXPECT_EQ(lanczos_kernel(k), 0.0);
        EXPECT_EQ(lanczos_kernel(-k), 0.0);
    }
}

TEST(Stack, ValidationRules) {
    const LdrImage a(2, 2), b(2, 2), c(3, 2);
    EXPECT_NO_THROW(make_stack<LdrImage>({a, b}, {-1.0, 1.0}));
    EXPECT_THROW(make_stack<LdrImage>({a, b}, {1.0, 1.0}), Error);
    EXPECT_THROW(make_stack<LdrImage>({a, b}, {1.0, -1.0}), Error);
    EXPECT_THROW(make_stack<LdrImage>({a, c}, {0.0, 1.0}), Error);
    EXPECT_THROW(make_stack<LdrImage>({a}, {0.0, 1.0}), Error);
    EXPECT_THROW(make_stack<LdrImage>({}, {}), Error);
}

TEST(Stack, StopsConvertToNaturalLog) {
    const LdrImage a(1, 1);
    const auto s = make_stack<LdrImage>({a, a, a}, {-2.0, 0.0, 2.0}, ExposureUnit::stops);
    EXPECT_DOUBLE_EQ(s.evs[0], -2.0 * std::numbers::ln2);
    EXPECT_EQ(s.evs[1], 0.0);
    EXPECT_DOUBLE_EQ(s.evs[2], 2.0 * std::numbers::ln2);
}

TEST(Parallel, ResultsIndependentOfThreadCount) {
    std::mt19937_64 rng(3);
    const LdrImage img = random_ldr(64, 48, rng);
    set_max_threads(1);
    const LdrImage one = resize_lanczos(img, 37, 29);
    const Field y1 = luminance(convert<HdrKind>(img));
    set_max_threads(4);
    const LdrImage four = resize_lanczos(img, 37, 29);
    const Field y4 = luminance(convert<HdrKind>(img));
    set_max_threads(0);
    EXPECT_EQ(one, four);
    EXPECT_EQ(y1, y4);
}

TEST(Parallel, PropagatesWorkerExceptions) {
    set_max_threads(4);
    EXPECT_THROW(parallel_for(1000, [](std::size_t b, std::size_t) {
                     if (b > 0)
                         throw std::runtime_error("boom");
                 }),
                 std::runtime_error);
    set_max_threads(0);
}
