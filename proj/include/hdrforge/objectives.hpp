// SPDX-License-Identifier: Apache-2.0
// Copyright Contributors to the hdrforge project.

#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <deque>
#include <numbers>
#include <vector>

#include "hdrforge/color.hpp"
#include "hdrforge/image.hpp"
#include "hdrforge/parallel.hpp"
#include "hdrforge/synthesis.hpp"

namespace hdrforge {

inline constexpr double kMuLaw = 5000.0;

namespace detail {
inline double sign(double v) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); }
} // namespace detail

// ---------------------------------------------------------------------------
// Pixel losses

/// Mean absolute difference over every entry. `grad`, when given, receives
/// sign(pred - target) / count.
template <typename KP, typename KT>
double l1_loss(const Image<KP> &pred, const Image<KT> &target, Field *grad = nullptr) {
    require_same_shape(pred, target, "l1_loss");
    const double n = static_cast<double>(pred.size());
    double acc = 0.0;
    std::vector<double> g(grad ? pred.size() : 0);
    for (std::size_t i = 0; i < pred.size(); ++i) {
        const double d = static_cast<double>(pred[i]) - static_cast<double>(target[i]);
        acc += std::abs(d);
        if (grad)
            g[i] = detail::sign(d) / n;
    }
    if (grad)
        *grad = Field(pred.width(), pred.height(), pred.channels(), std::move(g));
    return acc / n;
}

/// L1 over whole stacks: mean over N pixels x E exposures.
template <typename IP, typename IT>
double l1_loss(const BasicStack<IP> &pred, const BasicStack<IT> &target) {
    require(pred.size() == target.size() && !pred.images.empty(), ErrorKind::invalid_argument,
            "l1_loss: stacks differ in exposure count");
    double acc = 0.0;
    for (std::size_t e = 0; e < pred.size(); ++e)
        acc += l1_loss(pred.images[e], target.images[e]);
    return acc / static_cast<double>(pred.size());
}

namespace detail {
inline std::array<std::array<double, kLevels>, 3> channel_histograms(const LdrImage &img) {
    std::array<std::array<double, kLevels>, 3> h{};
    for (std::size_t i = 0; i < img.size(); ++i)
        h[i % 3][img[i]] += 1.0;
    return h;
}
} // namespace detail

/// (1/L) sum_l |cnt_l(pred) - cnt_l(target)| with L = 256, counted per
/// channel and averaged over the three channels.
inline double histogram_loss(const LdrImage &pred, const LdrImage &target) {
    require_same_shape(pred, target, "histogram_loss");
    const auto hp = detail::channel_histograms(pred);
    const auto ht = detail::channel_histograms(target);
    double acc = 0.0;
    for (std::size_t c = 0; c < 3; ++c)
        for (std::size_t l = 0; l < kLevels; ++l)
            acc += std::abs(hp[c][l] - ht[c][l]);
    return acc / (3.0 * kLevels);
}

/// Exposure-averaged histogram loss.
inline double histogram_loss(const ExposureStack &pred, const ExposureStack &target) {
    require(pred.size() == target.size() && !pred.images.empty(), ErrorKind::invalid_argument,
            "histogram_loss: stacks differ in exposure count");
    double acc = 0.0;
    for (std::size_t e = 0; e < pred.size(); ++e)
        acc += histogram_loss(pred.images[e], target.images[e]);
    return acc / static_cast<double>(pred.size());
}

/// Differentiable histogram loss: each relaxed value spreads unit mass over
/// the 256 levels with Gaussian soft-assignment weights of bandwidth sigma.
inline double soft_histogram_loss(const RelaxedImage &pred, const LdrImage &target, double sigma,
                                  Field *grad = nullptr) {
    require(sigma > 0.0 && std::isfinite(sigma), ErrorKind::invalid_argument, "histogram bandwidth must be > 0");
    require_same_shape(pred, target, "soft_histogram_loss");
    const std::size_t n = pred.size();
    const double inv_var = 1.0 / (sigma * sigma);

    // Soft assignments, stored per entry; log-sum-exp shifted so the nearest
    // level never underflows.
    std::vector<std::array<double, kLevels>> assign(n);
    std::array<std::array<double, kLevels>, 3> soft{};
    for (std::size_t i = 0; i < n; ++i) {
        const double x = pred[i];
        const double nearest = std::round(x);
        double total = 0.0;
        for (int l = 0; l < kLevels; ++l) {
            const double d = x - l;
            const double d0 = x - nearest;
            const double k = std::exp(-0.5 * (d * d - d0 * d0) * inv_var);
            assign[i][static_cast<std::size_t>(l)] = k;
            total += k;
        }
        for (auto &a : assign[i])
            a /= total;
        for (std::size_t l = 0; l < kLevels; ++l)
            soft[i % 3][l] += assign[i][l];
    }
    const auto hard = detail::channel_histograms(target);

    double acc = 0.0;
    std::array<std::array<double, kLevels>, 3> diff_sign{};
    for (std::size_t c = 0; c < 3; ++c)
        for (std::size_t l = 0; l < kLevels; ++l) {
            const double d = soft[c][l] - hard[c][l];
            acc += std::abs(d);
            diff_sign[c][l] = detail::sign(d);
        }
    const double scale = 1.0 / (3.0 * kLevels);

    if (grad) {
        std::vector<double> g(n);
        for (std::size_t i = 0; i < n; ++i) {
            const double x = pred[i];
            // d a_l / dx = a_l (u_l - sum_m a_m u_m), u_l = -(x - l) / sigma^2
            double mean_u = 0.0;
            for (int l = 0; l < kLevels; ++l)
                mean_u += assign[i][static_cast<std::size_t>(l)] * (-(x - l) * inv_var);
            double gi = 0.0;
            for (int l = 0; l < kLevels; ++l) {
                const auto L = static_cast<std::size_t>(l);
                gi += diff_sign[i % 3][L] * assign[i][L] * (-(x - l) * inv_var - mean_u);
            }
            g[i] = scale * gi;
        }
        *grad = Field(pred.width(), pred.height(), 3, std::move(g));
    }
    return acc * scale;
}

/// (1/N) sum_i |ln(1 + mu pred_i) - ln(1 + mu target_i)| over every entry.
inline double mu_law_hdr_loss(const HdrImage &pred, const HdrImage &target, double mu = kMuLaw,
                              Field *grad = nullptr) {
    require_same_shape(pred, target, "mu_law_hdr_loss");
    require(mu > 0.0, ErrorKind::invalid_argument, "mu must be > 0");
    const double n = static_cast<double>(pred.size());
    double acc = 0.0;
    std::vector<double> g(grad ? pred.size() : 0);
    for (std::size_t i = 0; i < pred.size(); ++i) {
        const double d = std::log1p(mu * pred[i]) - std::log1p(mu * target[i]);
        acc += std::abs(d);
        if (grad)
            g[i] = detail::sign(d) * mu / (1.0 + mu * pred[i]) / n;
    }
    if (grad)
        *grad = Field(pred.width(), pred.height(), pred.channels(), std::move(g));
    return acc / n;
}

/// mu-law loss as a function of log radiance (E = exp(ln E)).
inline LogObjective mu_law_log_objective(HdrImage target, double mu = kMuLaw) {
    return [target = std::move(target), mu](const Field &log_radiance, Field *grad) {
        const HdrImage pred = exp_field(log_radiance);
        if (!grad)
            return mu_law_hdr_loss(pred, target, mu);
        Field dE;
        const double value = mu_law_hdr_loss(pred, target, mu, &dE);
        std::vector<double> g(dE.size());
        for (std::size_t i = 0; i < g.size(); ++i)
            g[i] = dE[i] * pred[i];
        *grad = Field(dE.width(), dE.height(), dE.channels(), std::move(g));
        return value;
    };
}

/// Mean squared log-radiance error against a strictly positive target.
inline LogObjective log_l2_objective(const HdrImage &target) {
    std::vector<double> log_target(target.size());
    for (std::size_t i = 0; i < target.size(); ++i) {
        require(target[i] > 0.0, ErrorKind::invalid_argument, "log_l2 target must be strictly positive");
        log_target[i] = std::log(target[i]);
    }
    return [log_target = std::move(log_target)](const Field &log_radiance, Field *grad) {
        require(log_radiance.size() == log_target.size(), ErrorKind::invalid_argument, "log_l2: shape mismatch");
        const double n = static_cast<double>(log_target.size());
        double acc = 0.0;
        std::vector<double> g(grad ? log_target.size() : 0);
        for (std::size_t i = 0; i < log_target.size(); ++i) {
            const double d = log_radiance[i] - log_target[i];
            acc += d * d;
            if (grad)
                g[i] = 2.0 * d / n;
        }
        if (grad)
            *grad = Field(log_radiance.width(), log_radiance.height(), log_radiance.channels(), std::move(g));
        return acc / n;
    };
}

// ---------------------------------------------------------------------------
// Edges

/// Binary per-pixel edge mask.
struct EdgeMap {
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> data;

    std::uint8_t at(int x, int y) const {
        return data[static_cast<std::size_t>(y) * static_cast<std::size_t>(width) + static_cast<std::size_t>(x)];
    }
    std::size_t count() const {
        std::size_t n = 0;
        for (auto v : data)
            n += v;
        return n;
    }
    friend bool operator==(const EdgeMap &, const EdgeMap &) = default;
};

struct CannyOptions {
    double sigma = 2.0;
    double low = 0.1;  // fraction of the maximum gradient magnitude
    double high = 0.2; // fraction of the maximum gradient magnitude
    std::array<double, 3> gray_weights = kBt709;
};

namespace detail {

inline std::vector<double> gaussian_kernel(double sigma) {
    const int radius = static_cast<int>(std::ceil(3.0 * sigma));
    std::vector<double> k(static_cast<std::size_t>(2 * radius + 1));
    double total = 0.0;
    for (int i = -radius; i <= radius; ++i) {
        const double v = std::exp(-0.5 * i * i / (sigma * sigma));
        k[static_cast<std::size_t>(i + radius)] = v;
        total += v;
    }
    for (auto &v : k)
        v /= total;
    return k;
}

/// Separable blur of a single-channel plane with edge clamping.
inline std::vector<double> blur(const std::vector<double> &src, int w, int h, double sigma) {
    const auto k = gaussian_kernel(sigma);
    const int r = static_cast<int>(k.size() / 2);
    const auto at = [w](int x, int y) { return static_cast<std::size_t>(y) * static_cast<std::size_t>(w) + static_cast<std::size_t>(x); };
    std::vector<double> tmp(src.size()), out(src.size());
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            double acc = 0.0;
            for (int i = -r; i <= r; ++i)
                acc += k[static_cast<std::size_t>(i + r)] * src[at(std::clamp(x + i, 0, w - 1), y)];
            tmp[at(x, y)] = acc;
        }
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            double acc = 0.0;
            for (int i = -r; i <= r; ++i)
                acc += k[static_cast<std::size_t>(i + r)] * tmp[at(x, std::clamp(y + i, 0, h - 1))];
            out[at(x, y)] = acc;
        }
    return out;
}

} // namespace detail

/// Canny edge detector: grayscale, Gaussian blur, central-difference
/// gradients, 4-direction non-maximum suppression, hysteresis with
/// 8-connectivity. Thresholds are fractions of the largest magnitude.
inline EdgeMap canny(const LdrImage &img, const CannyOptions &opt = {}) {
    require(opt.sigma > 0.0, ErrorKind::invalid_argument, "canny sigma must be > 0");
    require(opt.low > 0.0 && opt.low < opt.high && opt.high <= 1.0, ErrorKind::invalid_argument,
            "canny thresholds must satisfy 0 < low < high <= 1");
    const int w = img.width();
    const int h = img.height();
    const auto at = [w](int x, int y) { return static_cast<std::size_t>(y) * static_cast<std::size_t>(w) + static_cast<std::size_t>(x); };

    const Field gray = grayscale(img, opt.gray_weights);
    const auto smooth = detail::blur(std::vector<double>(gray.values().begin(), gray.values().end()), w, h, opt.sigma);

    std::vector<double> mag(smooth.size()), gx(smooth.size()), gy(smooth.size());
    double max_mag = 0.0;
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            const std::size_t i = at(x, y);
            gx[i] = 0.5 * (smooth[at(std::min(x + 1, w - 1), y)] - smooth[at(std::max(x - 1, 0), y)]);
            gy[i] = 0.5 * (smooth[at(x, std::min(y + 1, h - 1))] - smooth[at(x, std::max(y - 1, 0))]);
            mag[i] = std::hypot(gx[i], gy[i]);
            max_mag = std::max(max_mag, mag[i]);
        }

    EdgeMap out{w, h, std::vector<std::uint8_t>(smooth.size(), 0)};
    if (max_mag <= 0.0)
        return out;

    const auto mag_at = [&](int x, int y) { return (x < 0 || y < 0 || x >= w || y >= h) ? 0.0 : mag[at(x, y)]; };
    std::vector<double> thin(mag.size(), 0.0);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            const std::size_t i = at(x, y);
            if (mag[i] <= 0.0)
                continue;
            double angle = std::atan2(gy[i], gx[i]) * 180.0 / std::numbers::pi;
            if (angle < 0.0)
                angle += 180.0;
            int dx = 1, dy = 0;
            if (angle >= 22.5 && angle < 67.5) {
                dx = 1;
                dy = 1;
            } else if (angle >= 67.5 && angle < 112.5) {
                dx = 0;
                dy = 1;
            } else if (angle >= 112.5 && angle < 157.5) {
                dx = -1;
                dy = 1;
            }
            // Strict on one side so plateaus of equal magnitude stay one pixel wide.
            if (mag[i] > mag_at(x - dx, y - dy) && mag[i] >= mag_at(x + dx, y + dy))
                thin[i] = mag[i];
        }

    const double high_t = opt.high * max_mag;
    const double low_t = opt.low * max_mag;
    std::deque<std::pair<int, int>> frontier;
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            if (thin[at(x, y)] >= high_t) {
                out.data[at(x, y)] = 1;
                frontier.emplace_back(x, y);
            }
    while (!frontier.empty()) {
        const auto [x, y] = frontier.front();
        frontier.pop_front();
        for (int oy = -1; oy <= 1; ++oy)
            for (int ox = -1; ox <= 1; ++ox) {
                const int nx = x + ox, ny = y + oy;
                if (nx < 0 || ny < 0 || nx >= w || ny >= h)
                    continue;
                const std::size_t j = at(nx, ny);
                if (out.data[j] == 0 && thin[j] >= low_t && thin[j] > 0.0) {
                    out.data[j] = 1;
                    frontier.emplace_back(nx, ny);
                }
            }
    }
    return out;
}

/// Mean |pred - canny(target)| over pixels.
inline double edge_loss(const EdgeMap &pred_edges, const LdrImage &target, const CannyOptions &opt = {}) {
    require(pred_edges.width == target.width() && pred_edges.height == target.height(), ErrorKind::invalid_argument,
            "edge_loss: shape mismatch");
    const EdgeMap ref = canny(target, opt);
    double acc = 0.0;
    for (std::size_t i = 0; i < ref.data.size(); ++i)
        acc += std::abs(static_cast<double>(pred_edges.data[i]) - static_cast<double>(ref.data[i]));
    return acc / static_cast<double>(ref.data.size());
}

// ---------------------------------------------------------------------------
// Contextual bilateral loss

/// Feature vectors with normalized spatial coordinates in [0, 1]^2.
struct FeatureSet {
    std::vector<std::vector<double>> features;
    std::vector<std::array<double, 2>> coords;

    std::size_t dimension() const { return features.empty() ? 0 : features.front().size(); }

    void validate() const {
        require(!features.empty(), ErrorKind::invalid_argument, "FeatureSet is empty");
        require(features.size() == coords.size(), ErrorKind::invalid_argument,
                "FeatureSet: features and coords differ in length");
        const std::size_t d = dimension();
        require(d >= 1, ErrorKind::invalid_argument, "FeatureSet: zero feature dimension");
        for (const auto &f : features)
            require(f.size() == d, ErrorKind::invalid_argument, "FeatureSet: ragged feature dimension");
    }
};

inline constexpr double kSpatialWeight = 0.1;

/// 1 - cos(a, b). Two zero vectors count as identical; one zero vector is
/// orthogonal to everything.
inline double cosine_distance(std::span<const double> a, std::span<const double> b) {
    double dot = 0.0, na = 0.0, nb = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) {
        dot += a[k] * b[k];
        na += a[k] * a[k];
        nb += b[k] * b[k];
    }
    if (na == 0.0 || nb == 0.0)
        return (na == 0.0 && nb == 0.0) ? 0.0 : 1.0;
    return std::max(0.0, 1.0 - dot / std::sqrt(na * nb));
}

/// (1/M) sum_j min_k [D_cos(p_j, q_k) + w_s |c(p_j) - c(q_k)|^2]. Ties keep
/// the smallest k.
inline double cobi_loss(const FeatureSet &p, const FeatureSet &q, double spatial_weight = kSpatialWeight) {
    p.validate();
    q.validate();
    require(p.dimension() == q.dimension(), ErrorKind::invalid_argument, "cobi_loss: feature dimensions differ");
    require(spatial_weight >= 0.0, ErrorKind::invalid_argument, "cobi_loss: spatial weight must be >= 0");
    std::vector<double> best(p.features.size());
    parallel_for(best.size(), [&](std::size_t begin, std::size_t end) {
        for (std::size_t j = begin; j < end; ++j) {
            double m = std::numeric_limits<double>::infinity();
            for (std::size_t k = 0; k < q.features.size(); ++k) {
                const double dx = p.coords[j][0] - q.coords[k][0];
                const double dy = p.coords[j][1] - q.coords[k][1];
                const double d = cosine_distance(p.features[j], q.features[k]) + spatial_weight * (dx * dx + dy * dy);
                if (d < m)
                    m = d;
            }
            best[j] = m;
        }
    });
    double acc = 0.0;
    for (double v : best)
        acc += v;
    return acc / static_cast<double>(best.size());
}

/// Flattened RGB patches (values / 255) on a regular grid; coordinates are
/// patch centers normalized by the image size.
inline FeatureSet patch_features(const LdrImage &img, int patch, int stride) {
    require(patch >= 1 && patch <= std::min(img.width(), img.height()), ErrorKind::invalid_argument,
            "patch size must be in [1, min(width, height)]");
    require(stride >= 1, ErrorKind::invalid_argument, "stride must be >= 1");
    FeatureSet out;
    for (int y0 = 0; y0 + patch <= img.height(); y0 += stride)
        for (int x0 = 0; x0 + patch <= img.width(); x0 += stride) {
            std::vector<double> f;
            f.reserve(static_cast<std::size_t>(patch * patch * 3));
            for (int y = y0; y < y0 + patch; ++y)
                for (int x = x0; x < x0 + patch; ++x)
                    for (int c = 0; c < 3; ++c)
                        f.push_back(img.at(x, y, c) / 255.0);
            out.features.push_back(std::move(f));
            out.coords.push_back({(x0 + 0.5 * patch) / img.width(), (y0 + 0.5 * patch) / img.height()});
        }
    return out;
}

// ---------------------------------------------------------------------------
// Refinement objective

struct RefineWeights {
    double l1 = 1.0;
    double hdr = 1.0;
    double cobi = 0.1;
};

struct RefineTerms {
    double l1 = 0.0;
    double hdr = 0.0;
    double cobi = 0.0;
    double total = 0.0;
};

/// Weighted sum of the stack L1, mu-law HDR and CoBi terms.
template <typename IP, typename IT>
RefineTerms composite_refine_loss(const BasicStack<IP> &pred_stack, const BasicStack<IT> &target_stack,
                                  const HdrImage &pred_hdr, const HdrImage &target_hdr,
                                  const FeatureSet &features_pred, const FeatureSet &features_target,
                                  const RefineWeights &lambdas = {}, double mu = kMuLaw,
                                  double spatial_weight = kSpatialWeight) {
    RefineTerms t;
    t.l1 = l1_loss(pred_stack, target_stack);
    t.hdr = mu_law_hdr_loss(pred_hdr, target_hdr, mu);
    t.cobi = cobi_loss(features_pred, features_target, spatial_weight);
    t.total = lambdas.l1 * t.l1 + lambdas.hdr * t.hdr + lambdas.cobi * t.cobi;
    return t;
}

} // namespace hdrforge
