// SPDX-License-Identifier: Apache-2.0
// Copyright Contributors to the hdrforge project.

#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "hdrforge/image.hpp"

namespace hdrforge {

inline constexpr int kLevels = 256;
inline constexpr int kZMin = 0;
inline constexpr int kZMax = 255;
inline constexpr int kDefaultAnchor = 128;
inline constexpr double kDefaultSmoothness = 100.0;

/// Triangular confidence weight: z - Zmin on the lower half, Zmax - z above.
inline double hat_weight(double z) {
    return z <= 0.5 * (kZMin + kZMax) ? z - kZMin : kZMax - z;
}

// ---------------------------------------------------------------------------
// Sampling

struct SamplePoint {
    int x = 0;
    int y = 0;
    int channel = 0;
    friend bool operator==(const SamplePoint &, const SamplePoint &) = default;
};

/// Intensities of sampled locations across every exposure: one row per
/// location, one column per exposure.
struct SampleSet {
    std::vector<SamplePoint> coords;
    std::vector<std::uint8_t> values; // rows() x exposures(), row-major
    std::vector<double> evs;

    std::size_t rows() const noexcept { return coords.size(); }
    std::size_t exposures() const noexcept { return evs.size(); }
    std::uint8_t value(std::size_t row, std::size_t exposure) const {
        return values[row * exposures() + exposure];
    }
    std::size_t rows_in_channel(int channel) const {
        std::size_t n = 0;
        for (const auto &p : coords)
            n += p.channel == channel ? 1 : 0;
        return n;
    }

    void validate() const {
        require(values.size() == rows() * exposures(), ErrorKind::invalid_argument,
                "SampleSet: value matrix does not match coords x evs");
        for (const auto &p : coords)
            require(p.channel >= 0 && p.channel < 3, ErrorKind::invalid_argument, "SampleSet: bad channel");
    }
};

/// Picks up to `per_level` locations for every intensity level present in
/// the reference image, per channel. Locations for a level are taken from
/// the row-major scan: the first one, then evenly strided through the rest.
template <typename Img>
SampleSet sample_pixels(const BasicStack<Img> &stack, int per_level, std::size_t reference_index) {
    require(stack.size() >= 2, ErrorKind::insufficient_data, "sampling needs at least 2 exposures");
    stack.validate();
    require(reference_index < stack.size(), ErrorKind::invalid_argument, "reference index out of range");
    require(per_level >= 1, ErrorKind::invalid_argument, "per_level must be >= 1");

    const auto &ref = stack.images[reference_index];
    SampleSet out;
    out.evs = stack.evs;
    for (int c = 0; c < 3; ++c) {
        std::array<std::vector<std::size_t>, kLevels> buckets;
        for (std::size_t p = 0; p < ref.pixel_count(); ++p) {
            const double v = static_cast<double>(ref[p * 3 + static_cast<std::size_t>(c)]);
            buckets[quantize_value(v)].push_back(p);
        }
        for (const auto &bucket : buckets) {
            const std::size_t n = bucket.size();
            const std::size_t take = std::min<std::size_t>(n, static_cast<std::size_t>(per_level));
            for (std::size_t k = 0; k < take; ++k) {
                const std::size_t p = bucket[k * n / take];
                out.coords.push_back({static_cast<int>(p % static_cast<std::size_t>(ref.width())),
                                      static_cast<int>(p / static_cast<std::size_t>(ref.width())), c});
                for (const auto &img : stack.images)
                    out.values.push_back(quantize_value(static_cast<double>(img[p * 3 + static_cast<std::size_t>(c)])));
            }
        }
    }
    require(!out.coords.empty(), ErrorKind::insufficient_data, "sampling selected no pixels");
    return out;
}

// ---------------------------------------------------------------------------
// Response curves

/// Tabulated inverse camera response: intensity -> log exposure, per channel,
/// pinned to zero at `anchor_index`.
struct ResponseCurve {
    std::array<std::array<double, kLevels>, 3> g{};
    int anchor_index = kDefaultAnchor;

    const std::array<double, kLevels> &channel(int c) const { return g[static_cast<std::size_t>(c)]; }

    void validate() const {
        require(anchor_index >= 0 && anchor_index < kLevels, ErrorKind::invalid_argument,
                "ResponseCurve: anchor out of range");
        for (const auto &ch : g) {
            for (double v : ch)
                require(std::isfinite(v), ErrorKind::invalid_argument, "ResponseCurve: non-finite entry");
            require(ch[static_cast<std::size_t>(anchor_index)] == 0.0, ErrorKind::invalid_argument,
                    "ResponseCurve: anchor entry is not zero");
        }
    }

    /// Subtracts each channel's anchor value.
    void reanchor() {
        for (auto &ch : g) {
            const double a = ch[static_cast<std::size_t>(anchor_index)];
            for (auto &v : ch)
                v -= a;
        }
    }

    friend bool operator==(const ResponseCurve &, const ResponseCurve &) = default;
};

enum class CalibrationWeighting { none, hat };

struct ChannelDiagnostics {
    double data_term = 0.0;       // sum of squared weighted data residuals
    double data_rms = 0.0;        // sqrt(data_term / data rows)
    double smoothness_term = 0.0; // sum over z of (w(z) g''(z))^2, unscaled by lambda
    std::size_t data_rows = 0;
    std::size_t unknowns = 0;
    long rank = 0;
    double condition = 0.0; // ratio of extreme nonzero |R| diagonal entries
};

struct DebevecSolution {
    ResponseCurve curve;
    /// ln E per sample row; NaN for rows without any usable observation.
    std::vector<double> log_radiance;
    std::array<ChannelDiagnostics, 3> diagnostics{};
};

namespace detail {

inline double calibration_weight(int z, CalibrationWeighting weighting) {
    if (weighting == CalibrationWeighting::hat)
        return hat_weight(z);
    return (z == kZMin || z == kZMax) ? 0.0 : 1.0;
}

inline double smoothness_weight(int z, CalibrationWeighting weighting) {
    return weighting == CalibrationWeighting::hat ? hat_weight(z) : 1.0;
}

inline void require_sample_count(const SampleSet &samples, int channel) {
    const std::size_t n = samples.rows_in_channel(channel);
    require(samples.exposures() >= 2, ErrorKind::insufficient_data,
            "calibration needs at least 2 exposures (P - 1 = 0)");
    require(n * (samples.exposures() - 1) >= 2 * static_cast<std::size_t>(kZMax - kZMin),
            ErrorKind::insufficient_data,
            "insufficient samples in channel " + std::to_string(channel) + ": N*(P-1) = " +
                std::to_string(n * (samples.exposures() - 1)) + " < " + std::to_string(2 * (kZMax - kZMin)));
}

} // namespace detail

/// Recovers the inverse response by weighted linear least squares over the
/// curve values g[0..255] and one log radiance per sample:
///
///   sum_ij w(Z_ij)^2 [g(Z_ij) - ln E_i - EV_j]^2 + lambda sum_z [w(z) g''(z)]^2
///
/// with g[anchor] = 0 eliminated from the unknowns. The residual sign makes
/// ln E = g(Z) - EV hold at the optimum, matching the merge.
inline DebevecSolution solve_debevec(const SampleSet &samples, double lambda = kDefaultSmoothness,
                                     CalibrationWeighting weighting = CalibrationWeighting::hat,
                                     int anchor_index = kDefaultAnchor) {
    samples.validate();
    require(lambda >= 0.0 && std::isfinite(lambda), ErrorKind::invalid_argument, "lambda must be >= 0");
    require(anchor_index > kZMin && anchor_index < kZMax, ErrorKind::invalid_argument,
            "anchor index must lie strictly inside the intensity range");

    DebevecSolution sol;
    sol.curve.anchor_index = anchor_index;
    sol.log_radiance.assign(samples.rows(), std::numeric_limits<double>::quiet_NaN());
    const std::size_t P = samples.exposures();
    const auto g_column = [&](int z) { return z < anchor_index ? z : z - 1; };
    constexpr int kCurveUnknowns = kLevels - 1;

    for (int c = 0; c < 3; ++c) {
        detail::require_sample_count(samples, c);

        // Rows of this channel that have at least one usable observation.
        std::vector<std::size_t> active;
        std::size_t data_rows = 0;
        for (std::size_t i = 0; i < samples.rows(); ++i) {
            if (samples.coords[i].channel != c)
                continue;
            std::size_t used = 0;
            for (std::size_t j = 0; j < P; ++j)
                used += detail::calibration_weight(samples.value(i, j), weighting) > 0.0 ? 1 : 0;
            if (used > 0) {
                active.push_back(i);
                data_rows += used;
            }
        }
        require(!active.empty(), ErrorKind::insufficient_data,
                "channel " + std::to_string(c) + " has no unsaturated samples");

        const Eigen::Index cols = kCurveUnknowns + static_cast<Eigen::Index>(active.size());
        const std::size_t smooth_rows = lambda > 0.0 ? static_cast<std::size_t>(kZMax - kZMin - 1) : 0;
        const Eigen::Index rows = static_cast<Eigen::Index>(data_rows + smooth_rows);
        Eigen::MatrixXd A = Eigen::MatrixXd::Zero(rows, cols);
        Eigen::VectorXd b = Eigen::VectorXd::Zero(rows);

        Eigen::Index r = 0;
        for (std::size_t a = 0; a < active.size(); ++a) {
            const std::size_t i = active[a];
            for (std::size_t j = 0; j < P; ++j) {
                const int z = samples.value(i, j);
                const double w = detail::calibration_weight(z, weighting);
                if (w <= 0.0)
                    continue;
                if (z != anchor_index)
                    A(r, g_column(z)) = w;
                A(r, kCurveUnknowns + static_cast<Eigen::Index>(a)) = -w;
                b(r) = w * samples.evs[j];
                ++r;
            }
        }
        if (lambda > 0.0) {
            const double root = std::sqrt(lambda);
            for (int z = kZMin + 1; z <= kZMax - 1; ++z) {
                const double w = root * detail::smoothness_weight(z, weighting);
                const std::array<std::pair<int, double>, 3> stencil{{{z - 1, w}, {z, -2.0 * w}, {z + 1, w}}};
                for (const auto &[zz, coef] : stencil)
                    if (zz != anchor_index)
                        A(r, g_column(zz)) += coef;
                ++r;
            }
        }

        Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(A);
        const Eigen::VectorXd x = qr.solve(b);
        require(x.allFinite(), ErrorKind::numerical_failure, "least-squares solve produced non-finite values");

        auto &g = sol.curve.g[static_cast<std::size_t>(c)];
        for (int z = 0; z < kLevels; ++z)
            g[static_cast<std::size_t>(z)] = z == anchor_index ? 0.0 : x(g_column(z));
        for (std::size_t a = 0; a < active.size(); ++a)
            sol.log_radiance[active[a]] = x(kCurveUnknowns + static_cast<Eigen::Index>(a));

        auto &d = sol.diagnostics[static_cast<std::size_t>(c)];
        d.data_rows = data_rows;
        d.unknowns = static_cast<std::size_t>(cols);
        d.rank = static_cast<long>(qr.rank());
        const auto R = qr.matrixQR().diagonal().cwiseAbs();
        d.condition = d.rank > 0 ? R(0) / R(d.rank - 1) : std::numeric_limits<double>::infinity();
        for (std::size_t a = 0; a < active.size(); ++a) {
            const std::size_t i = active[a];
            for (std::size_t j = 0; j < P; ++j) {
                const int z = samples.value(i, j);
                const double w = detail::calibration_weight(z, weighting);
                const double res = w * (g[static_cast<std::size_t>(z)] - sol.log_radiance[i] - samples.evs[j]);
                d.data_term += res * res;
            }
        }
        d.data_rms = std::sqrt(d.data_term / static_cast<double>(data_rows));
        for (int z = kZMin + 1; z <= kZMax - 1; ++z) {
            const double second = g[static_cast<std::size_t>(z - 1)] - 2.0 * g[static_cast<std::size_t>(z)] +
                                  g[static_cast<std::size_t>(z + 1)];
            const double w = detail::smoothness_weight(z, weighting);
            d.smoothness_term += (w * second) * (w * second);
        }
    }
    return sol;
}

// ---------------------------------------------------------------------------
// Polynomial response

/// Exposure as a polynomial in normalized intensity m = z / 255, scaled so
/// that f(1) = 1.
struct PolynomialResponse {
    int order = 1;
    std::array<std::vector<double>, 3> coefficients; // c_0 .. c_order

    double evaluate(int channel, double m) const {
        const auto &c = coefficients[static_cast<std::size_t>(channel)];
        double acc = 0.0;
        for (auto it = c.rbegin(); it != c.rend(); ++it)
            acc = acc * m + *it;
        return acc;
    }
};

/// Least-squares fit with known exposure ratios: for consecutive exposures
/// f(m_{j+1}) = R_j f(m_j), R_j = exp(EV_{j+1} - EV_j), subject to f(1) = 1.
/// Pairs touching a clipped value are left out.
inline PolynomialResponse fit_polynomial_crf(const SampleSet &samples, int order) {
    samples.validate();
    require(order >= 1 && order <= 9, ErrorKind::invalid_argument, "polynomial order must be in [1, 9]");
    PolynomialResponse out;
    out.order = order;
    const std::size_t P = samples.exposures();

    for (int c = 0; c < 3; ++c) {
        detail::require_sample_count(samples, c);
        std::vector<std::array<double, 3>> eqs; // m_j, m_{j+1}, R
        for (std::size_t i = 0; i < samples.rows(); ++i) {
            if (samples.coords[i].channel != c)
                continue;
            for (std::size_t j = 0; j + 1 < P; ++j) {
                const int z0 = samples.value(i, j);
                const int z1 = samples.value(i, j + 1);
                if (z0 == kZMin || z0 == kZMax || z1 == kZMin || z1 == kZMax)
                    continue;
                eqs.push_back({z0 / 255.0, z1 / 255.0, std::exp(samples.evs[j + 1] - samples.evs[j])});
            }
        }
        require(eqs.size() >= static_cast<std::size_t>(order), ErrorKind::insufficient_data,
                "too few unclipped exposure pairs for polynomial fit");

        // Eliminate c_K = 1 - sum_{k<K} c_k.
        Eigen::MatrixXd A(static_cast<Eigen::Index>(eqs.size()), order);
        Eigen::VectorXd b(static_cast<Eigen::Index>(eqs.size()));
        for (std::size_t e = 0; e < eqs.size(); ++e) {
            const auto [m0, m1, ratio] = eqs[e];
            const double top0 = std::pow(m0, order);
            const double top1 = std::pow(m1, order);
            for (int k = 0; k < order; ++k)
                A(static_cast<Eigen::Index>(e), k) =
                    (std::pow(m1, k) - top1) - ratio * (std::pow(m0, k) - top0);
            b(static_cast<Eigen::Index>(e)) = -(top1 - ratio * top0);
        }
        const Eigen::VectorXd x = A.colPivHouseholderQr().solve(b);
        require(x.allFinite(), ErrorKind::numerical_failure, "polynomial fit produced non-finite values");
        auto &coef = out.coefficients[static_cast<std::size_t>(c)];
        coef.assign(static_cast<std::size_t>(order) + 1, 0.0);
        double rest = 1.0;
        for (int k = 0; k < order; ++k) {
            coef[static_cast<std::size_t>(k)] = x(k);
            rest -= x(k);
        }
        coef[static_cast<std::size_t>(order)] = rest;
    }
    return out;
}

/// Tabulates ln f(z/255) as a ResponseCurve. Non-positive exposures are
/// floored at `floor_fraction` of f(1) before taking the log.
inline ResponseCurve to_response_curve(const PolynomialResponse &poly, int anchor_index = kDefaultAnchor,
                                       double floor_fraction = 1e-6) {
    ResponseCurve out;
    out.anchor_index = anchor_index;
    for (int c = 0; c < 3; ++c) {
        const double anchor = poly.evaluate(c, anchor_index / 255.0);
        require(anchor > 0.0, ErrorKind::numerical_failure, "polynomial response is not positive at the anchor");
        for (int z = 0; z < kLevels; ++z) {
            const double f = std::max(poly.evaluate(c, z / 255.0), floor_fraction);
            out.g[static_cast<std::size_t>(c)][static_cast<std::size_t>(z)] = std::log(f);
        }
    }
    out.reanchor();
    return out;
}

// ---------------------------------------------------------------------------
// Monotonicity

/// Pool-adjacent-violators isotonic regression with unit weights.
inline std::vector<double> isotonic_fit(std::span<const double> values) {
    struct Block {
        double sum;
        std::size_t count;
        double mean() const { return sum / static_cast<double>(count); }
    };
    std::vector<Block> blocks;
    for (double v : values) {
        blocks.push_back({v, 1});
        while (blocks.size() > 1 && blocks[blocks.size() - 2].mean() > blocks.back().mean()) {
            Block top = blocks.back();
            blocks.pop_back();
            blocks.back().sum += top.sum;
            blocks.back().count += top.count;
        }
    }
    std::vector<double> out;
    out.reserve(values.size());
    for (const auto &b : blocks)
        out.insert(out.end(), b.count, b.mean());
    return out;
}

/// Projects every channel onto non-decreasing sequences, then re-anchors.
inline ResponseCurve project_monotone(const ResponseCurve &crf) {
    ResponseCurve out = crf;
    for (auto &ch : out.g) {
        const auto fitted = isotonic_fit(ch);
        std::copy(fitted.begin(), fitted.end(), ch.begin());
    }
    out.reanchor();
    return out;
}

} // namespace hdrforge
