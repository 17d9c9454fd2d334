// SPDX-License-Identifier: Apache-2.0
// Copyright Contributors to the hdrforge project.

#pragma once

#include <array>
#include <cmath>
#include <functional>
#include <random>
#include <vector>

#include "hdrforge/calibration.hpp"
#include "hdrforge/image.hpp"
#include "hdrforge/parallel.hpp"

namespace hdrforge {

// ---------------------------------------------------------------------------
// Merge weights

enum class WeightKind { hat, uniform };

/// Tabulated merge weight; fractional intensities interpolate the table.
class WeightFunction {
  public:
    explicit WeightFunction(WeightKind kind = WeightKind::hat) : kind_(kind) {
        for (int z = 0; z < kLevels; ++z)
            table_[static_cast<std::size_t>(z)] = kind == WeightKind::hat ? hat_weight(z) : 1.0;
    }

    static WeightFunction hat() { return WeightFunction(WeightKind::hat); }
    static WeightFunction uniform() { return WeightFunction(WeightKind::uniform); }

    WeightKind kind() const noexcept { return kind_; }
    const std::array<double, kLevels> &table() const noexcept { return table_; }

    double operator()(double z) const {
        const double zc = std::clamp(z, 0.0, 255.0);
        const auto lo = static_cast<std::size_t>(std::floor(zc));
        if (lo >= kLevels - 1)
            return table_[kLevels - 1];
        const double t = zc - static_cast<double>(lo);
        return t == 0.0 ? table_[lo] : table_[lo] + t * (table_[lo + 1] - table_[lo]);
    }

  private:
    WeightKind kind_;
    std::array<double, kLevels> table_{};
};

// ---------------------------------------------------------------------------
// Piecewise-linear response

/// A response curve extended to real intensities by linear interpolation
/// between table nodes. slopes[0] = g[0]; slopes[z] = g[z] - g[z-1].
struct LinearizedResponse {
    ResponseCurve base;
    std::array<std::array<double, kLevels>, 3> slopes{};
};

inline LinearizedResponse linearize(const ResponseCurve &crf) {
    crf.validate();
    LinearizedResponse lin{crf, {}};
    for (int c = 0; c < 3; ++c) {
        const auto &g = crf.channel(c);
        auto &s = lin.slopes[static_cast<std::size_t>(c)];
        s[0] = g[0];
        for (std::size_t z = 1; z < kLevels; ++z)
            s[z] = g[z] - g[z - 1];
    }
    return lin;
}

namespace detail {

inline void require_intensity(double z) {
    require(z >= 0.0 && z <= 255.0, ErrorKind::invalid_argument,
            "intensity " + std::to_string(z) + " outside [0, 255]");
}

inline double eval_g_unchecked(const LinearizedResponse &lin, double z, int c) {
    const auto &g = lin.base.channel(c);
    const double lo = std::floor(z);
    const auto k = static_cast<std::size_t>(lo);
    if (z == lo)
        return g[k];
    return g[k] + (z - lo) * lin.slopes[static_cast<std::size_t>(c)][k + 1];
}

inline double deriv_g_unchecked(const LinearizedResponse &lin, double z, int c) {
    const auto &s = lin.slopes[static_cast<std::size_t>(c)];
    if (z == 0.0)
        return s[0];
    return s[static_cast<std::size_t>(std::max(1.0, std::ceil(z)))];
}

} // namespace detail

/// Curve value at a real intensity; exact table value at integers.
inline double eval_g(const LinearizedResponse &lin, double z, int channel) {
    detail::require_intensity(z);
    return detail::eval_g_unchecked(lin, z, channel);
}

/// Slope of the segment (z-1, z] containing the intensity; s[0] at zero.
inline double deriv_g(const LinearizedResponse &lin, double z, int channel) {
    detail::require_intensity(z);
    return detail::deriv_g_unchecked(lin, z, channel);
}

// ---------------------------------------------------------------------------
// Forward merge

namespace detail {

/// Merge coefficients of one pixel/channel: normalized weights over the
/// exposures, falling back to uniform ones when every weight is zero.
template <typename Img>
void pixel_coefficients(const BasicStack<Img> &stack, const WeightFunction &w, std::size_t idx,
                        std::vector<double> &ratio, bool &fallback) {
    const std::size_t P = stack.size();
    ratio.resize(P);
    double total = 0.0;
    for (std::size_t j = 0; j < P; ++j) {
        ratio[j] = w(static_cast<double>(stack.images[j][idx]));
        total += ratio[j];
    }
    fallback = total <= 0.0;
    for (std::size_t j = 0; j < P; ++j)
        ratio[j] = fallback ? 1.0 / static_cast<double>(P) : ratio[j] / total;
}

template <typename Img>
void require_compatible(const BasicStack<Img> &stack, const LinearizedResponse &) {
    stack.validate();
    require(stack.channels() == 3, ErrorKind::invalid_argument, "stack and response channel counts differ");
}

} // namespace detail

/// Per-pixel log radiance: ln E = sum_j w_j (g(Z_j) - EV_j) / sum_j w_j.
template <typename Img>
Field merge_log(const BasicStack<Img> &stack, const LinearizedResponse &lin, const WeightFunction &w) {
    detail::require_compatible(stack, lin);
    const std::size_t P = stack.size();
    std::vector<double> out(stack.images.front().size());
    parallel_for(out.size(), [&](std::size_t begin, std::size_t end) {
        std::vector<double> ratio;
        bool fallback = false;
        for (std::size_t idx = begin; idx < end; ++idx) {
            const int c = static_cast<int>(idx % 3);
            detail::pixel_coefficients(stack, w, idx, ratio, fallback);
            double acc = 0.0;
            for (std::size_t j = 0; j < P; ++j)
                acc += ratio[j] * (detail::eval_g_unchecked(lin, static_cast<double>(stack.images[j][idx]), c) -
                                   stack.evs[j]);
            out[idx] = acc;
        }
    });
    return Field(stack.width(), stack.height(), 3, std::move(out));
}

inline HdrImage exp_field(const Field &log_radiance) {
    std::vector<double> out(log_radiance.size());
    for (std::size_t i = 0; i < out.size(); ++i)
        out[i] = std::exp(log_radiance[i]);
    return HdrImage(log_radiance.width(), log_radiance.height(), std::move(out));
}

/// Merged linear radiance E = exp(ln E).
template <typename Img>
HdrImage merge(const BasicStack<Img> &stack, const LinearizedResponse &lin, const WeightFunction &w) {
    return exp_field(merge_log(stack, lin, w));
}

// ---------------------------------------------------------------------------
// Backward pass

/// dL/dZ for every stack entry, one 3-channel field per exposure.
struct GradientImage {
    std::vector<Field> per_exposure;

    double squared_norm() const {
        double acc = 0.0;
        for (const auto &f : per_exposure)
            for (double v : f.values())
                acc += v * v;
        return acc;
    }
};

/// dL/dZ_j = dL/dlnE * (w_j / sum_k w_k) * g'(Z_j). Weights are constants
/// of the backward pass; all-clipped pixels use the uniform fallback.
template <typename Img>
GradientImage merge_backward(const BasicStack<Img> &stack, const LinearizedResponse &lin, const WeightFunction &w,
                             const Field &upstream) {
    detail::require_compatible(stack, lin);
    require(upstream.same_shape(stack.width(), stack.height(), 3), ErrorKind::invalid_argument,
            "upstream gradient shape does not match the merged image");
    const std::size_t P = stack.size();
    const std::size_t n = upstream.size();
    std::vector<std::vector<double>> grads(P, std::vector<double>(n));
    parallel_for(n, [&](std::size_t begin, std::size_t end) {
        std::vector<double> ratio;
        bool fallback = false;
        for (std::size_t idx = begin; idx < end; ++idx) {
            const int c = static_cast<int>(idx % 3);
            detail::pixel_coefficients(stack, w, idx, ratio, fallback);
            for (std::size_t j = 0; j < P; ++j)
                grads[j][idx] = ratio[j] == 0.0 ? 0.0
                                                : upstream[idx] * ratio[j] *
                                                      detail::deriv_g_unchecked(
                                                          lin, static_cast<double>(stack.images[j][idx]), c);
        }
    });
    GradientImage out;
    for (auto &g : grads)
        out.per_exposure.emplace_back(stack.width(), stack.height(), 3, std::move(g));
    return out;
}

// ---------------------------------------------------------------------------
// Gradient check

/// Scalar loss of a log-radiance field. When `grad` is non-null it receives
/// dL/dlnE with the same shape.
using LogObjective = std::function<double(const Field &log_radiance, Field *grad)>;

inline LogObjective zero_objective() {
    return [](const Field &f, Field *grad) {
        if (grad)
            *grad = Field(f.width(), f.height(), f.channels());
        return 0.0;
    };
}

/// L = sum of ln E (identity upstream).
inline LogObjective sum_log_objective() {
    return [](const Field &f, Field *grad) {
        double acc = 0.0;
        for (double v : f.values())
            acc += v;
        if (grad)
            *grad = Field::filled(f.width(), f.height(), 1.0, f.channels());
        return acc;
    };
}

struct GradCheckReport {
    double max_rel_err = 0.0;
    std::size_t num_checked = 0;
    std::size_t num_skipped = 0;
    std::size_t failures = 0;
};

struct GradCheckOptions {
    double h = 0.25;
    std::uint64_t seed = 0;
    std::size_t samples = 500;
    double tolerance = 1e-6;
    /// Denominator floor for the relative error.
    double abs_floor = 1e-14;
};

/// Compares merge_backward against central differences of the merged
/// objective. Each coordinate is perturbed by +-h with the merge weights held
/// at their unperturbed values (the backward pass treats them as constants).
/// Coordinates closer than h to an integer breakpoint, or whose +-h range
/// leaves [0, 255], are skipped.
inline GradCheckReport grad_check(const RelaxedStack &stack, const LinearizedResponse &lin, const WeightFunction &w,
                                  const LogObjective &objective, const GradCheckOptions &opt = {}) {
    require(opt.h > 0.0 && opt.h < 0.5, ErrorKind::invalid_argument, "gradcheck step h must be in (0, 0.5)");
    const Field log_radiance = merge_log(stack, lin, w);
    Field upstream;
    objective(log_radiance, &upstream);
    const GradientImage analytic = merge_backward(stack, lin, w, upstream);

    const std::size_t P = stack.size();
    const std::size_t n = log_radiance.size();
    std::mt19937_64 rng(opt.seed);
    std::uniform_int_distribution<std::size_t> pick_exposure(0, P - 1);
    std::uniform_int_distribution<std::size_t> pick_index(0, n - 1);

    GradCheckReport report;
    std::vector<double> ratio;
    bool fallback = false;
    const std::size_t max_attempts = 50 * std::max<std::size_t>(opt.samples, 1);
    for (std::size_t attempt = 0; attempt < max_attempts && report.num_checked < opt.samples; ++attempt) {
        const std::size_t j = pick_exposure(rng);
        const std::size_t idx = pick_index(rng);
        const double z = stack.images[j][idx];
        const double dist = std::abs(z - std::round(z));
        if (dist < opt.h || z - opt.h < 0.0 || z + opt.h > 255.0) {
            ++report.num_skipped;
            continue;
        }
        const int c = static_cast<int>(idx % 3);
        detail::pixel_coefficients(stack, w, idx, ratio, fallback);
        const auto perturbed = [&](double dz) {
            double acc = 0.0;
            for (std::size_t k = 0; k < P; ++k) {
                const double zk = k == j ? z + dz : static_cast<double>(stack.images[k][idx]);
                acc += ratio[k] * (detail::eval_g_unchecked(lin, zk, c) - stack.evs[k]);
            }
            Field f = log_radiance;
            f.set(idx, acc);
            return objective(f, nullptr);
        };
        const double numeric = (perturbed(opt.h) - perturbed(-opt.h)) / (2.0 * opt.h);
        const double exact = analytic.per_exposure[j][idx];
        const double denom = std::max({std::abs(exact), std::abs(numeric), opt.abs_floor});
        const double rel = std::abs(exact - numeric) / denom;
        report.max_rel_err = std::max(report.max_rel_err, rel);
        report.failures += rel > opt.tolerance ? 1 : 0;
        ++report.num_checked;
    }
    return report;
}

} // namespace hdrforge
