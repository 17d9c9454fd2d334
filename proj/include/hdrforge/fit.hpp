// SPDX-License-Identifier: Apache-2.0
// Copyright Contributors to the hdrforge project.

#pragma once

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "hdrforge/io/manifest.hpp"
#include "hdrforge/io/rgbe.hpp"
#include "hdrforge/objectives.hpp"
#include "hdrforge/synthesis.hpp"

namespace hdrforge {

enum class FitLoss { mu_law_hdr, log_l2 };

struct FitConfig {
    int steps = 500;
    /// Step size per radiance entry: updates descend the summed loss, so the
    /// value does not depend on the image size.
    double lr = 50.0;
    FitLoss loss = FitLoss::mu_law_hdr;
    double mu = kMuLaw;
    double clamp_lo = 0.0;
    double clamp_hi = 255.0;
    std::uint64_t seed = 0;
    /// Uniform perturbation of the initial stack in [-jitter, jitter], drawn
    /// from `seed`. 0 leaves the init untouched.
    double jitter = 0.0;
    int record_every = 1;
    /// Halve lr and retry whenever a step would increase the loss.
    bool step_halving = true;
    int max_halvings = 40;
};

struct FitRecord {
    int step = 0;
    double loss = 0.0;
    double grad_norm = 0.0;
};

struct FitTrace {
    std::vector<FitRecord> records;
    RelaxedStack final_stack;
    HdrImage merged;
    double final_lr = 0.0;
};

namespace detail {

inline RelaxedStack descend(const RelaxedStack &z, const GradientImage &g, double step, double lo, double hi) {
    RelaxedStack out;
    out.evs = z.evs;
    for (std::size_t j = 0; j < z.size(); ++j) {
        const auto &img = z.images[j];
        std::vector<double> v(img.size());
        for (std::size_t i = 0; i < v.size(); ++i)
            v[i] = std::clamp(img[i] - step * g.per_exposure[j][i], lo, hi);
        out.images.emplace_back(img.width(), img.height(), std::move(v));
    }
    return out;
}

} // namespace detail

/// Gradient descent on relaxed stack intensities through merge and the
/// chosen HDR-domain loss: Z <- clamp(Z - lr * N * dL/dZ).
inline FitTrace fit_stack(const HdrImage &target, const RelaxedStack &init, const ResponseCurve &crf,
                          const WeightFunction &w, const FitConfig &cfg) {
    require(cfg.steps >= 1, ErrorKind::invalid_argument, "fit needs at least one step");
    require(cfg.lr >= 0.0 && std::isfinite(cfg.lr), ErrorKind::invalid_argument, "learning rate must be >= 0");
    require(cfg.record_every >= 1, ErrorKind::invalid_argument, "record_every must be >= 1");
    require(cfg.clamp_lo < cfg.clamp_hi && cfg.clamp_lo >= 0.0 && cfg.clamp_hi <= 255.0, ErrorKind::invalid_argument,
            "clamp bounds must satisfy 0 <= lo < hi <= 255");
    init.validate();
    require(target.same_shape(init.width(), init.height(), 3), ErrorKind::invalid_argument,
            "target and stack shapes differ");

    const LinearizedResponse lin = linearize(crf);
    const LogObjective objective =
        cfg.loss == FitLoss::mu_law_hdr ? mu_law_log_objective(target, cfg.mu) : log_l2_objective(target);
    const double entries = static_cast<double>(target.size());

    RelaxedStack z = init;
    if (cfg.jitter > 0.0) {
        std::mt19937_64 rng(cfg.seed);
        std::uniform_real_distribution<double> noise(-cfg.jitter, cfg.jitter);
        for (auto &img : z.images)
            for (std::size_t i = 0; i < img.size(); ++i)
                img.set(i, std::clamp(img[i] + noise(rng), cfg.clamp_lo, cfg.clamp_hi));
    } else {
        for (auto &img : z.images)
            for (std::size_t i = 0; i < img.size(); ++i)
                img.set(i, std::clamp(img[i], cfg.clamp_lo, cfg.clamp_hi));
    }

    const auto evaluate = [&](const RelaxedStack &s, Field *upstream, int step) {
        const double value = objective(merge_log(s, lin, w), upstream);
        if (!std::isfinite(value))
            throw StepFailure("non-finite loss", step);
        return value;
    };

    FitTrace trace;
    Field upstream;
    double loss = evaluate(z, &upstream, 0);
    GradientImage grad = merge_backward(z, lin, w, upstream);
    trace.records.push_back({0, loss, std::sqrt(grad.squared_norm())});

    double lr = cfg.lr;
    for (int step = 1; step <= cfg.steps; ++step) {
        RelaxedStack candidate = detail::descend(z, grad, lr * entries, cfg.clamp_lo, cfg.clamp_hi);
        double candidate_loss = evaluate(candidate, nullptr, step);
        if (cfg.step_halving) {
            int halvings = 0;
            while (candidate_loss > loss && halvings < cfg.max_halvings) {
                lr *= 0.5;
                ++halvings;
                candidate = detail::descend(z, grad, lr * entries, cfg.clamp_lo, cfg.clamp_hi);
                candidate_loss = evaluate(candidate, nullptr, step);
            }
        }
        if (!cfg.step_halving || candidate_loss <= loss) {
            z = std::move(candidate);
            loss = evaluate(z, &upstream, step);
            grad = merge_backward(z, lin, w, upstream);
        }
        if (step % cfg.record_every == 0 || step == cfg.steps)
            trace.records.push_back({step, loss, std::sqrt(grad.squared_norm())});
    }
    trace.final_lr = lr;
    trace.merged = merge(z, lin, w);
    trace.final_stack = std::move(z);
    return trace;
}

inline std::string format_trace_csv(const FitTrace &trace) {
    std::string out = "step,loss,grad_norm\n";
    char buf[96];
    for (const auto &r : trace.records) {
        std::snprintf(buf, sizeof buf, "%d,%.17g,%.17g\n", r.step, r.loss, r.grad_norm);
        out += buf;
    }
    return out;
}

/// Writes trace.csv, the quantized final stack (stack_<j>.ppm plus
/// stack.json) and the merged result (merged.hdr) into `dir`.
inline std::vector<std::filesystem::path> fit_report(const FitTrace &trace, const std::filesystem::path &dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    require(!ec, ErrorKind::io, "cannot create directory " + dir.string());
    std::vector<std::filesystem::path> written;

    written.push_back(dir / "trace.csv");
    io::write_text(written.back(), format_trace_csv(trace));

    io::StackManifest manifest;
    for (std::size_t j = 0; j < trace.final_stack.size(); ++j) {
        const std::string name = "stack_" + std::to_string(j) + ".ppm";
        written.push_back(dir / name);
        io::write_ldr(quantize(trace.final_stack.images[j]), written.back());
        manifest.entries.push_back({name, trace.final_stack.evs[j], ExposureUnit::natural_log});
    }
    written.push_back(dir / "stack.json");
    io::write_manifest(manifest, written.back());

    written.push_back(dir / "merged.hdr");
    io::write_rgbe(trace.merged, written.back());
    return written;
}

} // namespace hdrforge
