// SPDX-License-Identifier: Apache-2.0
// Copyright Contributors to the hdrforge project.
//
// Command-line front end: calibrate -> merge -> tonemap / metrics /
// gradcheck / fit. Results go to stdout as one JSON object per command;
// diagnostics go to stderr.
//
// Exit codes: 0 success, 2 invalid arguments or unreadable inputs,
// 3 insufficient data, 4 numerical failure.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <random>
#include <string>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "hdrforge/hdrforge.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace hdrforge;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInvalid = 2;
constexpr int kExitInsufficient = 3;
constexpr int kExitNumerical = 4;

int exit_code(ErrorKind kind) {
    switch (kind) {
    case ErrorKind::insufficient_data: return kExitInsufficient;
    case ErrorKind::numerical_failure: return kExitNumerical;
    default: return kExitInvalid;
    }
}

void emit(const json &j) { std::cout << j.dump() << std::endl; }

WeightFunction merge_weights(const std::string &name) {
    return name == "hat" ? WeightFunction::hat() : WeightFunction::uniform();
}

// ---------------------------------------------------------------------------

struct CalibrateArgs {
    std::string stack;
    double lambda = kDefaultSmoothness;
    std::string weighting = "hat";
    int per_level = 2;
    int reference = -1;
    int anchor = kDefaultAnchor;
    std::string out;
    int polynomial = 0;
    bool monotone = false;
};

int run_calibrate(const CalibrateArgs &a) {
    const ExposureStack stack = io::read_manifest(a.stack);
    require(stack.size() >= 2, ErrorKind::insufficient_data,
            "insufficient data: calibration needs at least 2 exposures, manifest has " +
                std::to_string(stack.size()));
    const std::size_t reference = a.reference >= 0 ? static_cast<std::size_t>(a.reference) : stack.size() / 2;
    const SampleSet samples = sample_pixels(stack, a.per_level, reference);
    std::cerr << "sampled " << samples.rows() << " locations across " << samples.exposures() << " exposures\n";

    json out{{"command", "calibrate"}, {"samples", samples.rows()}, {"out", a.out}};
    ResponseCurve curve;
    if (a.polynomial > 0) {
        const PolynomialResponse poly = fit_polynomial_crf(samples, a.polynomial);
        curve = to_response_curve(poly, a.anchor);
        json coeffs = json::array();
        for (const auto &c : poly.coefficients)
            coeffs.push_back(c);
        out["method"] = "polynomial";
        out["order"] = a.polynomial;
        out["coefficients"] = coeffs;
    } else {
        const auto weighting = a.weighting == "hat" ? CalibrationWeighting::hat : CalibrationWeighting::none;
        const DebevecSolution sol = solve_debevec(samples, a.lambda, weighting, a.anchor);
        curve = sol.curve;
        json channels = json::array();
        double worst = 0.0;
        for (const auto &d : sol.diagnostics) {
            channels.push_back({{"data_residual", d.data_rms},
                                {"data_term", d.data_term},
                                {"smoothness_term", d.smoothness_term},
                                {"data_rows", d.data_rows},
                                {"unknowns", d.unknowns},
                                {"rank", d.rank},
                                {"condition", d.condition}});
            worst = std::max(worst, d.data_rms);
            std::cerr << "channel: rms residual " << d.data_rms << ", rank " << d.rank << "/" << d.unknowns
                      << ", condition ~" << d.condition << "\n";
        }
        out["method"] = "debevec";
        out["lambda"] = a.lambda;
        out["weighting"] = a.weighting;
        out["channels"] = channels;
        out["data_residual"] = worst;
    }
    if (a.monotone)
        curve = project_monotone(curve);
    out["monotone"] = a.monotone;
    out["anchor"] = curve.anchor_index;
    io::write_crf(curve, a.out);
    emit(out);
    return kExitOk;
}

// ---------------------------------------------------------------------------

struct MergeArgs {
    std::string stack, crf, out;
    std::string weighting = "hat";
};

int run_merge(const MergeArgs &a) {
    const ExposureStack stack = io::read_manifest(a.stack);
    const LinearizedResponse lin = linearize(io::read_crf(a.crf));
    const HdrImage hdr = merge(stack, lin, merge_weights(a.weighting));
    io::write_rgbe(hdr, a.out);
    double lo = hdr[0], hi = hdr[0];
    for (double v : hdr.values()) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    emit({{"command", "merge"},
          {"out", a.out},
          {"width", hdr.width()},
          {"height", hdr.height()},
          {"exposures", stack.size()},
          {"weighting", a.weighting},
          {"min_radiance", lo},
          {"max_radiance", hi}});
    return kExitOk;
}

// ---------------------------------------------------------------------------

struct TonemapArgs {
    std::string in, out;
    std::string op = "reinhard";
    double key = 0.18;
    double white = 0.0;
    double mu = kMuLaw;
};

int run_tonemap(const TonemapArgs &a) {
    const HdrImage hdr = io::read_rgbe(a.in);
    LdrImage ldr;
    if (a.op == "reinhard") {
        ReinhardOptions opt;
        opt.key = a.key;
        if (a.white > 0.0)
            opt.white = a.white;
        ldr = reinhard(hdr, opt);
    } else {
        ldr = mu_law_display(hdr, a.mu);
    }
    io::write_ldr(ldr, a.out);
    emit({{"command", "tonemap"}, {"operator", a.op}, {"out", a.out}, {"width", ldr.width()}, {"height", ldr.height()}});
    return kExitOk;
}

// ---------------------------------------------------------------------------

struct MetricsArgs {
    std::string ref, test;
    bool psnr = false, ssim = false, msssim = false, hdr = false;
};

int run_metrics(const MetricsArgs &a) {
    LdrImage ref, test;
    if (a.hdr) {
        ref = mu_law_display(io::read_rgbe(a.ref));
        test = mu_law_display(io::read_rgbe(a.test));
    } else {
        ref = io::read_ldr(a.ref);
        test = io::read_ldr(a.test);
    }
    require(ref.same_shape(test), ErrorKind::invalid_argument,
            "shape mismatch: " + std::to_string(ref.width()) + "x" + std::to_string(ref.height()) + " vs " +
                std::to_string(test.width()) + "x" + std::to_string(test.height()));
    const bool all = !a.psnr && !a.ssim && !a.msssim;
    json out{{"command", "metrics"}, {"hdr", a.hdr}, {"psnr_cap", kPsnrCap}};
    if (all || a.psnr)
        out["psnr"] = psnr(ref, test);
    if (all || a.ssim)
        out["ssim"] = ssim(ref, test);
    const bool fits_ms = std::min(ref.width(), ref.height()) >= 11 * 16;
    if (a.msssim || (all && fits_ms))
        out["ms_ssim"] = ms_ssim(ref, test);
    emit(out);
    return kExitOk;
}

// ---------------------------------------------------------------------------

struct GradcheckArgs {
    std::string stack, crf, target;
    std::string loss = "mulaw";
    std::string weighting = "uniform";
    double h = 0.25;
    std::uint64_t seed = 0;
    std::size_t samples = 500;
    double tolerance = 1e-6;
    double offset = 0.4;
    double mu = kMuLaw;
};

int run_gradcheck(const GradcheckArgs &a) {
    require(a.h > 0.0 && a.h < 0.5, ErrorKind::invalid_argument, "--h must be in (0, 0.5)");
    require(a.offset >= 0.0 && a.offset < 0.5, ErrorKind::invalid_argument, "--offset must be in [0, 0.5)");
    const ExposureStack stack = io::read_manifest(a.stack);
    const LinearizedResponse lin = linearize(io::read_crf(a.crf));
    const WeightFunction w = merge_weights(a.weighting);

    // Integer intensities sit on breakpoints; move them off with a seeded
    // sub-integer offset so finite differences stay inside one segment.
    RelaxedStack relaxed = to_relaxed(stack);
    std::mt19937_64 rng(a.seed);
    std::uniform_real_distribution<double> jitter(-a.offset, a.offset);
    for (auto &img : relaxed.images)
        for (std::size_t i = 0; i < img.size(); ++i)
            img.set(i, img[i] + jitter(rng));

    LogObjective objective;
    if (a.loss == "sum") {
        objective = sum_log_objective();
    } else {
        HdrImage target;
        if (!a.target.empty()) {
            target = io::read_rgbe(a.target);
        } else {
            // Default target: the merged input at twice the radiance.
            const HdrImage merged = merge(stack, lin, w);
            std::vector<double> v(merged.values().begin(), merged.values().end());
            for (auto &x : v)
                x *= 2.0;
            target = HdrImage(merged.width(), merged.height(), std::move(v));
        }
        objective = a.loss == "mulaw" ? mu_law_log_objective(target, a.mu) : log_l2_objective(target);
    }
    GradCheckOptions opt;
    opt.h = a.h;
    opt.seed = a.seed;
    opt.samples = a.samples;
    opt.tolerance = a.tolerance;
    const GradCheckReport r = grad_check(relaxed, lin, w, objective, opt);
    const bool passed = r.failures == 0 && r.num_checked > 0;
    emit({{"command", "gradcheck"},
          {"loss", a.loss},
          {"h", a.h},
          {"seed", a.seed},
          {"max_rel_err", r.max_rel_err},
          {"num_checked", r.num_checked},
          {"num_skipped", r.num_skipped},
          {"failures", r.failures},
          {"tolerance", a.tolerance},
          {"passed", passed}});
    if (!passed)
        std::cerr << "gradient check failed: " << r.failures << " of " << r.num_checked
                  << " coordinates exceed the tolerance\n";
    return passed ? kExitOk : kExitNumerical;
}

// ---------------------------------------------------------------------------

struct FitArgs {
    std::string target, init, crf, out;
    std::string loss = "mulaw";
    std::string weighting = "uniform";
    FitConfig cfg;
    bool no_halving = false;
};

int run_fit(FitArgs a) {
    const HdrImage target = io::read_rgbe(a.target);
    const RelaxedStack init = to_relaxed(io::read_manifest(a.init));
    const ResponseCurve crf = io::read_crf(a.crf);
    a.cfg.loss = a.loss == "mulaw" ? FitLoss::mu_law_hdr : FitLoss::log_l2;
    a.cfg.step_halving = !a.no_halving;
    const FitTrace trace = fit_stack(target, init, crf, merge_weights(a.weighting), a.cfg);
    const auto files = fit_report(trace, a.out);
    json names = json::array();
    for (const auto &f : files)
        names.push_back(f.filename().string());
    emit({{"command", "fit"},
          {"out", a.out},
          {"steps", a.cfg.steps},
          {"initial_loss", trace.records.front().loss},
          {"final_loss", trace.records.back().loss},
          {"records", trace.records.size()},
          {"final_lr", trace.final_lr},
          {"files", names}});
    return kExitOk;
}

} // namespace

int main(int argc, char **argv) {
    CLI::App app{"hdrforge: differentiable multi-exposure HDR synthesis toolkit"};
    app.require_subcommand(1);

    CalibrateArgs cal;
    auto *c = app.add_subcommand("calibrate", "Recover the inverse camera response from a stack");
    c->add_option("--stack", cal.stack, "Stack manifest (JSON)")->required();
    c->add_option("--lambda", cal.lambda, "Smoothness weight")->check(CLI::NonNegativeNumber);
    c->add_option("--weighting", cal.weighting, "Sample weighting")->check(CLI::IsMember({"hat", "none"}));
    c->add_option("--samples-per-level", cal.per_level, "Locations sampled per intensity level")
        ->check(CLI::PositiveNumber);
    c->add_option("--reference", cal.reference, "Reference exposure index for sampling (default: middle)");
    c->add_option("--anchor", cal.anchor, "Intensity pinned to g = 0")->check(CLI::Range(1, 254));
    c->add_option("--out", cal.out, "Output CRF table (CSV)")->required();
    c->add_option("--polynomial", cal.polynomial, "Fit a polynomial response of this order instead")
        ->check(CLI::Range(1, 9));
    c->add_flag("--monotone", cal.monotone, "Project the curve onto non-decreasing sequences");

    MergeArgs mer;
    auto *m = app.add_subcommand("merge", "Merge a stack into an RGBE radiance map");
    m->add_option("--stack", mer.stack, "Stack manifest (JSON)")->required();
    m->add_option("--crf", mer.crf, "CRF table (CSV)")->required();
    m->add_option("--weighting", mer.weighting, "Merge weights")->check(CLI::IsMember({"hat", "uniform"}));
    m->add_option("--out", mer.out, "Output .hdr")->required();

    TonemapArgs ton;
    auto *t = app.add_subcommand("tonemap", "Tone map an RGBE image to 8 bits");
    t->add_option("--in", ton.in, "Input .hdr")->required();
    t->add_option("--operator", ton.op, "Operator")->check(CLI::IsMember({"reinhard", "mulaw"}));
    t->add_option("--key", ton.key, "Reinhard key")->check(CLI::PositiveNumber);
    t->add_option("--white", ton.white, "Reinhard white point (default: max scaled luminance)");
    t->add_option("--mu", ton.mu, "mu-law compression")->check(CLI::PositiveNumber);
    t->add_option("--out", ton.out, "Output .png or .ppm")->required();

    MetricsArgs met;
    auto *q = app.add_subcommand("metrics", "Compare two images (PSNR cap 99 dB for identical inputs)");
    q->add_option("--ref", met.ref, "Reference image")->required();
    q->add_option("--test", met.test, "Test image")->required();
    q->add_flag("--psnr", met.psnr);
    q->add_flag("--ssim", met.ssim);
    q->add_flag("--msssim", met.msssim);
    q->add_flag("--hdr", met.hdr, "Inputs are .hdr; compare after percentile scaling and mu-law");

    GradcheckArgs gc;
    auto *g = app.add_subcommand("gradcheck", "Check merge gradients against finite differences");
    g->set_help_flag("--help", "Print this help message and exit");
    g->add_option("--stack", gc.stack, "Stack manifest (JSON)")->required();
    g->add_option("--crf", gc.crf, "CRF table (CSV)")->required();
    g->add_option("--loss", gc.loss, "Objective")->check(CLI::IsMember({"mulaw", "logl2", "sum"}));
    g->add_option("--target", gc.target, "Target .hdr (default: merged input x2)");
    g->add_option("--weighting", gc.weighting, "Merge weights")->check(CLI::IsMember({"hat", "uniform"}));
    g->add_option("--h", gc.h, "Finite-difference step, in (0, 0.5)");
    g->add_option("--seed", gc.seed, "Sampling seed");
    g->add_option("--samples", gc.samples, "Coordinates to check");
    g->add_option("--tolerance", gc.tolerance, "Relative error tolerance");
    g->add_option("--offset", gc.offset, "Sub-integer offset amplitude applied to the stack");
    g->add_option("--mu", gc.mu, "mu-law compression")->check(CLI::PositiveNumber);

    FitArgs fit;
    auto *f = app.add_subcommand("fit", "Gradient descent on stack pixels through the merge");
    f->add_option("--target", fit.target, "Target .hdr")->required();
    f->add_option("--init", fit.init, "Initial stack manifest (JSON)")->required();
    f->add_option("--crf", fit.crf, "CRF table (CSV)")->required();
    f->add_option("--steps", fit.cfg.steps, "Iterations")->check(CLI::PositiveNumber);
    f->add_option("--lr", fit.cfg.lr, "Step size per radiance entry")->check(CLI::NonNegativeNumber);
    f->add_option("--loss", fit.loss, "Objective")->check(CLI::IsMember({"mulaw", "logl2"}));
    f->add_option("--weighting", fit.weighting, "Merge weights")->check(CLI::IsMember({"hat", "uniform"}));
    f->add_option("--mu", fit.cfg.mu, "mu-law compression")->check(CLI::PositiveNumber);
    f->add_option("--jitter", fit.cfg.jitter, "Uniform init perturbation amplitude")->check(CLI::NonNegativeNumber);
    f->add_option("--seed", fit.cfg.seed, "Seed for --jitter");
    f->add_option("--record-every", fit.cfg.record_every, "Trace stride")->check(CLI::PositiveNumber);
    f->add_flag("--no-halving", fit.no_halving, "Disable step halving on loss increase");
    f->add_option("--out", fit.out, "Output directory")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp &e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp &e) {
        return app.exit(e);
    } catch (const CLI::ParseError &e) {
        app.exit(e);
        return kExitInvalid;
    }

    if (!configure_threads_from_env()) {
        std::cerr << "HDRFORGE_THREADS must be a positive integer\n";
        return kExitInvalid;
    }

    try {
        if (*c)
            return run_calibrate(cal);
        if (*m)
            return run_merge(mer);
        if (*t)
            return run_tonemap(ton);
        if (*q)
            return run_metrics(met);
        if (*g)
            return run_gradcheck(gc);
        if (*f)
            return run_fit(fit);
    } catch (const Error &e) {
        std::cerr << "error: " << e.what() << "\n";
        return exit_code(e.kind());
    } catch (const std::exception &e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitNumerical;
    }
    return kExitInvalid;
}
