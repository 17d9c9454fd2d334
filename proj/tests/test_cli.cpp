// SPDX-License-Identifier: Apache-2.0
// Copyright Contributors to the hdrforge project.

#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdio>
#include <fstream>
#include <nlohmann/json.hpp>

#include "support.hpp"

using namespace hdrforge;
using namespace testing_support;
using nlohmann::json;

namespace {

struct Outcome {
    int code = -1;
    std::string out;
    std::string err;
    json result() const { return json::parse(out); }
};

class CliTest : public ::testing::Test {
  protected:
    CliTest() : dir_("cli") {}

    std::filesystem::path path(const std::string &name) const { return dir_ / name; }

    Outcome run(const std::string &args, const std::string &env = "") const {
        const auto out = path("stdout.txt"), err = path("stderr.txt");
        const std::string cmd = env + " \"" HDRFORGE_CLI "\" " + args + " >\"" + out.string() + "\" 2>\"" +
                                err.string() + "\"";
        const int status = std::system(cmd.c_str());
        Outcome r;
        r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
        r.out = io::read_text(out);
        r.err = io::read_text(err);
        return r;
    }

    std::string quoted(const std::string &name) const { return "\"" + path(name).string() + "\""; }

    // Writes the stack images and a manifest; EVs in stops.
    void write_stack(const ExposureStack &stack, const std::vector<double> &stops, const std::string &name) {
        io::StackManifest m;
        for (std::size_t j = 0; j < stack.size(); ++j) {
            const std::string file = name + "_" + std::to_string(j) + ".ppm";
            io::write_ldr(stack.images[j], path(file));
            m.entries.push_back({file, stops[j], ExposureUnit::stops});
        }
        io::write_manifest(m, path(name + ".json"));
    }

    void write_camera_stack(const std::string &name = "stack") {
        const GammaCamera cam;
        const std::vector<double> stops{-2.0, 0.0, 2.0};
        std::vector<double> evs;
        for (double s : stops)
            evs.push_back(s * kLn2);
        write_stack(render_stack(gradient_scene(48, 48), evs, cam), stops, name);
    }

    ScratchDir dir_;
};

} // namespace

TEST_F(CliTest, CalibrateWritesFullTable) {
    write_camera_stack();
    const Outcome r = run("calibrate --stack " + quoted("stack.json") + " --out " + quoted("crf.csv"));
    ASSERT_EQ(r.code, 0) << r.err;
    const json j = r.result();
    EXPECT_EQ(j["command"], "calibrate");
    EXPECT_EQ(j["anchor"], 128);
    const std::string csv = io::read_text(path("crf.csv"));
    EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 257);
    EXPECT_NO_THROW(io::read_crf(path("crf.csv")));
}

TEST_F(CliTest, CalibrateNeedsTwoExposures) {
    const ExposureStack one = make_stack<LdrImage>({LdrImage::filled(8, 8, 100)}, {0.0});
    write_stack(one, {0.0}, "single");
    const Outcome r = run("calibrate --stack " + quoted("single.json") + " --out " + quoted("crf.csv"));
    EXPECT_EQ(r.code, 3);
    EXPECT_NE(r.err.find("insufficient"), std::string::npos) << r.err;
}

TEST_F(CliTest, CalibrateNoiselessLinearStackHasNoResidual) {
    // A linear camera at exposure ratios 1:2:3, so every level z links to
    // 2z and 3z. Four copies of each level give enough equations.
    std::vector<LdrImage> images(3, LdrImage(84, 4));
    for (int y = 0; y < 4; ++y)
        for (int n = 1; n <= 84; ++n)
            for (int c = 0; c < 3; ++c)
                for (int j = 0; j < 3; ++j)
                    images[j].set(n - 1, y, c, static_cast<std::uint8_t>((j + 1) * n));
    const std::vector<double> evs{0.0, std::log(2.0), std::log(3.0)};
    io::StackManifest m;
    for (std::size_t j = 0; j < 3; ++j) {
        const std::string file = "linear_" + std::to_string(j) + ".ppm";
        io::write_ldr(images[j], path(file));
        m.entries.push_back({file, evs[j], ExposureUnit::natural_log});
    }
    io::write_manifest(m, path("linear.json"));
    const Outcome r = run("calibrate --stack " + quoted("linear.json") +
                          " --lambda 0 --reference 0 --samples-per-level 4 --out " + quoted("crf.csv"));
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_LT(r.result()["data_residual"].get<double>(), 1e-10);
}

TEST_F(CliTest, CalibrateRejectsBadFlags) {
    write_camera_stack();
    EXPECT_EQ(run("calibrate --stack " + quoted("stack.json") + " --out " + quoted("c.csv") + " --lambda -1").code, 2);
    EXPECT_EQ(run("calibrate --stack " + quoted("stack.json") + " --out " + quoted("c.csv") + " --anchor 0").code, 2);
    EXPECT_EQ(run("calibrate --stack " + quoted("missing.json") + " --out " + quoted("c.csv")).code, 2);
    EXPECT_EQ(run("frobnicate").code, 2);
}

TEST_F(CliTest, MergeMatchesLibrary) {
    write_camera_stack();
    const ResponseCurve crf = gamma_curve(2.2);
    io::write_crf(crf, path("crf.csv"));
    const Outcome r = run("merge --stack " + quoted("stack.json") + " --crf " + quoted("crf.csv") + " --out " +
                      quoted("out.hdr"));
    ASSERT_EQ(r.code, 0) << r.err;
    const HdrImage expected = merge(io::read_manifest(path("stack.json")), linearize(crf), WeightFunction::hat());
    EXPECT_EQ(io::read_file(path("out.hdr")), io::encode_rgbe_file(expected));
    EXPECT_EQ(r.result()["width"], 48);
}

TEST_F(CliTest, MergeMissingCrfIsInvalid) {
    write_camera_stack();
    const Outcome r = run("merge --stack " + quoted("stack.json") + " --crf " + quoted("nope.csv") + " --out " +
                      quoted("out.hdr"));
    EXPECT_EQ(r.code, 2);
    EXPECT_FALSE(r.err.empty());
}

TEST_F(CliTest, TonemapZeroImageIsBlack) {
    io::write_rgbe(HdrImage(6, 5), path("zero.hdr"));
    const Outcome r = run("tonemap --in " + quoted("zero.hdr") + " --out " + quoted("zero.png"));
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_EQ(io::read_ldr(path("zero.png")), LdrImage(6, 5));
    EXPECT_EQ(run("tonemap --in " + quoted("zero.hdr") + " --out " + quoted("z.png") + " --operator drago").code, 2);
}

TEST_F(CliTest, TonemapMatchesLibrary) {
    std::mt19937_64 rng(1);
    const HdrImage hdr = random_hdr(12, 9, rng);
    io::write_rgbe(hdr, path("in.hdr"));
    const HdrImage decoded = io::read_rgbe(path("in.hdr"));
    ASSERT_EQ(run("tonemap --in " + quoted("in.hdr") + " --out " + quoted("out.ppm") + " --key 0.3").code, 0);
    ReinhardOptions opt;
    opt.key = 0.3;
    EXPECT_EQ(io::read_ldr(path("out.ppm")), reinhard(decoded, opt));
}

TEST_F(CliTest, MetricsOnIdenticalAndMismatchedImages) {
    std::mt19937_64 rng(2);
    const LdrImage a = random_ldr(32, 32, rng), b = random_ldr(32, 32, rng);
    io::write_ldr(a, path("a.png"));
    io::write_ldr(b, path("b.ppm"));
    io::write_ldr(LdrImage(32, 31), path("c.ppm"));

    const Outcome same = run("metrics --ref " + quoted("a.png") + " --test " + quoted("a.png"));
    ASSERT_EQ(same.code, 0) << same.err;
    EXPECT_EQ(same.result()["psnr"].get<double>(), 99.0);
    EXPECT_NEAR(same.result()["ssim"].get<double>(), 1.0, 1e-12);
    EXPECT_FALSE(same.result().contains("ms_ssim"));

    const Outcome diff = run("metrics --ref " + quoted("a.png") + " --test " + quoted("b.ppm") + " --psnr");
    ASSERT_EQ(diff.code, 0);
    EXPECT_DOUBLE_EQ(diff.result()["psnr"].get<double>(), psnr(a, b));
    EXPECT_FALSE(diff.result().contains("ssim"));

    EXPECT_EQ(run("metrics --ref " + quoted("a.png") + " --test " + quoted("c.ppm")).code, 2);
}

TEST_F(CliTest, GradcheckPassesAndIsDeterministic) {
    write_camera_stack();
    io::write_crf(gamma_curve(2.2), path("crf.csv"));
    const std::string args = "gradcheck --stack " + quoted("stack.json") + " --crf " + quoted("crf.csv") + " --seed 4";
    const Outcome a = run(args), b = run(args);
    ASSERT_EQ(a.code, 0) << a.out << a.err;
    EXPECT_EQ(a.out, b.out);
    const json j = a.result();
    EXPECT_TRUE(j["passed"].get<bool>());
    EXPECT_GE(j["num_checked"].get<int>(), 500);
    EXPECT_LT(j["max_rel_err"].get<double>(), 1e-6);

    EXPECT_EQ(run(args + " --h 0.6").code, 2);
    EXPECT_EQ(run(args + " --loss hinge").code, 2);
}

TEST_F(CliTest, FitWritesReport) {
    std::mt19937_64 rng(3);
    std::vector<LdrImage> images;
    for (int j = 0; j < 3; ++j)
        images.push_back(random_ldr(8, 8, rng, 40, 215));
    const ExposureStack stack = make_stack<LdrImage>(images, {-1.0, 0.0, 1.0}, ExposureUnit::stops);
    write_stack(stack, {-1.0, 0.0, 1.0}, "init");
    const ResponseCurve crf = gamma_curve(2.2);
    io::write_crf(crf, path("crf.csv"));
    io::write_rgbe(merge(stack, linearize(crf), WeightFunction::uniform()), path("target.hdr"));

    const Outcome r = run("fit --target " + quoted("target.hdr") + " --init " + quoted("init.json") + " --crf " +
                      quoted("crf.csv") + " --steps 25 --jitter 10 --seed 1 --out " + quoted("fit"));
    ASSERT_EQ(r.code, 0) << r.err;
    const json j = r.result();
    EXPECT_LE(j["final_loss"].get<double>(), j["initial_loss"].get<double>());
    EXPECT_EQ(j["records"], 26);
    for (const char *f : {"trace.csv", "stack.json", "merged.hdr", "stack_2.ppm"})
        EXPECT_TRUE(std::filesystem::exists(path("fit") / f)) << f;

    EXPECT_EQ(run("fit --target " + quoted("absent.hdr") + " --init " + quoted("init.json") + " --crf " +
                  quoted("crf.csv") + " --out " + quoted("fit2"))
                  .code,
              2);
}

TEST_F(CliTest, RejectsBadThreadSetting) {
    io::write_ldr(LdrImage(16, 16), path("a.ppm"));
    EXPECT_EQ(run("metrics --ref " + quoted("a.ppm") + " --test " + quoted("a.ppm"), "HDRFORGE_THREADS=zero").code, 2);
    EXPECT_EQ(run("metrics --ref " + quoted("a.ppm") + " --test " + quoted("a.ppm"), "HDRFORGE_THREADS=2").code, 0);
}
