// Copyright Contributors to the steepgs project
// SPDX-License-Identifier: Apache-2.0

#include "steepgs/cli.hpp"
#include "steepgs/io.hpp"

#include <gtest/gtest.h>

#include <filesystem>
#include <sstream>

using namespace steepgs;
namespace fs = std::filesystem;

namespace {

struct Result {
    int code;
    std::string out;
    std::string err;
};

Result
run(std::vector<std::string> args, const std::string &input = "") {
    args.insert(args.begin(), "steepgs");
    std::vector<const char *> argv;
    for (const auto &a : args)
        argv.push_back(a.c_str());
    std::ostringstream out, err;
    std::istringstream in(input);
    const int code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err, in);
    return {code, out.str(), err.str()};
}

/// A 16x16 two-blob target and a config training on it.
fs::path
make_fixture(const std::string &name) {
    const fs::path dir = fs::temp_directory_path() / ("steepgs_cli_" + name);
    fs::remove_all(dir);
    fs::create_directories(dir);
    Scene truth;
    for (int i = 0; i < 2; ++i) {
        Gaussian g;
        g.id = i;
        g.position = Vec3(0.3 + 0.4 * i, 0.5, 0.0);
        g.scale = Vec3(0.1, 0.15, 1.0);
        g.opacity = 0.9;
        g.color = Vec3(0.8, 0.4 + 0.3 * i, 0.2);
        truth.primitives.push_back(g);
    }
    const Camera cam = Camera::planar(16, 16, 1.0 / 16);
    atomic_write(dir / "target.ppm", encode_ppm(render(truth, cam).image));
    atomic_write(dir / "config.json", R"({
  "mode": "planar",
  "output_dir": ")" + (dir / "out").string() + R"(",
  "views": [{"target": "target.ppm", "camera": {"pixel_scale": 0.0625}}],
  "init": {"count": 4, "seed": 3},
  "train": {"steps": 200, "log_interval": 10, "seed": 1},
  "densify": {"interval": 50, "warmup": 50}
})");
    return dir;
}

int
count_lines(const std::string &text) {
    return static_cast<int>(std::count(text.begin(), text.end(), '\n'));
}

} // namespace

TEST(Cli, EigenDiagonal) {
    const Result r = run({"eigen"}, "3 0 0\n0 2 0\n0 0 1\n");
    EXPECT_EQ(r.code, kExitOk);
    EXPECT_EQ(r.out, "lambda 1  v [0, 0, 1]\nlambda 2  v [0, 1, 0]\nlambda 3  v [1, 0, 0]\n");
}

TEST(Cli, EigenTwoByTwo) {
    const Result r = run({"eigen"}, "5 0 0 7");
    EXPECT_EQ(r.code, kExitOk);
    EXPECT_EQ(r.out.rfind("lambda 5  v [1, 0]", 0), 0u);
}

TEST(Cli, EigenRejectsBadInput) {
    EXPECT_EQ(run({"eigen"}, "1 2 3").code, kExitConfig);
    EXPECT_EQ(run({"eigen"}, "1 2 0 1").code, kExitConfig);
    EXPECT_EQ(run({"eigen"}, "1 x 0 1").code, kExitConfig);
}

TEST(Cli, UsageErrors) {
    EXPECT_EQ(run({}).code, kExitUsage);
    EXPECT_EQ(run({"frobnicate"}).code, kExitUsage);
    EXPECT_EQ(run({"train"}).code, kExitUsage);
    EXPECT_EQ(run({"--help"}).code, kExitOk);
}

TEST(Cli, MissingConfigFile) {
    EXPECT_EQ(run({"train", "--config", "/nonexistent/steepgs.json"}).code, kExitMissingFile);
}

TEST(Cli, UnknownKeyIsConfigError) {
    const fs::path dir = make_fixture("unknown");
    const Result r = run({"train", "--config", (dir / "config.json").string(), "--set", "train.stepz=5"});
    EXPECT_EQ(r.code, kExitConfig);
    EXPECT_NE(r.err.find("stepz"), std::string::npos);
}

TEST(Cli, UnknownCheckIsConfigError) {
    EXPECT_EQ(run({"verify", "--filter", "nope"}).code, kExitConfig);
}

TEST(Cli, TrainOneStepWritesOneRow) {
    const fs::path dir = make_fixture("one");
    const Result r = run({"train", "--config", (dir / "config.json").string(), "--set", "train.steps=1"});
    ASSERT_EQ(r.code, kExitOk) << r.err;
    const std::string csv = read_file(dir / "out" / "metrics.csv");
    EXPECT_EQ(count_lines(csv), 2);
    EXPECT_EQ(csv.rfind("step,loss,psnr,n_points,policy_event\n1,", 0), 0u);
    EXPECT_TRUE(fs::exists(dir / "out" / "scene.json"));
    EXPECT_TRUE(fs::exists(dir / "out" / "render_0.ppm"));
    EXPECT_TRUE(fs::exists(dir / "out" / "config.json"));
}

TEST(Cli, ConfigRoundTrip) {
    const fs::path dir = make_fixture("roundtrip");
    const std::vector<std::string> sets{"train.optimizer=adam", "densify.budget=3", "densify.adc_prefilter=true"};
    const ExperimentConfig cfg = load_config(dir / "config.json", sets);
    EXPECT_EQ(cfg.train.optimizer, Optimizer::Adam);
    EXPECT_EQ(cfg.train.densify.budget, 3);
    EXPECT_TRUE(cfg.train.densify.adcPrefilter);
    const std::string text = config_to_json(cfg);
    EXPECT_EQ(config_to_json(parse_config(text, dir)), text);
}

TEST(Cli, CompareMatchesIndependentRuns) {
    const fs::path dir = make_fixture("compare");
    const std::string config = (dir / "config.json").string();
    const Result c = run({"compare", "sdc", "none", "--config", config});
    ASSERT_EQ(c.code, kExitOk) << c.err;
    const std::string cmp = read_file(dir / "out" / "compare.csv");
    EXPECT_EQ(count_lines(cmp), 1 + 200 / 10);
    EXPECT_TRUE(fs::exists(dir / "out" / "loss.svg"));

    for (const char *policy : {"sdc", "none"}) {
        const fs::path single = dir / (std::string("single_") + policy);
        const Result t = run({"train", "--config", config, "--set", std::string("train.policy=") + policy, "--set",
                              "output_dir=" + single.string()});
        ASSERT_EQ(t.code, kExitOk) << t.err;
        EXPECT_EQ(read_file(single / "metrics.csv"), read_file(dir / "out" / policy / "metrics.csv"));
        EXPECT_EQ(read_file(single / "scene.json"), read_file(dir / "out" / policy / "scene.json"));
    }
}

TEST(Cli, RenderSavedScene) {
    const fs::path dir = make_fixture("render");
    Scene s;
    s.primitives.emplace_back();
    s.primitives[0].position = Vec3(2.0, 2.0, 0.0);
    atomic_write(dir / "scene.json", scene_to_json(s));
    atomic_write(dir / "cam.json", camera_to_json(Camera::planar(4, 4, 1.0)));
    const Result r = run({"render", "--scene", (dir / "scene.json").string(), "--camera",
                          (dir / "cam.json").string(), "--out", (dir / "img.ppm").string()});
    ASSERT_EQ(r.code, kExitOk) << r.err;
    const Image img = load_ppm(dir / "img.ppm");
    EXPECT_EQ(img.width, 4);
    EXPECT_EQ(run({"render", "--scene", (dir / "scene.json").string(), "--camera", (dir / "cam.json").string(),
                   "--out", (dir / "x.ppm").string(), "--mode", "weird"})
                  .code,
              kExitConfig);
}

TEST(Cli, CheckpointsWritten) {
    const fs::path dir = make_fixture("ckpt");
    const Result r = run({"train", "--config", (dir / "config.json").string(), "--set", "train.steps=40", "--set",
                          "checkpoint_dir=" + (dir / "ck").string(), "--set", "checkpoint_interval=20"});
    ASSERT_EQ(r.code, kExitOk) << r.err;
    EXPECT_TRUE(fs::exists(dir / "ck" / "ckpt_0000020.json"));
    EXPECT_TRUE(fs::exists(dir / "ck" / "ckpt_0000040.json"));
}
