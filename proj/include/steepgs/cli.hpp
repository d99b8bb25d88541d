// Copyright Contributors to the steepgs project
// SPDX-License-Identifier: Apache-2.0
//
// Experiment configuration and the `steepgs` command-line front end.
//
// Exit codes: 0 success, 1 runtime failure, 2 usage error, 3 malformed
// configuration or input document, 4 missing file, 5 a property check failed.

#pragma once

#include "steepgs/density.hpp"
#include "steepgs/primitives.hpp"
#include "steepgs/renderer.hpp"
#include "steepgs/trainer.hpp"

#include <array>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace steepgs {

enum ExitCode : int {
    kExitOk = 0,
    kExitRuntime = 1,
    kExitUsage = 2,
    kExitConfig = 3,
    kExitMissingFile = 4,
    kExitCheckFailed = 5,
};

struct ViewSource {
    std::filesystem::path target;
    Camera camera;
};

struct InitSpec {
    int count = 64;
    std::uint64_t seed = 0;
    /// Start from a saved scene instead of seeded initialization.
    std::optional<std::filesystem::path> scene;
};

struct ExperimentConfig {
    SceneMode mode = SceneMode::Planar;
    std::filesystem::path outputDir = "out";
    std::optional<std::filesystem::path> checkpointDir;
    int checkpointInterval = 0;
    std::vector<ViewSource> views;
    InitSpec init;
    TrainConfig train;
    std::array<DensifyPolicy, 2> compare{DensifyPolicy::Sdc, DensifyPolicy::Adc};
};

/// Parses a JSON config, applying dotted `key=value` overrides first.
/// Relative input paths resolve against `baseDir`; the output and
/// checkpoint directories stay relative to the working directory. Unknown
/// keys are rejected with ConfigError.
ExperimentConfig parse_config(const std::string &text, const std::filesystem::path &baseDir,
                              std::span<const std::string> overrides = {});

ExperimentConfig load_config(const std::filesystem::path &path, std::span<const std::string> overrides = {});

/// Every field with its effective value; parsing it back yields the same config.
std::string config_to_json(const ExperimentConfig &cfg);

struct LoadedExperiment {
    std::vector<View> views;
    Scene initial;
};

/// Reads the targets and builds the initial scene.
LoadedExperiment load_experiment(const ExperimentConfig &cfg);

/// Trains one policy and writes metrics.csv, densify.log, scene.json,
/// render_<k>.ppm and config.json into `outDir`; checkpoints go to the
/// configured checkpoint directory.
TrainReport run_experiment(const ExperimentConfig &cfg, const LoadedExperiment &data, DensifyPolicy policy,
                           const std::filesystem::path &outDir, std::ostream &log);

/// step,loss_A,loss_B,n_A,n_B over the steps both reports logged.
std::string compare_csv(const TrainReport &a, const TrainReport &b);

/// Entry point of the `steepgs` executable.
int run_cli(int argc, const char *const *argv, std::ostream &out, std::ostream &err, std::istream &in);

} // namespace steepgs
