// Copyright Contributors to the steepgs project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "steepgs/primitives.hpp"
#include "steepgs/renderer.hpp"
#include "steepgs/trainer.hpp"

#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace steepgs {

/// Shortest decimal form that reads back to the same double, at most 17 significant digits.
std::string format_float(double v);

/// Writes to a sibling temporary file and renames it over `path`, so a
/// reader never observes a partially written file.
void atomic_write(const std::filesystem::path &path, const std::string &contents);

/// Whole file as a string. Throws FileNotFound.
std::string read_file(const std::filesystem::path &path);

std::string scene_to_json(const Scene &scene);
/// Throws ConfigError on malformed documents.
Scene scene_from_json(const std::string &text);
Scene load_scene(const std::filesystem::path &path);

std::string camera_to_json(const Camera &cam);
Camera camera_from_json(const std::string &text);
Camera load_camera(const std::filesystem::path &path);

/// Binary PPM (P6, maxval 255). Values are clamped to [0, 1] and rounded.
std::string encode_ppm(const Image &image);
Image decode_ppm(const std::string &bytes);
Image load_ppm(const std::filesystem::path &path);

/// step,loss,psnr,n_points,policy_event
std::string metrics_csv(std::span<const TrainRow> rows);

struct CurveSeries {
    std::string label;
    std::vector<double> x;
    std::vector<double> y;
};

/// Line chart with axes, tick labels and a legend.
std::string loss_curve_svg(std::span<const CurveSeries> series, const std::string &title);

} // namespace steepgs
