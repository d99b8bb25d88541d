// Copyright Contributors to the steepgs project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "steepgs/primitives.hpp"

#include <Eigen/Core>

#include <cstdint>
#include <limits>
#include <vector>

namespace steepgs {

/// One RGB triple per row, pixels in row-major image order.
using PixelArray = Eigen::Array<double, Eigen::Dynamic, 3, Eigen::RowMajor>;

struct Image {
    int width = 0;
    int height = 0;
    PixelArray pixels;

    Image() = default;
    Image(int w, int h) : width(w), height(h), pixels(PixelArray::Zero(static_cast<Eigen::Index>(w) * h, 3)) {}

    Eigen::Index
    index(int col, int row) const {
        return static_cast<Eigen::Index>(row) * width + col;
    }

    auto
    at(int col, int row) {
        return pixels.row(index(col, row));
    }

    auto
    at(int col, int row) const {
        return pixels.row(index(col, row));
    }

    bool
    sameShape(const Image &other) const {
        return width == other.width && height == other.height;
    }
};

enum class RenderMode {
    /// C(x) = sum_i c_i sigma_i
    Additive,
    /// C(x) = sum_i c_i T_i sigma_i, T_i = prod_{j<i} (1 - sigma_j), ascending (depth, id)
    Composited,
};

/// Contributions below this sigma are skipped and not taped.
inline constexpr double kDefaultSigmaCutoff = 1.0 / 255.0;

struct RenderOptions {
    RenderMode mode = RenderMode::Composited;
    double sigmaCutoff = kDefaultSigmaCutoff;
};

struct TapeEntry {
    /// Index into Scene::primitives.
    std::uint32_t primitive;
    double sigma;
    /// Transmittance before this primitive; always 1 in additive mode.
    double transmittance;
};

/// Per-pixel ordered contribution lists, stored compressed: the entries of
/// pixel k are entries[offsets[k] .. offsets[k + 1]).
struct RenderTape {
    RenderMode mode = RenderMode::Composited;
    int width = 0;
    int height = 0;
    std::vector<std::size_t> offsets;
    std::vector<TapeEntry> entries;
    /// Projections of every primitive, in scene order.
    std::vector<ProjectedGaussian> projected;
    std::uint64_t fingerprint = 0;

    std::size_t
    pixelCount() const {
        return offsets.empty() ? 0 : offsets.size() - 1;
    }
};

struct RenderResult {
    Image image;
    RenderTape tape;
};

/// Hash of every primitive field, the scene mode and the camera. A tape
/// built for one (scene, camera) pair rejects any other.
std::uint64_t fingerprint(const Scene &scene, const Camera &cam);

/// Scene indices in compositing order: ascending depth, ties by id.
std::vector<std::uint32_t> compositing_order(const Scene &scene);

RenderResult render(const Scene &scene, const Camera &cam, const RenderOptions &options = {});

inline RenderResult
render(const Scene &scene, const Camera &cam, RenderMode mode) {
    return render(scene, cam, RenderOptions{mode, kDefaultSigmaCutoff});
}

/// A camera with its ground-truth image.
struct View {
    Camera cam;
    Image target;
};

enum class LossKind {
    /// mean |r - t|
    L1,
    /// mean (r - t)^2; smooth, used for Taylor-expansion checks
    L2,
};

/// Mean over all pixels and channels of |rendered - target|.
double photometric_loss(const Image &rendered, const Image &target);

double loss_value(LossKind kind, const Image &rendered, const Image &target);

/// dLoss/dRendered per pixel and channel. The l1 subgradient at zero residual is 0.
PixelArray loss_gradient(LossKind kind, const Image &rendered, const Image &target);

/// 10 log10(1 / MSE); +infinity when the images are identical.
double psnr(const Image &rendered, const Image &target);

} // namespace steepgs
