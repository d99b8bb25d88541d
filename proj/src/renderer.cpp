// Copyright Contributors to the steepgs project
// SPDX-License-Identifier: Apache-2.0

#include "steepgs/renderer.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <numeric>

namespace steepgs {

namespace {

class Fnv1a {
  public:
    void
    add(const void *data, std::size_t size) {
        const auto *bytes = static_cast<const unsigned char *>(data);
        for (std::size_t i = 0; i < size; ++i) {
            hash_ ^= bytes[i];
            hash_ *= 1099511628211ull;
        }
    }

    template <typename Derived>
    void
    add(const Eigen::DenseBase<Derived> &m) {
        for (Eigen::Index r = 0; r < m.rows(); ++r)
            for (Eigen::Index c = 0; c < m.cols(); ++c)
                addScalar(m(r, c));
    }

    void
    addScalar(double v) {
        add(&v, sizeof v);
    }

    std::uint64_t
    value() const {
        return hash_;
    }

  private:
    std::uint64_t hash_ = 14695981039346656037ull;
};

void
check_same_shape(const Image &a, const Image &b) {
    if (!a.sameShape(b) || a.pixels.rows() != b.pixels.rows())
        throw DimensionMismatch("image dimensions differ: " + std::to_string(a.width) + "x" +
                                std::to_string(a.height) + " vs " + std::to_string(b.width) + "x" +
                                std::to_string(b.height));
}

/// Pixel rows/cols a primitive can reach with sigma >= cutoff.
struct PixelBox {
    int col0, col1, row0, row1; // inclusive
};

PixelBox
reach_box(const ProjectedGaussian &pg, const Camera &cam, double cutoff) {
    PixelBox full{0, cam.width - 1, 0, cam.height - 1};
    if (!(cutoff > 0.0))
        return full;
    if (pg.opacity < cutoff)
        return {0, -1, 0, -1};
    // sigma >= cutoff  <=>  d^T conic d <= 2 ln(o / cutoff); the ellipse's
    // axis-aligned extent is sqrt(k * cov_xx) by sqrt(k * cov_yy)
    const double k = 2.0 * std::log(pg.opacity / cutoff) * (1.0 + 1e-9);
    const double rx = std::sqrt(k * pg.cov(0, 0)) + 1e-12;
    const double ry = std::sqrt(k * pg.cov(1, 1)) + 1e-12;
    const double s = cam.pixelScale;
    // pixel centers (c + 0.5) s within [mean - r, mean + r]
    const double c0 = std::ceil((pg.mean.x() - rx) / s - 0.5);
    const double c1 = std::floor((pg.mean.x() + rx) / s - 0.5);
    const double r0 = std::ceil((pg.mean.y() - ry) / s - 0.5);
    const double r1 = std::floor((pg.mean.y() + ry) / s - 0.5);
    auto clampi = [](double v, int lo, int hi) {
        if (v < lo)
            return lo;
        if (v > hi)
            return hi;
        return static_cast<int>(v);
    };
    PixelBox box{clampi(c0, 0, cam.width), clampi(c1, -1, cam.width - 1), clampi(r0, 0, cam.height),
                 clampi(r1, -1, cam.height - 1)};
    return box;
}

} // namespace

std::uint64_t
fingerprint(const Scene &scene, const Camera &cam) {
    Fnv1a h;
    const int mode = static_cast<int>(scene.mode);
    h.add(&mode, sizeof mode);
    for (const auto &g : scene.primitives) {
        h.add(&g.id, sizeof g.id);
        h.add(g.position);
        h.add(g.scale);
        h.add(g.rotation);
        h.addScalar(g.opacity);
        h.add(g.color);
        h.addScalar(g.depth);
    }
    h.add(cam.P);
    h.add(cam.b);
    h.add(&cam.width, sizeof cam.width);
    h.add(&cam.height, sizeof cam.height);
    h.addScalar(cam.pixelScale);
    return h.value();
}

std::vector<std::uint32_t>
compositing_order(const Scene &scene) {
    std::vector<std::uint32_t> order(scene.size());
    std::iota(order.begin(), order.end(), 0u);
    std::stable_sort(order.begin(), order.end(), [&](std::uint32_t a, std::uint32_t b) {
        const auto &ga = scene.primitives[a];
        const auto &gb = scene.primitives[b];
        if (ga.depth != gb.depth)
            return ga.depth < gb.depth;
        return ga.id < gb.id;
    });
    return order;
}

RenderResult
render(const Scene &scene, const Camera &cam, const RenderOptions &options) {
    cam.validate();
    if (options.mode == RenderMode::Composited) {
        for (const auto &g : scene.primitives)
            if (!std::isfinite(g.depth))
                throw InvalidArgument("render: composited mode needs finite depth keys");
    }

    RenderResult out;
    out.image = Image(cam.width, cam.height);
    RenderTape &tape = out.tape;
    tape.mode = options.mode;
    tape.width = cam.width;
    tape.height = cam.height;
    tape.fingerprint = fingerprint(scene, cam);
    tape.projected.reserve(scene.size());
    for (const auto &g : scene.primitives)
        tape.projected.push_back(project_gaussian(g, cam));

    const std::vector<std::uint32_t> order = compositing_order(scene);
    std::vector<PixelBox> boxes(scene.size());
    for (std::size_t i = 0; i < scene.size(); ++i)
        boxes[i] = reach_box(tape.projected[i], cam, options.sigmaCutoff);

    // primitives touching each row, already in compositing order
    std::vector<std::vector<std::uint32_t>> rowLists(cam.height);
    for (std::uint32_t idx : order) {
        const PixelBox &box = boxes[idx];
        for (int r = box.row0; r <= box.row1; ++r)
            rowLists[r].push_back(idx);
    }

    const bool composited = options.mode == RenderMode::Composited;
    tape.offsets.assign(static_cast<std::size_t>(cam.pixelCount()) + 1, 0);
    for (int row = 0; row < cam.height; ++row) {
        for (int col = 0; col < cam.width; ++col) {
            const Vec2 x = cam.pixelCenter(col, row);
            const Eigen::Index pix = out.image.index(col, row);
            Eigen::Array3d color = Eigen::Array3d::Zero();
            double T = 1.0;
            for (std::uint32_t idx : rowLists[row]) {
                const PixelBox &box = boxes[idx];
                if (col < box.col0 || col > box.col1)
                    continue;
                const double sigma = tape.projected[idx].sigma(x);
                if (sigma < options.sigmaCutoff)
                    continue;
                const auto &c = scene.primitives[idx].color;
                if (composited) {
                    color += c.array() * (sigma * T);
                    tape.entries.push_back({idx, sigma, T});
                    T *= 1.0 - sigma;
                } else {
                    color += c.array() * sigma;
                    tape.entries.push_back({idx, sigma, 1.0});
                }
            }
            out.image.pixels.row(pix) = color.transpose();
            tape.offsets[pix + 1] = tape.entries.size();
        }
    }
    return out;
}

double
photometric_loss(const Image &rendered, const Image &target) {
    return loss_value(LossKind::L1, rendered, target);
}

double
loss_value(LossKind kind, const Image &rendered, const Image &target) {
    check_same_shape(rendered, target);
    if (rendered.pixels.size() == 0)
        return 0.0;
    const PixelArray diff = rendered.pixels - target.pixels;
    switch (kind) {
    case LossKind::L1:
        return diff.abs().mean();
    case LossKind::L2:
        return diff.square().mean();
    }
    return 0.0;
}

PixelArray
loss_gradient(LossKind kind, const Image &rendered, const Image &target) {
    check_same_shape(rendered, target);
    const double n = static_cast<double>(rendered.pixels.size());
    const PixelArray diff = rendered.pixels - target.pixels;
    switch (kind) {
    case LossKind::L1:
        // sign() is 0 at zero residual
        return diff.sign() / n;
    case LossKind::L2:
        return 2.0 * diff / n;
    }
    return PixelArray::Zero(diff.rows(), 3);
}

double
psnr(const Image &rendered, const Image &target) {
    check_same_shape(rendered, target);
    const double mse = (rendered.pixels - target.pixels).square().mean();
    if (mse == 0.0)
        return std::numeric_limits<double>::infinity();
    return 10.0 * std::log10(1.0 / mse);
}

} // namespace steepgs
