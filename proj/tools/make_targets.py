#!/usr/bin/env python3
# Copyright Contributors to the steepgs project
# SPDX-License-Identifier: Apache-2.0
"""Regenerates the 64x64 synthetic targets under data/targets.

Each image is rendered at 4x4 supersampling and box-filtered, so edges are
anti-aliased. Output is binary PPM (P6).
"""

import argparse
import pathlib

import numpy as np

SIZE = 64
SS = 4


def grid():
    n = SIZE * SS
    c = (np.arange(n) + 0.5) / n
    return np.meshgrid(c, c)  # x (columns), y (rows) in [0, 1]


def downsample(img):
    return img.reshape(SIZE, SS, SIZE, SS, 3).mean(axis=(1, 3))


def blobs():
    x, y = grid()
    rng = np.random.default_rng(7)
    img = np.zeros(x.shape + (3,))
    for _ in range(9):
        cx, cy = rng.uniform(0.15, 0.85, 2)
        sx, sy = rng.uniform(0.04, 0.14, 2)
        th = rng.uniform(0, np.pi)
        dx, dy = x - cx, y - cy
        u = np.cos(th) * dx + np.sin(th) * dy
        v = -np.sin(th) * dx + np.cos(th) * dy
        w = np.exp(-0.5 * ((u / sx) ** 2 + (v / sy) ** 2))
        img += w[..., None] * rng.uniform(0.2, 0.9, 3)
    return np.clip(img, 0, 1)


def shapes():
    x, y = grid()
    img = np.full(x.shape + (3,), 0.08)
    disc = (x - 0.32) ** 2 + (y - 0.34) ** 2 < 0.2 ** 2
    img[disc] = (0.9, 0.35, 0.2)
    box = (np.abs(x - 0.7) < 0.16) & (np.abs(y - 0.66) < 0.22)
    img[box] = (0.2, 0.55, 0.9)
    tri = (y > 0.62) & (y < 0.92) & (np.abs(x - 0.3) < (y - 0.62) * 0.7)
    img[tri] = (0.95, 0.85, 0.3)
    return img


def rings():
    x, y = grid()
    r = np.hypot(x - 0.5, y - 0.5)
    a = np.arctan2(y - 0.5, x - 0.5)
    band = 0.5 + 0.5 * np.cos(2 * np.pi * r / 0.16)
    fade = np.clip(1.2 - 2.2 * r, 0, 1)
    img = np.stack(
        [
            band * fade * (0.6 + 0.4 * np.cos(a)),
            band * fade * (0.6 + 0.4 * np.sin(a)),
            (1 - band) * fade * 0.7,
        ],
        axis=-1,
    )
    return np.clip(img, 0, 1)


def write_ppm(path, img):
    data = np.clip(np.rint(img * 255), 0, 255).astype(np.uint8)
    with open(path, "wb") as f:
        f.write(b"P6\n%d %d\n255\n" % (SIZE, SIZE))
        f.write(data.tobytes())


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", default=pathlib.Path(__file__).resolve().parent.parent / "data" / "targets")
    args = parser.parse_args()
    out = pathlib.Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    for name, fn in [("blobs", blobs), ("shapes", shapes), ("rings", rings)]:
        write_ppm(out / f"{name}.ppm", downsample(fn()))
        print("wrote", out / f"{name}.ppm")


if __name__ == "__main__":
    main()
