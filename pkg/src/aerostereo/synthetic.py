"""Synthetic stereo scenes with exact ground truth.

The generator draws a random-dot left image, then synthesizes the right
image by forward-warping each left pixel by its ground-truth disparity
(nearer surfaces, i.e. larger disparities, win collisions). Right-image
pixels that receive no projection are filled with fresh noise. The returned
ground truth is the exact disparity field used for the warp, which makes
these scenes usable as oracles for the matchers.
"""

from __future__ import annotations

import numpy as np

KINDS = ("random-dot", "two-level", "slanted-ramp")

_TAG_SCENE = 100


def _scene_rng(seed: int) -> np.random.Generator:
    key = np.array([np.uint64(seed & 0xFFFFFFFFFFFFFFFF), np.uint64(_TAG_SCENE)], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


def _ground_truth(kind: str, width: int, height: int, params: dict) -> np.ndarray:
    if kind == "random-dot":
        d = float(params.get("disparity", 7.0))
        gt = np.full((height, width), d, dtype=np.float64)
    elif kind == "two-level":
        d_left = float(params.get("d_left", 5.0))
        d_right = float(params.get("d_right", 12.0))
        gt = np.full((height, width), d_left, dtype=np.float64)
        gt[:, width // 2 :] = d_right
    elif kind == "slanted-ramp":
        offset = float(params.get("offset", 2.0))
        slope = float(params.get("slope", 0.1))
        xs = np.arange(width, dtype=np.float64)
        gt = np.broadcast_to(offset + slope * xs, (height, width)).copy()
    else:
        raise ValueError(f"unknown scene kind {kind!r}; expected one of {KINDS}")
    if gt.min() < 0:
        raise ValueError("ground-truth disparities must be >= 0")
    if gt.max() >= width:
        raise ValueError("ground-truth disparity exceeds the image width")
    return gt


def generate_synthetic(
    kind: str, width: int, height: int, params: dict | None = None, seed: int = 0
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Build a (left, right, ground_truth) triple for the given scene kind.

    kinds and their params:
      random-dot: uniform disparity, params {"disparity": 7}
      two-level: two half-image levels, params {"d_left": 5, "d_right": 12}
      slanted-ramp: d(x) = offset + slope * x, params {"offset": 2, "slope": 0.1}

    Fully determined by `seed`.
    """
    params = params or {}
    gt = _ground_truth(kind, width, height, params)
    rng = _scene_rng(seed)
    left = rng.integers(0, 256, size=(height, width)).astype(np.float64)

    right = np.full((height, width), -1.0, dtype=np.float64)
    depth = np.full((height, width), -np.inf, dtype=np.float64)
    for y in range(height):
        for x in range(width):
            xr = int(np.rint(x - gt[y, x]))
            if 0 <= xr < width and gt[y, x] > depth[y, xr]:
                right[y, xr] = left[y, x]
                depth[y, xr] = gt[y, x]
    holes = right < 0
    right[holes] = rng.integers(0, 256, size=int(holes.sum())).astype(np.float64)

    return (
        left.astype(np.float32),
        right.astype(np.float32),
        gt.astype(np.float32),
    )
