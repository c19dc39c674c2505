"""Semi-global cost aggregation and the full block-matching pipeline.

The raw cost volume is smoothed by accumulating it along 1D paths with the
two-level smoothness penalties P1 (|disparity step| = 1) and P2 (larger
jumps), summing the per-direction results, and picking the disparity with
the lowest aggregated cost per pixel.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .costs import COST_FUNCTIONS, CostParams
from .image import INVALID_DISPARITY
from .postproc import PostprocConfig, fill_occlusions, lr_consistency, speckle_filter

AXIS_DIRECTIONS = ((1, 0), (-1, 0), (0, 1), (0, -1))
DIAGONAL_DIRECTIONS = ((1, 1), (-1, -1), (1, -1), (-1, 1))


@dataclass
class SgbmConfig:
    """Aggregation and selection parameters.

    p1/p2 default to None and are resolved from the cost function scale by
    sgbm_match (see default_penalties); num_paths is 4 (axis directions) or
    8 (axis + diagonals). uniqueness_ratio > 0 rejects pixels whose best
    cost is not clearly below the best non-adjacent alternative; subpixel
    enables parabola refinement of the winning disparity.
    """

    p1: float | None = None
    p2: float | None = None
    num_paths: int = 8
    cost_function: str = "sad"
    subpixel: bool = False
    uniqueness_ratio: float = 0.0

    def __post_init__(self):
        if self.num_paths not in (4, 8):
            raise ValueError("num_paths must be 4 or 8")
        if self.cost_function not in COST_FUNCTIONS:
            raise ValueError(f"unknown cost function {self.cost_function!r}")
        if self.uniqueness_ratio < 0:
            raise ValueError("uniqueness_ratio must be >= 0")
        if (self.p1 is None) != (self.p2 is None):
            raise ValueError("set both p1 and p2 or neither")
        if self.p1 is not None and not self.p2 > self.p1 >= 0:
            raise ValueError("penalties must satisfy p2 > p1 >= 0")


def default_penalties(cost_function: str, window_radius: int) -> tuple[float, float]:
    """Smoothness penalties on the scale of the given cost function.

    AD-Census costs live in [0, 2); the intensity-sum costs scale with the
    window area, so the classic 8/32 pair is multiplied by it.
    """
    if cost_function == "ad-census":
        return 1.0, 3.0
    w = 2 * window_radius + 1
    return 8.0 * w * w, 32.0 * w * w


def _scan_step(prev: np.ndarray, cur_cost: np.ndarray, p1: float, p2: float) -> np.ndarray:
    """One recurrence step: prev and cur_cost are (n, D) slices of the front."""
    prev_min = prev.min(axis=1)
    up = np.empty_like(prev)
    up[:, 1:] = prev[:, :-1] + p1
    up[:, 0] = np.inf
    down = np.empty_like(prev)
    down[:, :-1] = prev[:, 1:] + p1
    down[:, -1] = np.inf
    best = np.minimum(np.minimum(prev, up), np.minimum(down, prev_min[:, None] + p2))
    return cur_cost + best - prev_min[:, None]


def aggregate_path(cost: np.ndarray, direction: tuple[int, int], p1: float, p2: float) -> np.ndarray:
    """Aggregate a cost volume along one direction.

    L(p, d) = C(p, d) + min(L(q, d), L(q, d-1) + P1, L(q, d+1) + P1,
    min_i L(q, i) + P2) - min_k L(q, k), where q is the predecessor of p
    along `direction`; pixels without an in-image predecessor keep L = C.
    """
    if direction not in AXIS_DIRECTIONS + DIAGONAL_DIRECTIONS:
        raise ValueError(f"invalid direction {direction}")
    if not p2 > p1 >= 0:
        raise ValueError("penalties must satisfy p2 > p1 >= 0")
    cost = np.asarray(cost, dtype=np.float64)
    if cost.ndim != 3:
        raise ValueError("cost volume must be (H, W, D)")
    height, width, _ = cost.shape
    out = cost.copy()
    dx, dy = direction
    if dy == 0:
        xs = range(1, width) if dx == 1 else range(width - 2, -1, -1)
        for x in xs:
            out[:, x] = _scan_step(out[:, x - dx], cost[:, x], p1, p2)
    else:
        ys = range(1, height) if dy == 1 else range(height - 2, -1, -1)
        for y in ys:
            prev_row = out[y - dy]
            if dx == 0:
                out[y] = _scan_step(prev_row, cost[y], p1, p2)
            elif dx == 1:
                out[y, 1:] = _scan_step(prev_row[:-1], cost[y, 1:], p1, p2)
            else:
                out[y, :-1] = _scan_step(prev_row[1:], cost[y, :-1], p1, p2)
    return out


def aggregate_all(cost: np.ndarray, config: SgbmConfig) -> np.ndarray:
    """Sum of the per-direction aggregations over 4 or 8 paths."""
    if config.p1 is None or config.p2 is None:
        raise ValueError("config penalties are unresolved; set p1/p2 or use sgbm_match")
    directions = AXIS_DIRECTIONS if config.num_paths == 4 else AXIS_DIRECTIONS + DIAGONAL_DIRECTIONS
    total = np.zeros_like(np.asarray(cost, dtype=np.float64))
    for direction in directions:
        total += aggregate_path(cost, direction, config.p1, config.p2)
    return total


def select_disparity(aggregated: np.ndarray, config: SgbmConfig) -> np.ndarray:
    """Winner-take-all disparity selection.

    Ties break toward the smallest disparity. With uniqueness_ratio > 0 a
    pixel is invalidated when some disparity outside {d*-1, d*, d*+1} costs
    no more than best * (1 + ratio/100). Subpixel mode adds the parabola
    vertex offset (c[-1] - c[+1]) / (2 * (c[-1] - 2c[0] + c[+1])), clamped
    to [-0.5, 0.5] and skipped for non-convex fits or border disparities.
    """
    agg = np.asarray(aggregated, dtype=np.float64)
    height, width, ndisp = agg.shape
    best_d = np.argmin(agg, axis=2)
    best_cost = np.take_along_axis(agg, best_d[:, :, None], axis=2)[:, :, 0]
    disp = best_d.astype(np.float32)

    if config.subpixel and ndisp >= 3:
        interior = (best_d > 0) & (best_d < ndisp - 1)
        lo = np.clip(best_d - 1, 0, ndisp - 1)
        hi = np.clip(best_d + 1, 0, ndisp - 1)
        c_lo = np.take_along_axis(agg, lo[:, :, None], axis=2)[:, :, 0]
        c_hi = np.take_along_axis(agg, hi[:, :, None], axis=2)[:, :, 0]
        denom = c_lo - 2.0 * best_cost + c_hi
        with np.errstate(divide="ignore", invalid="ignore"):
            offset = (c_lo - c_hi) / (2.0 * denom)
        offset = np.clip(offset, -0.5, 0.5)
        usable = interior & (denom > 0)
        disp = np.where(usable, disp + offset.astype(np.float32), disp)

    if config.uniqueness_ratio > 0:
        masked = agg.copy()
        ys, xs = np.indices((height, width))
        for delta in (-1, 0, 1):
            d_adj = best_d + delta
            ok = (d_adj >= 0) & (d_adj < ndisp)
            masked[ys[ok], xs[ok], d_adj[ok]] = np.inf
        second = masked.min(axis=2)
        reject = second <= best_cost * (1.0 + config.uniqueness_ratio / 100.0)
        disp[reject] = INVALID_DISPARITY

    return disp


def sgbm_match(
    left,
    right,
    cost_params: CostParams | None = None,
    config: SgbmConfig | None = None,
    post: PostprocConfig | None = None,
) -> np.ndarray:
    """Full pipeline: cost volume, path aggregation, selection, refinement.

    The left-reference result is validated against a right-reference pass
    (the matcher re-run on horizontally mirrored, role-swapped images, which
    realizes the x + d match convention), then speckle-filtered and
    occlusion-filled.
    """
    cost_params = cost_params or CostParams()
    config = config or SgbmConfig()
    post = post or PostprocConfig()
    if config.p1 is None:
        p1, p2 = default_penalties(config.cost_function, cost_params.window_radius)
        config = replace(config, p1=p1, p2=p2)
    cost_fn = COST_FUNCTIONS[config.cost_function]

    def run(ref, other):
        volume = cost_fn(ref, other, cost_params)
        return select_disparity(aggregate_all(volume, config), config)

    disp_left = run(left, right)
    left_arr = np.asarray(left)
    right_arr = np.asarray(right)
    disp_right = np.fliplr(run(np.fliplr(right_arr), np.fliplr(left_arr)))

    disp = lr_consistency(disp_left, disp_right, post.lr_threshold)
    disp = speckle_filter(disp, post.speckle_max_size, post.speckle_tolerance)
    return fill_occlusions(disp)
