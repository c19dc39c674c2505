"""PatchMatch stereo with per-pixel slanted disparity planes.

Each pixel owns a plane (a, b, c) modelling disparity as a*x + b*y + c.
Planes are seeded randomly, then improved by raster-order spatial
propagation (adopt a neighbor's plane when it matches better here) and
randomized refinement with shrinking search radii. Matching cost is the
mean census Hamming distance over a square support window.

The heavy per-pixel loops are numba-compiled; all randomness is drawn
up-front from a counter-based generator so results are bit-reproducible
for a given seed, independent of scheduling.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from numba import njit

from .costs import census_transform
from .image import as_gray_image
from .postproc import PostprocConfig, fill_occlusions, lr_consistency, median_filter

MIN_NORMAL_Z = 0.2

_TAG_INIT = 0
_TAG_REFINE = 1


class Plane(NamedTuple):
    """Slanted disparity plane d(x, y) = a*x + b*y + c."""

    a: float
    b: float
    c: float


def plane_disparity(plane: Plane, x, y):
    """Disparity implied by the plane at pixel coordinates (x, y)."""
    return plane.a * x + plane.b * y + plane.c


def plane_from_point_normal(x: float, y: float, d: float, normal) -> Plane:
    """Plane through (x, y, d) with the given (positive-z) surface normal."""
    nx, ny, nz = normal
    if nz <= 0:
        raise ValueError("normal must have a positive z component")
    a = -nx / nz
    b = -ny / nz
    return Plane(a, b, d - a * x - b * y)


@dataclass
class PatchMatchConfig:
    d_max: float
    window_radius: int = 10
    iterations: int = 1
    seed: int = 0
    census_radius: int = 2

    def __post_init__(self):
        if self.d_max <= 0:
            raise ValueError("d_max must be > 0")
        if self.iterations < 1:
            raise ValueError("iterations must be >= 1")
        if self.window_radius < 0:
            raise ValueError("window_radius must be >= 0")


@dataclass
class PlaneMap:
    """Per-pixel plane coefficients plus the cached matching cost."""

    a: np.ndarray
    b: np.ndarray
    c: np.ndarray
    costs: np.ndarray

    @property
    def shape(self) -> tuple[int, int]:
        return self.a.shape

    def plane_at(self, x: int, y: int) -> Plane:
        return Plane(float(self.a[y, x]), float(self.b[y, x]), float(self.c[y, x]))

    def disparity(self) -> np.ndarray:
        height, width = self.a.shape
        xs = np.arange(width, dtype=np.float64)[None, :]
        ys = np.arange(height, dtype=np.float64)[:, None]
        return (self.a * xs + self.b * ys + self.c).astype(np.float32)

    def copy(self) -> "PlaneMap":
        return PlaneMap(self.a.copy(), self.b.copy(), self.c.copy(), self.costs.copy())


def _rng(seed: int, tag: int) -> np.random.Generator:
    key = np.array([np.uint64(seed & 0xFFFFFFFFFFFFFFFF), np.uint64(tag)], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


def random_init(width: int, height: int, config: PatchMatchConfig, *, fronto_parallel: bool = False) -> PlaneMap:
    """Seeded random plane per pixel.

    Each plane passes through (x, y, d0) with d0 uniform in [0, d_max] and a
    random unit normal whose z component stays above MIN_NORMAL_Z (keeping
    the slopes bounded). Cached costs start at +inf; call evaluate_costs to
    fill them before propagating. With fronto_parallel=True every normal is
    forced to (0, 0, 1), a degenerate mode used by tests.
    """
    rng = _rng(config.seed, _TAG_INIT)
    d0 = rng.random((height, width)) * config.d_max
    xs = np.arange(width, dtype=np.float64)[None, :]
    ys = np.arange(height, dtype=np.float64)[:, None]
    if fronto_parallel:
        a = np.zeros((height, width), dtype=np.float64)
        b = np.zeros((height, width), dtype=np.float64)
    else:
        theta = rng.random((height, width)) * (2.0 * np.pi)
        nz = MIN_NORMAL_Z + rng.random((height, width)) * (1.0 - MIN_NORMAL_Z)
        radial = np.sqrt(1.0 - nz * nz)
        nx = radial * np.cos(theta)
        ny = radial * np.sin(theta)
        a = -nx / nz
        b = -ny / nz
    c = d0 - a * xs - b * ys
    costs = np.full((height, width), np.inf, dtype=np.float64)
    return PlaneMap(a, b, c, costs)


@njit(cache=True, inline="always")
def _popcount64(v):
    v = np.uint64(v)
    v = v - ((v >> np.uint64(1)) & np.uint64(0x5555555555555555))
    v = (v & np.uint64(0x3333333333333333)) + ((v >> np.uint64(2)) & np.uint64(0x3333333333333333))
    v = (v + (v >> np.uint64(4))) & np.uint64(0x0F0F0F0F0F0F0F0F)
    return int((v * np.uint64(0x0101010101010101)) >> np.uint64(56))


@njit(cache=True)
def _plane_cost_at(census_l, census_r, n_bits, x, y, pa, pb, pc, radius):
    """Mean census Hamming distance of the plane's matches over the window.

    Window pixels are clamped to the image; matches falling outside the
    right image contribute the full descriptor length.
    """
    height, width = census_l.shape
    total = 0.0
    for dy in range(-radius, radius + 1):
        qy = y + dy
        if qy < 0:
            qy = 0
        elif qy >= height:
            qy = height - 1
        for dx in range(-radius, radius + 1):
            qx = x + dx
            if qx < 0:
                qx = 0
            elif qx >= width:
                qx = width - 1
            d = pa * qx + pb * qy + pc
            xr = int(round(qx - d))
            if xr < 0 or xr >= width:
                total += n_bits
            else:
                total += _popcount64(census_l[qy, qx] ^ census_r[qy, xr])
    count = (2 * radius + 1) * (2 * radius + 1)
    return total / count


@njit(cache=True)
def _evaluate_kernel(census_l, census_r, n_bits, a, b, c, radius):
    height, width = a.shape
    costs = np.empty((height, width), dtype=np.float64)
    for y in range(height):
        for x in range(width):
            costs[y, x] = _plane_cost_at(
                census_l, census_r, n_bits, x, y, a[y, x], b[y, x], c[y, x], radius
            )
    return costs


@njit(cache=True)
def _propagation_kernel(census_l, census_r, n_bits, a, b, c, costs, radius, d_max, odd_pass):
    height, width = a.shape
    if odd_pass:
        y_range = range(height - 1, -1, -1)
        x_range = range(width - 1, -1, -1)
        step = 1
    else:
        y_range = range(height)
        x_range = range(width)
        step = -1
    for y in y_range:
        for x in x_range:
            for k in range(2):
                if k == 0:
                    sx, sy = x + step, y
                else:
                    sx, sy = x, y + step
                if sx < 0 or sx >= width or sy < 0 or sy >= height:
                    continue
                na, nb, nc = a[sy, sx], b[sy, sx], c[sy, sx]
                d_here = na * x + nb * y + nc
                if d_here < 0.0 or d_here > d_max:
                    continue
                cand = _plane_cost_at(census_l, census_r, n_bits, x, y, na, nb, nc, radius)
                if cand < costs[y, x]:
                    a[y, x] = na
                    b[y, x] = nb
                    c[y, x] = nc
                    costs[y, x] = cand


@njit(cache=True)
def _refinement_kernel(
    census_l, census_r, n_bits, a, b, c, costs, radius, d_max,
    delta_d, delta_n, rand_d, rand_nx, rand_ny, rand_nz,
):
    height, width = a.shape
    n_rounds = delta_d.shape[0]
    for y in range(height):
        for x in range(width):
            for r in range(n_rounds):
                ca, cb, cc = a[y, x], b[y, x], c[y, x]
                d_cur = ca * x + cb * y + cc
                norm = np.sqrt(ca * ca + cb * cb + 1.0)
                nx0 = -ca / norm
                ny0 = -cb / norm
                nz0 = 1.0 / norm

                d_new = d_cur + rand_d[r, y, x] * delta_d[r]
                if d_new < 0.0 or d_new > d_max:
                    continue
                nx1 = nx0 + rand_nx[r, y, x] * delta_n[r]
                ny1 = ny0 + rand_ny[r, y, x] * delta_n[r]
                nz1 = nz0 + rand_nz[r, y, x] * delta_n[r]
                nlen = np.sqrt(nx1 * nx1 + ny1 * ny1 + nz1 * nz1)
                if nlen == 0.0:
                    continue
                nz1 /= nlen
                if nz1 < MIN_NORMAL_Z:
                    continue
                nx1 /= nlen
                ny1 /= nlen
                pa = -nx1 / nz1
                pb = -ny1 / nz1
                pc = d_new - pa * x - pb * y
                cand = _plane_cost_at(census_l, census_r, n_bits, x, y, pa, pb, pc, radius)
                if cand < costs[y, x]:
                    a[y, x] = pa
                    b[y, x] = pb
                    c[y, x] = pc
                    costs[y, x] = cand


def _census_pair(left, right, config: PatchMatchConfig):
    lf = as_gray_image(left)
    rt = as_gray_image(right)
    if lf.shape != rt.shape:
        raise ValueError(f"image dimensions differ: {lf.shape} vs {rt.shape}")
    cl = census_transform(lf, config.census_radius)
    cr = census_transform(rt, config.census_radius)
    return cl.data, cr.data, float(cl.n_bits)


def plane_cost(left, right, p: tuple[int, int], plane: Plane, config: PatchMatchConfig) -> float:
    """Matching cost of one plane hypothesis at pixel p = (x, y)."""
    census_l, census_r, n_bits = _census_pair(left, right, config)
    x, y = p
    return float(
        _plane_cost_at(
            census_l, census_r, n_bits, x, y, plane.a, plane.b, plane.c, config.window_radius
        )
    )


def evaluate_costs(state: PlaneMap, left, right, config: PatchMatchConfig) -> PlaneMap:
    """Fill the cached cost of every pixel's current plane."""
    census_l, census_r, n_bits = _census_pair(left, right, config)
    out = state.copy()
    out.costs = _evaluate_kernel(
        census_l, census_r, n_bits, out.a, out.b, out.c, config.window_radius
    )
    return out


def spatial_propagation(state: PlaneMap, left, right, config: PatchMatchConfig, odd_pass: bool = False) -> PlaneMap:
    """One raster-order propagation sweep.

    The even pass scans top-left to bottom-right testing the left and top
    neighbors' planes; the odd pass scans in reverse testing right and
    bottom. A neighbor's plane is adopted iff it costs strictly less at the
    current pixel and keeps the implied disparity inside [0, d_max].
    """
    census_l, census_r, n_bits = _census_pair(left, right, config)
    out = state.copy()
    _propagation_kernel(
        census_l, census_r, n_bits, out.a, out.b, out.c, out.costs,
        config.window_radius, float(config.d_max), odd_pass,
    )
    return out


def refinement_schedule(d_max: float) -> tuple[np.ndarray, np.ndarray]:
    """Shrinking (disparity, normal) perturbation radii: halved until the
    disparity radius drops below 0.1."""
    delta_d = []
    delta_n = []
    dd, dn = d_max / 2.0, 1.0
    while dd >= 0.1:
        delta_d.append(dd)
        delta_n.append(dn)
        dd /= 2.0
        dn /= 2.0
    return np.asarray(delta_d, dtype=np.float64), np.asarray(delta_n, dtype=np.float64)


def plane_refinement(
    state: PlaneMap,
    left,
    right,
    config: PatchMatchConfig,
    stage: int = 0,
    max_delta_d: float | None = None,
    max_delta_n: float | None = None,
) -> PlaneMap:
    """Randomized per-pixel plane refinement with shrinking search radii.

    Each round draws a perturbed plane (disparity moved by up to the current
    disparity radius, normal nudged by up to the normal radius) and accepts
    it iff it costs strictly less. `stage` salts the random draws so
    repeated refinement calls explore fresh candidates; the max_delta_*
    overrides exist for tests (zero radii = no candidates).
    """
    census_l, census_r, n_bits = _census_pair(left, right, config)
    if max_delta_d is None:
        delta_d, delta_n = refinement_schedule(config.d_max)
    else:
        dn0 = 1.0 if max_delta_n is None else max_delta_n
        delta_d, delta_n = [], []
        dd, dn = max_delta_d, dn0
        while dd >= 0.1:
            delta_d.append(dd)
            delta_n.append(dn)
            dd /= 2.0
            dn /= 2.0
        delta_d = np.asarray(delta_d, dtype=np.float64)
        delta_n = np.asarray(delta_n, dtype=np.float64)
    out = state.copy()
    n_rounds = delta_d.shape[0]
    if n_rounds == 0:
        return out
    height, width = out.shape
    rng = _rng(config.seed, (_TAG_REFINE << 32) | (stage & 0xFFFFFFFF))
    draws = rng.random((4, n_rounds, height, width)) * 2.0 - 1.0
    _refinement_kernel(
        census_l, census_r, n_bits, out.a, out.b, out.c, out.costs,
        config.window_radius, float(config.d_max),
        delta_d, delta_n, draws[0], draws[1], draws[2], draws[3],
    )
    return out


def patchmatch_match(
    left,
    right,
    config: PatchMatchConfig,
    post: PostprocConfig | None = None,
) -> np.ndarray:
    """Full PatchMatch pipeline for a rectified pair.

    Left- and right-reference plane maps are optimized independently (the
    right view reuses the left-reference machinery on mirrored images), then
    the implied disparities go through left-right validation, occlusion
    filling and a weighted median guided by the left image.
    """
    post = post or PostprocConfig()
    lf = as_gray_image(left)
    rt = as_gray_image(right)
    if lf.shape != rt.shape:
        raise ValueError(f"image dimensions differ: {lf.shape} vs {rt.shape}")

    def run_view(ref, other):
        height, width = ref.shape
        state = random_init(width, height, config)
        state = evaluate_costs(state, ref, other, config)
        for it in range(config.iterations):
            state = spatial_propagation(state, ref, other, config, odd_pass=False)
            state = plane_refinement(state, ref, other, config, stage=2 * it)
            state = spatial_propagation(state, ref, other, config, odd_pass=True)
            state = plane_refinement(state, ref, other, config, stage=2 * it + 1)
        return state.disparity()

    disp_left = run_view(lf, rt)
    disp_right = np.fliplr(run_view(np.fliplr(rt).copy(), np.fliplr(lf).copy()))

    disp = lr_consistency(disp_left, disp_right, post.lr_threshold)
    disp = fill_occlusions(disp)
    return median_filter(disp, max(post.median_radius, 1), weights=lf, gamma=post.weighted_median_gamma)
