"""Matching cost volumes for rectified stereo pairs.

Three interchangeable pixel dissimilarity measures are provided: sum of
absolute differences over a square window, the Birchfield-Tomasi sampling
insensitive dissimilarity, and the AD-Census combination of absolute
differences with census/Hamming matching.

Convention: the match in the right image for left pixel (x, y) at disparity
d is (x - d, y). Candidates that would fall left of the image receive the
maximum cost the measure can produce, so they never win the disparity search.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .image import as_gray_image

MAX_INTENSITY = 255.0


@dataclass
class CostParams:
    """Shared knobs of the cost functions.

    num_disparities: size of the disparity search range [0, D).
    window_radius: half width of the SAD/BT summation window; also the
        census window radius for AD-Census.
    lambda_ad / lambda_census: soft saturation constants of the AD-Census
        robust weighting.
    """

    num_disparities: int = 96
    window_radius: int = 2
    lambda_ad: float = 10.0
    lambda_census: float = 30.0

    def __post_init__(self):
        if self.num_disparities < 1:
            raise ValueError("num_disparities must be >= 1")
        if self.window_radius < 0:
            raise ValueError("window_radius must be >= 0")
        if self.lambda_ad <= 0 or self.lambda_census <= 0:
            raise ValueError("lambda constants must be > 0")


def _popcount(arr: np.ndarray) -> np.ndarray:
    if hasattr(np, "bitwise_count"):
        return np.bitwise_count(arr)
    # SWAR popcount for older numpy
    x = arr.astype(np.uint64)
    m1 = np.uint64(0x5555555555555555)
    m2 = np.uint64(0x3333333333333333)
    m4 = np.uint64(0x0F0F0F0F0F0F0F0F)
    x = x - ((x >> np.uint64(1)) & m1)
    x = (x & m2) + ((x >> np.uint64(2)) & m2)
    x = (x + (x >> np.uint64(4))) & m4
    return (x * np.uint64(0x0101010101010101)) >> np.uint64(56)


def hamming(a, b):
    """Number of bit positions at which two binary descriptors differ.

    Accepts python ints or integer arrays (element-wise in the latter case).
    """
    if isinstance(a, (int, np.integer)) and isinstance(b, (int, np.integer)):
        return bin(int(a) ^ int(b)).count("1")
    return _popcount(np.bitwise_xor(np.asarray(a, dtype=np.uint64), np.asarray(b, dtype=np.uint64)))


@dataclass(frozen=True)
class CensusImage:
    """Per-pixel binary census descriptors packed into uint64 words."""

    data: np.ndarray  # (H, W) uint64
    n_bits: int  # descriptor length = window area - 1

    def hamming(self, other: "CensusImage") -> np.ndarray:
        if self.n_bits != other.n_bits:
            raise ValueError(
                f"descriptor bit-length mismatch: {self.n_bits} vs {other.n_bits}"
            )
        return hamming(self.data, other.data)


def census_transform(image, window_radius: int) -> CensusImage:
    """Census transform of a gray image.

    One bit per non-center window position in row-major order, most
    significant bit first; a bit is set iff the neighbor is strictly darker
    than the center. Out-of-image neighbors replicate the border. The
    descriptor depends only on the ordering of intensities, so it is
    invariant under any strictly increasing intensity remapping.
    """
    if window_radius < 1:
        raise ValueError("census window_radius must be >= 1")
    if window_radius > 3:
        raise ValueError("census descriptors beyond radius 3 exceed 64 bits")
    img = as_gray_image(image)
    height, width = img.shape
    padded = np.pad(img, window_radius, mode="edge")
    desc = np.zeros((height, width), dtype=np.uint64)
    size = 2 * window_radius + 1
    n_bits = size * size - 1
    for dy in range(-window_radius, window_radius + 1):
        for dx in range(-window_radius, window_radius + 1):
            if dy == 0 and dx == 0:
                continue
            neighbor = padded[
                window_radius + dy : window_radius + dy + height,
                window_radius + dx : window_radius + dx + width,
            ]
            desc = (desc << np.uint64(1)) | (neighbor < img).astype(np.uint64)
    return CensusImage(data=desc, n_bits=n_bits)


def robust_rho(c, lam: float):
    """Soft saturating weight 1 - exp(-c / lam), in [0, 1) for finite c >= 0."""
    if lam <= 0:
        raise ValueError("lambda must be > 0")
    out = 1.0 - np.exp(-np.asarray(c, dtype=np.float64) / lam)
    return float(out) if out.ndim == 0 else out


def _check_pair(left, right) -> tuple[np.ndarray, np.ndarray]:
    lf = as_gray_image(left).astype(np.float64)
    rt = as_gray_image(right).astype(np.float64)
    if lf.shape != rt.shape:
        raise ValueError(f"image dimensions differ: {lf.shape} vs {rt.shape}")
    return lf, rt


def _shift_right_image(img: np.ndarray, d: int) -> np.ndarray:
    """img sampled at column x - d, replicating the left edge for x < d."""
    if d == 0:
        return img
    width = img.shape[1]
    out = np.empty_like(img)
    if d < width:
        out[:, d:] = img[:, : width - d]
    out[:, : min(d, width)] = img[:, :1]
    return out


def _window_sum(img: np.ndarray, radius: int) -> np.ndarray:
    """Sum over a (2r+1)^2 window with replicated borders, via integral image."""
    if radius == 0:
        return img.copy()
    size = 2 * radius + 1
    padded = np.pad(img, radius, mode="edge")
    integral = np.zeros((padded.shape[0] + 1, padded.shape[1] + 1), dtype=np.float64)
    np.cumsum(np.cumsum(padded, axis=0), axis=1, out=integral[1:, 1:])
    return (
        integral[size:, size:]
        - integral[:-size, size:]
        - integral[size:, :-size]
        + integral[:-size, :-size]
    )


def sad_cost(left, right, params: CostParams) -> np.ndarray:
    """Sum-of-absolute-differences cost volume.

    C(y, x, d) = sum over the window of |L(y, x') - R(y, x' - d)|. Window
    borders replicate the image edge; candidates with x - d < 0 get the
    maximum window cost.
    """
    lf, rt = _check_pair(left, right)
    height, width = lf.shape
    ndisp, radius = params.num_disparities, params.window_radius
    w = 2 * radius + 1
    max_cost = MAX_INTENSITY * w * w
    volume = np.empty((height, width, ndisp), dtype=np.float64)
    for d in range(ndisp):
        ad = np.abs(lf - _shift_right_image(rt, d))
        volume[:, :, d] = _window_sum(ad, radius)
        volume[:, : min(d, width), d] = max_cost
    return volume


def _half_pixel_interpolants(img: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Linear scanline interpolants at x - 1/2 and x + 1/2 (edges replicated)."""
    minus = img.copy()
    minus[:, 1:] = 0.5 * (img[:, :-1] + img[:, 1:])
    plus = img.copy()
    plus[:, :-1] = 0.5 * (img[:, :-1] + img[:, 1:])
    return minus, plus


def bt_cost(left, right, params: CostParams) -> np.ndarray:
    """Birchfield-Tomasi sampling-insensitive cost volume.

    The per-pixel dissimilarity is min(d_l, d_r) where d_l compares the left
    intensity against the right scanline sampled at {x-1/2, x, x+1/2} via
    linear interpolation, and d_r does the symmetric comparison. Window
    summation and out-of-range handling match sad_cost.
    """
    lf, rt = _check_pair(left, right)
    height, width = lf.shape
    ndisp, radius = params.num_disparities, params.window_radius
    w = 2 * radius + 1
    max_cost = MAX_INTENSITY * w * w
    l_minus, l_plus = _half_pixel_interpolants(lf)
    r_minus, r_plus = _half_pixel_interpolants(rt)
    volume = np.empty((height, width, ndisp), dtype=np.float64)
    for d in range(ndisp):
        rd = _shift_right_image(rt, d)
        rmd = _shift_right_image(r_minus, d)
        rpd = _shift_right_image(r_plus, d)
        d_l = np.minimum(np.abs(lf - rmd), np.minimum(np.abs(lf - rd), np.abs(lf - rpd)))
        d_r = np.minimum(np.abs(l_minus - rd), np.minimum(np.abs(lf - rd), np.abs(l_plus - rd)))
        volume[:, :, d] = _window_sum(np.minimum(d_l, d_r), radius)
        volume[:, : min(d, width), d] = max_cost
    return volume


def ad_census_cost(left, right, params: CostParams) -> np.ndarray:
    """AD-Census cost volume: robust-weighted sum of intensity and census terms.

    C(p, d) = rho(hamming(census_L(p), census_R(p-d)), lambda_census)
            + rho(|L(p) - R(p-d)|, lambda_ad), each term in [0, 1) so the
    total stays below 2. The census window is params.window_radius (>= 1).
    """
    lf, rt = _check_pair(left, right)
    height, width = lf.shape
    ndisp, radius = params.num_disparities, params.window_radius
    census_left = census_transform(lf, radius)
    census_right = census_transform(rt, radius)
    n_bits = census_left.n_bits
    # maximum representable value of each term, used for out-of-range candidates
    max_cost = robust_rho(float(n_bits), params.lambda_census) + robust_rho(
        MAX_INTENSITY, params.lambda_ad
    )
    volume = np.empty((height, width, ndisp), dtype=np.float64)
    for d in range(ndisp):
        c_ad = np.abs(lf - _shift_right_image(rt, d))
        c_census = hamming(
            census_left.data, _shift_right_image(census_right.data, d)
        ).astype(np.float64)
        volume[:, :, d] = (
            1.0
            - np.exp(-c_census / params.lambda_census)
            + 1.0
            - np.exp(-c_ad / params.lambda_ad)
        )
        volume[:, : min(d, width), d] = max_cost
    return volume


COST_FUNCTIONS = {
    "sad": sad_cost,
    "bt": bt_cost,
    "ad-census": ad_census_cost,
}
