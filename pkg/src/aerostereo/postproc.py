"""Disparity refinement: consistency checks, speckle removal, hole filling.

All functions are pure; they return new maps and never mutate their inputs.
Invalid pixels carry the INVALID_DISPARITY sentinel throughout.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components

from .image import INVALID_DISPARITY, as_disparity_map, as_gray_image, valid_mask


@dataclass
class PostprocConfig:
    lr_threshold: float = 1.0
    speckle_max_size: int = 100
    speckle_tolerance: float = 1.0
    median_radius: int = 1
    weighted_median_gamma: float = 10.0

    def __post_init__(self):
        if min(self.lr_threshold, self.speckle_max_size, self.speckle_tolerance,
               self.median_radius, self.weighted_median_gamma) < 0:
            raise ValueError("postprocessing parameters must be >= 0")


def lr_consistency(disp_left, disp_right, threshold: float) -> np.ndarray:
    """Invalidate left-reference pixels that disagree with the right map.

    Pixel (x, y) with disparity d survives iff x - round(d) lands inside the
    image, the right-reference map is valid there, and the two disparities
    differ by at most `threshold`. Surviving values are passed through
    unchanged; everything else becomes the sentinel.
    """
    dl = as_disparity_map(disp_left)
    dr = as_disparity_map(disp_right)
    if dl.shape != dr.shape:
        raise ValueError(f"map dimensions differ: {dl.shape} vs {dr.shape}")
    height, width = dl.shape
    out = np.full_like(dl, INVALID_DISPARITY)
    ys, xs = np.nonzero(valid_mask(dl))
    if ys.size == 0:
        return out
    d = dl[ys, xs]
    xr = xs - np.rint(d).astype(np.int64)
    in_image = (xr >= 0) & (xr < width)
    ys, xs, xr, d = ys[in_image], xs[in_image], xr[in_image], d[in_image]
    other = dr[ys, xr]
    keep = (other != INVALID_DISPARITY) & (np.abs(d - other) <= threshold)
    out[ys[keep], xs[keep]] = d[keep]
    return out


def speckle_filter(disp, max_size: int, tolerance: float) -> np.ndarray:
    """Remove small disparity speckles.

    Valid pixels are grouped into 4-connected components where adjacency
    additionally requires the two disparities to differ by at most
    `tolerance`; components of size <= max_size are invalidated.
    """
    dm = as_disparity_map(disp)
    mask = valid_mask(dm)
    n = int(mask.sum())
    out = dm.copy()
    if n == 0:
        return out
    index = np.full(dm.shape, -1, dtype=np.int64)
    index[mask] = np.arange(n)

    rows = []
    cols = []
    # horizontal then vertical neighbor pairs
    pair_ok = mask[:, :-1] & mask[:, 1:] & (np.abs(dm[:, :-1] - dm[:, 1:]) <= tolerance)
    rows.append(index[:, :-1][pair_ok])
    cols.append(index[:, 1:][pair_ok])
    pair_ok = mask[:-1, :] & mask[1:, :] & (np.abs(dm[:-1, :] - dm[1:, :]) <= tolerance)
    rows.append(index[:-1, :][pair_ok])
    cols.append(index[1:, :][pair_ok])

    i = np.concatenate(rows)
    j = np.concatenate(cols)
    graph = coo_matrix((np.ones(i.size, dtype=np.int8), (i, j)), shape=(n, n))
    _, labels = connected_components(graph, directed=False)
    sizes = np.bincount(labels)
    small = sizes[labels] <= max_size
    ys, xs = np.nonzero(mask)
    out[ys[small], xs[small]] = INVALID_DISPARITY
    return out


def fill_occlusions(disp) -> np.ndarray:
    """Fill invalid pixels with the background disparity of their scanline.

    Each sentinel pixel takes the smaller of the nearest valid disparities to
    its left and to its right on the same row; rows without any valid pixel
    are left untouched.
    """
    dm = as_disparity_map(disp)
    height, width = dm.shape
    mask = valid_mask(dm)
    cols = np.arange(width)[None, :]
    rows = np.arange(height)[:, None]

    left_idx = np.where(mask, cols, -1)
    left_idx = np.maximum.accumulate(left_idx, axis=1)
    right_idx = np.where(mask, cols, width)
    right_idx = np.minimum.accumulate(right_idx[:, ::-1], axis=1)[:, ::-1]

    left_val = np.where(left_idx >= 0, dm[rows, np.clip(left_idx, 0, width - 1)], np.inf)
    right_val = np.where(right_idx < width, dm[rows, np.clip(right_idx, 0, width - 1)], np.inf)
    fill = np.minimum(left_val, right_val)

    out = dm.copy()
    fillable = ~mask & np.isfinite(fill)
    out[fillable] = fill[fillable].astype(dm.dtype)
    return out


def median_filter(disp, radius: int, weights=None, gamma: float = 10.0) -> np.ndarray:
    """Median (or intensity-weighted median) filter over valid disparities.

    Unweighted: each valid pixel becomes the lower median of the valid values
    in its (2r+1)^2 window (window clipped at the image border). Weighted:
    contributors q are weighted by exp(-|I(p) - I(q)| / gamma) where I is the
    `weights` reference image, and the pixel takes the smallest value whose
    cumulative weight reaches half the total. Sentinel pixels neither
    contribute nor get replaced.
    """
    if radius < 1:
        raise ValueError("median radius must be >= 1")
    dm = as_disparity_map(disp)
    height, width = dm.shape
    mask = valid_mask(dm)
    if weights is not None:
        ref = as_gray_image(weights).astype(np.float64)
        if ref.shape != dm.shape:
            raise ValueError("weights image must match the disparity map shape")

    # windows as a (H, W, k) stack; out-of-image slots padded with the sentinel
    padded = np.pad(dm, radius, mode="constant", constant_values=INVALID_DISPARITY)
    win = np.lib.stride_tricks.sliding_window_view(padded, (2 * radius + 1, 2 * radius + 1))
    vals = win.reshape(height, width, -1).astype(np.float64)
    contrib = vals != INVALID_DISPARITY

    sort_vals = np.where(contrib, vals, np.inf)
    if weights is None:
        order = np.argsort(sort_vals, axis=2, kind="stable")
        ranked = np.take_along_axis(sort_vals, order, axis=2)
        count = contrib.sum(axis=2)
        median_idx = np.maximum(count - 1, 0) // 2
        med = np.take_along_axis(ranked, median_idx[:, :, None], axis=2)[:, :, 0]
    else:
        pad_ref = np.pad(ref, radius, mode="constant", constant_values=np.inf)
        ref_win = np.lib.stride_tricks.sliding_window_view(
            pad_ref, (2 * radius + 1, 2 * radius + 1)
        ).reshape(height, width, -1)
        w = np.where(contrib, np.exp(-np.abs(ref_win - ref[:, :, None]) / gamma), 0.0)
        order = np.argsort(sort_vals, axis=2, kind="stable")
        ranked = np.take_along_axis(sort_vals, order, axis=2)
        ranked_w = np.take_along_axis(w, order, axis=2)
        cum = np.cumsum(ranked_w, axis=2)
        half = cum[:, :, -1:] / 2.0
        median_idx = (cum >= half).argmax(axis=2)
        med = np.take_along_axis(ranked, median_idx[:, :, None], axis=2)[:, :, 0]

    out = dm.copy()
    out[mask] = med[mask].astype(dm.dtype)
    return out
