"""Image and disparity-map containers, file I/O, and disparity normalization.

Conventions used throughout the package:

* a gray image is a ``(H, W)`` float32 array with intensities in ``[0, 255]``;
* a disparity map is a ``(H, W)`` float32 array where unknown pixels hold the
  sentinel ``INVALID_DISPARITY`` (-1.0) and every other value is >= 0;
* a cost volume is a ``(H, W, D)`` float64 array of nonnegative finite costs.

Arrays are plain numpy arrays (C order, i.e. row major); the helpers here
validate and canonicalize them.
"""

from __future__ import annotations

import io
import os

import numpy as np
from PIL import Image, UnidentifiedImageError

INVALID_DISPARITY = -1.0


class ImageFormatError(ValueError):
    """Raised when a file is not in one of the supported formats."""


class CorruptDataError(ValueError):
    """Raised when a file in a known format cannot be fully decoded."""


def as_gray_image(data) -> np.ndarray:
    """Validate and convert an array-like into a canonical gray image.

    Returns a contiguous float32 (H, W) array with values in [0, 255].
    """
    arr = np.ascontiguousarray(data, dtype=np.float32)
    if arr.ndim != 2:
        raise ValueError(f"gray image must be 2-D, got shape {arr.shape}")
    if arr.size and (arr.min() < 0.0 or arr.max() > 255.0):
        raise ValueError("gray image intensities must lie in [0, 255]")
    return arr


def as_disparity_map(data) -> np.ndarray:
    """Validate and convert an array-like into a canonical disparity map.

    Every value must be >= 0 or exactly the INVALID_DISPARITY sentinel.
    """
    arr = np.ascontiguousarray(data, dtype=np.float32)
    if arr.ndim != 2:
        raise ValueError(f"disparity map must be 2-D, got shape {arr.shape}")
    bad = ~(np.isfinite(arr) & ((arr >= 0.0) | (arr == INVALID_DISPARITY)))
    if np.any(bad):
        raise ValueError("disparity values must be >= 0 or the -1 sentinel")
    return arr


def valid_mask(disp: np.ndarray) -> np.ndarray:
    """Boolean mask of pixels that carry a real disparity value."""
    return disp != INVALID_DISPARITY


def _decode_pgm(raw: bytes) -> np.ndarray:
    """Decode a P2 (ascii) or P5 (binary) PGM byte string."""
    # header: magic, width, height, maxval; '#' comments allowed between tokens
    tokens: list[bytes] = []
    pos = 0
    while len(tokens) < 4:
        while pos < len(raw) and raw[pos : pos + 1].isspace():
            pos += 1
        if pos < len(raw) and raw[pos : pos + 1] == b"#":
            while pos < len(raw) and raw[pos : pos + 1] != b"\n":
                pos += 1
            continue
        start = pos
        while pos < len(raw) and not raw[pos : pos + 1].isspace():
            pos += 1
        if start == pos:
            raise CorruptDataError("truncated PGM header")
        tokens.append(raw[start:pos])
    magic = tokens[0]
    try:
        width, height, maxval = (int(t) for t in tokens[1:4])
    except ValueError as exc:
        raise CorruptDataError("malformed PGM header") from exc
    if width <= 0 or height <= 0 or maxval <= 0:
        raise CorruptDataError("malformed PGM header")
    count = width * height
    if magic == b"P5":
        pos += 1  # single whitespace byte after maxval
        itemsize = 1 if maxval < 256 else 2
        pixels = np.frombuffer(raw, dtype=f">u{itemsize}", count=-1, offset=pos)
        if pixels.size < count:
            raise CorruptDataError("PGM pixel data shorter than header promises")
        pixels = pixels[:count]
    elif magic == b"P2":
        try:
            pixels = np.array(raw[pos:].split()[:count], dtype=np.int64)
        except ValueError as exc:
            raise CorruptDataError("non-numeric PGM pixel data") from exc
        if pixels.size < count:
            raise CorruptDataError("PGM pixel data shorter than header promises")
    else:
        raise ImageFormatError(f"unsupported PGM magic {magic!r}")
    img = pixels.reshape(height, width).astype(np.float64)
    if maxval != 255:
        img = img * (255.0 / maxval)
    return as_gray_image(img)


def load_gray_image(path) -> np.ndarray:
    """Load a PNG or PGM file as a gray image.

    Multi-channel inputs are reduced to a single channel by averaging the
    channels with equal weight. Raises FileNotFoundError for a missing file,
    ImageFormatError for an unsupported format and CorruptDataError when the
    pixel data cannot be decoded.
    """
    path = os.fspath(path)
    with open(path, "rb") as fh:
        raw = fh.read()
    if raw[:2] in (b"P2", b"P5"):
        return _decode_pgm(raw)
    if raw[:8] != b"\x89PNG\r\n\x1a\n":
        raise ImageFormatError(f"{path}: not a PNG or PGM file")
    try:
        with Image.open(io.BytesIO(raw)) as img:
            arr = np.asarray(img, dtype=np.float64)
    except (UnidentifiedImageError, OSError, SyntaxError) as exc:
        raise CorruptDataError(f"{path}: cannot decode PNG data") from exc
    if arr.ndim == 3:
        arr = arr.mean(axis=2)
    if arr.max(initial=0.0) > 255.0:  # 16-bit gray PNG
        arr = arr * (255.0 / 65535.0)
    return as_gray_image(arr)


def _read_pfm_header(fh) -> tuple[int, int, float]:
    def next_token() -> bytes:
        tok = b""
        while True:
            ch = fh.read(1)
            if not ch:
                raise CorruptDataError("truncated PFM header")
            if ch.isspace():
                if tok:
                    return tok
                continue
            tok += ch

    magic = next_token()
    if magic != b"Pf":
        if magic == b"PF":
            raise ImageFormatError("3-channel PFM files are not supported")
        raise ImageFormatError(f"not a PFM file (magic {magic!r})")
    try:
        width = int(next_token())
        height = int(next_token())
        scale = float(next_token())
    except ValueError as exc:
        raise CorruptDataError("malformed PFM header") from exc
    if width <= 0 or height <= 0 or scale == 0.0:
        raise CorruptDataError("malformed PFM header")
    return width, height, scale


def load_disparity(path, png16_divisor: float | None = None) -> np.ndarray:
    """Load a disparity map from a PFM file or a 16-bit PNG.

    PFM endianness follows the sign of the scale line (negative = little
    endian). For 16-bit PNG ground truth a divisor must be supplied; stored
    integers are divided by it. Non-finite or negative stored values become
    the INVALID_DISPARITY sentinel.
    """
    path = os.fspath(path)
    with open(path, "rb") as fh:
        head = fh.read(2)
        fh.seek(0)
        if head == b"Pf" or head == b"PF":
            width, height, scale = _read_pfm_header(fh)
            dtype = "<f4" if scale < 0 else ">f4"
            data = np.frombuffer(fh.read(), dtype=dtype, count=-1)
            if data.size < width * height:
                raise CorruptDataError("PFM pixel data shorter than header promises")
            # PFM stores rows bottom-to-top
            disp = np.flipud(data[: width * height].reshape(height, width))
            disp = disp.astype(np.float32)
        elif head[:1] == b"\x89":
            if png16_divisor is None:
                raise ImageFormatError(
                    "PNG disparity maps need an explicit divisor (png16_divisor)"
                )
            try:
                with Image.open(fh) as img:
                    stored = np.asarray(img)
            except (UnidentifiedImageError, OSError, SyntaxError) as exc:
                raise CorruptDataError(f"{path}: cannot decode PNG data") from exc
            if stored.ndim != 2:
                raise ImageFormatError("PNG disparity maps must be single channel")
            disp = stored.astype(np.float32) / np.float32(png16_divisor)
        else:
            raise ImageFormatError(f"{path}: not a PFM or PNG disparity file")
    disp = np.ascontiguousarray(disp)
    disp[~np.isfinite(disp) | (disp < 0)] = INVALID_DISPARITY
    return disp


def write_disparity(disp: np.ndarray, path) -> None:
    """Write a disparity map as a little-endian single-channel PFM file.

    Sentinel pixels are stored as NaN, so load_disparity(write_disparity(m))
    reproduces m bit-exactly.
    """
    disp = as_disparity_map(disp)
    out = disp.copy()
    out[out == INVALID_DISPARITY] = np.nan
    height, width = out.shape
    with open(os.fspath(path), "wb") as fh:
        fh.write(b"Pf\n")
        fh.write(f"{width} {height}\n".encode("ascii"))
        fh.write(b"-1.0\n")
        fh.write(np.flipud(out).astype("<f4").tobytes())


def normalize_disparity(disp: np.ndarray, target_max: float) -> np.ndarray:
    """Linearly rescale valid disparities so they span [0, target_max].

    The valid minimum maps to 0 and the valid maximum to target_max; the
    rescaling is order preserving and sentinel pixels are left untouched.
    A constant valid map (max == min) collapses to all zeros.
    """
    if target_max <= 0:
        raise ValueError("target_max must be > 0")
    disp = as_disparity_map(disp)
    out = disp.copy()
    mask = valid_mask(disp)
    if not np.any(mask):
        return out
    vals = disp[mask].astype(np.float64)
    lo, hi = vals.min(), vals.max()
    if hi == lo:
        out[mask] = 0.0
    else:
        out[mask] = ((vals - lo) * (target_max / (hi - lo))).astype(np.float32)
    return out
