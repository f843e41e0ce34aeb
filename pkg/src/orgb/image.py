"""Image containers, gamma handling, region masks, and file I/O.

All pixel math in this package happens on linear RGB float64.  Files on disk
are either gamma-encoded integer formats (PNG, PPM) or raw float sidecars
(.npy) that round-trip linear data exactly.  The piecewise transfer curve is
applied once at load and once at save; nothing else in the package touches it.
"""

import os
from dataclasses import dataclass, field
from typing import Optional, Tuple

import numpy as np

from . import pngio
from .errors import (
    DimensionMismatchError,
    EmptyRegionError,
    FormatError,
    ParameterError,
)

NPY_MAGIC = b"\x93NUMPY"


# --- Containers ---


@dataclass(eq=False)
class LinearImage:
    """Linear RGB image, float64, shape (height, width, 3).

    Values are usually in [0, 1] but intermediate results (noise, ambient
    subtraction, offset correction) may leave that range; encoding clamps.
    All values must be finite.
    """

    data: np.ndarray

    def __post_init__(self):
        self.data = np.asarray(self.data, dtype=np.float64)
        if self.data.ndim != 3 or self.data.shape[2] != 3:
            raise DimensionMismatchError(
                f"linear image must have shape (h, w, 3), got {self.data.shape}"
            )
        if self.data.shape[0] < 1 or self.data.shape[1] < 1:
            raise DimensionMismatchError("image must be at least 1x1")
        if not np.isfinite(self.data).all():
            raise FormatError("image contains non-finite values")

    @property
    def height(self) -> int:
        return self.data.shape[0]

    @property
    def width(self) -> int:
        return self.data.shape[1]

    def copy(self) -> "LinearImage":
        return LinearImage(self.data.copy())


@dataclass(eq=False)
class ChannelImage:
    """Single-plane float64 image, shape (height, width)."""

    data: np.ndarray

    def __post_init__(self):
        self.data = np.asarray(self.data, dtype=np.float64)
        if self.data.ndim != 2:
            raise DimensionMismatchError(
                f"channel image must have shape (h, w), got {self.data.shape}"
            )
        if not np.isfinite(self.data).all():
            raise FormatError("channel contains non-finite values")

    @property
    def height(self) -> int:
        return self.data.shape[0]

    @property
    def width(self) -> int:
        return self.data.shape[1]


@dataclass(eq=False)
class RegionMask:
    """Boolean pixel-selection mask, shape (height, width).

    rect remembers the (x, y, w, h) this mask was cut from, when it was; the
    offset estimator copies it into its report for reproducibility.
    """

    bits: np.ndarray
    rect: Optional[Tuple[int, int, int, int]] = field(default=None)

    def __post_init__(self):
        self.bits = np.asarray(self.bits, dtype=bool)
        if self.bits.ndim != 2:
            raise DimensionMismatchError(
                f"mask must have shape (h, w), got {self.bits.shape}"
            )

    @property
    def count(self) -> int:
        return int(self.bits.sum())


def make_mask_rect(
    x: int, y: int, w: int, h: int, width: int, height: int
) -> RegionMask:
    """Build a rectangular mask inside a width x height image.

    The rect is clipped to the image bounds; selecting nothing raises
    EmptyRegionError.
    """
    if w <= 0 or h <= 0:
        raise EmptyRegionError(f"rect {w}x{h} selects no pixels")
    x0 = max(int(x), 0)
    y0 = max(int(y), 0)
    x1 = min(int(x) + int(w), width)
    y1 = min(int(y) + int(h), height)
    if x0 >= x1 or y0 >= y1:
        raise EmptyRegionError(
            f"rect ({x},{y},{w},{h}) lies outside a {width}x{height} image"
        )
    bits = np.zeros((height, width), dtype=bool)
    bits[y0:y1, x0:x1] = True
    return RegionMask(bits, rect=(x0, y0, x1 - x0, y1 - y0))


# --- Transfer curve ---

# piecewise gamma, decode threshold 0.04045, encode threshold 0.0031308


def srgb_decode(v: np.ndarray) -> np.ndarray:
    """Gamma-encoded [0, 1] values -> linear."""
    v = np.asarray(v, dtype=np.float64)
    return np.where(v <= 0.04045, v / 12.92, ((v + 0.055) / 1.055) ** 2.4)


def srgb_encode(v: np.ndarray) -> np.ndarray:
    """Linear values -> gamma-encoded; clamps to [0, 1] first."""
    v = np.clip(np.asarray(v, dtype=np.float64), 0.0, 1.0)
    return np.where(v <= 0.0031308, v * 12.92, 1.055 * v ** (1.0 / 2.4) - 0.055)


def _quantize(v: np.ndarray, maxval: int) -> np.ndarray:
    # round half up, not banker's rounding
    return np.floor(v * maxval + 0.5).astype(np.uint16 if maxval > 255 else np.uint8)


# --- File I/O ---


def load_image(path: str) -> LinearImage:
    """Load PNG, PPM (P6), or .npy into a linear image.

    Integer formats are decoded through the transfer curve; .npy files hold
    linear float data already and are taken as-is.
    """
    with open(path, "rb") as fh:
        data = fh.read()
    return decode_image_bytes(data)


def decode_image_bytes(data: bytes) -> LinearImage:
    """Sniff the format from magic bytes and decode.  See load_image."""
    if data[:8] == pngio.SIGNATURE:
        png = pngio.read_png(data)
        if png.color_type == 2:
            rgb = png.pixels
        elif png.color_type == 6:
            rgb = png.pixels[:, :, :3]
        else:
            raise FormatError(
                f"PNG color type {png.color_type} not supported for color images"
            )
        maxval = (1 << png.bit_depth) - 1
        return LinearImage(srgb_decode(rgb.astype(np.float64) / maxval))
    if data[:2] == b"P6":
        rgb, maxval = _read_ppm(data)
        return LinearImage(srgb_decode(rgb.astype(np.float64) / maxval))
    if data[: len(NPY_MAGIC)] == NPY_MAGIC:
        import io

        arr = np.load(io.BytesIO(data), allow_pickle=False)
        return LinearImage(np.asarray(arr, dtype=np.float64))
    raise FormatError("unrecognized image format (expected PNG, PPM P6, or .npy)")


def save_image(img: LinearImage, path: str, depth: int = 16) -> None:
    """Write an image as PNG/PPM (gamma-encoded, 8 or 16 bit) or .npy (raw).

    The format comes from the file extension.  depth is ignored for .npy,
    which stores the float64 data losslessly.
    """
    ext = os.path.splitext(path)[1].lower()
    if ext == ".npy":
        np.save(path, img.data, allow_pickle=False)
        return
    if depth not in (8, 16):
        raise ParameterError(f"bit depth must be 8 or 16, got {depth}")
    maxval = (1 << depth) - 1
    q = _quantize(srgb_encode(img.data), maxval)
    if ext == ".png":
        payload = pngio.write_png(q)
    elif ext in (".ppm", ".pnm"):
        payload = _write_ppm(q, maxval)
    else:
        raise FormatError(f"unsupported output extension: {ext or '(none)'}")
    with open(path, "wb") as fh:
        fh.write(payload)


def encode_preview_png(img: LinearImage) -> bytes:
    """8-bit PNG bytes for display purposes."""
    return pngio.write_png(_quantize(srgb_encode(img.data), 255))


def load_channel(path: str) -> ChannelImage:
    """Load a single-plane file: gray PNG (8/16 bit) or 2-D .npy."""
    with open(path, "rb") as fh:
        data = fh.read()
    if data[:8] == pngio.SIGNATURE:
        png = pngio.read_png(data)
        if png.color_type != 0:
            raise FormatError(
                f"expected a grayscale PNG, got color type {png.color_type}"
            )
        maxval = (1 << png.bit_depth) - 1
        return ChannelImage(png.pixels.astype(np.float64) / maxval)
    if data[: len(NPY_MAGIC)] == NPY_MAGIC:
        import io

        arr = np.load(io.BytesIO(data), allow_pickle=False)
        return ChannelImage(np.asarray(arr, dtype=np.float64))
    raise FormatError("unrecognized channel format (expected gray PNG or 2-D .npy)")


def save_channel(ch: ChannelImage, path: str, depth: int = 8) -> None:
    """Write a channel as a gray PNG (values quantized directly, no gamma)
    or as a 2-D .npy."""
    ext = os.path.splitext(path)[1].lower()
    if ext == ".npy":
        np.save(path, ch.data, allow_pickle=False)
        return
    if depth not in (8, 16):
        raise ParameterError(f"bit depth must be 8 or 16, got {depth}")
    maxval = (1 << depth) - 1
    q = _quantize(np.clip(ch.data, 0.0, 1.0), maxval)
    if ext != ".png":
        raise FormatError(f"unsupported channel extension: {ext or '(none)'}")
    with open(path, "wb") as fh:
        fh.write(pngio.write_png(q))


def _read_ppm(data: bytes) -> Tuple[np.ndarray, int]:
    """Parse binary PPM (P6).  Comments and arbitrary whitespace allowed in
    the header; maxval must be 255 or 65535."""
    pos = 2
    fields = []
    while len(fields) < 3:
        while pos < len(data) and data[pos : pos + 1].isspace():
            pos += 1
        if pos < len(data) and data[pos : pos + 1] == b"#":
            while pos < len(data) and data[pos : pos + 1] not in (b"\n", b""):
                pos += 1
            continue
        start = pos
        while pos < len(data) and not data[pos : pos + 1].isspace():
            pos += 1
        if start == pos:
            raise FormatError("truncated PPM header")
        fields.append(data[start:pos])
    pos += 1  # single whitespace after maxval
    try:
        width, height, maxval = (int(f) for f in fields)
    except ValueError as exc:
        raise FormatError(f"bad PPM header: {exc}") from exc
    if maxval == 255:
        dtype, itemsize = np.uint8, 1
    elif maxval == 65535:
        dtype, itemsize = np.dtype(">u2"), 2
    else:
        raise FormatError(f"unsupported PPM maxval: {maxval}")
    need = width * height * 3 * itemsize
    body = data[pos : pos + need]
    if len(body) != need:
        raise FormatError("PPM pixel data truncated")
    arr = np.frombuffer(body, dtype=dtype).reshape(height, width, 3)
    return arr.astype(np.uint16 if itemsize == 2 else np.uint8), maxval


def _write_ppm(q: np.ndarray, maxval: int) -> bytes:
    header = f"P6\n{q.shape[1]} {q.shape[0]}\n{maxval}\n".encode("ascii")
    body = (q.astype(">u2") if maxval == 65535 else q.astype(np.uint8)).tobytes()
    return header + body


# --- Channel post-processing ---


def histogram_equalize(ch: ChannelImage, bins: int = 256) -> ChannelImage:
    """Histogram equalization on [0, 1] values.

    Each pixel maps to the cumulative share of pixels at or below its bin, so
    a constant image maps to 1.0 and an already-flat histogram moves values by
    at most one bin width.  Monotone: never reorders values.
    """
    if bins < 2:
        raise ParameterError(f"bins must be >= 2, got {bins}")
    v = np.clip(ch.data, 0.0, 1.0)
    idx = np.minimum((v * bins).astype(np.int64), bins - 1)
    hist = np.bincount(idx.ravel(), minlength=bins)
    cdf = np.cumsum(hist) / idx.size
    return ChannelImage(cdf[idx])


def invert(ch: ChannelImage) -> ChannelImage:
    """1 - v on clamped values.  Applying it twice returns the clamped input."""
    return ChannelImage(1.0 - np.clip(ch.data, 0.0, 1.0))
