"""Minimal PNG reader/writer on top of zlib.

Supports what the rest of the package needs and nothing more:

* read: 8- and 16-bit, color types 0 (gray), 2 (RGB), 3 (palette), 6 (RGBA),
  no interlacing, all five scanline filters;
* write: filter 0 scanlines, gray / RGB / RGBA from dtype+shape, optional
  palette output for label images.

Samples are big-endian per the format.  Output is deterministic: a fixed zlib
level and a single IDAT chunk, so identical pixels give identical bytes.
"""

import struct
import zlib
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import FormatError

SIGNATURE = b"\x89PNG\r\n\x1a\n"

# channels per color type
_CHANNELS = {0: 1, 2: 3, 3: 1, 4: 2, 6: 4}


@dataclass
class PngImage:
    width: int
    height: int
    bit_depth: int
    color_type: int
    pixels: np.ndarray  # (H, W) or (H, W, C), uint8 or uint16
    palette: Optional[np.ndarray] = None  # (n, 3) uint8 for color type 3


def _chunk(tag: bytes, data: bytes) -> bytes:
    return (
        struct.pack(">I", len(data))
        + tag
        + data
        + struct.pack(">I", zlib.crc32(tag + data) & 0xFFFFFFFF)
    )


def _paeth(a: int, b: int, c: int) -> int:
    p = a + b - c
    pa = abs(p - a)
    pb = abs(p - b)
    pc = abs(p - c)
    if pa <= pb and pa <= pc:
        return a
    if pb <= pc:
        return b
    return c


def _unfilter(raw: bytes, height: int, row_bytes: int, bpp: int) -> bytearray:
    """Undo per-scanline filtering.  raw holds height*(1+row_bytes) bytes."""
    expected = height * (1 + row_bytes)
    if len(raw) < expected:
        raise FormatError("PNG pixel data truncated")
    out = bytearray(height * row_bytes)
    prev_start = -1
    for y in range(height):
        off = y * (1 + row_bytes)
        ftype = raw[off]
        line = bytearray(raw[off + 1 : off + 1 + row_bytes])
        base = y * row_bytes
        if ftype == 0:
            pass
        elif ftype == 1:  # Sub
            for i in range(bpp, row_bytes):
                line[i] = (line[i] + line[i - bpp]) & 0xFF
        elif ftype == 2:  # Up
            if prev_start >= 0:
                for i in range(row_bytes):
                    line[i] = (line[i] + out[prev_start + i]) & 0xFF
        elif ftype == 3:  # Average
            for i in range(row_bytes):
                a = line[i - bpp] if i >= bpp else 0
                b = out[prev_start + i] if prev_start >= 0 else 0
                line[i] = (line[i] + ((a + b) >> 1)) & 0xFF
        elif ftype == 4:  # Paeth
            for i in range(row_bytes):
                a = line[i - bpp] if i >= bpp else 0
                b = out[prev_start + i] if prev_start >= 0 else 0
                c = out[prev_start + i - bpp] if (prev_start >= 0 and i >= bpp) else 0
                line[i] = (line[i] + _paeth(a, b, c)) & 0xFF
        else:
            raise FormatError(f"unknown PNG filter type {ftype}")
        out[base : base + row_bytes] = line
        prev_start = base
    return out


def read_png(data: bytes) -> PngImage:
    """Decode a PNG byte string.

    Raises FormatError for anything outside the supported subset (bit depths
    8/16, color types 0/2/3/6, no interlace).
    """
    if data[:8] != SIGNATURE:
        raise FormatError("not a PNG file")
    pos = 8
    width = height = bit_depth = color_type = None
    interlace = 0
    idat = bytearray()
    palette = None
    while pos + 8 <= len(data):
        (length,) = struct.unpack(">I", data[pos : pos + 4])
        tag = data[pos + 4 : pos + 8]
        body = data[pos + 8 : pos + 8 + length]
        if len(body) != length:
            raise FormatError("PNG chunk truncated")
        pos += 12 + length
        if tag == b"IHDR":
            width, height, bit_depth, color_type, comp, filt, interlace = struct.unpack(
                ">IIBBBBB", body
            )
            if comp != 0 or filt != 0:
                raise FormatError("unsupported PNG compression/filter method")
        elif tag == b"PLTE":
            palette = np.frombuffer(body, dtype=np.uint8).reshape(-1, 3).copy()
        elif tag == b"IDAT":
            idat.extend(body)
        elif tag == b"IEND":
            break
    if width is None:
        raise FormatError("PNG missing IHDR")
    if interlace != 0:
        raise FormatError("interlaced PNG not supported")
    if bit_depth not in (8, 16):
        raise FormatError(f"unsupported PNG bit depth: {bit_depth}")
    if color_type not in _CHANNELS:
        raise FormatError(f"unsupported PNG color type: {color_type}")
    if color_type == 3 and palette is None:
        raise FormatError("palette PNG missing PLTE chunk")
    if color_type == 3 and bit_depth != 8:
        raise FormatError("palette PNG must be 8-bit")

    channels = _CHANNELS[color_type]
    bytes_per_sample = bit_depth // 8
    row_bytes = width * channels * bytes_per_sample
    bpp = channels * bytes_per_sample
    try:
        raw = zlib.decompress(bytes(idat))
    except zlib.error as exc:
        raise FormatError(f"PNG deflate stream corrupt: {exc}") from exc
    flat = _unfilter(raw, height, row_bytes, bpp)
    dtype = np.dtype(">u2") if bit_depth == 16 else np.uint8
    arr = np.frombuffer(bytes(flat), dtype=dtype)
    if channels > 1:
        arr = arr.reshape(height, width, channels)
    else:
        arr = arr.reshape(height, width)
    arr = arr.astype(np.uint16 if bit_depth == 16 else np.uint8)
    return PngImage(width, height, bit_depth, color_type, arr, palette)


def write_png(pixels: np.ndarray, palette: Optional[np.ndarray] = None) -> bytes:
    """Encode an array as PNG bytes.

    dtype picks the bit depth (uint8 or uint16); shape picks the color type:
    (H, W) gray, (H, W, 3) RGB, (H, W, 4) RGBA.  Passing a palette with a
    (H, W) uint8 array writes an indexed image instead of gray.
    """
    if pixels.dtype == np.uint8:
        bit_depth = 8
    elif pixels.dtype == np.uint16:
        bit_depth = 16
    else:
        raise FormatError(f"cannot encode dtype {pixels.dtype} as PNG")
    if pixels.ndim == 2:
        color_type = 0
        if palette is not None:
            if bit_depth != 8:
                raise FormatError("palette PNG must be 8-bit")
            if pixels.max(initial=0) >= len(palette):
                raise FormatError("palette index out of range")
            color_type = 3
    elif pixels.ndim == 3 and pixels.shape[2] == 3:
        color_type = 2
    elif pixels.ndim == 3 and pixels.shape[2] == 4:
        color_type = 6
    else:
        raise FormatError(f"cannot encode shape {pixels.shape} as PNG")

    height, width = pixels.shape[:2]
    ihdr = struct.pack(">IIBBBBB", width, height, bit_depth, color_type, 0, 0, 0)
    big = pixels.astype(">u2") if bit_depth == 16 else pixels.astype(np.uint8)
    row_bytes = big.reshape(height, -1).view(np.uint8).reshape(height, -1)
    scan = np.concatenate(
        [np.zeros((height, 1), dtype=np.uint8), row_bytes], axis=1
    ).tobytes()
    out = [SIGNATURE, _chunk(b"IHDR", ihdr)]
    if color_type == 3:
        out.append(_chunk(b"PLTE", np.asarray(palette, dtype=np.uint8).tobytes()))
    out.append(_chunk(b"IDAT", zlib.compress(scan, 6)))
    out.append(_chunk(b"IEND", b""))
    return b"".join(out)
