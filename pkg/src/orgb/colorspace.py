"""Color space conversions on linear RGB images.

Three targets: rg chromaticity (brightness-free ratios), hexcone HSV, and
CIELUV.  Conversions return named channel planes rather than packed triplets
so the CLI and the demos can pick single channels for display and statistics.
"""

from dataclasses import dataclass
from typing import Dict

import numpy as np

from .errors import DimensionMismatchError, ParameterError
from .image import ChannelImage, LinearImage

BLACK_SUM = 1e-9

# Linear RGB -> XYZ, D65 white, 7-decimal coefficients.
RGB_TO_XYZ = np.array(
    [
        [0.4124564, 0.3575761, 0.1804375],
        [0.2126729, 0.7151522, 0.0721750],
        [0.0193339, 0.1191920, 0.9503041],
    ]
)

# The conversion's own white (the matrix row sums) defines the reference
# chromaticity, so the gray axis lands exactly on (u'_n, v'_n) instead of
# 1e-7 away from it.  Numerically these agree with the textbook D65 values
# u'_n = 0.1978398, v'_n = 0.4683363 to about 5e-7.
_WHITE_XYZ = RGB_TO_XYZ.sum(axis=1)
_WHITE_DENOM = _WHITE_XYZ[0] + 15.0 * _WHITE_XYZ[1] + 3.0 * _WHITE_XYZ[2]
WHITE_U = float(4.0 * _WHITE_XYZ[0] / _WHITE_DENOM)
WHITE_V = float(9.0 * _WHITE_XYZ[1] / _WHITE_DENOM)

# CIE lightness constants: t^(1/3) above the knee, linear segment below.
LUV_EPS = 216.0 / 24389.0
LUV_KAPPA = 24389.0 / 27.0


@dataclass(eq=False)
class ChannelSet:
    """Named planes produced by one conversion, all equally sized."""

    space: str
    channels: Dict[str, ChannelImage]

    def __post_init__(self):
        shapes = {c.data.shape for c in self.channels.values()}
        if len(shapes) > 1:
            raise DimensionMismatchError(f"channel shapes differ: {shapes}")

    def __getitem__(self, name: str) -> ChannelImage:
        if name not in self.channels:
            raise ParameterError(
                f"space {self.space!r} has no channel {name!r}; "
                f"choose from {sorted(self.channels)}"
            )
        return self.channels[name]


def to_rg_chromaticity(img: LinearImage) -> ChannelSet:
    """r = R/(R+G+B), g = G/(R+G+B); black pixels (sum < 1e-9) map to the
    neutral point (1/3, 1/3).

    Channels are pre-divided by the per-pixel maximum so equal channels
    cancel exactly and the gray axis lands on 1/3 to the last bit, not one
    rounding step away.
    """
    s = img.data.sum(axis=2)
    black = s < BLACK_SUM
    # when not black, the max channel is >= sum/3 > 0, so this is safe
    m = np.where(black, 1.0, img.data.max(axis=2))
    t = img.data / m[:, :, None]
    ts = t.sum(axis=2)
    safe = np.where(black, 1.0, ts)
    r = np.where(black, 1.0 / 3.0, t[:, :, 0] / safe)
    g = np.where(black, 1.0 / 3.0, t[:, :, 1] / safe)
    return ChannelSet("rg", {"r": ChannelImage(r), "g": ChannelImage(g)})


def to_hsv(img: LinearImage) -> ChannelSet:
    """Hexcone HSV on values clamped to [0, 1].

    h in [0, 1), s and v in [0, 1].  Achromatic pixels get h = 0, s = 0 for
    black.  When two channels tie for the maximum the lower channel index
    wins, so the sector choice is deterministic.
    """
    rgb = np.clip(img.data, 0.0, 1.0)
    v = rgb.max(axis=2)
    c = v - rgb.min(axis=2)
    arg = rgb.argmax(axis=2)  # ties -> lowest index
    safe_c = np.where(c == 0, 1.0, c)
    r, g, b = rgb[:, :, 0], rgb[:, :, 1], rgb[:, :, 2]
    h = np.where(
        arg == 0,
        ((g - b) / safe_c) % 6.0,
        np.where(arg == 1, (b - r) / safe_c + 2.0, (r - g) / safe_c + 4.0),
    )
    h = np.where(c == 0, 0.0, h / 6.0)
    s = np.where(v == 0, 0.0, c / np.where(v == 0, 1.0, v))
    return ChannelSet(
        "hsv",
        {"h": ChannelImage(h), "s": ChannelImage(s), "v": ChannelImage(v)},
    )


def hsv_to_rgb(channels: ChannelSet) -> LinearImage:
    """Inverse hexcone transform; exact on to_hsv output up to rounding."""
    h = channels["h"].data
    s = channels["s"].data
    v = channels["v"].data
    k = (h % 1.0) * 6.0
    i = np.floor(k).astype(np.int64) % 6
    f = k - np.floor(k)
    p = v * (1.0 - s)
    q = v * (1.0 - s * f)
    t = v * (1.0 - s * (1.0 - f))
    r = np.choose(i, [v, q, p, p, t, v])
    g = np.choose(i, [t, v, v, q, p, p])
    b = np.choose(i, [p, p, t, v, v, q])
    return LinearImage(np.stack([r, g, b], axis=2))


def to_cieluv(img: LinearImage) -> ChannelSet:
    """CIELUV via XYZ (D65).  Channels "l" (0..100), "u", "v".

    Black maps to (0, 0, 0); the gray axis maps to u* = v* = 0 because the
    white chromaticity comes from the same matrix as the conversion.
    """
    rgb = np.clip(img.data, 0.0, 1.0)
    xyz = rgb @ RGB_TO_XYZ.T
    x, y, z = xyz[:, :, 0], xyz[:, :, 1], xyz[:, :, 2]
    t = y  # white Y is 1 by construction of the matrix scale
    lstar = np.where(t > LUV_EPS, 116.0 * np.cbrt(t) - 16.0, LUV_KAPPA * t)
    denom = x + 15.0 * y + 3.0 * z
    dark = denom < BLACK_SUM
    safe = np.where(dark, 1.0, denom)
    up = np.where(dark, WHITE_U, 4.0 * x / safe)
    vp = np.where(dark, WHITE_V, 9.0 * y / safe)
    ustar = 13.0 * lstar * (up - WHITE_U)
    vstar = 13.0 * lstar * (vp - WHITE_V)
    return ChannelSet(
        "luv",
        {
            "l": ChannelImage(lstar),
            "u": ChannelImage(ustar),
            "v": ChannelImage(vstar),
        },
    )


def convert(img: LinearImage, space: str) -> ChannelSet:
    """Dispatch by space name: "rg", "hsv", or "luv"."""
    if space == "rg":
        return to_rg_chromaticity(img)
    if space == "hsv":
        return to_hsv(img)
    if space == "luv":
        return to_cieluv(img)
    raise ParameterError(f"unknown color space: {space!r}")


# Display ranges for channels whose natural range is not [0, 1]: value v maps
# to (v - lo) / (hi - lo) before quantization.
DISPLAY_RANGES = {
    ("luv", "l"): (0.0, 100.0),
    ("luv", "u"): (-200.0, 200.0),
    ("luv", "v"): (-200.0, 200.0),
}


def display_channel(cs: ChannelSet, name: str) -> ChannelImage:
    """Channel scaled into [0, 1] for grayscale export."""
    ch = cs[name]
    lo, hi = DISPLAY_RANGES.get((cs.space, name), (0.0, 1.0))
    return ChannelImage(np.clip((ch.data - lo) / (hi - lo), 0.0, 1.0))
