"""Downstream consumers used to show the effect of offset correction:
hue/saturation clustering, saturation edges, and detection-quality metrics.

Everything here is deterministic: seeded initialization, fixed tie-breaking,
single-threaded numpy.  Same inputs, same outputs, every run.
"""

from dataclasses import dataclass
from typing import Dict

import numpy as np

from .colorspace import to_hsv, to_rg_chromaticity
from .errors import DegenerateKError, EmptyRegionError, ParameterError
from .image import ChannelImage, LinearImage, RegionMask
from .offset import masked_pixels

# --- Clustering ---


@dataclass(eq=False)
class LabelImage:
    """Integer cluster labels per pixel, values in [0, k)."""

    labels: np.ndarray
    k: int

    def __post_init__(self):
        self.labels = np.asarray(self.labels, dtype=np.int32)
        if self.labels.ndim != 2:
            raise ParameterError("labels must be a 2-D array")
        if self.k < 1:
            raise ParameterError("k must be >= 1")


def hue_saturation_features(img: LinearImage) -> np.ndarray:
    """(n, 2) chroma vectors s * (cos 2*pi*h, sin 2*pi*h), row-major.

    Embedding hue on a circle keeps the 0/1 wrap from splitting red; scaling
    by saturation keeps near-gray pixels from amplifying hue noise.
    """
    hsv = to_hsv(img)
    h = hsv["h"].data.ravel()
    s = hsv["s"].data.ravel()
    ang = 2.0 * np.pi * h
    return np.stack([s * np.cos(ang), s * np.sin(ang)], axis=1)


def kmeans_segment(img: LinearImage, k: int, seed: int = 0) -> LabelImage:
    """Lloyd k-means on hue/saturation features.

    Deterministic: the first center is the pixel at index seed mod n, the
    rest come from farthest-point seeding; assignment ties pick the lowest
    center index; an emptied cluster is reseeded on the point farthest from
    its nearest center.  Stops when no center moves more than 1e-6 or after
    100 rounds.
    """
    if k < 2:
        raise ParameterError(f"k must be >= 2, got {k}")
    pts = hue_saturation_features(img)
    n = pts.shape[0]
    if np.unique(pts, axis=0).shape[0] < k:
        raise DegenerateKError(
            f"fewer than k={k} distinct feature points in the image"
        )

    centers = np.empty((k, 2))
    centers[0] = pts[seed % n]
    d2 = ((pts - centers[0]) ** 2).sum(axis=1)
    for c in range(1, k):
        centers[c] = pts[int(np.argmax(d2))]
        d2 = np.minimum(d2, ((pts - centers[c]) ** 2).sum(axis=1))

    assign = np.zeros(n, dtype=np.int64)
    for _ in range(100):
        dist = ((pts[:, None, :] - centers[None, :, :]) ** 2).sum(axis=2)
        assign = dist.argmin(axis=1)  # ties -> lowest index
        new_centers = centers.copy()
        for c in range(k):
            sel = assign == c
            if sel.any():
                new_centers[c] = pts[sel].mean(axis=0)
        for c in range(k):
            if not (assign == c).any():
                d2 = ((pts[:, None, :] - new_centers[None, :, :]) ** 2).sum(
                    axis=2
                ).min(axis=1)
                new_centers[c] = pts[int(np.argmax(d2))]
        movement = float(np.linalg.norm(new_centers - centers, axis=1).max())
        centers = new_centers
        if movement < 1e-6:
            break
    dist = ((pts[:, None, :] - centers[None, :, :]) ** 2).sum(axis=2)
    assign = dist.argmin(axis=1)
    return LabelImage(assign.reshape(img.height, img.width).astype(np.int32), k)


# --- Edges ---


def _gaussian_kernel(sigma: float) -> np.ndarray:
    radius = int(np.ceil(3.0 * sigma))
    x = np.arange(-radius, radius + 1, dtype=np.float64)
    k = np.exp(-(x**2) / (2.0 * sigma**2))
    return k / k.sum()


def _convolve_rows(a: np.ndarray, k: np.ndarray) -> np.ndarray:
    r = len(k) // 2
    padded = np.pad(a, ((0, 0), (r, r)), mode="edge")
    out = np.zeros_like(a)
    for i, kv in enumerate(k):
        out += kv * padded[:, i : i + a.shape[1]]
    return out


def _convolve2(a: np.ndarray, kernel: np.ndarray) -> np.ndarray:
    kh, kw = kernel.shape
    padded = np.pad(a, ((kh // 2, kh // 2), (kw // 2, kw // 2)), mode="edge")
    out = np.zeros_like(a)
    for dy in range(kh):
        for dx in range(kw):
            out += kernel[dy, dx] * padded[dy : dy + a.shape[0], dx : dx + a.shape[1]]
    return out


SOBEL_X = np.array([[-1.0, 0.0, 1.0], [-2.0, 0.0, 2.0], [-1.0, 0.0, 1.0]])
SOBEL_Y = SOBEL_X.T

# a gradient maximum at or below this is accumulated rounding noise, not
# structure; normalizing by it would promote the noise to full-scale edges
MIN_GRADIENT = 1e-12


def canny_edges(
    ch: ChannelImage, sigma: float = 1.4, lo: float = 0.04, hi: float = 0.10
) -> ChannelImage:
    """Classic edge chain on one channel: Gaussian blur, Sobel gradient,
    4-direction non-maximum suppression, double-threshold hysteresis.

    Thresholds apply to the gradient magnitude normalized by its maximum.
    The suppression tie-break (>= toward one neighbor, > toward the other)
    keeps a clean symmetric step down to a single-pixel line.  Output is a
    binary 0/1 channel.
    """
    if sigma <= 0:
        raise ParameterError(f"sigma must be > 0, got {sigma}")
    if not 0.0 < lo < hi:
        raise ParameterError(f"thresholds need 0 < lo < hi, got lo={lo} hi={hi}")
    a = ch.data.astype(np.float64)
    k1 = _gaussian_kernel(sigma)
    a = _convolve_rows(a, k1)
    a = _convolve_rows(a.T, k1).T
    gx = _convolve2(a, SOBEL_X)
    gy = _convolve2(a, SOBEL_Y)
    mag = np.hypot(gx, gy)
    top = mag.max()
    if top <= MIN_GRADIENT:
        return ChannelImage(np.zeros_like(a))
    mag = mag / top

    # direction bins: 0 horizontal gradient, 1 diag /, 2 vertical, 3 diag \
    ang = np.arctan2(gy, gx) % np.pi
    sector = np.floor((ang + np.pi / 8) / (np.pi / 4)).astype(np.int64) % 4
    offsets = {0: (0, 1), 1: (-1, 1), 2: (-1, 0), 3: (-1, -1)}
    h, w = mag.shape
    padded = np.pad(mag, 1, mode="constant")
    keep = np.zeros((h, w), dtype=bool)
    yy, xx = np.mgrid[0:h, 0:w]
    for s, (dy, dx) in offsets.items():
        sel = sector == s
        fwd = padded[yy + 1 + dy, xx + 1 + dx]
        bwd = padded[yy + 1 - dy, xx + 1 - dx]
        keep |= sel & (mag >= fwd) & (mag > bwd)

    strong = keep & (mag >= hi)
    weak = keep & (mag >= lo)
    edges = strong.copy()
    while True:
        grown = edges.copy()
        g = np.pad(edges, 1, mode="constant")
        for dy in (-1, 0, 1):
            for dx in (-1, 0, 1):
                if dy == 0 and dx == 0:
                    continue
                grown |= g[1 + dy : 1 + dy + h, 1 + dx : 1 + dx + w]
        grown &= weak
        grown |= edges
        if (grown == edges).all():
            break
        edges = grown
    return ChannelImage(edges.astype(np.float64))


# --- Region statistics ---


def region_color_stddev(
    img: LinearImage, mask: RegionMask, space: str = "hsv"
) -> Dict[str, float]:
    """Population stddev of the chromaticity channels over masked pixels.

    space "hsv" reports circular hue spread (RMS distance of unit hue
    vectors from their mean) and saturation stddev; "rg" reports the two
    chromaticity channels directly.
    """
    if mask.count < 2:
        raise EmptyRegionError(
            f"need at least 2 masked pixels for a spread, got {mask.count}"
        )
    pix_mask = mask.bits
    if space == "hsv":
        hsv = to_hsv(img)
        h = hsv["h"].data[pix_mask]
        s = hsv["s"].data[pix_mask]
        ang = 2.0 * np.pi * h
        z = np.stack([np.cos(ang), np.sin(ang)], axis=1)
        zc = z - z.mean(axis=0)
        return {
            "h": float(np.sqrt((zc**2).sum(axis=1).mean())),
            "s": float(s.std()),
        }
    if space == "rg":
        rg = to_rg_chromaticity(img)
        r = rg["r"].data[pix_mask]
        g = rg["g"].data[pix_mask]
        return {"r": float(r.std()), "g": float(g.std())}
    raise ParameterError(f"unsupported space for region stats: {space!r}")


# --- Detection metrics ---


@dataclass(frozen=True)
class SegMetrics:
    """Pixel-overlap scores between a predicted mask and ground truth.

    g_quality = TP / (TP + FP + FN), detection rate TP / (TP + FN),
    detection accuracy TP / (TP + FP), and their harmonic mean f.  Both
    masks empty scores a perfect 1 across the board; exactly one empty
    scores 0.
    """

    tp: int
    fp: int
    fn: int
    g_quality: float
    detection_rate: float
    detection_accuracy: float
    f_measure: float


def segmentation_metrics(pred: RegionMask, gt: RegionMask) -> SegMetrics:
    if pred.bits.shape != gt.bits.shape:
        raise ParameterError(
            f"mask shapes differ: {pred.bits.shape} vs {gt.bits.shape}"
        )
    tp = int((pred.bits & gt.bits).sum())
    fp = int((pred.bits & ~gt.bits).sum())
    fn = int((~pred.bits & gt.bits).sum())
    if pred.count == 0 and gt.count == 0:
        g = dr = da = f = 1.0
    elif pred.count == 0 or gt.count == 0:
        g = dr = da = f = 0.0
    else:
        g = tp / (tp + fp + fn)
        dr = tp / (tp + fn)
        da = tp / (tp + fp)
        f = 2.0 * da * dr / (da + dr) if da + dr > 0 else 0.0
    return SegMetrics(
        tp=tp,
        fp=fp,
        fn=fn,
        g_quality=g,
        detection_rate=dr,
        detection_accuracy=da,
        f_measure=f,
    )


__all__ = [
    "LabelImage",
    "SegMetrics",
    "canny_edges",
    "hue_saturation_features",
    "kmeans_segment",
    "masked_pixels",
    "region_color_stddev",
    "segmentation_metrics",
]
