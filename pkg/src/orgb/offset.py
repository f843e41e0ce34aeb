"""Additive-offset estimation and removal.

Under a two-source light, every pixel of a single surface is phi + delta with
delta fixed, so plotting each channel against the channel sum over one surface
gives a straight line whose intercept isolates the per-channel offset:

    rho_j = k_j * sum_i(rho_i) + (delta_j - k_j * sum_i(delta_i))

The three slopes sum to 1 and the three intercepts sum to 0 (exactly, in the
algebra; to rounding in the estimates).  Correction maps each channel through
(rho - e) / (1 - e), which pins white at white and sends the offset to zero.

This module also fits 3-D color lines to pixel clouds and intersects bundles
of them, which is the geometric counterpart: uncorrected surfaces form lines
missing the origin, corrected ones pass through it.
"""

import hashlib
import json
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np

from .errors import (
    DegenerateBundleError,
    DimensionMismatchError,
    EmptyRegionError,
    FlatRegionError,
    InvalidEpsilonError,
    ParameterError,
)
from .image import LinearImage, RegionMask

MIN_REGION_PIXELS = 8
FLAT_VARIANCE = 1e-12


# --- Result types ---


@dataclass(frozen=True)
class ChannelFit:
    """One channel's straight-line fit against the channel sum."""

    slope: float
    intercept: float
    r2: float
    n: int


@dataclass(eq=False)
class Epsilon:
    """Per-channel offset estimate.

    values must be finite and < 1 componentwise; (1 - e) is a divisor.
    fits/region/method document where an estimated value came from and are
    absent on hand-built instances.
    """

    values: np.ndarray
    fits: Optional[Tuple[ChannelFit, ChannelFit, ChannelFit]] = None
    region: Optional[dict] = None
    method: str = "ols"

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64).reshape(3)
        if not np.isfinite(self.values).all():
            raise InvalidEpsilonError("offset estimate is not finite")
        if (self.values >= 1.0).any():
            raise InvalidEpsilonError(
                f"offset components must be < 1, got {self.values.tolist()}"
            )

    @classmethod
    def from_values(cls, values: Sequence[float]) -> "Epsilon":
        return cls(np.asarray(values, dtype=np.float64))


@dataclass(eq=False)
class ColorLine:
    """Total-least-squares line through a pixel cloud in RGB space."""

    centroid: np.ndarray
    direction: np.ndarray  # unit vector, largest-magnitude component >= 0
    rms_residual: float
    n: int


@dataclass(eq=False)
class ConvergenceReport:
    """Least-squares meeting point of a bundle of color lines."""

    point: np.ndarray
    rms_line_distance: float
    lines: List[ColorLine]


# --- Pixel gathering ---


def masked_pixels(img: LinearImage, mask: RegionMask) -> np.ndarray:
    """(n, 3) pixels selected by the mask, row-major order."""
    if mask.bits.shape != (img.height, img.width):
        raise DimensionMismatchError(
            f"mask shape {mask.bits.shape} does not match image "
            f"{(img.height, img.width)}"
        )
    if mask.count == 0:
        raise EmptyRegionError("mask selects no pixels")
    return img.data[mask.bits]


def _region_descriptor(mask: RegionMask) -> dict:
    if mask.rect is not None:
        x, y, w, h = mask.rect
        return {"x": x, "y": y, "w": w, "h": h}
    digest = hashlib.sha256(np.packbits(mask.bits).tobytes()).hexdigest()
    return {"mask_sha256": digest, "count": mask.count}


# --- Straight-line fits ---


def fit_channel_line(
    sums: np.ndarray, rhos: np.ndarray, method: str = "ols"
) -> ChannelFit:
    """Fit rho = slope * sum + intercept.

    method "ols" is plain least squares; "theil-sen" takes the median of
    pairwise slopes (all pairs up to 10000, a seeded sample beyond that) and
    the median residual as intercept, with r2 computed against that line.
    """
    sums = np.asarray(sums, dtype=np.float64)
    rhos = np.asarray(rhos, dtype=np.float64)
    if sums.shape != rhos.shape or sums.ndim != 1:
        raise DimensionMismatchError("sums and rhos must be equal-length vectors")
    n = sums.size
    if n < MIN_REGION_PIXELS:
        raise EmptyRegionError(
            f"need at least {MIN_REGION_PIXELS} pixels to fit, got {n}"
        )
    if np.var(sums) <= FLAT_VARIANCE:
        raise FlatRegionError(
            "region brightness is flat; choose a region spanning a brightness "
            "range, e.g. one crossing a shadow boundary"
        )
    if method == "ols":
        sx = sums.mean()
        sy = rhos.mean()
        dx = sums - sx
        slope = float(dx @ (rhos - sy) / (dx @ dx))
        intercept = float(sy - slope * sx)
    elif method == "theil-sen":
        slope = _theil_sen_slope(sums, rhos)
        intercept = float(np.median(rhos - slope * sums))
    else:
        raise ParameterError(f"unknown fit method: {method!r}")
    resid = rhos - (slope * sums + intercept)
    ss_tot = float(((rhos - rhos.mean()) ** 2).sum())
    ss_res = float((resid**2).sum())
    r2 = 1.0 if ss_tot == 0 else 1.0 - ss_res / ss_tot
    return ChannelFit(slope=slope, intercept=intercept, r2=r2, n=n)


MAX_SLOPE_PAIRS = 10000


def _theil_sen_slope(x: np.ndarray, y: np.ndarray) -> float:
    n = x.size
    if n * (n - 1) // 2 <= MAX_SLOPE_PAIRS:
        i, j = np.triu_indices(n, k=1)
    else:
        rng = np.random.default_rng(0)
        i = rng.integers(0, n, MAX_SLOPE_PAIRS)
        # offset trick keeps j != i without rejection sampling
        j = (i + 1 + rng.integers(0, n - 1, MAX_SLOPE_PAIRS)) % n
    dx = x[j] - x[i]
    keep = dx != 0
    if not keep.any():
        raise FlatRegionError("no brightness variation among sampled pixel pairs")
    return float(np.median((y[j] - y[i])[keep] / dx[keep]))


def estimate_epsilon(
    img: LinearImage, mask: RegionMask, method: str = "ols"
) -> Epsilon:
    """Estimate the per-channel offset from one masked surface region.

    Fits each channel against the channel sum; the intercepts are the offset.
    The region must span a brightness range (shadow gradient) on a single
    surface for the linear model to hold.
    """
    pix = masked_pixels(img, mask)
    if pix.shape[0] < MIN_REGION_PIXELS:
        raise EmptyRegionError(
            f"need at least {MIN_REGION_PIXELS} pixels, got {pix.shape[0]}"
        )
    sums = pix.sum(axis=1)
    fits = tuple(fit_channel_line(sums, pix[:, j], method) for j in range(3))
    values = np.array([f.intercept for f in fits])
    if not np.isfinite(values).all() or (values >= 1.0).any():
        raise InvalidEpsilonError(
            f"estimated offsets {values.tolist()} cannot be applied"
        )
    return Epsilon(
        values=values, fits=fits, region=_region_descriptor(mask), method=method
    )


# --- Applying and undoing the correction ---


def correct(img: LinearImage, e: Epsilon) -> LinearImage:
    """Per-channel (rho - e) / (1 - e).  White (1,1,1) is a fixed point."""
    ev = e.values
    return LinearImage((img.data - ev) / (1.0 - ev))


def uncorrect(img: LinearImage, e: Epsilon) -> LinearImage:
    """Inverse of correct: rho * (1 - e) + e."""
    ev = e.values
    return LinearImage(img.data * (1.0 - ev) + ev)


def subtract_ambient(img: LinearImage, ambient: LinearImage) -> LinearImage:
    """Pixelwise difference of two equally sized images.

    Intended for removing a fully shaded (ambient-only) exposure from a lit
    one; negative values are preserved, not clamped.
    """
    if img.data.shape != ambient.data.shape:
        raise DimensionMismatchError(
            f"image shapes differ: {img.data.shape} vs {ambient.data.shape}"
        )
    return LinearImage(img.data - ambient.data)


# --- 3-D color-line geometry ---

POWER_ITERATIONS = 200
POWER_TOL = 1e-12


def _principal_direction(cov: np.ndarray) -> np.ndarray:
    """Dominant eigenvector of a 3x3 PSD matrix by power iteration.

    Starts from the axis with the largest variance; stops after 200 rounds or
    when the direction moves less than 1e-12.  Sign convention: the component
    with the largest magnitude is made non-negative.
    """
    v = np.zeros(3)
    v[int(np.argmax(np.diag(cov)))] = 1.0
    for _ in range(POWER_ITERATIONS):
        w = cov @ v
        norm = np.linalg.norm(w)
        if norm == 0.0:
            break
        w = w / norm
        if w @ v < 0:
            w = -w
        if np.linalg.norm(w - v) < POWER_TOL:
            v = w
            break
        v = w
    top = int(np.argmax(np.abs(v)))
    if v[top] < 0:
        v = -v
    return v


def fit_color_line(img: LinearImage, mask: RegionMask) -> ColorLine:
    """Total-least-squares line through the masked pixel cloud.

    The direction is the principal axis of the centered cloud; residual is
    the RMS perpendicular distance.  A cloud with zero variance in every
    direction cannot define a line.
    """
    pts = masked_pixels(img, mask)
    if pts.shape[0] < MIN_REGION_PIXELS:
        raise EmptyRegionError(
            f"need at least {MIN_REGION_PIXELS} pixels, got {pts.shape[0]}"
        )
    centroid = pts.mean(axis=0)
    centered = pts - centroid
    cov = centered.T @ centered / pts.shape[0]
    if float(np.abs(cov).max()) <= FLAT_VARIANCE:
        raise FlatRegionError(
            "pixel cloud is a single color; no line direction exists"
        )
    direction = _principal_direction(cov)
    along = centered @ direction
    # subtract the parallel part as a vector; the sqrt(|v|^2 - t^2) form
    # cancels catastrophically when the cloud is nearly collinear
    perp = centered - along[:, None] * direction
    return ColorLine(
        centroid=centroid,
        direction=direction,
        rms_residual=float(np.sqrt((perp**2).sum(axis=1).mean())),
        n=pts.shape[0],
    )


def line_origin_distance(line: ColorLine) -> float:
    """Perpendicular distance from the origin to the line."""
    c = line.centroid
    d = line.direction
    return float(np.linalg.norm(c - (c @ d) * d))


def line_point_distance(line: ColorLine, point: np.ndarray) -> float:
    """Perpendicular distance from an arbitrary point to the line."""
    r = np.asarray(point, dtype=np.float64) - line.centroid
    d = line.direction
    return float(np.linalg.norm(r - (r @ d) * d))


def _solve3(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """3x3 linear solve by Gaussian elimination with partial pivoting."""
    m = np.concatenate([a.astype(np.float64).copy(), b.reshape(3, 1)], axis=1)
    for col in range(3):
        pivot = col + int(np.argmax(np.abs(m[col:, col])))
        if m[pivot, col] == 0.0:
            raise DegenerateBundleError("line bundle system is singular")
        if pivot != col:
            m[[col, pivot]] = m[[pivot, col]]
        m[col] = m[col] / m[col, col]
        for row in range(3):
            if row != col:
                m[row] = m[row] - m[row, col] * m[col]
    return m[:, 3].copy()


MIN_BUNDLE_EIGENVALUE = 1e-9


def estimate_convergence_point(lines: Sequence[ColorLine]) -> ConvergenceReport:
    """Point minimizing the sum of squared distances to a bundle of lines.

    Accumulates the normal system sum(I - d d^T) x = sum((I - d d^T) c) and
    solves it directly.  Near-parallel bundles leave the system ill
    conditioned; those are rejected rather than answered badly.
    """
    lines = list(lines)
    if len(lines) < 2:
        raise DegenerateBundleError(
            f"need at least 2 lines to intersect, got {len(lines)}"
        )
    a = np.zeros((3, 3))
    b = np.zeros(3)
    for ln in lines:
        proj = np.eye(3) - np.outer(ln.direction, ln.direction)
        a += proj
        b += proj @ ln.centroid
    smallest = float(np.linalg.eigvalsh(a)[0])
    if smallest <= MIN_BUNDLE_EIGENVALUE:
        raise DegenerateBundleError(
            f"line bundle is near-parallel (smallest eigenvalue {smallest:.3e})"
        )
    point = _solve3(a, b)
    d2 = [line_point_distance(ln, point) ** 2 for ln in lines]
    return ConvergenceReport(
        point=point,
        rms_line_distance=float(np.sqrt(np.mean(d2))),
        lines=lines,
    )


# --- Offset report JSON ---


def epsilon_to_json(e: Epsilon) -> dict:
    doc = {
        "epsilon": e.values.tolist(),
        "space": "linear-rgb",
        "method": e.method,
    }
    if e.fits is not None:
        doc["fits"] = [
            {"slope": f.slope, "intercept": f.intercept, "r2": f.r2, "n": f.n}
            for f in e.fits
        ]
    if e.region is not None:
        doc["region"] = e.region
    return doc


def epsilon_from_json(doc: dict) -> Epsilon:
    try:
        values = np.asarray(doc["epsilon"], dtype=np.float64)
        fits = None
        if "fits" in doc:
            fits = tuple(
                ChannelFit(
                    slope=float(f["slope"]),
                    intercept=float(f["intercept"]),
                    r2=float(f["r2"]),
                    n=int(f["n"]),
                )
                for f in doc["fits"]
            )
            if len(fits) != 3:
                raise ValueError("expected 3 channel fits")
        return Epsilon(
            values=values,
            fits=fits,
            region=doc.get("region"),
            method=str(doc.get("method", "ols")),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise InvalidEpsilonError(f"malformed offset report: {exc}") from exc


def load_epsilon(path: str) -> Epsilon:
    with open(path, "r", encoding="utf-8") as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise InvalidEpsilonError(
                f"offset report is not valid JSON: {exc}"
            ) from exc
    return epsilon_from_json(doc)


def save_epsilon(e: Epsilon, path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(epsilon_to_json(e), fh, indent=2, sort_keys=True)
        fh.write("\n")
