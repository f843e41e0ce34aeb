"""Two-source spectral scene simulator.

The imaging model: a surface with reflectance S under a directional source
L_d (attenuated per pixel by an occlusion factor mu and the incidence angle
theta) plus an ambient source L_e.  The camera integrates the reflected light
against three sensor curves Q_k, so each pixel splits into a lit part and an
ambient part:

    phi_k   = mu * cos(theta) * sum(L_d * S * Q_k) * dl
    delta_k = sum(L_e * S * Q_k) * dl
    rho_k   = phi_k + delta_k

Integrals use the rectangle rule on a shared wavelength grid.  Within one
surface patch delta is constant and phi scales along a fixed direction, which
is exactly the structure the offset estimator relies on.

Rendered output keeps phi and delta as separate planes; image == phi + delta
holds exactly when noise_sigma is zero.  Gaussian pixel noise, when requested,
is seeded and added to the composite image only.
"""

import json
from dataclasses import dataclass, field
from typing import List, Optional, Tuple

import numpy as np

from .errors import GridMismatchError, ParameterError, SceneError
from .image import ChannelImage, LinearImage

# --- Spectral types ---


@dataclass(frozen=True)
class SpectralGrid:
    """Uniform wavelength grid in nanometers."""

    start: float = 400.0
    step: float = 10.0
    count: int = 31

    def __post_init__(self):
        if self.count < 2 or self.step <= 0:
            raise ParameterError("grid needs count >= 2 and step > 0")

    @property
    def wavelengths(self) -> np.ndarray:
        return self.start + self.step * np.arange(self.count)


DEFAULT_GRID = SpectralGrid()


@dataclass(eq=False)
class Spectrum:
    """Non-negative samples on a wavelength grid."""

    grid: SpectralGrid
    samples: np.ndarray

    def __post_init__(self):
        self.samples = np.asarray(self.samples, dtype=np.float64)
        if self.samples.shape != (self.grid.count,):
            raise GridMismatchError(
                f"expected {self.grid.count} samples, got {self.samples.shape}"
            )
        if not np.isfinite(self.samples).all() or (self.samples < 0).any():
            raise ParameterError("spectrum samples must be finite and >= 0")


@dataclass(eq=False)
class SensorSet:
    """Three sensor sensitivity curves on a shared grid."""

    red: Spectrum
    green: Spectrum
    blue: Spectrum

    def __post_init__(self):
        if not (self.red.grid == self.green.grid == self.blue.grid):
            raise GridMismatchError("sensor curves must share one grid")

    @property
    def grid(self) -> SpectralGrid:
        return self.red.grid

    def matrix(self) -> np.ndarray:
        """(3, count) stack of the sensor curves."""
        return np.stack([self.red.samples, self.green.samples, self.blue.samples])


def _require_same_grid(a: SpectralGrid, b: SpectralGrid, what: str) -> None:
    if a != b:
        raise GridMismatchError(f"{what}: grids differ ({a} vs {b})")


def sensor_response(light: Spectrum, sensors: SensorSet) -> np.ndarray:
    """Integrate a spectrum against the three sensors (rectangle rule).

    Returns a (3,) array; non-negative because both factors are.
    """
    _require_same_grid(light.grid, sensors.grid, "sensor_response")
    return sensors.matrix() @ light.samples * light.grid.step


def reflect(light: Spectrum, surface: Spectrum) -> Spectrum:
    """Pointwise product of an illuminant with a reflectance in [0, 1]."""
    _require_same_grid(light.grid, surface.grid, "reflect")
    if (surface.samples > 1.0).any():
        raise ParameterError("reflectance must lie in [0, 1]")
    return Spectrum(light.grid, light.samples * surface.samples)


def incident_light(
    direct: Spectrum, env: Spectrum, mu: float, theta: float
) -> Spectrum:
    """Combined illuminant at one pixel: mu * cos(theta) * L_d + L_e."""
    _require_same_grid(direct.grid, env.grid, "incident_light")
    if not 0.0 <= mu <= 1.0:
        raise ParameterError(f"mu must lie in [0, 1], got {mu}")
    if not 0.0 <= theta <= np.pi / 2:
        raise ParameterError(f"theta must lie in [0, pi/2], got {theta}")
    return Spectrum(
        direct.grid, mu * np.cos(theta) * direct.samples + env.samples
    )


# --- Scene description ---


@dataclass(eq=False)
class ScenePatch:
    """Axis-aligned rectangle of constant reflectance."""

    rect: Tuple[int, int, int, int]  # x, y, w, h
    reflectance: Spectrum
    name: str = ""


@dataclass(eq=False)
class OcclusionPattern:
    """Shorthand for common mu maps.

    kind "none" is fully lit (mu = 1), "full" is fully occluded (mu = 0),
    "ramp" sweeps 0 -> 1 left to right across the band (x0, x1) in pixel
    columns, clamped outside it.
    """

    kind: str = "ramp"
    band: Optional[Tuple[int, int]] = None

    def mu_map(self, width: int, height: int) -> ChannelImage:
        if self.kind == "none":
            return ChannelImage(np.ones((height, width)))
        if self.kind == "full":
            return ChannelImage(np.zeros((height, width)))
        if self.kind == "ramp":
            x0, x1 = self.band if self.band is not None else (0, width - 1)
            if x1 <= x0:
                raise SceneError(f"ramp band must have x1 > x0, got ({x0}, {x1})")
            col = np.clip((np.arange(width) - x0) / (x1 - x0), 0.0, 1.0)
            return ChannelImage(np.tile(col, (height, 1)))
        raise SceneError(f"unknown occlusion pattern: {self.kind!r}")


@dataclass(eq=False)
class SceneSpec:
    """Complete render input.

    Patches must tile the image exactly: disjoint rects whose union covers
    every pixel.  mu and theta are per-pixel maps; noise, when sigma > 0, is
    i.i.d. Gaussian added to the composite image only, seeded.
    """

    width: int
    height: int
    direct_light: Spectrum
    env_light: Spectrum
    sensors: SensorSet
    patches: List[ScenePatch]
    mu: ChannelImage
    theta: Optional[ChannelImage] = None
    noise_sigma: float = 0.0
    noise_seed: int = 0
    mu_pattern: Optional[OcclusionPattern] = field(default=None, repr=False)

    def __post_init__(self):
        if self.width < 1 or self.height < 1:
            raise SceneError("scene must be at least 1x1")
        grid = self.direct_light.grid
        _require_same_grid(grid, self.env_light.grid, "scene lights")
        _require_same_grid(grid, self.sensors.grid, "scene sensors")
        if not self.patches:
            raise SceneError("scene needs at least one patch")
        cover = np.zeros((self.height, self.width), dtype=np.int32)
        for p in self.patches:
            _require_same_grid(grid, p.reflectance.grid, "patch reflectance")
            x, y, w, h = p.rect
            if w < 1 or h < 1:
                raise SceneError(f"degenerate patch geometry: rect {p.rect}")
            if x < 0 or y < 0 or x + w > self.width or y + h > self.height:
                raise SceneError(f"patch rect {p.rect} outside the image")
            cover[y : y + h, x : x + w] += 1
        if (cover > 1).any():
            raise SceneError("patch rects overlap")
        if (cover == 0).any():
            raise SceneError("patch rects do not cover the image")
        if self.theta is None:
            self.theta = ChannelImage(np.zeros((self.height, self.width)))
        for name, m in (("mu", self.mu), ("theta", self.theta)):
            if m.data.shape != (self.height, self.width):
                raise SceneError(f"{name} map shape {m.data.shape} != scene size")
        if (self.mu.data < 0).any() or (self.mu.data > 1).any():
            raise SceneError("mu out of range [0, 1]")
        if (self.theta.data < 0).any() or (self.theta.data > np.pi / 2).any():
            raise SceneError("theta out of range [0, pi/2]")
        if self.noise_sigma < 0:
            raise SceneError("noise sigma must be >= 0")


@dataclass(eq=False)
class RenderedScene:
    """Render output: composite image plus its lit/ambient decomposition and
    the ground-truth patch index per pixel."""

    image: LinearImage
    phi: LinearImage
    delta: LinearImage
    labels: np.ndarray  # (H, W) int32 patch index


def render(scene: SceneSpec) -> RenderedScene:
    """Render a scene.  Deterministic for a fixed spec (noise is seeded)."""
    h, w = scene.height, scene.width
    phi = np.zeros((h, w, 3))
    delta = np.zeros((h, w, 3))
    labels = np.zeros((h, w), dtype=np.int32)
    shade = scene.mu.data * np.cos(scene.theta.data)
    for idx, patch in enumerate(scene.patches):
        phi_base = sensor_response(
            reflect(scene.direct_light, patch.reflectance), scene.sensors
        )
        dvec = sensor_response(
            reflect(scene.env_light, patch.reflectance), scene.sensors
        )
        x, y, pw, ph = patch.rect
        sl = (slice(y, y + ph), slice(x, x + pw))
        phi[sl] = shade[sl][..., None] * phi_base
        delta[sl] = dvec
        labels[sl] = idx
    img = phi + delta
    if scene.noise_sigma > 0:
        rng = np.random.default_rng(scene.noise_seed)
        img = img + rng.normal(0.0, scene.noise_sigma, img.shape)
    return RenderedScene(
        image=LinearImage(img),
        phi=LinearImage(phi),
        delta=LinearImage(delta),
        labels=labels,
    )


# --- Stock lights, sensors, and chart reflectances ---


def gaussian_bump_reflectance(
    grid: SpectralGrid, base: float, amp: float, center: float, width: float
) -> Spectrum:
    """Reflectance base + amp * exp(-(l - center)^2 / (2 width^2)), clipped
    to [0, 1]."""
    l = grid.wavelengths
    s = base + amp * np.exp(-((l - center) ** 2) / (2.0 * width**2))
    return Spectrum(grid, np.clip(s, 0.0, 1.0))


def default_sensors(grid: SpectralGrid = DEFAULT_GRID) -> SensorSet:
    """Gaussian sensor curves peaking at 610 / 550 / 465 nm, sigma 30."""
    l = grid.wavelengths

    def curve(center):
        return Spectrum(grid, np.exp(-((l - center) ** 2) / (2.0 * 30.0**2)))

    return SensorSet(curve(610.0), curve(550.0), curve(465.0))


def default_direct_light(
    grid: SpectralGrid = DEFAULT_GRID,
    sensors: Optional[SensorSet] = None,
    peak: float = 0.82,
) -> Spectrum:
    """Warm ramp rising toward long wavelengths, scaled so a perfect
    reflector's strongest lit channel responds with `peak`."""
    if sensors is None:
        sensors = default_sensors(grid)
    l = grid.wavelengths
    shape = 0.4 + 0.6 * (l - grid.start) / (l[-1] - grid.start)
    raw = Spectrum(grid, shape)
    top = sensor_response(raw, sensors).max()
    return Spectrum(grid, shape * (peak / top))


def default_env_light(
    grid: SpectralGrid = DEFAULT_GRID,
    sensors: Optional[SensorSet] = None,
    strength: float = 0.30,
    peak: float = 0.82,
) -> Spectrum:
    """Bluish ramp falling toward long wavelengths; a perfect reflector's
    strongest ambient channel responds with strength * peak.  strength 0
    gives the zero spectrum."""
    if sensors is None:
        sensors = default_sensors(grid)
    if strength < 0:
        raise ParameterError("ambient strength must be >= 0")
    l = grid.wavelengths
    shape = 1.0 - 0.6 * (l - grid.start) / (l[-1] - grid.start)
    if strength == 0:
        return Spectrum(grid, np.zeros(grid.count))
    raw = Spectrum(grid, shape)
    top = sensor_response(raw, sensors).max()
    return Spectrum(grid, shape * (strength * peak / top))


# 24-patch chart: 18 chromatic single-bump reflectances + 6 neutral steps.
# (name, base, amp, center nm, width nm); amp 0 means spectrally flat.
CHECKER_RECIPES: Tuple[Tuple[str, float, float, float, float], ...] = (
    ("violet", 0.08, 0.70, 450.0, 30.0),
    ("blue", 0.15, 0.55, 470.0, 40.0),
    ("azure", 0.10, 0.65, 490.0, 35.0),
    ("cyan", 0.20, 0.50, 510.0, 45.0),
    ("green", 0.06, 0.75, 530.0, 30.0),
    ("leaf", 0.12, 0.60, 550.0, 50.0),
    ("lime", 0.18, 0.55, 570.0, 35.0),
    ("yellow", 0.08, 0.70, 590.0, 40.0),
    ("orange", 0.10, 0.65, 610.0, 30.0),
    ("coral", 0.22, 0.50, 630.0, 45.0),
    ("red", 0.07, 0.75, 650.0, 35.0),
    ("crimson", 0.14, 0.60, 670.0, 55.0),
    ("indigo", 0.16, 0.45, 440.0, 60.0),
    ("teal", 0.09, 0.70, 480.0, 25.0),
    ("moss", 0.20, 0.50, 520.0, 55.0),
    ("olive", 0.11, 0.65, 560.0, 30.0),
    ("amber", 0.13, 0.55, 600.0, 50.0),
    ("rust", 0.10, 0.70, 640.0, 25.0),
    ("white", 0.90, 0.0, 0.0, 1.0),
    ("gray-72", 0.72, 0.0, 0.0, 1.0),
    ("gray-55", 0.55, 0.0, 0.0, 1.0),
    ("gray-38", 0.38, 0.0, 0.0, 1.0),
    ("gray-22", 0.22, 0.0, 0.0, 1.0),
    ("black", 0.08, 0.0, 0.0, 1.0),
)


@dataclass(eq=False)
class CheckerConfig:
    """Lighting and degradation knobs for the stock 24-patch chart."""

    direct_light: Optional[Spectrum] = None
    env_light: Optional[Spectrum] = None
    sensors: Optional[SensorSet] = None
    env_strength: float = 0.30
    occlusion: OcclusionPattern = field(default_factory=OcclusionPattern)
    noise_sigma: float = 0.0
    noise_seed: int = 0


def checker_layout(
    width: int, height: int, rows: int = 4, cols: int = 6
) -> List[Tuple[int, int, int, int]]:
    """Rects that tile width x height into a rows x cols grid, row-major."""
    if width < cols or height < rows:
        raise SceneError(
            f"degenerate patch geometry: {width}x{height} cannot hold {rows}x{cols}"
        )
    xs = [i * width // cols for i in range(cols + 1)]
    ys = [j * height // rows for j in range(rows + 1)]
    rects = []
    for r in range(rows):
        for c in range(cols):
            rects.append((xs[c], ys[r], xs[c + 1] - xs[c], ys[r + 1] - ys[r]))
    return rects


def make_colorchecker_scene(
    width: int, height: int, config: Optional[CheckerConfig] = None
) -> SceneSpec:
    """Build the stock 24-patch scene (4 rows x 6 cols, tiling the image)."""
    config = config or CheckerConfig()
    sensors = config.sensors or default_sensors()
    grid = sensors.grid
    direct = config.direct_light or default_direct_light(grid, sensors)
    env = (
        config.env_light
        if config.env_light is not None
        else default_env_light(grid, sensors, strength=config.env_strength)
    )
    rects = checker_layout(width, height)
    patches = [
        ScenePatch(rect, gaussian_bump_reflectance(grid, b, a, c, w), name=n)
        for rect, (n, b, a, c, w) in zip(rects, CHECKER_RECIPES)
    ]
    return SceneSpec(
        width=width,
        height=height,
        direct_light=direct,
        env_light=env,
        sensors=sensors,
        patches=patches,
        mu=config.occlusion.mu_map(width, height),
        noise_sigma=config.noise_sigma,
        noise_seed=config.noise_seed,
        mu_pattern=config.occlusion,
    )


# --- Scene JSON ---


def scene_to_json(scene: SceneSpec) -> dict:
    """Plain-dict form of a scene, round-trippable through scene_from_json."""
    grid = scene.direct_light.grid
    doc = {
        "width": scene.width,
        "height": scene.height,
        "grid": {"start": grid.start, "step": grid.step, "count": grid.count},
        "direct_light": scene.direct_light.samples.tolist(),
        "env_light": scene.env_light.samples.tolist(),
        "sensors": {
            "red": scene.sensors.red.samples.tolist(),
            "green": scene.sensors.green.samples.tolist(),
            "blue": scene.sensors.blue.samples.tolist(),
        },
        "patches": [
            {
                "name": p.name,
                "rect": list(p.rect),
                "reflectance": p.reflectance.samples.tolist(),
            }
            for p in scene.patches
        ],
        "noise": {"sigma": scene.noise_sigma, "seed": scene.noise_seed},
    }
    if scene.mu_pattern is not None:
        doc["mu"] = {"pattern": scene.mu_pattern.kind}
        if scene.mu_pattern.band is not None:
            doc["mu"]["band"] = list(scene.mu_pattern.band)
    else:
        doc["mu"] = {"pattern": "map", "values": scene.mu.data.tolist()}
    if np.any(scene.theta.data != 0):
        doc["theta"] = {"pattern": "map", "values": scene.theta.data.tolist()}
    return doc


def scene_from_json(doc: dict) -> SceneSpec:
    """Parse a scene dict; raises SceneError on malformed input."""
    try:
        width = int(doc["width"])
        height = int(doc["height"])
        g = doc.get("grid", {})
        grid = SpectralGrid(
            float(g.get("start", 400.0)),
            float(g.get("step", 10.0)),
            int(g.get("count", 31)),
        )
        sensors_doc = doc.get("sensors")
        if sensors_doc is None:
            sensors = default_sensors(grid)
        else:
            sensors = SensorSet(
                Spectrum(grid, np.asarray(sensors_doc["red"], dtype=np.float64)),
                Spectrum(grid, np.asarray(sensors_doc["green"], dtype=np.float64)),
                Spectrum(grid, np.asarray(sensors_doc["blue"], dtype=np.float64)),
            )
        direct = Spectrum(grid, np.asarray(doc["direct_light"], dtype=np.float64))
        env = Spectrum(grid, np.asarray(doc["env_light"], dtype=np.float64))
        patches = [
            ScenePatch(
                tuple(int(v) for v in p["rect"]),
                Spectrum(grid, np.asarray(p["reflectance"], dtype=np.float64)),
                name=str(p.get("name", "")),
            )
            for p in doc["patches"]
        ]
        mu_doc = doc.get("mu", {"pattern": "ramp"})
        pattern = None
        if mu_doc.get("pattern") == "map":
            mu = ChannelImage(np.asarray(mu_doc["values"], dtype=np.float64))
        else:
            band = mu_doc.get("band")
            pattern = OcclusionPattern(
                str(mu_doc.get("pattern", "ramp")),
                tuple(int(v) for v in band) if band else None,
            )
            mu = pattern.mu_map(width, height)
        theta = None
        theta_doc = doc.get("theta")
        if theta_doc is not None:
            if theta_doc.get("pattern") == "map":
                theta = ChannelImage(np.asarray(theta_doc["values"], dtype=np.float64))
            else:
                theta = ChannelImage(
                    np.full((height, width), float(theta_doc.get("value", 0.0)))
                )
        noise = doc.get("noise", {})
        return SceneSpec(
            width=width,
            height=height,
            direct_light=direct,
            env_light=env,
            sensors=sensors,
            patches=patches,
            mu=mu,
            theta=theta,
            noise_sigma=float(noise.get("sigma", 0.0)),
            noise_seed=int(noise.get("seed", 0)),
            mu_pattern=pattern,
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise SceneError(f"malformed scene description: {exc}") from exc


def load_scene(path: str) -> SceneSpec:
    with open(path, "r", encoding="utf-8") as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise SceneError(f"scene file is not valid JSON: {exc}") from exc
    return scene_from_json(doc)
