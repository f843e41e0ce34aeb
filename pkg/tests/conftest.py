"""Shared fixtures: canonical scenes and the pass/fail reporter used by the
acceptance tests."""

import numpy as np
import pytest

from orgb.image import LinearImage
from orgb.simulate import (
    CheckerConfig,
    OcclusionPattern,
    ScenePatch,
    SceneSpec,
    SensorSet,
    SpectralGrid,
    Spectrum,
    make_colorchecker_scene,
    render,
)

CHECKER_W, CHECKER_H = 192, 128

# single-material ground truth used across estimator tests: pixels lie on
# rho = s*k + delta with sum(k) = 1, and the intercept estimate has the
# closed form eps_j = delta_j - k_j * sum(delta)
ORACLE_K = np.array([0.6, 0.3, 0.1])
ORACLE_DELTA = np.array([0.05, 0.08, 0.12])
ORACLE_EPS = ORACLE_DELTA - ORACLE_K * ORACLE_DELTA.sum()  # (-0.10, 0.005, 0.095)


def single_material_image(
    n_side: int = 100, noise_sigma: float = 0.0, seed: int = 0
) -> LinearImage:
    """n_side^2 pixels on the oracle line, s sweeping 0..1 by column."""
    s = np.tile(np.linspace(0.0, 1.0, n_side), (n_side, 1))
    data = s[:, :, None] * ORACLE_K + ORACLE_DELTA
    if noise_sigma > 0:
        rng = np.random.default_rng(seed)
        data = data + rng.normal(0.0, noise_sigma, data.shape)
    return LinearImage(data)


def spike_scene_doc(
    width: int = 100, height: int = 100, sigma: float = 0.0, seed: int = 0
) -> dict:
    """Scene JSON whose rendered image equals the oracle line to ~1e-16.

    Single-sample sensor and light spectra at three distinct wavelengths make
    every integral a one-term product, so phi_base is the oracle k and the
    ambient response is the oracle delta, up to float rounding.
    """
    grid = SpectralGrid()
    idx = {"red": 21, "green": 15, "blue": 6}  # 610 / 550 / 460 nm
    sensors = {}
    for name, i in idx.items():
        cur = [0.0] * grid.count
        cur[i] = 0.1  # 0.1 * dl = 1, unit quadrature weight
        sensors[name] = cur
    direct = [0.0] * grid.count
    env = [0.0] * grid.count
    for (name, i), k, d in zip(idx.items(), ORACLE_K, ORACLE_DELTA):
        direct[i] = float(k)
        env[i] = float(d)
    return {
        "width": width,
        "height": height,
        "grid": {"start": grid.start, "step": grid.step, "count": grid.count},
        "sensors": sensors,
        "direct_light": direct,
        "env_light": env,
        "patches": [
            {
                "name": "material",
                "rect": [0, 0, width, height],
                "reflectance": [1.0] * grid.count,
            }
        ],
        "mu": {"pattern": "ramp", "band": [0, width - 1]},
        "noise": {"sigma": sigma, "seed": seed},
    }


def two_material_scene(size: int = 64, env_strength: float = 0.5) -> SceneSpec:
    """Two close-hue materials split top/bottom under a severe squared shadow
    ramp; the raw image segments imperfectly, the corrected one cleanly."""
    from orgb.simulate import (
        default_direct_light,
        default_env_light,
        default_sensors,
        gaussian_bump_reflectance,
    )
    from orgb.image import ChannelImage

    sensors = default_sensors()
    grid = sensors.grid
    half = size // 2
    leaf = gaussian_bump_reflectance(grid, 0.12, 0.60, 550.0, 50.0)
    lime = gaussian_bump_reflectance(grid, 0.18, 0.55, 570.0, 35.0)
    ramp = (np.linspace(0.0, 1.0, size) ** 2)[None, :].repeat(size, axis=0)
    return SceneSpec(
        width=size,
        height=size,
        direct_light=default_direct_light(grid, sensors),
        env_light=default_env_light(grid, sensors, strength=env_strength),
        sensors=sensors,
        patches=[
            ScenePatch((0, 0, size, half), leaf, name="leaf"),
            ScenePatch((0, half, size, size - half), lime, name="lime"),
        ],
        mu=ChannelImage(ramp),
    )


@pytest.fixture(scope="session")
def checker_ramp():
    """24-patch scene with ambient light and the penumbra ramp."""
    scene = make_colorchecker_scene(
        CHECKER_W, CHECKER_H, CheckerConfig(env_strength=0.30)
    )
    return scene, render(scene)


@pytest.fixture(scope="session")
def checker_dark():
    """Same geometry, ambient light off."""
    scene = make_colorchecker_scene(
        CHECKER_W, CHECKER_H, CheckerConfig(env_strength=0.0)
    )
    return scene, render(scene)


@pytest.fixture
def announce(capsys):
    """Print a line that stays visible through pytest's capture."""

    def _print(line: str) -> None:
        with capsys.disabled():
            print(line, flush=True)

    return _print
