import json

import numpy as np
import pytest

from orgb.errors import GridMismatchError, ParameterError, SceneError
from orgb.image import ChannelImage
from orgb.simulate import (
    CHECKER_RECIPES,
    CheckerConfig,
    OcclusionPattern,
    ScenePatch,
    SceneSpec,
    SensorSet,
    SpectralGrid,
    Spectrum,
    checker_layout,
    default_direct_light,
    default_env_light,
    default_sensors,
    gaussian_bump_reflectance,
    incident_light,
    load_scene,
    make_colorchecker_scene,
    reflect,
    render,
    scene_from_json,
    scene_to_json,
)

GRID = SpectralGrid()


def _flat(v):
    return Spectrum(GRID, np.full(GRID.count, v))


def _flat_sensors(v=1.0):
    return SensorSet(_flat(v), _flat(v), _flat(v))


def test_grid_wavelengths():
    l = GRID.wavelengths
    assert l[0] == 400.0 and l[-1] == 700.0 and len(l) == 31


def test_grid_validation():
    with pytest.raises(ParameterError):
        SpectralGrid(400.0, 10.0, 1)
    with pytest.raises(ParameterError):
        SpectralGrid(400.0, 0.0, 31)


def test_spectrum_validation():
    with pytest.raises(GridMismatchError):
        Spectrum(GRID, np.ones(30))
    with pytest.raises(ParameterError):
        Spectrum(GRID, np.full(31, -0.1))


def test_sensor_response_rectangle_rule():
    # flat unit light x flat unit sensor: 31 samples * 10 nm step
    from orgb.simulate import sensor_response

    r = sensor_response(_flat(1.0), _flat_sensors())
    assert np.all(r == 310.0)


def test_sensor_response_linear():
    from orgb.simulate import sensor_response

    light = Spectrum(GRID, np.linspace(0.2, 0.9, 31))
    one = sensor_response(light, default_sensors())
    two = sensor_response(Spectrum(GRID, 2.0 * light.samples), default_sensors())
    assert np.array_equal(two, 2.0 * one)


def test_reflect():
    light = _flat(2.0)
    surf = _flat(0.25)
    out = reflect(light, surf)
    assert np.all(out.samples == 0.5)
    with pytest.raises(ParameterError):
        reflect(light, _flat(1.5))


def test_incident_light():
    out = incident_light(_flat(1.0), _flat(0.3), mu=0.5, theta=0.0)
    assert np.allclose(out.samples, 0.8)
    out = incident_light(_flat(1.0), _flat(0.0), mu=1.0, theta=np.pi / 3)
    assert np.abs(out.samples - 0.5).max() < 1e-15
    with pytest.raises(ParameterError):
        incident_light(_flat(1.0), _flat(0.0), mu=1.5, theta=0.0)
    with pytest.raises(ParameterError):
        incident_light(_flat(1.0), _flat(0.0), mu=0.5, theta=2.0)


def _tiny_scene(env=0.3, mu_kind="ramp", noise=0.0, seed=0):
    sensors = default_sensors()
    return SceneSpec(
        width=8,
        height=4,
        direct_light=default_direct_light(),
        env_light=default_env_light(strength=env),
        sensors=sensors,
        patches=[
            ScenePatch((0, 0, 4, 4), gaussian_bump_reflectance(GRID, 0.1, 0.6, 550, 40), "a"),
            ScenePatch((4, 0, 4, 4), gaussian_bump_reflectance(GRID, 0.3, 0.0, 0, 1), "b"),
        ],
        mu=OcclusionPattern(mu_kind).mu_map(8, 4),
        noise_sigma=noise,
        noise_seed=seed,
    )


def test_render_decomposition_exact():
    out = render(_tiny_scene())
    assert np.array_equal(out.image.data, out.phi.data + out.delta.data)
    # subtracting one plane from the composite recovers the other to <= 1 ulp
    resid = np.abs((out.image.data - out.delta.data) - out.phi.data)
    assert np.all(resid <= np.spacing(out.image.data))


def test_render_labels():
    out = render(_tiny_scene())
    assert out.labels.shape == (4, 8)
    assert np.all(out.labels[:, :4] == 0) and np.all(out.labels[:, 4:] == 1)


def test_render_delta_constant_per_patch():
    out = render(_tiny_scene())
    for idx in (0, 1):
        px = out.delta.data[out.labels == idx]
        assert np.all(px == px[0])
        assert px[0].sum() > 0


def test_render_phi_proportional_within_patch():
    # with theta = 0 every lit pixel in a patch is mu * phi_base
    scene = _tiny_scene()
    out = render(scene)
    mu = scene.mu.data
    for idx in (0, 1):
        sel = (out.labels == idx) & (mu > 0)
        ratio = out.phi.data[sel] / mu[sel][:, None]
        assert np.abs(ratio - ratio[0]).max() < 1e-12


def test_render_direct_scaling():
    scene = _tiny_scene(env=0.0)
    out1 = render(scene)
    doubled = SceneSpec(
        width=scene.width,
        height=scene.height,
        direct_light=Spectrum(GRID, 2.0 * scene.direct_light.samples),
        env_light=scene.env_light,
        sensors=scene.sensors,
        patches=scene.patches,
        mu=scene.mu,
    )
    out2 = render(doubled)
    # doubling the source doubles phi exactly (binary scaling)
    assert np.array_equal(out2.phi.data, 2.0 * out1.phi.data)
    assert not out1.delta.data.any()


def test_render_full_occlusion_is_ambient_only():
    out = render(_tiny_scene(mu_kind="full"))
    assert not out.phi.data.any()
    assert np.array_equal(out.image.data, out.delta.data)


def test_noise_seeded():
    a = render(_tiny_scene(noise=0.01, seed=5))
    b = render(_tiny_scene(noise=0.01, seed=5))
    c = render(_tiny_scene(noise=0.01, seed=6))
    assert np.array_equal(a.image.data, b.image.data)
    assert not np.array_equal(a.image.data, c.image.data)
    # noise leaves the decomposition planes clean
    assert np.array_equal(a.phi.data, render(_tiny_scene()).phi.data)


def test_scene_tiling_validation():
    sensors = default_sensors()
    common = dict(
        direct_light=default_direct_light(),
        env_light=default_env_light(),
        sensors=sensors,
    )
    refl = gaussian_bump_reflectance(GRID, 0.5, 0.0, 0, 1)
    mu = ChannelImage(np.ones((4, 4)))
    with pytest.raises(SceneError, match="overlap"):
        SceneSpec(
            width=4, height=4, mu=mu,
            patches=[ScenePatch((0, 0, 4, 4), refl), ScenePatch((3, 3, 1, 1), refl)],
            **common,
        )
    with pytest.raises(SceneError, match="cover"):
        SceneSpec(
            width=4, height=4, mu=mu,
            patches=[ScenePatch((0, 0, 4, 3), refl)],
            **common,
        )
    with pytest.raises(SceneError, match="outside"):
        SceneSpec(
            width=4, height=4, mu=mu,
            patches=[ScenePatch((0, 0, 5, 4), refl)],
            **common,
        )
    with pytest.raises(SceneError, match="mu out of range"):
        SceneSpec(
            width=4, height=4, mu=ChannelImage(np.full((4, 4), 1.5)),
            patches=[ScenePatch((0, 0, 4, 4), refl)],
            **common,
        )


def test_occlusion_patterns():
    assert np.all(OcclusionPattern("none").mu_map(5, 3).data == 1.0)
    assert np.all(OcclusionPattern("full").mu_map(5, 3).data == 0.0)
    ramp = OcclusionPattern("ramp", (1, 3)).mu_map(5, 2).data
    assert np.array_equal(ramp[0], [0.0, 0.0, 0.5, 1.0, 1.0])
    with pytest.raises(SceneError):
        OcclusionPattern("ramp", (3, 3)).mu_map(5, 2)
    with pytest.raises(SceneError):
        OcclusionPattern("wavy").mu_map(5, 2)


def test_default_light_normalization():
    from orgb.simulate import sensor_response

    sensors = default_sensors()
    assert sensor_response(default_direct_light(), sensors).max() == pytest.approx(0.82)
    env = default_env_light(strength=0.30)
    assert sensor_response(env, sensors).max() == pytest.approx(0.30 * 0.82)
    assert not default_env_light(strength=0.0).samples.any()


def test_checker_layout_tiles():
    rects = checker_layout(192, 128)
    assert len(rects) == 24
    cover = np.zeros((128, 192), dtype=int)
    for x, y, w, h in rects:
        cover[y : y + h, x : x + w] += 1
    assert np.all(cover == 1)


def test_checker_scene_counts():
    scene = make_colorchecker_scene(192, 128)
    assert len(scene.patches) == 24
    assert [p.name for p in scene.patches] == [r[0] for r in CHECKER_RECIPES]
    out = render(scene)
    assert out.image.data.max() < 1.0  # previews must not clip


def test_scene_json_round_trip():
    scene = make_colorchecker_scene(48, 32, CheckerConfig(env_strength=0.2))
    doc = scene_to_json(scene)
    # must survive a real serialize step
    doc = json.loads(json.dumps(doc))
    back = scene_from_json(doc)
    a, b = render(scene), render(back)
    assert np.array_equal(a.image.data, b.image.data)
    assert np.array_equal(a.phi.data, b.phi.data)


def test_scene_json_mu_map_round_trip():
    rng = np.random.default_rng(7)
    sensors = default_sensors()
    scene = SceneSpec(
        width=6,
        height=5,
        direct_light=default_direct_light(),
        env_light=default_env_light(),
        sensors=sensors,
        patches=[ScenePatch((0, 0, 6, 5), gaussian_bump_reflectance(GRID, 0.4, 0.0, 0, 1))],
        mu=ChannelImage(rng.random((5, 6))),
    )
    back = scene_from_json(json.loads(json.dumps(scene_to_json(scene))))
    assert np.array_equal(back.mu.data, scene.mu.data)


def test_scene_json_malformed():
    with pytest.raises(SceneError, match="malformed"):
        scene_from_json({"width": 4})


def test_load_scene_file(tmp_path):
    doc = scene_to_json(make_colorchecker_scene(24, 16))
    path = tmp_path / "s.json"
    path.write_text(json.dumps(doc))
    scene = load_scene(str(path))
    assert scene.width == 24
    bad = tmp_path / "bad.json"
    bad.write_text("{nope")
    with pytest.raises(SceneError, match="JSON"):
        load_scene(str(bad))
