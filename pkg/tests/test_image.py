import numpy as np
import pytest

from orgb import pngio
from orgb.errors import (
    DimensionMismatchError,
    EmptyRegionError,
    FormatError,
    ParameterError,
)
from orgb.image import (
    ChannelImage,
    LinearImage,
    decode_image_bytes,
    histogram_equalize,
    invert,
    load_channel,
    load_image,
    make_mask_rect,
    save_channel,
    save_image,
    srgb_decode,
    srgb_encode,
)

# hand-evaluated ((128/255 + 0.055)/1.055)^2.4
MID_GRAY_LINEAR = 0.21586050011389926


def _write_png_pixel(tmp_path, rgb):
    px = np.array([[rgb]], dtype=np.uint8)
    path = tmp_path / "px.png"
    path.write_bytes(pngio.write_png(px))
    return str(path)


def test_load_white_black(tmp_path):
    img = load_image(_write_png_pixel(tmp_path, (255, 255, 255)))
    assert np.allclose(img.data, 1.0, atol=0)
    img = load_image(_write_png_pixel(tmp_path, (0, 0, 0)))
    assert np.all(img.data == 0.0)


def test_load_mid_gray(tmp_path):
    img = load_image(_write_png_pixel(tmp_path, (128, 128, 128)))
    assert np.allclose(img.data, MID_GRAY_LINEAR, atol=1e-12)


def test_transfer_curve_inverse():
    v = np.linspace(0.0, 1.0, 1001)
    assert np.abs(srgb_decode(srgb_encode(v)) - v).max() < 1e-12


def test_save_load_16bit_bound(tmp_path):
    rng = np.random.default_rng(0)
    img = LinearImage(rng.random((16, 16, 3)))
    path = str(tmp_path / "a.png")
    save_image(img, path, depth=16)
    back = load_image(path)
    err = np.abs(back.data - img.data).max()
    assert err <= 1.0 / 65535.0 + 1e-4
    assert err <= 2e-4  # round-trip budget


def test_save_clamps(tmp_path):
    img = LinearImage(np.array([[[-0.2, 0.5, 1.3]]]))
    path = str(tmp_path / "c.png")
    save_image(img, path, depth=16)
    png = pngio.read_png(open(path, "rb").read())
    expect_mid = int(np.floor(srgb_encode(np.array(0.5)) * 65535 + 0.5))
    assert png.pixels[0, 0, 0] == 0
    assert png.pixels[0, 0, 1] == expect_mid
    assert png.pixels[0, 0, 2] == 65535


def test_save_zero_image(tmp_path):
    img = LinearImage(np.zeros((3, 3, 3)))
    path = str(tmp_path / "z.png")
    save_image(img, path, depth=8)
    png = pngio.read_png(open(path, "rb").read())
    assert not png.pixels.any()


def test_ppm_round_trip(tmp_path):
    rng = np.random.default_rng(1)
    img = LinearImage(rng.random((7, 5, 3)))
    for depth, tol in ((8, 1 / 255 * 2.3 + 1e-3), (16, 2e-4)):
        path = str(tmp_path / f"a{depth}.ppm")
        save_image(img, path, depth=depth)
        back = load_image(path)
        assert np.abs(back.data - img.data).max() <= tol


def test_ppm_header_comments(tmp_path):
    body = b"P6\n# a comment\n2 1\n255\n" + bytes([255, 0, 0, 0, 255, 0])
    path = tmp_path / "c.ppm"
    path.write_bytes(body)
    img = load_image(str(path))
    assert img.width == 2 and img.height == 1
    assert img.data[0, 0, 0] == 1.0 and img.data[0, 1, 1] == 1.0


def test_ppm_bad_maxval(tmp_path):
    path = tmp_path / "b.ppm"
    path.write_bytes(b"P6\n1 1\n1023\n\x00\x00\x00")
    with pytest.raises(FormatError, match="maxval"):
        load_image(str(path))


def test_npy_round_trip_exact(tmp_path):
    rng = np.random.default_rng(2)
    img = LinearImage(rng.random((9, 4, 3)) * 2 - 0.5)  # outside [0,1] too
    path = str(tmp_path / "a.npy")
    save_image(img, path)
    back = load_image(path)
    assert np.array_equal(back.data, img.data)


def test_rgba_alpha_dropped():
    px = np.zeros((2, 2, 4), dtype=np.uint8)
    px[:, :, 0] = 255
    px[:, :, 3] = 7
    img = decode_image_bytes(pngio.write_png(px))
    assert img.data.shape == (2, 2, 3)
    assert np.all(img.data[:, :, 0] == 1.0)


def test_unrecognized_format():
    with pytest.raises(FormatError, match="unrecognized"):
        decode_image_bytes(b"GIF89a...")


def test_gray_png_rejected_as_color():
    px = np.zeros((2, 2), dtype=np.uint8)
    with pytest.raises(FormatError, match="color type"):
        decode_image_bytes(pngio.write_png(px))


def test_non_finite_rejected():
    data = np.zeros((2, 2, 3))
    data[0, 0, 0] = np.nan
    with pytest.raises(FormatError, match="finite"):
        LinearImage(data)


def test_bad_shape_rejected():
    with pytest.raises(DimensionMismatchError):
        LinearImage(np.zeros((4, 4)))


def test_mask_rect_basic():
    m = make_mask_rect(0, 0, 2, 2, 4, 4)
    assert m.count == 4
    assert m.rect == (0, 0, 2, 2)


def test_mask_rect_clipped():
    m = make_mask_rect(3, 3, 5, 5, 4, 4)
    assert m.count == 1
    assert m.rect == (3, 3, 1, 1)


def test_mask_rect_outside():
    with pytest.raises(EmptyRegionError):
        make_mask_rect(10, 10, 2, 2, 4, 4)
    with pytest.raises(EmptyRegionError):
        make_mask_rect(0, 0, 0, 4, 4, 4)


def test_histeq_constant():
    ch = ChannelImage(np.full((4, 4), 0.3))
    out = histogram_equalize(ch)
    assert np.all(out.data == 1.0)


def test_histeq_two_values():
    data = np.concatenate([np.full(8, 0.1), np.full(8, 0.9)]).reshape(4, 4)
    out = histogram_equalize(ChannelImage(data))
    assert np.all(out.data[data == 0.1] == 0.5)
    assert np.all(out.data[data == 0.9] == 1.0)


def test_histeq_uniform_near_identity():
    # one sample centered in each of the 256 bins
    v = (np.arange(256) + 0.5) / 256
    out = histogram_equalize(ChannelImage(v.reshape(16, 16)))
    assert np.abs(out.data.ravel() - v).max() <= 1.0 / 256 + 1e-12


def test_histeq_monotone():
    rng = np.random.default_rng(3)
    v = rng.random((32, 32))
    out = histogram_equalize(ChannelImage(v))
    order = np.argsort(v.ravel(), kind="stable")
    assert np.all(np.diff(out.data.ravel()[order]) >= 0)


def test_histeq_bad_bins():
    with pytest.raises(ParameterError):
        histogram_equalize(ChannelImage(np.zeros((2, 2))), bins=1)


def test_invert_values():
    ch = ChannelImage(np.array([[0.25, 0.0], [1.0, 0.6]]))
    out = invert(ch)
    assert out.data[0, 0] == 0.75
    assert out.data[0, 1] == 1.0
    assert out.data[1, 0] == 0.0


def test_invert_involution():
    rng = np.random.default_rng(4)
    v = rng.random((8, 8))
    twice = invert(invert(ChannelImage(v)))
    assert np.array_equal(twice.data, v)


def test_channel_files(tmp_path):
    rng = np.random.default_rng(5)
    ch = ChannelImage(rng.random((6, 6)))
    p16 = str(tmp_path / "c.png")
    save_channel(ch, p16, depth=16)
    back = load_channel(p16)
    assert np.abs(back.data - ch.data).max() <= 1.0 / 65535 + 1e-9
    pn = str(tmp_path / "c.npy")
    save_channel(ch, pn)
    assert np.array_equal(load_channel(pn).data, ch.data)
