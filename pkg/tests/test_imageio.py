import numpy as np
import pytest
from PIL import Image

from illumpde.grid import GridField
from illumpde.imageio import (
    ImageFormatError,
    ShadingKind,
    ShadingSpec,
    apply_shading,
    load_luminance,
    read_pgm,
    save_gray,
    shading_mask,
)


def write(path, data: bytes):
    path.write_bytes(data)
    return path


def test_small_ascii_pgm_rejected(tmp_path):
    p = write(tmp_path / "a.pgm", b"P2\n2 2\n255\n0 255\n128 64\n")
    with pytest.raises(ValueError):
        load_luminance(p)


def test_binary_pgm_all_white(tmp_path):
    p = write(tmp_path / "w.pgm", b"P5\n3 3\n255\n" + bytes([255] * 9))
    assert np.all(load_luminance(p).values == 1.0)


def test_ascii_pgm_with_comments_and_maxval(tmp_path):
    data = b"P2\n# made by hand\n3 3 # dims\n10\n0 1 2\n3 4 5\n6 7 10\n"
    f = load_luminance(write(tmp_path / "c.pgm", data), h=1.0)
    assert f.values[2, 2] == 1.0 and f.values[0, 1] == pytest.approx(0.1)
    assert f.h == 1.0


@pytest.mark.parametrize(
    "data",
    [
        b"P5\n3 3\n65535\n" + bytes(18),
        b"P5\n3 3\n255\n" + bytes(5),
        b"P5\n3 x\n255\n" + bytes(9),
        b"P2\n3 3\n255\n1 2 3\n",
        b"P2\n3 3\n255\n1 2 3 4 5 6 7 8 300\n",
        b"GIF89a....",
    ],
)
def test_malformed_files(tmp_path, data):
    with pytest.raises(ImageFormatError):
        load_luminance(write(tmp_path / "bad.pgm", data))


def test_pgm_header_roundtrip_bytes(tmp_path):
    save_gray(GridField(np.zeros((3, 4))), tmp_path / "z.pgm")
    assert (tmp_path / "z.pgm").read_bytes() == b"P5\n4 3\n255\n" + bytes(12)
    save_gray(GridField(np.ones((3, 4))), tmp_path / "o.pgm")
    assert (tmp_path / "o.pgm").read_bytes().endswith(bytes([255] * 12))


@pytest.mark.parametrize("ext", [".pgm", ".png"])
def test_roundtrip_quantization_bound(tmp_path, rng, ext):
    f = GridField(rng.uniform(0, 1, (16, 16)))
    path = tmp_path / f"r{ext}"
    save_gray(f, path)
    back = load_luminance(path).values
    assert np.max(np.abs(back - f.values)) <= 1 / (2 * 255) + 1e-12


def test_rgb_png_uses_rec601(tmp_path):
    rgb = np.zeros((4, 4, 3), dtype=np.uint8)
    rgb[..., 0] = 200
    rgb[..., 1] = 100
    rgb[..., 2] = 50
    Image.fromarray(rgb, "RGB").save(tmp_path / "c.png")
    f = load_luminance(tmp_path / "c.png")
    assert np.allclose(f.values, (0.299 * 200 + 0.587 * 100 + 0.114 * 50) / 255)


def test_sixteen_bit_png_rejected(tmp_path):
    Image.fromarray(np.full((4, 4), 4000, dtype=np.uint16)).save(tmp_path / "d.png")
    with pytest.raises(ImageFormatError):
        load_luminance(tmp_path / "d.png")


def test_unknown_extension(tmp_path):
    with pytest.raises(ImageFormatError):
        save_gray(GridField(np.zeros((3, 3))), tmp_path / "x.bmp")


def test_read_pgm_returns_maxval():
    pixels, maxval = read_pgm(b"P5\n3 3\n200\n" + bytes(range(9)))
    assert maxval == 200 and pixels[2, 2] == 8


def test_shading_examples(rng):
    clean = GridField(rng.uniform(0, 1, (5, 6)))
    assert apply_shading(clean, ShadingSpec("ramp", 0.0)) is clean
    out = apply_shading(GridField(np.ones((3, 3))), ShadingSpec(ShadingKind.LINEAR_RAMP, 0.5)).values
    assert np.array_equal(out, np.tile([1.0, 0.75, 0.5], (3, 1)))
    assert shading_mask((7, 9), ShadingSpec("ramp", 0.3)).min() == pytest.approx(0.7)


@pytest.mark.parametrize("kind", list(ShadingKind))
@pytest.mark.parametrize("seed", [None, 3])
def test_mask_bounds_and_determinism(kind, seed):
    spec = ShadingSpec(kind, 0.6, seed)
    m = shading_mask((11, 13), spec)
    assert m.min() >= 0.4 - 1e-15 and m.max() <= 1.0
    assert np.array_equal(m, shading_mask((11, 13), ShadingSpec(kind, 0.6, seed)))


def test_shading_is_multiplicative(rng):
    clean = GridField(rng.uniform(0, 1, (9, 9)))
    spec = ShadingSpec("vignette", 0.4)
    for c in (0.0, 0.3, 1.0):
        lhs = apply_shading(clean.with_values(c * clean.values), spec).values
        assert np.allclose(lhs, c * apply_shading(clean, spec).values, rtol=1e-15, atol=0)


def test_bad_strength():
    with pytest.raises(ValueError):
        ShadingSpec("ramp", 1.0)
    with pytest.raises(ValueError):
        ShadingSpec("spiral", 0.2)
