"""
Grayscale image I/O and synthetic shading.

PGM (P2 and P5, maxval up to 255) is read and written natively; PNG goes
through Pillow. Everything is reduced to a single luminance field in
``[0, 1]``.
"""

from __future__ import annotations

import enum
import os
from dataclasses import dataclass

import numpy as np

from .grid import DEFAULT_H, GridField

__all__ = [
    "ImageFormatError",
    "ShadingKind",
    "ShadingSpec",
    "read_pgm",
    "write_pgm",
    "load_luminance",
    "save_gray",
    "quantize",
    "shading_mask",
    "apply_shading",
]

_PNG_SIGNATURE = b"\x89PNG\r\n\x1a\n"
_WHITESPACE = b" \t\r\n\x0b\x0c"


class ImageFormatError(ValueError):
    """Unsupported or malformed image file."""


def _pgm_tokens(data: bytes, count: int) -> tuple[list[bytes], int]:
    # Header tokens, skipping '#' comments; returns tokens and the offset just past the last one.
    tokens = []
    pos = 0
    n = len(data)
    while len(tokens) < count:
        while pos < n and data[pos] in _WHITESPACE:
            pos += 1
        if pos >= n:
            raise ImageFormatError("truncated PGM header")
        if data[pos] == ord("#"):
            while pos < n and data[pos] not in b"\r\n":
                pos += 1
            continue
        start = pos
        while pos < n and data[pos] not in _WHITESPACE and data[pos] != ord("#"):
            pos += 1
        tokens.append(data[start:pos])
    return tokens, pos


def read_pgm(data: bytes) -> tuple[np.ndarray, int]:
    """Parse P2/P5 bytes into ``(pixels, maxval)`` with ``pixels`` as uint16."""
    tokens, pos = _pgm_tokens(data, 4)
    magic = tokens[0]
    if magic not in (b"P2", b"P5"):
        raise ImageFormatError(f"not a PGM file (magic {magic!r})")
    try:
        width, height, maxval = (int(t) for t in tokens[1:])
    except ValueError as exc:
        raise ImageFormatError("corrupt PGM header") from exc
    if width < 1 or height < 1 or maxval < 1:
        raise ImageFormatError(f"corrupt PGM header: {width}x{height}, maxval {maxval}")
    if maxval > 255:
        raise ImageFormatError(f"bit depth above 8 is not supported (maxval {maxval})")

    npix = width * height
    if magic == b"P5":
        raster = data[pos + 1 : pos + 1 + npix]
        if len(raster) != npix:
            raise ImageFormatError(f"truncated PGM raster: expected {npix} bytes, got {len(raster)}")
        pixels = np.frombuffer(raster, dtype=np.uint8).astype(np.uint16)
    else:
        body = data[pos:].split()
        if len(body) < npix:
            raise ImageFormatError(f"truncated PGM raster: expected {npix} values, got {len(body)}")
        try:
            pixels = np.array([int(t) for t in body[:npix]], dtype=np.int64)
        except ValueError as exc:
            raise ImageFormatError("non-integer sample in ASCII PGM") from exc
    if pixels.min() < 0 or pixels.max() > maxval:
        raise ImageFormatError("PGM sample outside [0, maxval]")
    return pixels.reshape(height, width).astype(np.uint16), maxval


def write_pgm(pixels: np.ndarray, binary: bool = True) -> bytes:
    """Serialize 8-bit samples as P5 (or P2 with ``binary=False``)."""
    pixels = np.asarray(pixels, dtype=np.uint8)
    height, width = pixels.shape
    if binary:
        return f"P5\n{width} {height}\n255\n".encode("ascii") + pixels.tobytes()
    lines = [" ".join(str(int(v)) for v in row) for row in pixels]
    return f"P2\n{width} {height}\n255\n".encode("ascii") + ("\n".join(lines) + "\n").encode("ascii")


def _read_png(path) -> np.ndarray:
    from PIL import Image

    with Image.open(path) as im:
        mode = im.mode
        if mode == "P":
            im = im.convert("RGBA" if "transparency" in im.info else "RGB")
            mode = im.mode
        if mode in ("L", "LA"):
            return np.asarray(im.getchannel(0), dtype=np.float64) / 255.0
        if mode in ("RGB", "RGBA"):
            rgb = np.asarray(im.convert("RGB"), dtype=np.float64)
            return (0.299 * rgb[..., 0] + 0.587 * rgb[..., 1] + 0.114 * rgb[..., 2]) / 255.0
        raise ImageFormatError(f"unsupported PNG mode {mode!r} (only 8-bit gray or RGB)")


def load_luminance(path, h: float = DEFAULT_H) -> GridField:
    """Read a PGM or PNG file as luminance normalized to ``[0, 1]``.

    RGB input is reduced with Rec. 601 luma weights.
    """
    with open(path, "rb") as fh:
        data = fh.read()
    if data[:2] in (b"P2", b"P5"):
        pixels, maxval = read_pgm(data)
        values = pixels.astype(np.float64) / maxval
    elif data[:8] == _PNG_SIGNATURE:
        values = _read_png(path)
    else:
        raise ImageFormatError(f"unsupported image format: {os.fspath(path)}")
    return GridField(values, h)


def quantize(values) -> np.ndarray:
    """Map ``[0, 1]`` floats to 8-bit samples with ``round(255 v)``, half up."""
    v = np.clip(np.asarray(values, dtype=np.float64), 0.0, 1.0)
    return np.floor(255.0 * v + 0.5).astype(np.uint8)


def save_gray(field: GridField, path) -> None:
    """Write an 8-bit grayscale PGM (P5) or PNG, chosen by file extension."""
    pixels = quantize(field.values)
    ext = os.path.splitext(os.fspath(path))[1].lower()
    if ext in (".pgm", ".pnm"):
        with open(path, "wb") as fh:
            fh.write(write_pgm(pixels))
    elif ext == ".png":
        from PIL import Image

        Image.fromarray(pixels, mode="L").save(path)
    else:
        raise ImageFormatError(f"cannot infer output format from extension {ext!r}")


class ShadingKind(str, enum.Enum):
    LINEAR_RAMP = "ramp"
    RADIAL = "radial"
    CORNER_VIGNETTE = "vignette"


@dataclass(frozen=True)
class ShadingSpec:
    """Multiplicative shading; mask values lie in ``[1 - strength, 1]``.

    With a ``seed``, each pixel's shading depth is scaled by a factor drawn
    uniformly from ``[0.9, 1]``.
    """

    kind: ShadingKind = ShadingKind.LINEAR_RAMP
    strength: float = 0.5
    seed: int | None = None

    def __post_init__(self):
        object.__setattr__(self, "kind", ShadingKind(self.kind))
        if not (0.0 <= self.strength < 1.0):
            raise ValueError(f"strength must lie in [0, 1), got {self.strength!r}")


def shading_mask(shape: tuple[int, int], spec: ShadingSpec) -> np.ndarray:
    rows, cols = shape
    i = np.arange(rows, dtype=np.float64)[:, None]
    j = np.arange(cols, dtype=np.float64)[None, :]
    if spec.kind is ShadingKind.LINEAR_RAMP:
        depth = np.broadcast_to(j / (cols - 1), shape)
    elif spec.kind is ShadingKind.RADIAL:
        ci, cj = (rows - 1) / 2.0, (cols - 1) / 2.0
        depth = ((i - ci) ** 2 + (j - cj) ** 2) / (ci**2 + cj**2)
    else:
        depth = np.hypot(i, j) / np.hypot(rows - 1, cols - 1)
    if spec.seed is not None:
        depth = depth * np.random.default_rng(spec.seed).uniform(0.9, 1.0, size=shape)
    return 1.0 - spec.strength * depth


def apply_shading(clean: GridField, spec: ShadingSpec) -> GridField:
    """Multiply ``clean`` by the shading mask and clamp to ``[0, 1]``."""
    if spec.strength == 0.0:
        return clean
    return clean.with_values(np.clip(clean.values * shading_mask(clean.shape, spec), 0.0, 1.0))
