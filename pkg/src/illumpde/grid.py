"""
Uniform 2-D grid fields and compact finite-difference operators.

Axis convention used throughout the package: ``x`` runs along columns
(second array index ``j``) and ``y`` runs along rows (first index ``i``).
Gradient and divergence both follow it, so ``divergence(*gradient(f))`` is
the wide-stencil Laplacian.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

__all__ = [
    "DEFAULT_H",
    "BoundaryRule",
    "GridField",
    "laplacian",
    "gradient",
    "divergence",
]

DEFAULT_H = 2.0


class BoundaryRule(str, enum.Enum):
    """How operators treat the outermost ring of nodes.

    ``INTERIOR_ZERO`` evaluates the stencil on interior nodes only and writes
    zeros on the boundary. ``REFLECT`` pads with ghost nodes equal to the
    adjacent boundary node (zero flux across every boundary face), which is
    the homogeneous Neumann discretization.
    """

    INTERIOR_ZERO = "interior-zero"
    REFLECT = "reflect"


@dataclass(frozen=True, eq=False)
class GridField:
    """Real-valued function sampled on a uniform ``rows x cols`` grid.

    Parameters
    ----------
    values : array_like
        2-D array of samples, stored row-major as float64. A read-only
        copy is kept so a field can be shared freely.
    h : float
        Mesh spacing (pixels).
    """

    values: np.ndarray
    h: float = DEFAULT_H

    def __post_init__(self):
        arr = np.array(self.values, dtype=np.float64, copy=True)
        if arr.ndim != 2:
            raise ValueError(f"grid field must be 2-D, got shape {arr.shape}")
        if arr.shape[0] < 3 or arr.shape[1] < 3:
            raise ValueError(f"grid must be at least 3x3, got {arr.shape[0]}x{arr.shape[1]}")
        h = float(self.h)
        if not (np.isfinite(h) and h > 0):
            raise ValueError(f"mesh spacing must be positive, got {self.h!r}")
        if not np.all(np.isfinite(arr)):
            raise ValueError("grid field contains non-finite values")
        arr.setflags(write=False)
        object.__setattr__(self, "values", arr)
        object.__setattr__(self, "h", h)

    @property
    def rows(self) -> int:
        return self.values.shape[0]

    @property
    def cols(self) -> int:
        return self.values.shape[1]

    @property
    def shape(self) -> tuple[int, int]:
        return self.values.shape

    def with_values(self, values) -> "GridField":
        """Return a field on the same grid carrying new samples."""
        return GridField(values, self.h)

    @classmethod
    def full(cls, rows: int, cols: int, value: float, h: float = DEFAULT_H) -> "GridField":
        return cls(np.full((rows, cols), float(value)), h)

    def __array__(self, dtype=None, copy=None):
        return self.values if dtype is None else self.values.astype(dtype)


def _padded(f: np.ndarray) -> np.ndarray:
    return np.pad(f, 1, mode="edge")


def laplacian_array(f: np.ndarray, h: float, rule: BoundaryRule) -> np.ndarray:
    """Five-point Laplacian on a raw array (no validation)."""
    out = np.zeros_like(f)
    if rule is BoundaryRule.REFLECT:
        g = _padded(f)
        out[:] = (g[2:, 1:-1] + g[:-2, 1:-1] + g[1:-1, 2:] + g[1:-1, :-2] - 4.0 * f) / h**2
    else:
        out[1:-1, 1:-1] = (
            f[2:, 1:-1] + f[:-2, 1:-1] + f[1:-1, 2:] + f[1:-1, :-2] - 4.0 * f[1:-1, 1:-1]
        ) / h**2
    return out


def gradient_array(f: np.ndarray, h: float, rule: BoundaryRule) -> tuple[np.ndarray, np.ndarray]:
    """Central differences ``(d/dx, d/dy)`` on a raw array (no validation)."""
    gx = np.zeros_like(f)
    gy = np.zeros_like(f)
    if rule is BoundaryRule.REFLECT:
        g = _padded(f)
        gx[:] = (g[1:-1, 2:] - g[1:-1, :-2]) / (2.0 * h)
        gy[:] = (g[2:, 1:-1] - g[:-2, 1:-1]) / (2.0 * h)
    else:
        gx[1:-1, 1:-1] = (f[1:-1, 2:] - f[1:-1, :-2]) / (2.0 * h)
        gy[1:-1, 1:-1] = (f[2:, 1:-1] - f[:-2, 1:-1]) / (2.0 * h)
    return gx, gy


def divergence_array(px: np.ndarray, py: np.ndarray, h: float, rule: BoundaryRule) -> np.ndarray:
    """Central-difference divergence on raw arrays (no validation)."""
    out = np.zeros_like(px)
    if rule is BoundaryRule.REFLECT:
        gx = _padded(px)
        gy = _padded(py)
        out[:] = (gx[1:-1, 2:] - gx[1:-1, :-2]) / (2.0 * h) + (gy[2:, 1:-1] - gy[:-2, 1:-1]) / (2.0 * h)
    else:
        out[1:-1, 1:-1] = (px[1:-1, 2:] - px[1:-1, :-2]) / (2.0 * h) + (
            py[2:, 1:-1] - py[:-2, 1:-1]
        ) / (2.0 * h)
    return out


def laplacian(f: GridField, rule: BoundaryRule = BoundaryRule.INTERIOR_ZERO) -> GridField:
    """Compact five-point Laplacian of ``f``.

    Interior node ``(i, j)`` receives
    ``(f[i+1,j] + f[i-1,j] + f[i,j+1] + f[i,j-1] - 4 f[i,j]) / h**2``;
    boundary nodes follow ``rule``.
    """
    rule = BoundaryRule(rule)
    return f.with_values(laplacian_array(f.values, f.h, rule))


def gradient(f: GridField, rule: BoundaryRule = BoundaryRule.INTERIOR_ZERO) -> tuple[GridField, GridField]:
    """Central-difference gradient ``(df/dx, df/dy)``.

    The first component differences along columns, the second along rows.
    """
    rule = BoundaryRule(rule)
    gx, gy = gradient_array(f.values, f.h, rule)
    return f.with_values(gx), f.with_values(gy)


def divergence(
    px: GridField, py: GridField, rule: BoundaryRule = BoundaryRule.INTERIOR_ZERO
) -> GridField:
    """Central-difference divergence ``d(px)/dx + d(py)/dy``."""
    if px.shape != py.shape:
        raise ValueError(f"component shapes differ: {px.shape} vs {py.shape}")
    if px.h != py.h:
        raise ValueError(f"component mesh spacings differ: {px.h} vs {py.h}")
    rule = BoundaryRule(rule)
    return px.with_values(divergence_array(px.values, py.values, px.h, rule))
