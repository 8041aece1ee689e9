"""Full-reference image quality metrics: MSE, PSNR and SSIM."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np
from scipy.ndimage import correlate1d

from .grid import GridField

__all__ = ["MetricReport", "mse", "psnr", "ssim", "metric_report", "SSIM_WINDOWS"]

SSIM_WINDOWS = ("gauss11", "uniform7")
K1 = 0.01
K2 = 0.03


def _pair(a, b) -> tuple[np.ndarray, np.ndarray]:
    a = np.asarray(a.values if isinstance(a, GridField) else a, dtype=np.float64)
    b = np.asarray(b.values if isinstance(b, GridField) else b, dtype=np.float64)
    if a.shape != b.shape:
        raise ValueError(f"image shapes differ: {a.shape} vs {b.shape}")
    return a, b


def mse(a, b) -> float:
    """Mean squared difference."""
    a, b = _pair(a, b)
    return float(np.mean((a - b) ** 2))


def psnr(a, b, data_range: float = 255.0) -> float:
    """Peak signal-to-noise ratio in dB; ``math.inf`` for identical inputs."""
    if not data_range > 0:
        raise ValueError(f"data_range must be positive, got {data_range!r}")
    err = mse(a, b)
    if err == 0.0:
        return math.inf
    return 10.0 * math.log10(data_range**2 / err)


def _gaussian_taps(size: int = 11, sigma: float = 1.5) -> np.ndarray:
    x = np.arange(size) - (size - 1) / 2.0
    g = np.exp(-(x**2) / (2.0 * sigma**2))
    return g / g.sum()


def _filter_valid(img: np.ndarray, taps: np.ndarray) -> np.ndarray:
    # separable correlation restricted to windows lying fully inside the image
    r = (len(taps) - 1) // 2
    out = correlate1d(img, taps, axis=0, mode="reflect")
    out = correlate1d(out, taps, axis=1, mode="reflect")
    return out[r:-r, r:-r]


def ssim(a, b, data_range: float = 255.0, window: str = "gauss11") -> float:
    """Mean structural similarity index.

    ``gauss11`` is the original construction: 11x11 Gaussian window with
    standard deviation 1.5 and population (weighted) moments. ``uniform7``
    reproduces the common 7x7 box-window variant with sample covariance
    (``N / (N - 1)`` correction). Only windows lying fully inside the image
    contribute to the mean.
    """
    a, b = _pair(a, b)
    if not data_range > 0:
        raise ValueError(f"data_range must be positive, got {data_range!r}")
    if window == "gauss11":
        taps, size, cov_norm = _gaussian_taps(), 11, 1.0
    elif window == "uniform7":
        taps, size = np.full(7, 1.0 / 7.0), 7
        cov_norm = 49.0 / 48.0
    else:
        raise ValueError(f"unknown SSIM window {window!r}; choose from {SSIM_WINDOWS}")
    if min(a.shape) < size:
        raise ValueError(f"images must be at least {size}x{size} for the {window} window")

    c1 = (K1 * data_range) ** 2
    c2 = (K2 * data_range) ** 2
    mu_a = _filter_valid(a, taps)
    mu_b = _filter_valid(b, taps)
    var_a = cov_norm * (_filter_valid(a * a, taps) - mu_a * mu_a)
    var_b = cov_norm * (_filter_valid(b * b, taps) - mu_b * mu_b)
    cov = cov_norm * (_filter_valid(a * b, taps) - mu_a * mu_b)

    num = (2.0 * mu_a * mu_b + c1) * (2.0 * cov + c2)
    den = (mu_a**2 + mu_b**2 + c1) * (var_a + var_b + c2)
    return float(np.mean(num / den))


@dataclass(frozen=True)
class MetricReport:
    psnr_db: float
    ssim: float
    mse: float
    data_range: float
    ssim_window: str = "gauss11"

    def to_dict(self) -> dict:
        return {
            "psnr_db": "inf" if math.isinf(self.psnr_db) else self.psnr_db,
            "ssim": self.ssim,
            "mse": self.mse,
            "data_range": self.data_range,
            "ssim_window": self.ssim_window,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    def format_lines(self) -> str:
        return f"PSNR: {self.psnr_db:.2f} dB\nSSIM: {self.ssim:.4f}\nMSE:  {self.mse:.2f}"


def metric_report(reference, test, data_range: float = 255.0, window: str = "gauss11") -> MetricReport:
    """All three metrics of ``test`` against ``reference``."""
    err = mse(reference, test)
    return MetricReport(
        psnr_db=psnr(reference, test, data_range),
        ssim=ssim(reference, test, data_range, window),
        mse=err,
        data_range=float(data_range),
        ssim_window=window,
    )
