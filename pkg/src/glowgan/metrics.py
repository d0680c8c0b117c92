"""Dynamic range, PSNR and histogram distances."""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .image import Histogram, LdrImage, RadianceImage

HDR_FLOOR = 2.0 ** -16
LDR_FLOOR = 1.0 / 255.0
PSNR_CAP = 99.0


def dynamic_range(image) -> float:
    """log2(max / min) in stops.

    Values are floored at 2**-16 for radiance and at 1/255 (one 8-bit code) for
    LDR images before taking the ratio.
    """
    data = np.asarray(image.data, dtype=np.float64)
    if data.size == 0:
        raise ValueError("empty image")
    if not np.any(data > 0):
        raise ValueError("dynamic range undefined for an all-zero image")
    floor = LDR_FLOOR if isinstance(image, LdrImage) else HDR_FLOOR
    hi = max(float(data.max()), floor)
    lo = max(float(data.min()), floor)
    return float(np.log2(hi / lo))


@dataclass(frozen=True)
class DrStats:
    values: np.ndarray
    dr50: float
    dr90: float


def dr_percentiles(images, n=None) -> DrStats:
    """Median and 90th percentile of per-image DR over the first ``n`` images."""
    images = list(images)
    if n is not None:
        if n < 1:
            raise ValueError("n must be >= 1")
        images = images[:n]
    if not images:
        raise ValueError("no images")
    drs = np.array([dynamic_range(im) for im in images])
    return DrStats(drs, float(np.percentile(drs, 50)), float(np.percentile(drs, 90)))


def psnr(a: LdrImage, b: LdrImage) -> float:
    """PSNR in dB for unit peak; identical images report ``PSNR_CAP``."""
    x = np.asarray(getattr(a, "data", a), dtype=np.float64)
    y = np.asarray(getattr(b, "data", b), dtype=np.float64)
    if x.shape != y.shape:
        raise ValueError(f"shape mismatch: {x.shape} vs {y.shape}")
    mse = float(np.mean((x - y) ** 2))
    if mse == 0:
        return PSNR_CAP
    return float(min(PSNR_CAP, -10.0 * np.log10(mse)))


def hist_chi2(h1: Histogram, h2: Histogram) -> float:
    """Symmetric chi-square sum (p - q)^2 / (p + q) over normalized bins; in [0, 2]."""
    if h1.edges.shape != h2.edges.shape or not np.allclose(h1.edges, h2.edges, rtol=0, atol=1e-12):
        raise ValueError("histograms have different bin edges")
    p, q = h1.normalized(), h2.normalized()
    s = p + q
    nz = s > 0
    return float(np.sum((p[nz] - q[nz]) ** 2 / s[nz]))


def fraction_above(images, level=1.0) -> float:
    values = np.concatenate([np.asarray(im.data, dtype=np.float64).ravel() for im in images])
    return float(np.mean(values > level))


def write_metrics_csv(rows, path) -> None:
    """Rows are dicts keyed by column; the first row fixes the header."""
    rows = list(rows)
    if not rows:
        return
    with open(path, "w", newline="") as f:
        writer = csv.DictWriter(f, fieldnames=list(rows[0]))
        writer.writeheader()
        writer.writerows(rows)
