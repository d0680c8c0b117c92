"""Stochastic camera model: exposure, clipping and a parametric response curve.

An HDR radiance image ``r`` is turned into an LDR image by

    l = CRF(min(2**(e/2) * r, 1); beta, gamma),
    CRF(x) = (1 + beta) x**gamma / (beta + x**gamma),

with the exposure ``e`` and the curve parameters drawn from Gaussian priors.
This module also holds the inverse operations used for inverse tone mapping
(linearization, saturation mask, blending) and a classic exposure-stack merge
used as a verification oracle.
"""

from __future__ import annotations

import csv
import os
from dataclasses import asdict, dataclass

import numpy as np

from . import kernels
from .image import LdrImage, RadianceImage, read_ppm

DEFAULT_TAU = 0.97
CRF_FLOOR = 0.05


@dataclass(frozen=True)
class CrfParams:
    beta: float
    gamma: float

    def __post_init__(self):
        if not (self.beta > 0 and self.gamma > 0):
            raise ValueError(f"CRF parameters must be positive, got {self}")


MEAN_CRF = CrfParams(0.6, 0.9)


@dataclass(frozen=True)
class CameraPriors:
    """Exposure and CRF priors. Standard deviations, not variances, for the CRF."""

    sigma_e_sq: float = 1.0
    beta_mean: float = 0.6
    beta_sd: float = 0.1
    gamma_mean: float = 0.9
    gamma_sd: float = 0.1
    crf_mode: str = "stochastic"

    def __post_init__(self):
        if self.sigma_e_sq < 0 or self.beta_sd < 0 or self.gamma_sd < 0:
            raise ValueError("prior spreads must be nonnegative")
        if self.crf_mode not in ("stochastic", "fixed"):
            raise ValueError(f"crf_mode must be 'stochastic' or 'fixed', got {self.crf_mode!r}")

    @property
    def mean_crf(self) -> CrfParams:
        return CrfParams(self.beta_mean, self.gamma_mean)

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "CameraPriors":
        return cls(**{k: d[k] for k in cls.__dataclass_fields__ if k in d})


def exposure_factor(e):
    """Linear scaling for log exposure ``e``; one EV is e = 2."""
    return np.exp2(np.asarray(e, dtype=np.float64) / 2.0)


def _check_unit(x, name):
    arr = np.asarray(x, dtype=np.float64)
    if np.any(~np.isfinite(arr)) or np.any(arr < 0) or np.any(arr > 1):
        raise ValueError(f"{name} must lie in [0, 1]")
    return arr


def _like(x, arr):
    return float(arr) if np.ndim(x) == 0 else arr


def crf_apply(x, p: CrfParams):
    arr = _check_unit(x, "x")
    xg = arr ** p.gamma
    return _like(x, np.minimum((1.0 + p.beta) * xg / (p.beta + xg), 1.0))


def crf_invert(y, p: CrfParams):
    arr = _check_unit(y, "y")
    # beta + (1 - y) keeps CRF^-1(1) == 1 exactly
    return _like(y, np.minimum((arr * p.beta / (p.beta + (1.0 - arr))) ** (1.0 / p.gamma), 1.0))


def expose_and_clip(r: RadianceImage, e: float) -> RadianceImage:
    scaled = np.asarray(r.data, dtype=np.float64) * exposure_factor(e)
    return RadianceImage(np.minimum(scaled, 1.0))


def camera_project(r: RadianceImage, e: float, p: CrfParams) -> LdrImage:
    flat = np.asarray(r.data, dtype=np.float64).reshape(1, -1)
    out = kernels.camera_forward(flat, exposure_factor(e), p.beta, p.gamma)
    return LdrImage(out.reshape(r.shape))


# -- priors --------------------------------------------------------------------


def sample_exposure(priors: CameraPriors, rng: np.random.Generator) -> float:
    return float(rng.normal(0.0, np.sqrt(priors.sigma_e_sq)))


def _truncated_normal(rng, mean, sd, size):
    out = rng.normal(mean, sd, size)
    bad = out <= CRF_FLOOR
    while np.any(bad):
        out[bad] = rng.normal(mean, sd, int(bad.sum()))
        bad = out <= CRF_FLOOR
    return out


def sample_crf(priors: CameraPriors, rng: np.random.Generator) -> CrfParams:
    if priors.crf_mode == "fixed":
        return priors.mean_crf
    beta = _truncated_normal(rng, priors.beta_mean, priors.beta_sd, 1)[0]
    gamma = _truncated_normal(rng, priors.gamma_mean, priors.gamma_sd, 1)[0]
    return CrfParams(float(beta), float(gamma))


def sample_cameras(priors: CameraPriors, rng: np.random.Generator, n: int):
    """Independent (e, beta, gamma) arrays for ``n`` images."""
    e = rng.normal(0.0, np.sqrt(priors.sigma_e_sq), n)
    if priors.crf_mode == "fixed":
        beta = np.full(n, priors.beta_mean)
        gamma = np.full(n, priors.gamma_mean)
    else:
        beta = _truncated_normal(rng, priors.beta_mean, priors.beta_sd, n)
        gamma = _truncated_normal(rng, priors.gamma_mean, priors.gamma_sd, n)
    return e, beta, gamma


# -- inverse tone mapping helpers ---------------------------------------------------


def saturation_mask(l: LdrImage, tau: float = DEFAULT_TAU) -> np.ndarray:
    """Soft (H, W) mask ramping from 0 at max-channel ``tau`` to 1 at 1."""
    if not 0.0 < tau < 1.0:
        raise ValueError("tau must lie in (0, 1)")
    return kernels.soft_mask(l.data, tau)


def blend_hdr(
    l_hat: LdrImage,
    r_star: RadianceImage,
    e_star: float,
    p: CrfParams,
    tau: float = DEFAULT_TAU,
    literal_factor: bool = False,
) -> RadianceImage:
    """Keep linearized LDR pixels where unsaturated, generated HDR where saturated.

    The generated image is scaled by the exposure factor 2**(e*/2) so both terms
    share the linearized-LDR scale. ``literal_factor=True`` multiplies by e*
    itself instead; kept for comparison only.
    """
    if l_hat.shape != r_star.shape:
        raise ValueError(f"shape mismatch: {l_hat.shape} vs {r_star.shape}")
    m = saturation_mask(l_hat, tau)[:, :, None]
    scale = float(e_star) if literal_factor else float(exposure_factor(e_star))
    lin = crf_invert(np.asarray(l_hat.data, dtype=np.float64), p)
    r = np.asarray(r_star.data, dtype=np.float64)
    out = scale * (m * r) + (1.0 - m) * lin
    return RadianceImage(np.maximum(out, 0.0))


# -- exposure stacks ---------------------------------------------------------------


SATURATION_LEVEL = 1.0 - 0.5 / 255.0


def merge_exposures(stack, p: CrfParams, sat_level: float = SATURATION_LEVEL) -> RadianceImage:
    """Merge (LdrImage, e) pairs sharing a known response curve into radiance.

    Each value is linearized, divided by its exposure factor and averaged with
    hat weights ``max(1 - |2l - 1|, 0.01)``. Saturated values (>= ``sat_level``)
    are ignored; a value saturated everywhere takes the lower bound given by the
    shortest exposure.
    """
    stack = list(stack)
    if not stack:
        raise ValueError("empty exposure stack")
    shape = stack[0][0].shape
    if any(img.shape != shape for img, _ in stack):
        raise ValueError("exposure stack images differ in shape")
    ldr = np.stack([np.asarray(img.data, dtype=np.float64).ravel() for img, _ in stack])
    factor = exposure_factor([e for _, e in stack])
    merged = kernels.merge_stack(ldr, factor, p.beta, p.gamma, sat_level)
    return RadianceImage(merged.reshape(shape))


def read_merge_manifest(path):
    """Read a ``path,e`` CSV; image paths are relative to the manifest."""
    base = os.path.dirname(os.fspath(path))
    stack = []
    with open(path, newline="") as f:
        for row in csv.DictReader(f):
            stack.append((read_ppm(os.path.join(base, row["path"])), float(row["e"])))
    return stack


# -- display ------------------------------------------------------------------------


def preview_tonemap(r: RadianceImage) -> LdrImage:
    """Global x/(1+x) compression followed by 1/2.2 gamma."""
    x = np.asarray(r.data, dtype=np.float64)
    return LdrImage((x / (1.0 + x)) ** (1.0 / 2.2))


def ev_sweep(r: RadianceImage, evs, p: CrfParams = MEAN_CRF) -> list[LdrImage]:
    return [camera_project(r, 2.0 * ev, p) for ev in evs]
