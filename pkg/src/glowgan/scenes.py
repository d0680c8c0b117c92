"""Procedural HDR scenes with a known radiance distribution, and LDR datasets from them.

A scene is a smooth, dim background (log-bilinear between random corner
levels) with a few Gaussian light sources whose peaks sit well above 1.
Each scene is photographed exactly once through the stochastic camera.
"""

from __future__ import annotations

import csv
import os
from dataclasses import asdict, dataclass

import numpy as np

from .camera import CameraPriors, CrfParams, camera_project, sample_cameras
from .image import LdrImage, RadianceImage, quantize_ldr, read_pfm, read_ppm, write_pfm, write_ppm


@dataclass(frozen=True)
class SceneConfig:
    height: int = 8
    width: int = 8
    channels: int = 3
    bg_lo: float = 2.0 ** -12
    bg_hi: float = 2.0 ** -3
    emitters: tuple[int, int] = (1, 2)
    peak: tuple[float, float] = (2.0, 64.0)
    radius: tuple[float, float] = (0.7, 1.3)
    seed: int = 0

    def __post_init__(self):
        if not 0 < self.bg_lo <= self.bg_hi < 1:
            raise ValueError("background range must satisfy 0 < lo <= hi < 1")
        if self.peak[0] <= 1 or self.peak[1] < self.peak[0]:
            raise ValueError("emitter peaks must lie above 1")
        if self.emitters[0] < 0 or self.emitters[1] < self.emitters[0]:
            raise ValueError("bad emitter count range")

    @property
    def shape(self) -> tuple[int, int, int]:
        return (self.height, self.width, self.channels)

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "SceneConfig":
        kw = {k: d[k] for k in cls.__dataclass_fields__ if k in d}
        for k in ("emitters", "peak", "radius"):
            if k in kw:
                kw[k] = tuple(kw[k])
        return cls(**kw)


def _background(cfg: SceneConfig, rng) -> np.ndarray:
    lo, hi = np.log2(cfg.bg_lo), np.log2(cfg.bg_hi)
    corners = rng.uniform(lo, hi, (2, 2))
    v = (np.arange(cfg.height) + 0.5) / cfg.height
    u = (np.arange(cfg.width) + 0.5) / cfg.width
    top = corners[0, 0] * (1 - u) + corners[0, 1] * u
    bottom = corners[1, 0] * (1 - u) + corners[1, 1] * u
    field = np.exp2(top[None, :] * (1 - v[:, None]) + bottom[None, :] * v[:, None])
    tint = rng.uniform(0.8, 1.0, cfg.channels)
    tint /= tint.max()
    return field[:, :, None] * tint[None, None, :]


def sample_scene(cfg: SceneConfig, rng: np.random.Generator, n_emitters=None, peaks=None) -> RadianceImage:
    """One scene; ``n_emitters``/``peaks`` override the random draws (for tests)."""
    bg = _background(cfg, rng)
    if n_emitters is None:
        n_emitters = int(rng.integers(cfg.emitters[0], cfg.emitters[1] + 1))
    yy, xx = np.mgrid[0 : cfg.height, 0 : cfg.width] + 0.5
    out = bg.copy()
    for k in range(n_emitters):
        cy = rng.uniform(0, cfg.height)
        cx = rng.uniform(0, cfg.width)
        sigma = rng.uniform(*cfg.radius)
        if peaks is None:
            peak = np.exp(rng.uniform(np.log(cfg.peak[0]), np.log(cfg.peak[1])))
        else:
            peak = peaks[k]
        tint = rng.uniform(0.6, 1.0, cfg.channels)
        tint /= tint.max()
        att = np.exp(-((yy - cy) ** 2 + (xx - cx) ** 2) / (2 * sigma**2))[:, :, None]
        # convex blend toward the emitter colour keeps every pixel <= the brightest peak
        out += att * (peak * tint[None, None, :] - out)
    return RadianceImage(np.maximum(out, cfg.bg_lo * 0.5))


@dataclass
class LdrDataset:
    images: list
    manifest: list  # dicts: index, e, beta, gamma
    scenes: list

    def __len__(self):
        return len(self.images)

    def array(self) -> np.ndarray:
        """(n, H*W*C) float64 matrix of the LDR images."""
        return np.stack([np.asarray(im.data, dtype=np.float64).ravel() for im in self.images])


def build_ldr_dataset(cfg: SceneConfig, priors: CameraPriors, n: int, rng: np.random.Generator) -> LdrDataset:
    """``n`` scenes, each projected once with its own exposure and CRF, 8-bit quantized."""
    if n < 1:
        raise ValueError("n must be >= 1")
    seeds = rng.integers(0, 2**63 - 1, size=n)
    images, manifest, scenes = [], [], []
    for i, s in enumerate(seeds):
        srng = np.random.default_rng(int(s))
        scene = sample_scene(cfg, srng)
        e, beta, gamma = sample_cameras(priors, srng, 1)
        ldr = quantize_ldr(camera_project(scene, float(e[0]), CrfParams(float(beta[0]), float(gamma[0]))))
        images.append(ldr)
        scenes.append(scene)
        manifest.append({"index": i, "e": float(e[0]), "beta": float(beta[0]), "gamma": float(gamma[0])})
    return LdrDataset(images, manifest, scenes)


def write_dataset(ds: LdrDataset, out_dir) -> None:
    """``NNNNN.ppm`` images, ``gt/NNNNN.pfm`` scenes and ``manifest.csv``."""
    os.makedirs(os.path.join(out_dir, "gt"), exist_ok=True)
    with open(os.path.join(out_dir, "manifest.csv"), "w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(["index", "e", "beta", "gamma", "gt_pfm_path"])
        for row, ldr, scene in zip(ds.manifest, ds.images, ds.scenes):
            name = f"{row['index']:05d}"
            write_ppm(ldr, os.path.join(out_dir, name + ".ppm"))
            gt = os.path.join("gt", name + ".pfm")
            write_pfm(scene, os.path.join(out_dir, gt))
            writer.writerow([row["index"], repr(row["e"]), repr(row["beta"]), repr(row["gamma"]), gt])


def load_dataset(data_dir, with_scenes=False) -> LdrDataset:
    images, manifest, scenes = [], [], []
    with open(os.path.join(data_dir, "manifest.csv"), newline="") as f:
        for row in csv.DictReader(f):
            idx = int(row["index"])
            images.append(read_ppm(os.path.join(data_dir, f"{idx:05d}.ppm")))
            manifest.append({"index": idx, "e": float(row["e"]), "beta": float(row["beta"]), "gamma": float(row["gamma"])})
            if with_scenes:
                scenes.append(read_pfm(os.path.join(data_dir, row["gt_pfm_path"])))
    if not images:
        raise ValueError(f"empty dataset in {data_dir}")
    return LdrDataset(images, manifest, scenes)


def saturated_fraction(ldr: LdrImage, level: float = 1.0) -> float:
    """Fraction of pixels whose max channel reaches ``level``."""
    return float(np.mean(ldr.data.max(axis=2) >= level))
