"""Unsupervised inverse tone mapping by inverting a trained HDR generator.

Stage 1 searches the extended latent space (one latent per synthesis layer)
and the exposure with the generator frozen. Stage 2 freezes those and
fine-tunes the synthesis weights around them (pivotal tuning). Saturated
regions of the input are then filled from the generator output and the rest
is taken from the linearized input.
"""

from __future__ import annotations

import json
import os
from dataclasses import asdict, dataclass, field

import numpy as np

from .camera import DEFAULT_TAU, MEAN_CRF, CrfParams, blend_hdr, exposure_factor, preview_tonemap, saturation_mask
from .image import LdrImage, RadianceImage, write_pfm, write_ppm
from .metrics import psnr
from .nn import tensor as T
from .nn.networks import Generator, NetConfig, leaves, synthesis, synthesis_names
from .nn.optim import Adam


@dataclass(frozen=True)
class InversionConfig:
    stage1_iters: int = 500
    lr_w: float = 0.05
    lr_e: float = 0.02
    stage2_iters: int = 300
    lr_theta: float = 1e-4
    stage1_loss: str = "l2+multiscale"
    stage2_loss: str = "l2+stage1"
    restarts: int = 1
    tau: float = DEFAULT_TAU
    seed: int = 0
    optimize_exposure: bool = True
    overshoot_weight: float = 1.0
    crf: CrfParams = field(default_factory=lambda: MEAN_CRF)

    def __post_init__(self):
        if self.stage1_iters < 0 or self.stage2_iters < 0:
            raise ValueError("iteration counts must be >= 0")
        if self.restarts < 1:
            raise ValueError("restarts must be >= 1")
        if self.stage1_loss not in LOSSES or self.stage2_loss not in LOSSES:
            raise ValueError(f"losses must be one of {sorted(LOSSES)}")

    def to_dict(self) -> dict:
        d = asdict(self)
        d["crf"] = asdict(self.crf)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "InversionConfig":
        kw = {k: d[k] for k in cls.__dataclass_fields__ if k in d}
        if "crf" in kw and isinstance(kw["crf"], dict):
            kw["crf"] = CrfParams(**kw["crf"])
        return cls(**kw)


@dataclass
class InversionResult:
    e_star: float
    w_plus: np.ndarray  # (layers, latent_dim)
    theta_s: dict
    r_star: RadianceImage
    r_blend: RadianceImage
    mask: np.ndarray
    psnr: float
    stage1_losses: list
    stage2_losses: list
    restart: int = 0

    def summary(self) -> dict:
        return {
            "restart": self.restart,
            "e_star": self.e_star,
            "psnr": self.psnr,
            "stage1_loss_initial": self.stage1_losses[0] if self.stage1_losses else None,
            "stage1_loss_final": self.stage1_losses[-1] if self.stage1_losses else None,
            "stage2_loss_final": self.stage2_losses[-1] if self.stage2_losses else None,
            "w_plus": self.w_plus.tolist(),
        }


# -- discrepancy measures -------------------------------------------------------------


def _pool_matrix(h, w, c):
    """(h*w*c, h/2*w/2*c) matrix averaging 2x2 blocks per channel."""
    h2, w2 = h // 2, w // 2
    m = np.zeros((h * w * c, h2 * w2 * c))
    for y in range(h2 * 2):
        for x in range(w2 * 2):
            for ch in range(c):
                m[(y * w + x) * c + ch, ((y // 2) * w2 + x // 2) * c + ch] = 0.25
    return m, (h2, w2, c)


def _l2(a, b):
    d = a - b
    return T.mean(d * d)


class Discrepancy:
    """Pixel L2 and a two-level average-pooled L2 between (1, N) LDR rows."""

    def __init__(self, raster):
        h, w, c = raster
        self.pools = []
        shape = (h, w, c)
        for _ in range(2):
            if shape[0] < 2 or shape[1] < 2:
                break
            m, shape = _pool_matrix(*shape)
            self.pools.append(m)

    def multiscale(self, a, b):
        total = _l2(a, b)
        for m in self.pools:
            a, b = a @ m, b @ m
            total = total + _l2(a, b)
        return total

    def __call__(self, name, a, b):
        if name == "l2":
            return _l2(a, b)
        if name == "l2+multiscale":
            return self.multiscale(a, b)
        if name == "l2+stage1":
            return _l2(a, b) + self.multiscale(a, b)
        raise ValueError(f"unknown loss {name!r}")


LOSSES = ("l2", "l2+multiscale", "l2+stage1")


# -- inversion ------------------------------------------------------------------------


def _render(P, ws, e, cfg: NetConfig, crf: CrfParams):
    r = synthesis(P, ws, cfg)
    return r, T.camera(r, e, crf.beta, crf.gamma)


def _overshoot(r, e, unsat):
    # the clip has zero slope above 1, so a pixel pushed past saturation while
    # the input is not saturated there gets no gradient from the LDR loss alone;
    # (1 - 1/x)^2 for x > 1 restores it and stays bounded for very bright pixels
    x = T.maximum(r * T.exp2(e * 0.5), 1.0)
    d = 1.0 - 1.0 / x
    return T.mean(d * d * unsat)


def invert(
    l_hat: LdrImage,
    gen: Generator,
    cfg: InversionConfig = InversionConfig(),
    restart: int = 0,
    w_init=None,
    e_init: float = 0.0,
) -> InversionResult:
    """Two-stage inversion of ``l_hat``; returns the HDR estimate and its blend.

    The latent starts at ``M(z)`` with ``z`` drawn from the (seed, restart)
    stream unless ``w_init`` (one vector or one per layer) is given.
    """
    net = gen.cfg
    if net.mode != "glowgan":
        raise ValueError("inversion needs an HDR (glowgan-mode) generator")
    if l_hat.shape != net.raster:
        raise ValueError(f"input shape {l_hat.shape} does not match generator raster {net.raster}")
    target = T.Tensor(np.asarray(l_hat.data, dtype=np.float64).reshape(1, -1))
    unsat = (target.data < cfg.tau).astype(np.float64)
    loss_fn = Discrepancy(net.raster)
    crf = cfg.crf

    if w_init is None:
        rng = np.random.default_rng([cfg.seed, restart])
        w_init = gen.map(rng.normal(size=net.latent_dim))
    w_init = np.asarray(w_init, dtype=np.float64)
    if w_init.ndim == 1:
        w_init = np.tile(w_init, (net.layers, 1))
    latents = {f"w.{i}": w_init[i : i + 1].copy() for i in range(net.layers)}
    exposure = {"e": np.array([float(e_init)])}
    theta = {k: gen.params[k].copy() for k in synthesis_names(gen.params)}

    # stage 1: latents + exposure, generator frozen
    opt_w = Adam(cfg.lr_w)
    opt_e = Adam(cfg.lr_e)
    stage1 = []
    P = leaves(theta)
    for it in range(cfg.stage1_iters + 1):
        W = {k: T.Tensor(v, requires_grad=True) for k, v in latents.items()}
        E = T.Tensor(exposure["e"], requires_grad=cfg.optimize_exposure)
        r, l = _render(P, [W[f"w.{i}"] for i in range(net.layers)], E, net, crf)
        loss = loss_fn(cfg.stage1_loss, l, target)
        if cfg.overshoot_weight:
            loss = loss + cfg.overshoot_weight * _overshoot(r, E, unsat)
        stage1.append(loss.item())
        if it == cfg.stage1_iters:
            break
        loss.backward()
        opt_w.step(latents, {k: W[k].grad for k in latents})
        if cfg.optimize_exposure:
            opt_e.step(exposure, {"e": E.grad})

    # stage 2: synthesis weights only
    opt_t = Adam(cfg.lr_theta)
    stage2 = []
    ws = [T.Tensor(latents[f"w.{i}"]) for i in range(net.layers)]
    E = T.Tensor(exposure["e"])
    names = list(theta)
    for it in range(cfg.stage2_iters + 1):
        P = leaves(theta, names)
        r, l = _render(P, ws, E, net, crf)
        loss = loss_fn(cfg.stage2_loss, l, target)
        if cfg.overshoot_weight:
            loss = loss + cfg.overshoot_weight * _overshoot(r, E, unsat)
        stage2.append(loss.item())
        if it == cfg.stage2_iters:
            break
        loss.backward()
        opt_t.step(theta, {k: P[k].grad for k in names if P[k].grad is not None})

    with T.no_grad():
        r, l = _render(leaves(theta), ws, E, net, crf)
    e_star = float(exposure["e"][0])
    r_star = RadianceImage(r.data.reshape(net.raster))
    return InversionResult(
        e_star=e_star,
        w_plus=np.concatenate([latents[f"w.{i}"] for i in range(net.layers)]),
        theta_s=theta,
        r_star=r_star,
        r_blend=blend_hdr(l_hat, r_star, e_star, crf, cfg.tau),
        mask=saturation_mask(l_hat, cfg.tau),
        psnr=float(psnr(l.data.reshape(net.raster), l_hat.data)),
        stage1_losses=stage1[: cfg.stage1_iters + 1],
        stage2_losses=stage2,
        restart=restart,
    )


def invert_multimodal(l_hat: LdrImage, gen: Generator, cfg: InversionConfig) -> list:
    """``cfg.restarts`` independent inversions, best reprojection PSNR first."""
    results = [invert(l_hat, gen, cfg, restart=k) for k in range(cfg.restarts)]
    return sorted(results, key=lambda r: (-r.psnr, r.restart))


def write_inversion(result: InversionResult, out_dir) -> None:
    os.makedirs(out_dir, exist_ok=True)
    write_pfm(result.r_star, os.path.join(out_dir, "r_star.pfm"))
    write_pfm(result.r_blend, os.path.join(out_dir, "r_blend.pfm"))
    write_pfm(RadianceImage(result.mask), os.path.join(out_dir, "mask.pfm"))
    write_ppm(preview_tonemap(result.r_blend), os.path.join(out_dir, "preview.ppm"))
    with open(os.path.join(out_dir, "result.json"), "w") as f:
        json.dump(result.summary(), f, indent=2, sort_keys=True)


def exposed_hdr(result: InversionResult) -> np.ndarray:
    """r* on the linearized-input scale (exposure factor applied)."""
    return np.asarray(result.r_star.data, dtype=np.float64) * exposure_factor(result.e_star)
