"""Adversarial training of an HDR generator from LDR images only.

In ``glowgan`` mode every fake image passes through the stochastic camera
(fresh exposure and response curve per image) before the discriminator sees
it, so the generator has to explain the LDR data at every plausible exposure.
``vanilla`` mode is the baseline: the generator emits [0, 1] images directly.
"""

from __future__ import annotations

import logging
import os
from dataclasses import asdict, dataclass, field, replace

import numpy as np

from .camera import CameraPriors, sample_cameras
from .image import histogram, quantize8
from .metrics import dr_percentiles, hist_chi2
from .nn import tensor as T
from .nn.checkpoint import round_trip_float32, save_checkpoint
from .nn.networks import (
    Generator,
    NetConfig,
    discriminate,
    generate_batch,
    init_discriminator,
    init_generator,
    leaves,
)
from .nn.optim import Adam

log = logging.getLogger(__name__)

HIST_BINS = 64
SATURATED = 1.0 - 0.5 / 255.0


class TrainingDiverged(FloatingPointError):
    pass


@dataclass(frozen=True)
class TrainConfig:
    priors: CameraPriors = field(default_factory=CameraPriors)
    net: NetConfig = field(default_factory=NetConfig)
    batch_size: int = 64
    steps: int = 2000
    lr_g: float = 1e-4
    lr_d: float = 2e-4
    adam_beta1: float = 0.5
    adam_beta2: float = 0.999
    seed: int = 0
    mode: str = "glowgan"
    log_every: int = 500
    ckpt_every: int = 0
    eval_samples: int = 256
    dequantize: bool = True

    def __post_init__(self):
        if self.mode not in ("glowgan", "vanilla"):
            raise ValueError(f"unknown mode {self.mode!r}")
        if self.batch_size < 1 or self.steps < 0 or self.lr_g <= 0 or self.lr_d <= 0:
            raise ValueError("batch size, steps and learning rates must be positive")
        if self.net.mode != self.mode:
            object.__setattr__(self, "net", replace(self.net, mode=self.mode))

    def to_dict(self) -> dict:
        d = asdict(self)
        d["priors"] = self.priors.to_dict()
        d["net"] = self.net.to_dict()
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "TrainConfig":
        kw = {k: d[k] for k in cls.__dataclass_fields__ if k in d}
        if "priors" in kw:
            kw["priors"] = CameraPriors.from_dict(kw["priors"])
        if "net" in kw:
            kw["net"] = NetConfig.from_dict(kw["net"])
        return cls(**kw)


@dataclass
class TrainResult:
    generator: Generator
    disc_params: dict
    log: list


def _streams(seed):
    ss = np.random.SeedSequence(seed)
    return [np.random.default_rng(s) for s in ss.spawn(5)]


def _jitter(rng, shape):
    # half-code uniform noise, applied to real and fake alike so that neither
    # 8-bit steps nor exact saturation give the discriminator a shortcut
    return rng.uniform(-0.5, 0.5, shape) / 255.0


def project_fakes(r: T.Tensor, mode, cams):
    if mode == "vanilla":
        return r
    e, beta, gamma = cams
    return T.camera(r, e, beta, gamma)


def ldr_batch(gen: Generator, priors: CameraPriors, n: int, rng) -> np.ndarray:
    """(n, N) 8-bit quantized LDR renderings of fresh generator samples."""
    z = rng.normal(size=(n, gen.cfg.latent_dim))
    with T.no_grad():
        r = generate_batch(leaves(gen.params), T.Tensor(z), gen.cfg)
        cams = sample_cameras(priors, rng, n)
        l = project_fakes(r, gen.cfg.mode, cams).data
    return quantize8(l) / 255.0


def _log_row(step, g_loss, d_loss, gen, priors, reals, n, seed):
    rng = np.random.default_rng([seed, step, 7])
    samples = sample_hdr(gen, n, rng)
    dr = dr_percentiles(samples)
    fake = ldr_batch(gen, priors, n, rng)
    h_fake = histogram(fake, bins=HIST_BINS, value_range=(0.0, 1.0))
    h_real = histogram(reals, bins=HIST_BINS, value_range=(0.0, 1.0))
    return {
        "step": step,
        "g_loss": g_loss,
        "d_loss": d_loss,
        "dr50": dr.dr50,
        "dr90": dr.dr90,
        "hist_chi2": hist_chi2(h_fake, h_real),
    }


def train(dataset, cfg: TrainConfig, out_dir=None, camera_sampler=sample_cameras) -> TrainResult:
    """Alternating non-saturating GAN updates; returns final weights and the log.

    ``dataset`` is an LdrDataset or an (n, N) array of LDR rows. Checkpoints are
    written to ``out_dir`` every ``ckpt_every`` steps and at the end.
    ``camera_sampler(priors, rng, n)`` draws per-image cameras (hookable for
    tests).
    """
    reals = dataset.array() if hasattr(dataset, "array") else np.asarray(dataset, dtype=np.float64)
    if reals.ndim != 2 or len(reals) == 0:
        raise ValueError("empty dataset")
    net = cfg.net
    if reals.shape[1] != net.pixels:
        raise ValueError(f"dataset rows have {reals.shape[1]} values, network expects {net.pixels}")
    init_rng, data_rng, z_rng, cam_rng, noise_rng = _streams(cfg.seed)
    gp = init_generator(net, init_rng)
    dp = init_discriminator(net, init_rng)
    gen = Generator(net, gp)
    opt_g = Adam(cfg.lr_g, cfg.adam_beta1, cfg.adam_beta2)
    opt_d = Adam(cfg.lr_d, cfg.adam_beta1, cfg.adam_beta2)
    g_names = list(gp)
    d_names = list(dp)
    B = cfg.batch_size
    rows = []
    if out_dir is not None:
        os.makedirs(out_dir, exist_ok=True)

    def fake_batch(P):
        z = T.Tensor(z_rng.normal(size=(B, net.latent_dim)))
        r = generate_batch(P, z, net)
        cams = camera_sampler(cfg.priors, cam_rng, B) if cfg.mode == "glowgan" else None
        l = project_fakes(r, cfg.mode, cams)
        if cfg.dequantize:
            l = T.clamp(l + _jitter(noise_rng, l.shape), 0.0, 1.0)
        return l

    g_loss = d_loss = float("nan")
    for step in range(1, cfg.steps + 1):
        try:
            # discriminator
            x = reals[data_rng.integers(0, len(reals), B)]
            if cfg.dequantize:
                x = np.clip(x + _jitter(noise_rng, x.shape), 0.0, 1.0)
            PD = leaves(dp, d_names)
            with T.no_grad():
                fake = fake_batch(leaves(gp))
            loss = T.mean(T.softplus(-discriminate(PD, T.Tensor(x)))) + T.mean(
                T.softplus(discriminate(PD, T.Tensor(fake.data)))
            )
            loss.backward()
            opt_d.step(dp, {k: PD[k].grad for k in d_names})
            d_loss = loss.item()

            # generator
            PG = leaves(gp, g_names)
            PD = leaves(dp)
            loss = T.mean(T.softplus(-discriminate(PD, fake_batch(PG))))
            loss.backward()
            opt_g.step(gp, {k: PG[k].grad for k in g_names if PG[k].grad is not None})
            g_loss = loss.item()
        except T.NonFiniteError as exc:
            raise TrainingDiverged(f"step {step}: {exc} (last g_loss={g_loss}, d_loss={d_loss})") from exc

        if cfg.log_every and step % cfg.log_every == 0:
            rows.append(_log_row(step, g_loss, d_loss, gen, cfg.priors, reals, cfg.eval_samples, cfg.seed))
            log.info("step %d %s", step, rows[-1])
        if out_dir is not None and cfg.ckpt_every and step % cfg.ckpt_every == 0:
            _save(out_dir, f"ckpt_{step:06d}.bin", gen, dp, cfg, step)
    if out_dir is not None:
        _save(out_dir, "final.bin", gen, dp, cfg, cfg.steps)
    return TrainResult(gen, dp, rows)


def _save(out_dir, name, gen, dp, cfg, step):
    save_checkpoint(
        os.path.join(out_dir, name), gen.cfg, {**gen.params, **dp}, meta={"step": step, "train": cfg.to_dict()}
    )


def generator_from_checkpoint(params: dict, net: NetConfig) -> Generator:
    return Generator(net, {k: v for k, v in params.items() if not k.startswith("disc.")})


def snapshot(gen: Generator) -> Generator:
    """Copy of ``gen`` with weights rounded as a checkpoint would store them."""
    return Generator(gen.cfg, round_trip_float32(gen.params))


# -- sampling --------------------------------------------------------------------------


def sample_hdr(gen: Generator, n: int, rng: np.random.Generator) -> list:
    """``n`` images from independent latents; no camera model is applied."""
    if n < 1:
        raise ValueError("n must be >= 1")
    z = rng.normal(size=(n, gen.cfg.latent_dim))
    batch = gen.generate_many(z)
    return [gen._wrap(im.ravel()) for im in batch]


def interpolate(gen: Generator, z1, z2, steps: int) -> list:
    """Frames along the straight line between M(z1) and M(z2) in latent W space."""
    if steps < 2:
        raise ValueError("steps must be >= 2")
    w1, w2 = gen.map(z1), gen.map(z2)
    frames = []
    for t in np.linspace(0.0, 1.0, steps):
        w = (1.0 - t) * w1 + t * w2
        frames.append(gen.generate_wplus([w] * gen.cfg.layers))
    return frames


def eval_distribution(gen: Generator, dataset, priors: CameraPriors, n: int, rng) -> dict:
    """Histogram chi-square, saturation gap and DR stats of ``n`` generated samples."""
    reals = dataset.array() if hasattr(dataset, "array") else np.asarray(dataset, dtype=np.float64)
    fake = ldr_batch(gen, priors, n, rng)
    h_fake = histogram(fake, bins=HIST_BINS, value_range=(0.0, 1.0))
    h_real = histogram(reals, bins=HIST_BINS, value_range=(0.0, 1.0))
    c = gen.cfg.channels
    sat_fake = np.mean(fake.reshape(n, -1, c).max(axis=2) >= SATURATED)
    sat_real = np.mean(reals.reshape(len(reals), -1, c).max(axis=2) >= SATURATED)
    dr = dr_percentiles(sample_hdr(gen, n, rng))
    return {
        "hist_chi2": hist_chi2(h_fake, h_real),
        "sat_gap": float(abs(sat_fake - sat_real)),
        "dr50": dr.dr50,
        "dr90": dr.dr90,
    }


__all__ = [
    "TrainConfig",
    "TrainResult",
    "TrainingDiverged",
    "eval_distribution",
    "interpolate",
    "sample_hdr",
    "train",
]
