"""Toy style-modulated generator and MLP discriminator.

Parameters live in ordered dicts of float64 arrays (declaration order is the
checkpoint order). Forward passes take a dict of Tensors so the same code
serves training, inversion and gradient checking.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from . import tensor as T
from .tensor import Tensor

LOG2_CLAMP = 12.0


@dataclass(frozen=True)
class NetConfig:
    latent_dim: int = 16
    mapping_width: int = 64
    width: int = 64
    layers: int = 3
    height: int = 8
    img_width: int = 8
    channels: int = 3
    disc_width: int = 64
    mode: str = "glowgan"
    hard_clamp: bool = False

    def __post_init__(self):
        if self.layers < 2:
            raise ValueError("need at least 2 synthesis layers")
        if self.mode not in ("glowgan", "vanilla"):
            raise ValueError(f"unknown mode {self.mode!r}")

    @property
    def pixels(self) -> int:
        return self.height * self.img_width * self.channels

    @property
    def raster(self) -> tuple[int, int, int]:
        return (self.height, self.img_width, self.channels)

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "NetConfig":
        return cls(**{k: d[k] for k in cls.__dataclass_fields__ if k in d})


def _uniform(rng, fan_in, shape, gain=np.sqrt(2.0)):
    bound = gain * np.sqrt(3.0 / fan_in)
    return rng.uniform(-bound, bound, shape)


def init_generator(cfg: NetConfig, rng: np.random.Generator) -> dict:
    k, mw, w = cfg.latent_dim, cfg.mapping_width, cfg.width
    p = {
        "map.w0": _uniform(rng, k, (k, mw)),
        "map.b0": np.zeros((1, mw)),
        "map.w1": _uniform(rng, mw, (mw, k), gain=1.0),
        "map.b1": np.zeros((1, k)),
        "syn.const": rng.normal(0.0, 1.0, (1, w)),
    }
    for i in range(cfg.layers):
        p[f"syn.{i}.w"] = _uniform(rng, w, (w, w))
        p[f"syn.{i}.b"] = np.zeros((1, w))
        p[f"syn.{i}.scale_w"] = _uniform(rng, k, (k, w), gain=1.0)
        p[f"syn.{i}.scale_b"] = np.ones((1, w))
        p[f"syn.{i}.shift_w"] = _uniform(rng, k, (k, w), gain=1.0)
        p[f"syn.{i}.shift_b"] = np.zeros((1, w))
    p["syn.head.w"] = _uniform(rng, w, (w, cfg.pixels), gain=0.5)
    p["syn.head.b"] = np.zeros((1, cfg.pixels))
    return p


def init_discriminator(cfg: NetConfig, rng: np.random.Generator) -> dict:
    n, h = cfg.pixels, cfg.disc_width
    return {
        "disc.w0": _uniform(rng, n, (n, h)),
        "disc.b0": np.zeros((1, h)),
        "disc.w1": _uniform(rng, h, (h, h)),
        "disc.b1": np.zeros((1, h)),
        "disc.mbstd": _uniform(rng, 1, (1, h), gain=1.0),
        "disc.w2": _uniform(rng, h, (h, 1), gain=1.0),
        "disc.b2": np.zeros((1, 1)),
    }


def synthesis_names(params) -> list[str]:
    return [k for k in params if k.startswith("syn.")]


def mapping_names(params) -> list[str]:
    return [k for k in params if k.startswith("map.")]


def leaves(params, trainable=()) -> dict:
    trainable = set(trainable)
    return {k: Tensor(v, requires_grad=k in trainable) for k, v in params.items()}


def mapping(P, z):
    h = T.leaky_relu(z @ P["map.w0"] + P["map.b0"])
    return h @ P["map.w1"] + P["map.b1"]


def _normalize(h):
    """Rescale each sample's activations to unit RMS."""
    return h / T.power(T.mean(h * h, axis=1, keepdims=True) + 1e-8, 0.5)


def synthesis(P, ws, cfg: NetConfig):
    """Run the synthesis network with one latent per layer (W+).

    ``ws`` is a list of ``cfg.layers`` tensors of shape (B, k) or (1, k).
    Returns radiance (glowgan) or [0, 1] intensities (vanilla), shape (B, N).
    """
    if len(ws) != cfg.layers:
        raise ValueError(f"expected {cfg.layers} latents, got {len(ws)}")
    batch = max(w.shape[0] for w in ws)
    h = P["syn.const"] * np.ones((batch, 1))
    for i, w in enumerate(ws):
        if w.shape[-1] != cfg.latent_dim:
            raise ValueError(f"latent dimension {w.shape[-1]} != {cfg.latent_dim}")
        a = _normalize(T.leaky_relu(h @ P[f"syn.{i}.w"] + P[f"syn.{i}.b"]))
        scale = w @ P[f"syn.{i}.scale_w"] + P[f"syn.{i}.scale_b"]
        shift = w @ P[f"syn.{i}.shift_w"] + P[f"syn.{i}.shift_b"]
        h = a * scale + shift
    o = h @ P["syn.head.w"] + P["syn.head.b"]
    if cfg.mode == "vanilla":
        return T.sigmoid(o)
    if cfg.hard_clamp:
        o = T.clamp(o, -LOG2_CLAMP, LOG2_CLAMP)
    else:
        o = T.tanh(o * (1.0 / LOG2_CLAMP)) * LOG2_CLAMP
    return T.exp2(o)


def generate_batch(P, z, cfg: NetConfig):
    w = mapping(P, z)
    return synthesis(P, [w] * cfg.layers, cfg)


def minibatch_std(h):
    """Mean over features of the across-batch standard deviation (a scalar)."""
    centered = h - T.mean(h, axis=0, keepdims=True)
    var = T.mean(centered * centered, axis=0, keepdims=True)
    return T.mean(T.power(var + 1e-8, 0.5))


def discriminate(P, x):
    """Logits for a batch of flattened LDR images.

    The second layer also sees the batch's feature spread, which lets D
    penalize collapsed generators; logits therefore depend on the whole batch.
    """
    h = T.leaky_relu((x * 2.0 - 1.0) @ P["disc.w0"] + P["disc.b0"])
    h = T.leaky_relu(h @ P["disc.w1"] + P["disc.b1"] + minibatch_std(h) * P["disc.mbstd"])
    return h @ P["disc.w2"] + P["disc.b2"]


class Generator:
    """Mapping + synthesis weights with convenience sampling methods."""

    def __init__(self, cfg: NetConfig, params: dict):
        self.cfg = cfg
        self.params = params

    @classmethod
    def init(cls, cfg: NetConfig, rng: np.random.Generator) -> "Generator":
        return cls(cfg, init_generator(cfg, rng))

    def copy(self) -> "Generator":
        return Generator(self.cfg, {k: v.copy() for k, v in self.params.items()})

    def _wrap(self, flat):
        from ..image import LdrImage, RadianceImage

        arr = flat.reshape(self.cfg.raster)
        return LdrImage(arr) if self.cfg.mode == "vanilla" else RadianceImage(arr)

    def map(self, z) -> np.ndarray:
        z = np.asarray(z, dtype=np.float64).reshape(-1)
        if z.size != self.cfg.latent_dim:
            raise ValueError(f"latent has {z.size} entries, expected {self.cfg.latent_dim}")
        with T.no_grad():
            return mapping(leaves(self.params), Tensor(z[None, :])).data[0]

    def generate(self, z):
        """Image for latent ``z`` (radiance, or LDR for a vanilla model)."""
        w = self.map(z)
        return self.generate_wplus([w] * self.cfg.layers)

    def generate_wplus(self, w_list):
        if len(w_list) != self.cfg.layers:
            raise ValueError(f"expected {self.cfg.layers} latents, got {len(w_list)}")
        with T.no_grad():
            ws = [Tensor(np.asarray(w, dtype=np.float64).reshape(1, -1)) for w in w_list]
            out = synthesis(leaves(self.params), ws, self.cfg)
        return self._wrap(out.data[0])

    def generate_many(self, z) -> np.ndarray:
        """(B, H, W, C) float64 batch for a (B, k) latent array."""
        with T.no_grad():
            out = generate_batch(leaves(self.params), Tensor(np.asarray(z, dtype=np.float64)), self.cfg)
        return out.data.reshape((-1,) + self.cfg.raster)
