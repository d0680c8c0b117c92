"""Reverse-mode autodiff, toy networks, Adam and checkpoints."""

from .checkpoint import load_checkpoint, save_checkpoint
from .gradcheck import grad_check
from .networks import Generator, NetConfig, init_discriminator, init_generator
from .optim import Adam, adam_step
from .tensor import NonFiniteError, Tensor, no_grad

__all__ = [
    "Adam",
    "Generator",
    "NetConfig",
    "NonFiniteError",
    "Tensor",
    "adam_step",
    "grad_check",
    "init_discriminator",
    "init_generator",
    "load_checkpoint",
    "no_grad",
    "save_checkpoint",
]
