"""Binary checkpoints: magic, version, JSON architecture descriptor, float32 blocks.

Layout (little-endian)::

    b"GLWG"  uint32 version  uint32 descriptor_len  descriptor (UTF-8 JSON)
    float32 blocks, one per parameter, in descriptor order

The descriptor holds the network config, the ordered ``(name, shape)`` list
and optional free-form metadata.
"""

import json
import struct

import numpy as np

from .networks import NetConfig

MAGIC = b"GLWG"
VERSION = 1


class CheckpointError(ValueError):
    pass


def save_checkpoint(path, cfg: NetConfig, params: dict, meta=None) -> None:
    blocks = [(k, list(v.shape)) for k, v in params.items()]
    desc = json.dumps(
        {"config": cfg.to_dict(), "blocks": blocks, "meta": meta or {}}, sort_keys=True
    ).encode("utf-8")
    with open(path, "wb") as f:
        f.write(MAGIC + struct.pack("<II", VERSION, len(desc)) + desc)
        for k, _ in blocks:
            f.write(np.ascontiguousarray(params[k], dtype="<f4").tobytes())


def load_checkpoint(path):
    """Return ``(NetConfig, params, meta)``; parameters are upcast to float64."""
    with open(path, "rb") as f:
        raw = f.read()
    if raw[:4] != MAGIC:
        raise CheckpointError("not a checkpoint file")
    if len(raw) < 12:
        raise CheckpointError("truncated checkpoint header")
    version, n = struct.unpack("<II", raw[4:12])
    if version != VERSION:
        raise CheckpointError(f"unsupported checkpoint version {version}")
    try:
        desc = json.loads(raw[12 : 12 + n].decode("utf-8"))
    except ValueError as exc:
        raise CheckpointError("bad checkpoint descriptor") from exc
    offset = 12 + n
    params = {}
    for name, shape in desc["blocks"]:
        count = int(np.prod(shape))
        chunk = raw[offset : offset + 4 * count]
        if len(chunk) != 4 * count:
            raise CheckpointError("truncated checkpoint payload")
        params[name] = np.frombuffer(chunk, dtype="<f4").astype(np.float64).reshape(shape)
        offset += 4 * count
    if offset != len(raw):
        raise CheckpointError("trailing bytes in checkpoint")
    return NetConfig.from_dict(desc["config"]), params, desc.get("meta", {})


def round_trip_float32(params: dict) -> dict:
    """Parameters as they will read back from a checkpoint."""
    return {k: v.astype(np.float32).astype(np.float64) for k, v in params.items()}
