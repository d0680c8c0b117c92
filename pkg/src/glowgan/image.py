"""Raster types, PFM/PPM codecs and brightness histograms."""

from __future__ import annotations

import csv
import os
from dataclasses import dataclass

import numpy as np

LOG_FLOOR = 2.0 ** -16


class ImageFormatError(ValueError):
    """Raised for malformed or unsupported image files."""


def _as_raster(data) -> np.ndarray:
    arr = np.asarray(data, dtype=np.float32)
    if arr.ndim == 2:
        arr = arr[:, :, None]
    if arr.ndim != 3 or arr.shape[2] not in (1, 3):
        raise ValueError(f"expected HxW, HxWx1 or HxWx3 raster, got shape {arr.shape}")
    if arr.size == 0:
        raise ValueError("empty raster")
    arr = np.ascontiguousarray(arr)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class RadianceImage:
    """Linear, nonnegative, unbounded radiance raster (H, W, C) in float32."""

    data: np.ndarray

    def __post_init__(self):
        arr = _as_raster(self.data)
        if not np.all(np.isfinite(arr)):
            raise ValueError("radiance must be finite")
        if np.any(arr < 0):
            raise ValueError("radiance must be nonnegative")
        object.__setattr__(self, "data", arr)

    @property
    def height(self) -> int:
        return self.data.shape[0]

    @property
    def width(self) -> int:
        return self.data.shape[1]

    @property
    def channels(self) -> int:
        return self.data.shape[2]

    @property
    def shape(self) -> tuple[int, int, int]:
        return self.data.shape


@dataclass(frozen=True, eq=False)
class LdrImage:
    """Display-referred raster (H, W, C) with every value in [0, 1]."""

    data: np.ndarray

    def __post_init__(self):
        arr = _as_raster(self.data)
        if not np.all(np.isfinite(arr)) or np.any(arr < 0) or np.any(arr > 1):
            raise ValueError("LDR values must lie in [0, 1]")
        object.__setattr__(self, "data", arr)

    height = RadianceImage.height
    width = RadianceImage.width
    channels = RadianceImage.channels
    shape = RadianceImage.shape


# -- PFM ---------------------------------------------------------------------


def _read_token_line(f) -> str:
    line = f.readline()
    if not line.endswith(b"\n"):
        raise ImageFormatError("truncated header")
    try:
        return line.decode("ascii").strip()
    except UnicodeDecodeError as exc:
        raise ImageFormatError("non-ASCII header") from exc


def write_pfm(image: RadianceImage, path) -> None:
    """Write little-endian PFM; rows are stored bottom-to-top."""
    data = image.data
    magic = b"PF" if image.channels == 3 else b"Pf"
    header = magic + b"\n" + f"{image.width} {image.height}\n".encode() + b"-1.0\n"
    payload = np.flipud(data).astype("<f4").tobytes()
    with open(path, "wb") as f:
        f.write(header)
        f.write(payload)


def read_pfm(path) -> RadianceImage:
    with open(path, "rb") as f:
        magic = _read_token_line(f)
        if magic == "PF":
            channels = 3
        elif magic == "Pf":
            channels = 1
        else:
            raise ImageFormatError(f"bad PFM magic {magic!r}")
        dims = _read_token_line(f).split()
        if len(dims) != 2:
            raise ImageFormatError(f"bad PFM dimensions line {dims!r}")
        try:
            width, height = int(dims[0]), int(dims[1])
            scale = float(_read_token_line(f))
        except ValueError as exc:
            raise ImageFormatError("bad PFM header field") from exc
        if width <= 0 or height <= 0 or scale == 0:
            raise ImageFormatError("bad PFM header values")
        dtype = "<f4" if scale < 0 else ">f4"
        count = width * height * channels
        payload = f.read(4 * count)
    if len(payload) != 4 * count:
        raise ImageFormatError("truncated PFM payload")
    arr = np.frombuffer(payload, dtype=dtype).astype(np.float32)
    arr = np.flipud(arr.reshape(height, width, channels))
    if not np.all(np.isfinite(arr)) or np.any(arr < 0):
        raise ImageFormatError("PFM contains negative or non-finite values")
    return RadianceImage(arr)


# -- PPM ---------------------------------------------------------------------


def quantize8(values) -> np.ndarray:
    """Round-half-up 8-bit quantization of values in [0, 1]."""
    return np.floor(np.asarray(values, dtype=np.float64) * 255.0 + 0.5).astype(np.uint8)


def dequantize8(codes) -> np.ndarray:
    return (np.asarray(codes, dtype=np.float64) / 255.0).astype(np.float32)


def quantize_ldr(image: LdrImage) -> LdrImage:
    """Snap an LDR image onto the 8-bit grid it would have after a PPM round-trip."""
    return LdrImage(dequantize8(quantize8(image.data)))


def _ppm_tokens(f, n):
    tokens = []
    while len(tokens) < n:
        line = f.readline()
        if not line:
            raise ImageFormatError("truncated PPM header")
        line = line.split(b"#", 1)[0]
        tokens.extend(line.split())
    return [t.decode("ascii") for t in tokens]


def write_ppm(image: LdrImage, path) -> None:
    """Binary P6; grayscale images are replicated to RGB."""
    data = image.data
    if image.channels == 1:
        data = np.repeat(data, 3, axis=2)
    codes = quantize8(data)
    with open(path, "wb") as f:
        f.write(f"P6\n{image.width} {image.height}\n255\n".encode())
        f.write(codes.tobytes())


def read_ppm(path) -> LdrImage:
    with open(path, "rb") as f:
        try:
            magic, w, h, maxval = _ppm_tokens(f, 4)
            width, height, maxval = int(w), int(h), int(maxval)
        except ValueError as exc:
            raise ImageFormatError("malformed PPM header") from exc
        if magic != "P6":
            raise ImageFormatError(f"bad PPM magic {magic!r}")
        if maxval != 255:
            raise ImageFormatError(f"unsupported PPM maxval {maxval}")
        if width <= 0 or height <= 0:
            raise ImageFormatError("bad PPM dimensions")
        count = width * height * 3
        payload = f.read(count)
    if len(payload) != count:
        raise ImageFormatError("truncated PPM payload")
    codes = np.frombuffer(payload, dtype=np.uint8).reshape(height, width, 3)
    return LdrImage(dequantize8(codes))


# -- histograms ----------------------------------------------------------------


@dataclass(frozen=True)
class Histogram:
    edges: np.ndarray
    counts: np.ndarray
    scale: str = "linear"

    @property
    def total(self) -> int:
        return int(self.counts.sum())

    def normalized(self) -> np.ndarray:
        return self.counts / max(self.counts.sum(), 1)


def histogram(image, scale: str = "linear", bins: int = 64, value_range=None) -> Histogram:
    """Brightness histogram over all channels.

    For ``scale="log2"`` values are floored at 2**-16 and binned on log2(value);
    ``edges`` are always reported in the value domain. ``value_range`` pins the
    binning interval (in the value domain) so histograms of different images
    share edges.
    """
    if bins < 1:
        raise ValueError("bins must be >= 1")
    values = np.asarray(getattr(image, "data", image), dtype=np.float64).ravel()
    if values.size == 0:
        raise ValueError("empty image")
    if scale == "log2":
        values = np.log2(np.maximum(values, LOG_FLOOR))
        if value_range is not None:
            value_range = tuple(np.log2(np.maximum(value_range, LOG_FLOOR)))
    elif scale != "linear":
        raise ValueError(f"unknown histogram scale {scale!r}")
    if value_range is None:
        lo, hi = float(values.min()), float(values.max())
        if lo == hi:
            lo, hi = lo - 0.5, hi + 0.5
        value_range = (lo, hi)
    counts, edges = np.histogram(values, bins=bins, range=value_range)
    if scale == "log2":
        edges = np.exp2(edges)
    return Histogram(edges=edges, counts=counts.astype(np.int64), scale=scale)


def write_histogram_csv(hist: Histogram, path) -> None:
    with open(path, "w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(["edge_lo", "edge_hi", "count"])
        for lo, hi, c in zip(hist.edges[:-1], hist.edges[1:], hist.counts):
            writer.writerow([repr(float(lo)), repr(float(hi)), int(c)])


def ensure_parent(path) -> None:
    parent = os.path.dirname(os.fspath(path))
    if parent:
        os.makedirs(parent, exist_ok=True)
