"""Weights container: ``weights.json`` manifest plus ``weights.bin`` payload.

The payload is every tensor as little-endian float32, concatenated in
manifest order.
"""

from __future__ import annotations

import json
from collections import OrderedDict
from dataclasses import asdict
from pathlib import Path

import numpy as np

from ..io import atomic_dir
from .unet import UNetConfig, weight_shapes

FORMAT_VERSION = 1

__all__ = ["save_weights", "write_weights", "load_weights", "FORMAT_VERSION"]


def save_weights(path, weights, cfg: UNetConfig, extra: dict | None = None) -> Path:
    """Atomically write a weights directory at ``path``."""
    path = Path(path)
    with atomic_dir(path) as tmp:
        write_weights(tmp, weights, cfg, extra)
    return path


def write_weights(directory, weights, cfg: UNetConfig, extra: dict | None = None) -> None:
    """Write ``weights.json`` and ``weights.bin`` into an existing directory."""
    expected = weight_shapes(cfg)
    if list(expected) != list(weights):
        raise ValueError("weight names do not match the U-Net configuration")
    entries = []
    chunks = []
    offset = 0
    for name, arr in weights.items():
        arr = np.asarray(arr)
        if tuple(arr.shape) != expected[name]:
            raise ValueError(f"{name}: shape {arr.shape} != expected {expected[name]}")
        if not np.isfinite(arr).all():
            raise ValueError(f"{name} contains non-finite values")
        raw = np.ascontiguousarray(arr, dtype="<f4").tobytes()
        entries.append({"name": name, "shape": list(arr.shape), "dtype": "f32",
                        "byte_offset": offset, "byte_length": len(raw)})
        chunks.append(raw)
        offset += len(raw)
    manifest = {"format_version": FORMAT_VERSION, "unet_config": asdict(cfg), "tensors": entries}
    if extra:
        manifest.update(extra)
    directory = Path(directory)
    (directory / "weights.bin").write_bytes(b"".join(chunks))
    (directory / "weights.json").write_text(json.dumps(manifest, indent=2, sort_keys=True))


def load_weights(path):
    """Return ``(OrderedDict name -> float32 array, UNetConfig)``."""
    path = Path(path)
    manifest = json.loads((path / "weights.json").read_text())
    if manifest.get("format_version") != FORMAT_VERSION:
        raise ValueError(f"unsupported weights format {manifest.get('format_version')!r}")
    cfg = UNetConfig(**manifest["unet_config"])
    blob = (path / "weights.bin").read_bytes()
    expected = weight_shapes(cfg)
    weights = OrderedDict()
    for entry in manifest["tensors"]:
        if entry["dtype"] != "f32":
            raise ValueError(f"unsupported dtype {entry['dtype']!r}")
        start, length = entry["byte_offset"], entry["byte_length"]
        if start + length > len(blob):
            raise ValueError(f"{entry['name']} runs past the end of weights.bin")
        arr = np.frombuffer(blob, dtype="<f4", count=length // 4, offset=start)
        weights[entry["name"]] = arr.reshape(entry["shape"]).astype(np.float32)
    if list(weights) != list(expected) or any(
            weights[k].shape != expected[k] for k in expected):
        raise ValueError("weights manifest does not match its U-Net configuration")
    return weights, cfg
