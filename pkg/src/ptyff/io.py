"""On-disk containers: raw little-endian tensors next to a JSON manifest.

Real tensors are float32, complex tensors are interleaved (real, imag)
float32 pairs, integer tensors are int32; all row-major.
"""

from __future__ import annotations

import contextlib
import csv
import json
import os
import shutil
import subprocess
import tempfile
from pathlib import Path

import numpy as np

from .fields import DiffractionDataset, ScanPositions

FORMAT_VERSION = 1

__all__ = [
    "atomic_dir",
    "write_real",
    "read_real",
    "write_complex",
    "read_complex",
    "save_dataset",
    "load_dataset",
    "write_loss_csv",
    "read_loss_csv",
    "build_id",
    "write_manifest",
    "read_manifest",
]


@contextlib.contextmanager
def atomic_dir(path):
    """Yield a scratch directory that replaces ``path`` only on success."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = Path(tempfile.mkdtemp(prefix=f".{path.name}.", dir=path.parent))
    try:
        yield tmp
    except BaseException:
        shutil.rmtree(tmp, ignore_errors=True)
        raise
    old = None
    if path.exists():
        old = path.with_name(f".{path.name}.old.{os.getpid()}")
        os.replace(path, old)
    os.replace(tmp, path)
    if old is not None:
        shutil.rmtree(old, ignore_errors=True)


def write_real(path, arr) -> None:
    Path(path).write_bytes(np.ascontiguousarray(arr, dtype="<f4").tobytes())


def read_real(path, shape) -> np.ndarray:
    data = np.fromfile(path, dtype="<f4")
    if data.size != int(np.prod(shape)):
        raise ValueError(f"{path}: expected {int(np.prod(shape))} values, found {data.size}")
    return data.reshape(shape).astype(np.float64)


def write_complex(path, arr) -> None:
    arr = np.asarray(arr)
    inter = np.stack([arr.real, arr.imag], axis=-1)
    Path(path).write_bytes(np.ascontiguousarray(inter, dtype="<f4").tobytes())


def read_complex(path, shape) -> np.ndarray:
    data = np.fromfile(path, dtype="<f4")
    if data.size != 2 * int(np.prod(shape)):
        raise ValueError(f"{path}: expected {2 * int(np.prod(shape))} values, found {data.size}")
    data = data.reshape(tuple(shape) + (2,)).astype(np.float64)
    return data[..., 0] + 1j * data[..., 1]


def build_id() -> str:
    from . import __version__
    try:
        rev = subprocess.run(["git", "rev-parse", "--short", "HEAD"], capture_output=True,
                             text=True, cwd=Path(__file__).parent, timeout=5)
        if rev.returncode == 0 and rev.stdout.strip():
            return f"{__version__}+g{rev.stdout.strip()}"
    except (OSError, subprocess.SubprocessError):
        pass
    return __version__


def write_manifest(directory, manifest: dict) -> None:
    body = {"format_version": FORMAT_VERSION, **manifest}
    (Path(directory) / "manifest.json").write_text(json.dumps(body, indent=2, sort_keys=True))


def read_manifest(directory) -> dict:
    path = Path(directory) / "manifest.json"
    if not path.is_file():
        raise FileNotFoundError(f"no manifest.json in {directory}")
    manifest = json.loads(path.read_text())
    if manifest.get("format_version") != FORMAT_VERSION:
        raise ValueError(f"{path}: unsupported format_version {manifest.get('format_version')!r}")
    return manifest


def save_dataset(path, data: DiffractionDataset, truth=None, manifest: dict | None = None) -> Path:
    """Write ``manifest.json``, ``patterns.bin``, ``positions.bin`` and, when
    ``truth`` is given, ``truth_object.bin`` / ``truth_probe.bin``."""
    path = Path(path)
    K, h, w = data.patterns.shape
    body = {
        "kind": "dataset",
        "K": K,
        "pattern_shape": [h, w],
        "wavelength": data.wavelength,
        "detector_distance": data.detector_distance,
        "pixel_size": data.pixel_size,
        "meta": data.meta,
    }
    if truth is not None:
        body["truth_object_shape"] = list(truth.object.shape)
        body["truth_probe_shape"] = list(truth.probe.shape)
    body.update(manifest or {})
    with atomic_dir(path) as tmp:
        write_real(tmp / "patterns.bin", data.patterns)
        pos = np.ascontiguousarray(data.positions.positions, dtype="<i4")
        (tmp / "positions.bin").write_bytes(pos.tobytes())
        if truth is not None:
            write_complex(tmp / "truth_object.bin", truth.object)
            write_complex(tmp / "truth_probe.bin", truth.probe)
        write_manifest(tmp, body)
    return path


def load_dataset(path):
    """Return ``(DiffractionDataset, truth or None, manifest)``."""
    from .simkit import GroundTruth

    path = Path(path)
    m = read_manifest(path)
    if m.get("kind") != "dataset":
        raise ValueError(f"{path} is not a dataset container")
    K = int(m["K"])
    h, w = m["pattern_shape"]
    patterns = read_real(path / "patterns.bin", (K, h, w))
    pos = np.fromfile(path / "positions.bin", dtype="<i4")
    if pos.size != 2 * K:
        raise ValueError(f"{path}/positions.bin: expected {2 * K} values, found {pos.size}")
    data = DiffractionDataset(
        patterns=patterns,
        positions=ScanPositions(pos.reshape(K, 2).astype(np.int64)),
        wavelength=m["wavelength"],
        detector_distance=m["detector_distance"],
        pixel_size=m["pixel_size"],
        meta=m.get("meta", {}),
    )
    truth = None
    if (path / "truth_object.bin").exists() and "truth_object_shape" in m:
        truth = GroundTruth(
            read_complex(path / "truth_object.bin", m["truth_object_shape"]),
            read_complex(path / "truth_probe.bin", m["truth_probe_shape"]),
        )
    return data, truth, m


def write_loss_csv(path, rows) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["iteration", "amplitude_mse", "poisson_nll"])
        for it, mse, nll in rows:
            writer.writerow([int(it), repr(float(mse)), repr(float(nll))])


def read_loss_csv(path) -> list[tuple[int, float, float]]:
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        return [(int(r["iteration"]), float(r["amplitude_mse"]), float(r["poisson_nll"]))
                for r in reader]
