"""Complex field containers, centered unitary FFTs and patch gather/scatter.

Every transform here uses the same convention: zero frequency sits at the
array center (``n // 2`` along each axis) and both directions carry a
``1/sqrt(H*W)`` factor, so the forward transform is unitary and its inverse
is also its adjoint.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "NonFiniteError",
    "ComplexGrid",
    "ProbeStack",
    "ScanPositions",
    "DiffractionDataset",
    "check_finite",
    "fft2_unitary",
    "ifft2_unitary",
    "extract_patch",
    "accumulate_patch",
    "vdot",
]


class NonFiniteError(ValueError):
    """Raised when an array that must be finite contains NaN or Inf."""


def check_finite(arr: np.ndarray, what: str = "array") -> None:
    finite = np.isfinite(arr)
    if not finite.all():
        idx = tuple(int(i) for i in np.argwhere(~finite)[0])
        raise NonFiniteError(f"{what} has non-finite value {arr[idx]!r} at index {idx}")


@dataclass(frozen=True)
class ComplexGrid:
    """2-D complex field with an optional physical pixel pitch (meters)."""

    data: np.ndarray
    pitch: float = 0.0

    def __post_init__(self):
        data = np.asarray(self.data, dtype=np.complex128)
        if data.ndim != 2 or min(data.shape) < 1:
            raise ValueError(f"ComplexGrid needs a non-empty 2-D array, got shape {data.shape}")
        check_finite(data, "ComplexGrid")
        object.__setattr__(self, "data", data)

    @property
    def shape(self) -> tuple[int, int]:
        return self.data.shape

    def __array__(self, dtype=None, copy=None):
        return self.data if dtype is None else self.data.astype(dtype)


@dataclass(frozen=True)
class ProbeStack:
    """M mutually incoherent probe modes stored as one ``(M, h, w)`` array."""

    modes: np.ndarray

    def __post_init__(self):
        modes = np.asarray(self.modes, dtype=np.complex128)
        if modes.ndim == 2:
            modes = modes[None]
        if modes.ndim != 3 or modes.shape[0] < 1:
            raise ValueError(f"probe modes must have shape (M, h, w), got {modes.shape}")
        check_finite(modes, "ProbeStack")
        object.__setattr__(self, "modes", modes)

    @property
    def mode_count(self) -> int:
        return self.modes.shape[0]

    @property
    def shape(self) -> tuple[int, int]:
        return self.modes.shape[1:]

    def power(self) -> np.ndarray:
        return np.sum(np.abs(self.modes) ** 2, axis=(1, 2))


@dataclass(frozen=True)
class ScanPositions:
    """K integer (row, col) offsets of the probe footprint's top-left corner."""

    positions: np.ndarray

    def __post_init__(self):
        pos = np.asarray(self.positions)
        if pos.ndim != 2 or pos.shape[1] != 2:
            raise ValueError(f"positions must have shape (K, 2), got {pos.shape}")
        if not np.issubdtype(pos.dtype, np.integer):
            if not np.all(pos == np.round(pos)):
                raise ValueError("scan positions must be integer pixel offsets")
        pos = pos.astype(np.int64)
        if (pos < 0).any():
            raise ValueError("scan positions must be nonnegative")
        object.__setattr__(self, "positions", pos)

    def __len__(self) -> int:
        return self.positions.shape[0]

    def check_inside(self, object_shape, probe_shape) -> None:
        H, W = object_shape
        h, w = probe_shape
        bad = (self.positions[:, 0] > H - h) | (self.positions[:, 1] > W - w)
        if bad.any():
            k = int(np.argmax(bad))
            raise ValueError(
                f"scan position {k} {tuple(self.positions[k])} puts a {h}x{w} footprint "
                f"outside the {H}x{W} object"
            )

    def extent(self, probe_shape) -> tuple[int, int]:
        """Smallest frame (rows, cols) holding every footprint."""
        h, w = probe_shape
        return int(self.positions[:, 0].max()) + h, int(self.positions[:, 1].max()) + w


@dataclass(frozen=True)
class DiffractionDataset:
    """Measured intensities plus scan geometry.

    ``patterns`` has shape ``(K, h, w)``, photon counts with the zero
    frequency at the array center.
    """

    patterns: np.ndarray
    positions: ScanPositions
    wavelength: float
    detector_distance: float
    pixel_size: float
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        patterns = np.asarray(self.patterns, dtype=np.float64)
        if patterns.ndim != 3:
            raise ValueError(f"patterns must have shape (K, h, w), got {patterns.shape}")
        positions = self.positions
        if not isinstance(positions, ScanPositions):
            positions = ScanPositions(positions)
        if patterns.shape[0] < 1 or patterns.shape[0] != len(positions):
            raise ValueError(
                f"{patterns.shape[0]} patterns but {len(positions)} scan positions"
            )
        check_finite(patterns, "patterns")
        if (patterns < 0).any():
            idx = tuple(int(i) for i in np.argwhere(patterns < 0)[0])
            raise ValueError(f"negative measured intensity at index {idx}")
        object.__setattr__(self, "patterns", patterns)
        object.__setattr__(self, "positions", positions)

    @property
    def K(self) -> int:
        return self.patterns.shape[0]

    @property
    def probe_shape(self) -> tuple[int, int]:
        return self.patterns.shape[1:]


def _raw(g) -> np.ndarray:
    return g.data if isinstance(g, ComplexGrid) else np.asarray(g)


def _rewrap(like, out: np.ndarray):
    return ComplexGrid(out, like.pitch) if isinstance(like, ComplexGrid) else out


def fft2_unitary(g):
    """Centered, unitary 2-D DFT over the last two axes.

    Accepts a :class:`ComplexGrid` (returned as one) or any array whose last
    two axes are the grid; leading axes are batched.
    """
    a = _raw(g)
    check_finite(a, "fft2 input")
    out = np.fft.fftshift(
        np.fft.fft2(np.fft.ifftshift(a, axes=(-2, -1)), norm="ortho"), axes=(-2, -1)
    )
    return _rewrap(g, out)


def ifft2_unitary(g):
    """Inverse (and adjoint) of :func:`fft2_unitary`."""
    a = _raw(g)
    check_finite(a, "ifft2 input")
    out = np.fft.fftshift(
        np.fft.ifft2(np.fft.ifftshift(a, axes=(-2, -1)), norm="ortho"), axes=(-2, -1)
    )
    return _rewrap(g, out)


def _footprint(obj_shape, pos, shape) -> tuple[slice, slice]:
    r, c = int(pos[0]), int(pos[1])
    h, w = shape
    H, W = obj_shape[-2:]
    if r < 0 or c < 0 or r + h > H or c + w > W:
        raise ValueError(
            f"footprint {h}x{w} at {(r, c)} falls outside the {H}x{W} object "
            "(corrupt scan positions?)"
        )
    return slice(r, r + h), slice(c, c + w)


def extract_patch(obj, pos, shape):
    """Copy of the ``shape`` window whose top-left corner is ``pos``."""
    a = _raw(obj)
    rows, cols = _footprint(a.shape, pos, shape)
    return _rewrap(obj, a[..., rows, cols].copy())


def accumulate_patch(obj_grad, pos, patch):
    """Add ``patch`` into ``obj_grad`` at ``pos`` in place and return it.

    ComplexGrid targets are immutable, so for those a new grid is returned.
    """
    p = _raw(patch)
    if isinstance(obj_grad, ComplexGrid):
        target = obj_grad.data.copy()
    else:
        target = obj_grad
    rows, cols = _footprint(target.shape, pos, p.shape[-2:])
    target[..., rows, cols] += p
    return _rewrap(obj_grad, target)


def vdot(a, b) -> complex:
    """Inner product <a, b> = sum(conj(a) * b) over all elements."""
    return complex(np.vdot(_raw(a).ravel(), _raw(b).ravel()))
