"""Ptychographic forward model: Fresnel probe propagation, exit waves and
multi-mode far-field intensities."""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .fields import fft2_unitary, ifft2_unitary, ProbeStack

__all__ = [
    "PhysicsConfig",
    "frequency_grid",
    "fresnel_transfer",
    "propagate_probe",
    "exit_waves",
    "predict_intensity",
    "model_intensity",
]


@dataclass(frozen=True)
class PhysicsConfig:
    wavelength: float = 1e-9
    fresnel_distance: float = 25e-6
    pixel_size: float = 1e-8
    mode_count: int = 3

    def __post_init__(self):
        if not self.wavelength > 0:
            raise ValueError(f"wavelength must be positive, got {self.wavelength}")
        if not self.pixel_size > 0:
            raise ValueError(f"pixel_size must be positive, got {self.pixel_size}")
        if self.mode_count < 1:
            raise ValueError(f"mode_count must be >= 1, got {self.mode_count}")


def frequency_grid(shape, pixel_size):
    """Centered spatial-frequency axes (1/m) for an ``(h, w)`` grid."""
    h, w = shape
    qy = np.fft.fftshift(np.fft.fftfreq(h, d=pixel_size))
    qx = np.fft.fftshift(np.fft.fftfreq(w, d=pixel_size))
    return qy, qx


@lru_cache(maxsize=32)
def _transfer(h, w, wavelength, z, pixel_size):
    qy, qx = frequency_grid((h, w), pixel_size)
    q2 = qy[:, None] ** 2 + qx[None, :] ** 2
    kernel = np.exp(-1j * np.pi * wavelength * z * q2)
    kernel.setflags(write=False)
    return kernel


def fresnel_transfer(shape, physics: PhysicsConfig) -> np.ndarray:
    """Unit-modulus transfer kernel exp(-i pi lambda z |q|^2) on the centered grid."""
    if not physics.pixel_size > 0:
        raise ValueError("pixel_size must be positive")
    h, w = (int(s) for s in shape)
    return _transfer(h, w, float(physics.wavelength), float(physics.fresnel_distance),
                     float(physics.pixel_size))


def _apply_kernel(modes: np.ndarray, kernel: np.ndarray) -> np.ndarray:
    if kernel.shape != modes.shape[-2:]:
        raise ValueError(f"kernel shape {kernel.shape} does not match probe {modes.shape[-2:]}")
    return ifft2_unitary(kernel * fft2_unitary(modes))


def propagate_probe(probe, physics: PhysicsConfig, kernel: np.ndarray | None = None,
                    adjoint: bool = False):
    """Propagate every probe mode by the configured Fresnel distance.

    ``adjoint=True`` applies the conjugate kernel, i.e. propagation by ``-z``,
    which is also the adjoint used to pull gradients back.
    """
    modes = probe.modes if isinstance(probe, ProbeStack) else np.asarray(probe)
    if kernel is None:
        if physics.fresnel_distance == 0:
            out = modes.copy()
            return ProbeStack(out) if isinstance(probe, ProbeStack) else out
        kernel = fresnel_transfer(modes.shape[-2:], physics)
    out = _apply_kernel(modes, np.conj(kernel) if adjoint else kernel)
    return ProbeStack(out) if isinstance(probe, ProbeStack) else out


def exit_waves(probe, obj, positions) -> np.ndarray:
    """Exit waves ``P_m(r) * O(r - R_k)`` with shape ``(K, M, h, w)``."""
    modes = probe.modes if isinstance(probe, ProbeStack) else np.asarray(probe)
    if modes.ndim == 2:
        modes = modes[None]
    o = np.asarray(obj)
    pos = np.asarray(getattr(positions, "positions", positions), dtype=np.int64).reshape(-1, 2)
    h, w = modes.shape[-2:]
    H, W = o.shape
    if (pos < 0).any() or (pos[:, 0] > H - h).any() or (pos[:, 1] > W - w).any():
        raise ValueError(f"a {h}x{w} footprint falls outside the {H}x{W} object")
    patches = _gather(o, pos, (h, w))
    return patches[:, None] * modes[None]


def _gather(o: np.ndarray, pos: np.ndarray, shape) -> np.ndarray:
    h, w = shape
    rows = pos[:, 0, None, None] + np.arange(h)[None, :, None]
    cols = pos[:, 1, None, None] + np.arange(w)[None, None, :]
    return o[rows, cols]


def predict_intensity(waves: np.ndarray, return_fourier: bool = False):
    """Incoherent sum over modes of |F{psi}|^2, shape ``(K, h, w)``."""
    fourier = fft2_unitary(waves)
    intensity = np.sum(fourier.real ** 2 + fourier.imag ** 2, axis=-3)
    if return_fourier:
        return intensity, fourier
    return intensity


def model_intensity(probe_ref, obj, positions, physics: PhysicsConfig,
                    kernel: np.ndarray | None = None) -> np.ndarray:
    """Full chain: reference-plane probe -> sample plane -> intensities."""
    sample_probe = propagate_probe(probe_ref, physics, kernel)
    return predict_intensity(exit_waves(sample_probe, obj, positions))
