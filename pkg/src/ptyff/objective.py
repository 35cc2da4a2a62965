"""Amplitude-MSE data term, Poisson NLL metric, and analytic gradients.

Gradients are returned as ``dL/dRe + i dL/dIm`` (the conjugate Wirtinger
derivative times two), which is the steepest-ascent direction when complex
parameters are treated as pairs of real numbers.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from typing import NamedTuple

import numpy as np

from .fields import NonFiniteError, fft2_unitary, ifft2_unitary
from .forward import PhysicsConfig, _gather, fresnel_transfer, propagate_probe

__all__ = [
    "GradientPair",
    "amplitude_mse",
    "poisson_nll",
    "loss_and_gradients",
]


class GradientPair(NamedTuple):
    d_object: np.ndarray
    d_probe: np.ndarray


def _check_intensities(predicted, measured):
    predicted = np.asarray(predicted, dtype=np.float64)
    measured = np.asarray(measured, dtype=np.float64)
    if predicted.shape != measured.shape:
        raise ValueError(f"shape mismatch: predicted {predicted.shape} vs measured {measured.shape}")
    if (measured < 0).any():
        raise ValueError("measured intensities must be nonnegative")
    if (predicted < 0).any():
        raise ValueError("predicted intensities must be nonnegative")
    if predicted.ndim == 2:
        predicted, measured = predicted[None], measured[None]
    return predicted, measured


def amplitude_mse(predicted, measured) -> float:
    """(1/K) sum_k ||sqrt(I_k) - sqrt(I_k^exp)||^2 over a ``(K, h, w)`` stack."""
    predicted, measured = _check_intensities(predicted, measured)
    diff = np.sqrt(predicted) - np.sqrt(measured)
    return float(np.sum(diff * diff) / predicted.shape[0])


def poisson_nll(predicted, measured, floor: float = 1e-12) -> float:
    """sum (I - I^exp * ln max(I, floor)); evaluation metric only."""
    if not floor > 0:
        raise ValueError("floor must be positive")
    predicted, measured = _check_intensities(predicted, measured)
    return float(np.sum(predicted - measured * np.log(np.maximum(predicted, floor))))


def _partial(modes, obj, amplitudes, pos, K_total, eps_amp):
    """Loss and gradient contributions for one chunk of scan positions.

    ``modes`` are sample-plane probe modes; the probe gradient returned is
    also in the sample plane.
    """
    h, w = modes.shape[-2:]
    patches = _gather(obj, pos, (h, w))                    # (k, h, w)
    waves = patches[:, None] * modes[None]                # (k, M, h, w)
    fourier = fft2_unitary(waves)
    model_amp = np.sqrt(np.sum(fourier.real ** 2 + fourier.imag ** 2, axis=1))
    resid = model_amp - amplitudes
    loss = float(np.sum(resid * resid)) / K_total

    ratio = amplitudes / np.maximum(model_amp, eps_amp)
    chi = (2.0 / K_total) * (1.0 - ratio)[:, None] * fourier
    g = ifft2_unitary(chi)                                # (k, M, h, w)

    d_probe = np.sum(np.conj(patches)[:, None] * g, axis=0)
    obj_terms = np.sum(np.conj(modes)[None] * g, axis=1)  # (k, h, w)
    d_obj = np.zeros_like(obj)
    for k in range(pos.shape[0]):
        r, c = pos[k]
        d_obj[r:r + h, c:c + w] += obj_terms[k]
    return loss, d_obj, d_probe


def loss_and_gradients(probe, obj, patterns, positions, batch, physics: PhysicsConfig,
                       eps_amp: float = 1e-8, workers: int = 1,
                       kernel: np.ndarray | None = None, context: str = ""):
    """Amplitude-MSE over ``batch`` and its gradients w.r.t. object and probe.

    ``probe`` is the reference-plane ``(M, h, w)`` array; it is propagated to
    the sample plane internally and the probe gradient is pulled back through
    the conjugate Fresnel kernel. ``patterns``/``positions`` are the full
    dataset arrays and ``batch`` selects rows. With ``workers > 1`` the batch
    is split into contiguous chunks whose partial gradients are summed in
    chunk order.

    Returns ``(loss, GradientPair)``.
    """
    batch = np.asarray(batch, dtype=np.int64).ravel()
    if batch.size == 0:
        raise ValueError("empty minibatch")
    if not eps_amp > 0:
        raise ValueError("eps_amp must be positive")
    modes = np.asarray(probe, dtype=np.complex128)
    if modes.ndim == 2:
        modes = modes[None]
    obj = np.asarray(obj, dtype=np.complex128)
    pos_all = np.asarray(getattr(positions, "positions", positions), dtype=np.int64)
    pos = pos_all[batch]
    h, w = modes.shape[-2:]
    H, W = obj.shape
    if (pos[:, 0] > H - h).any() or (pos[:, 1] > W - w).any() or (pos < 0).any():
        raise ValueError(f"a {h}x{w} footprint falls outside the {H}x{W} object")
    amplitudes = np.sqrt(np.asarray(patterns, dtype=np.float64)[batch])

    use_fresnel = physics.fresnel_distance != 0
    if use_fresnel and kernel is None:
        kernel = fresnel_transfer((h, w), physics)
    sample_modes = propagate_probe(modes, physics, kernel) if use_fresnel else modes

    K = batch.size
    if workers <= 1 or K < 2:
        loss, d_obj, d_probe = _partial(sample_modes, obj, amplitudes, pos, K, eps_amp)
    else:
        chunks = np.array_split(np.arange(K), min(workers, K))
        with ThreadPoolExecutor(max_workers=len(chunks)) as pool:
            parts = list(pool.map(
                lambda idx: _partial(sample_modes, obj, amplitudes[idx], pos[idx], K, eps_amp),
                chunks,
            ))
        loss = sum(p[0] for p in parts)
        d_obj = parts[0][1]
        d_probe = parts[0][2]
        for _, o, p in parts[1:]:
            d_obj = d_obj + o
            d_probe = d_probe + p

    if use_fresnel:
        d_probe = propagate_probe(d_probe, physics, kernel, adjoint=True)

    if not np.isfinite(loss) or not np.isfinite(d_obj).all() or not np.isfinite(d_probe).all():
        raise NonFiniteError(f"non-finite loss or gradient{(' ' + context) if context else ''}")
    return loss, GradientPair(d_obj, d_probe)
