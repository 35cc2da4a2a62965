"""Complex-object wrappers around the U-Net."""

from __future__ import annotations

import numpy as np

from .unet import UNetConfig, unet_forward

__all__ = [
    "complex_to_channels",
    "channels_to_complex",
    "rms_amplitude",
    "ff_apply",
    "IdentityOperator",
    "UNetOperator",
]


def complex_to_channels(obj) -> np.ndarray:
    """(..., H, W) complex -> (..., 2, H, W) real; channel 0 real, 1 imaginary."""
    obj = np.asarray(obj)
    return np.stack([obj.real, obj.imag], axis=-3)


def channels_to_complex(x) -> np.ndarray:
    x = np.asarray(x)
    if x.shape[-3] != 2:
        raise ValueError(f"expected 2 channels on axis -3, got shape {x.shape}")
    return x[..., 0, :, :] + 1j * x[..., 1, :, :]


def rms_amplitude(obj, floor: float = 1e-12) -> float:
    s = float(np.sqrt(np.mean(np.abs(obj) ** 2)))
    return s if s >= floor else 1.0


def ff_apply(obj, weights, cfg: UNetConfig, dtype=np.float64) -> np.ndarray:
    """Run the network on a complex object of any size.

    The object is divided by its RMS amplitude, reflect-padded up to a
    multiple of ``2**depth``, passed through the network, cropped and
    rescaled, so ``ff_apply(c * obj) == c * ff_apply(obj)`` for ``c > 0``.
    """
    obj = np.asarray(obj, dtype=np.complex128)
    s = rms_amplitude(obj)
    H, W = obj.shape
    d = cfg.divisor
    ph, pw = (-H) % d, (-W) % d
    x = complex_to_channels(obj / s)
    if ph or pw:
        mode = "reflect" if ph < H and pw < W else "symmetric"
        x = np.pad(x, ((0, 0), (ph // 2, ph - ph // 2), (pw // 2, pw - pw // 2)), mode=mode)
    w = {k: np.asarray(v, dtype=dtype) for k, v in weights.items()}
    y = unet_forward(x, w, cfg)
    y = y[:, ph // 2:ph // 2 + H, pw // 2:pw // 2 + W]
    return s * channels_to_complex(y).astype(np.complex128)


class IdentityOperator:
    def __call__(self, obj):
        return np.array(obj, dtype=np.complex128, copy=True)


class UNetOperator:
    """Callable fast-forward operator backed by stored weights."""

    def __init__(self, weights, cfg: UNetConfig):
        self.weights = weights
        self.cfg = cfg

    def __call__(self, obj):
        return ff_apply(obj, self.weights, self.cfg)

    @classmethod
    def load(cls, path) -> "UNetOperator":
        from .weights import load_weights
        weights, cfg = load_weights(path)
        return cls(weights, cfg)
