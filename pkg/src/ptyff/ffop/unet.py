"""A small U-Net written directly in numpy, with a hand-derived backward pass.

Activations are kept channels-last ``(N, H, W, C)`` internally; the public
functions take and return channels-first ``(N, C, H, W)`` (or ``(C, H, W)``)
arrays. Weight layouts follow the usual deep-learning conventions:
convolutions ``(C_out, C_in, k, k)``, transposed convolutions
``(C_in, C_out, 2, 2)``.
"""

from __future__ import annotations

from collections import OrderedDict
from dataclasses import dataclass

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

__all__ = [
    "UNetConfig",
    "OperatorWeights",
    "weight_shapes",
    "init_weights",
    "unet_forward",
    "unet_backward",
]

OperatorWeights = "OrderedDict[str, np.ndarray]"


@dataclass(frozen=True)
class UNetConfig:
    c_in: int = 2
    c_out: int = 2
    c_base: int = 8
    depth: int = 2
    growth: float = 2.0

    def __post_init__(self):
        if self.c_in != 2 or self.c_out != 2:
            raise ValueError("complex objects map to exactly 2 input and 2 output channels")
        if self.depth < 1 or self.c_base < 1 or self.growth < 1:
            raise ValueError("need depth >= 1, c_base >= 1, growth >= 1")

    def channels(self, level: int) -> int:
        return max(1, int(round(self.c_base * self.growth ** level)))

    @property
    def divisor(self) -> int:
        return 2 ** self.depth

    @classmethod
    def full_scale(cls) -> "UNetConfig":
        return cls(c_base=64, depth=4, growth=2.0)


def weight_shapes(cfg: UNetConfig) -> "OrderedDict[str, tuple[int, ...]]":
    """Every tensor name and shape, in forward (topological) order."""
    shapes: OrderedDict[str, tuple[int, ...]] = OrderedDict()

    def double(prefix, cin, cout):
        shapes[f"{prefix}.conv1.weight"] = (cout, cin, 3, 3)
        shapes[f"{prefix}.conv1.bias"] = (cout,)
        shapes[f"{prefix}.conv2.weight"] = (cout, cout, 3, 3)
        shapes[f"{prefix}.conv2.bias"] = (cout,)

    cin = cfg.c_in
    for level in range(cfg.depth):
        double(f"enc{level}", cin, cfg.channels(level))
        cin = cfg.channels(level)
    double("bottleneck", cin, cfg.channels(cfg.depth))
    for level in reversed(range(cfg.depth)):
        c_up, c_skip = cfg.channels(level + 1), cfg.channels(level)
        shapes[f"dec{level}.up.weight"] = (c_up, c_skip, 2, 2)
        shapes[f"dec{level}.up.bias"] = (c_skip,)
        double(f"dec{level}", 2 * c_skip, c_skip)
    shapes["head.weight"] = (cfg.c_out, cfg.channels(0), 1, 1)
    shapes["head.bias"] = (cfg.c_out,)
    return shapes


def init_weights(cfg: UNetConfig, seed: int = 0, dtype=np.float32):
    """Uniform(-b, b) kernels with b = sqrt(6 / fan_in); zero biases."""
    rng = np.random.default_rng(seed)
    weights = OrderedDict()
    for name, shape in weight_shapes(cfg).items():
        if name.endswith(".bias"):
            weights[name] = np.zeros(shape, dtype=dtype)
            continue
        if ".up." in name:
            fan_in = shape[0]
        else:
            fan_in = shape[1] * shape[2] * shape[3]
        bound = np.sqrt(6.0 / fan_in)
        weights[name] = rng.uniform(-bound, bound, size=shape).astype(dtype)
    return weights


# -- layers ---------------------------------------------------------------

def _conv3x3(x, w, b):
    n, hh, ww, c = x.shape
    xp = np.pad(x, ((0, 0), (1, 1), (1, 1), (0, 0)))
    cols = sliding_window_view(xp, (3, 3), axis=(1, 2)).reshape(n * hh * ww, c * 9)
    y = cols @ w.reshape(w.shape[0], -1).T + b
    return y.reshape(n, hh, ww, w.shape[0]), cols


def _conv3x3_back(dy, cols, x_shape, w):
    n, hh, ww, c = x_shape
    dyf = dy.reshape(-1, w.shape[0])
    dw = (dyf.T @ cols).reshape(w.shape)
    db = dyf.sum(axis=0)
    dcols = (dyf @ w.reshape(w.shape[0], -1)).reshape(n, hh, ww, c, 3, 3)
    dxp = np.zeros((n, hh + 2, ww + 2, c), dtype=dy.dtype)
    for a in range(3):
        for bb in range(3):
            dxp[:, a:a + hh, bb:bb + ww, :] += dcols[..., a, bb]
    return dxp[:, 1:-1, 1:-1, :], dw, db


def _conv1x1(x, w, b):
    return x @ w[:, :, 0, 0].T + b


def _conv1x1_back(dy, x, w):
    c_out = w.shape[0]
    dyf = dy.reshape(-1, c_out)
    dw = (dyf.T @ x.reshape(-1, x.shape[-1]))[:, :, None, None]
    return dy @ w[:, :, 0, 0], dw, dyf.sum(axis=0)


def _pool(x):
    n, hh, ww, c = x.shape
    blocks = x.reshape(n, hh // 2, 2, ww // 2, 2, c).transpose(0, 1, 3, 5, 2, 4)
    blocks = blocks.reshape(n, hh // 2, ww // 2, c, 4)
    idx = np.argmax(blocks, axis=-1)
    return np.take_along_axis(blocks, idx[..., None], axis=-1)[..., 0], idx


def _pool_back(dy, idx, x_shape):
    n, hh, ww, c = x_shape
    grad = np.zeros(dy.shape + (4,), dtype=dy.dtype)
    np.put_along_axis(grad, idx[..., None], dy[..., None], axis=-1)
    grad = grad.reshape(n, hh // 2, ww // 2, c, 2, 2).transpose(0, 1, 4, 2, 5, 3)
    return grad.reshape(x_shape)


def _upconv(x, w, b):
    n, hh, ww, cin = x.shape
    cout = w.shape[1]
    y = (x.reshape(-1, cin) @ w.reshape(cin, cout * 4)).reshape(n, hh, ww, cout, 2, 2)
    y = y.transpose(0, 1, 4, 2, 5, 3).reshape(n, 2 * hh, 2 * ww, cout)
    return y + b


def _upconv_back(dy, x, w):
    n, hh, ww, cin = x.shape
    cout = w.shape[1]
    dyr = dy.reshape(n, hh, 2, ww, 2, cout).transpose(0, 1, 3, 5, 2, 4).reshape(-1, cout * 4)
    x2 = x.reshape(-1, cin)
    dw = (x2.T @ dyr).reshape(w.shape)
    dx = (dyr @ w.reshape(cin, cout * 4).T).reshape(x.shape)
    return dx, dw, dy.reshape(-1, cout).sum(axis=0)


# -- network --------------------------------------------------------------

def _to_nhwc(x):
    x = np.asarray(x)
    single = x.ndim == 3
    if single:
        x = x[None]
    if x.ndim != 4:
        raise ValueError(f"expected (C, H, W) or (N, C, H, W) input, got shape {x.shape}")
    return np.ascontiguousarray(x.transpose(0, 2, 3, 1)), single


def _double(x, weights, prefix, tape):
    for conv in ("conv1", "conv2"):
        w, b = weights[f"{prefix}.{conv}.weight"], weights[f"{prefix}.{conv}.bias"]
        z, cols = _conv3x3(x, w, b)
        tape.append(("conv3", f"{prefix}.{conv}", cols, x.shape))
        x = np.maximum(z, 0)
        tape.append(("relu", z > 0))
    return x


def unet_forward(x, weights, cfg: UNetConfig, cache: dict | None = None):
    """Apply the network to ``x`` of shape ``(2, H, W)`` or ``(N, 2, H, W)``.

    H and W must be divisible by ``2**depth``. Computation runs in the dtype
    of the weights. Pass an empty dict as ``cache`` to keep what
    :func:`unet_backward` needs.
    """
    dtype = next(iter(weights.values())).dtype
    h, nhwc_single = _to_nhwc(np.asarray(x, dtype=dtype))
    n, hh, ww, c = h.shape
    d = cfg.divisor
    if hh % d or ww % d:
        raise ValueError(f"input size {hh}x{ww} must be divisible by {d} (2**depth)")
    if c != cfg.c_in:
        raise ValueError(f"expected {cfg.c_in} input channels, got {c}")

    tape: list = []
    skips = []
    for level in range(cfg.depth):
        h = _double(h, weights, f"enc{level}", tape)
        skips.append(h)
        pooled, idx = _pool(h)
        tape.append(("pool", idx, h.shape, level))
        h = pooled
    h = _double(h, weights, "bottleneck", tape)
    for level in reversed(range(cfg.depth)):
        w, b = weights[f"dec{level}.up.weight"], weights[f"dec{level}.up.bias"]
        tape.append(("up", f"dec{level}.up", h))
        h = _upconv(h, w, b)
        skip = skips[level]
        tape.append(("cat", level, skip.shape[-1]))
        h = np.concatenate([skip, h], axis=-1)
        h = _double(h, weights, f"dec{level}", tape)
    tape.append(("head", "head", h))
    y = _conv1x1(h, weights["head.weight"], weights["head.bias"])
    if cache is not None:
        cache.clear()
        cache.update(tape=tape, weights=weights, cfg=cfg, single=nhwc_single, dtype=dtype)
    y = y.transpose(0, 3, 1, 2)
    return y[0] if nhwc_single else y


def unet_backward(cache: dict | None, upstream):
    """Reverse-mode pass through the cached forward evaluation.

    Returns ``(input_grad, weight_grads)`` with ``weight_grads`` ordered like
    the weights.
    """
    if not cache or "tape" not in cache:
        raise RuntimeError("unet_backward needs the cache filled by a prior unet_forward call")
    weights, cfg = cache["weights"], cache["cfg"]
    g, _ = _to_nhwc(np.asarray(upstream, dtype=cache["dtype"]))
    grads: dict[str, np.ndarray] = {}
    skip_grads: dict[int, np.ndarray] = {}

    for entry in reversed(cache["tape"]):
        kind = entry[0]
        if kind == "head":
            _, name, x = entry
            g, grads[f"{name}.weight"], grads[f"{name}.bias"] = _conv1x1_back(
                g, x, weights[f"{name}.weight"])
        elif kind == "relu":
            g = g * entry[1]
        elif kind == "conv3":
            _, name, cols, x_shape = entry
            g, grads[f"{name}.weight"], grads[f"{name}.bias"] = _conv3x3_back(
                g, cols, x_shape, weights[f"{name}.weight"])
        elif kind == "cat":
            _, level, c_skip = entry
            skip_grads[level] = g[..., :c_skip]
            g = g[..., c_skip:]
        elif kind == "up":
            _, name, x = entry
            g, grads[f"{name}.weight"], grads[f"{name}.bias"] = _upconv_back(
                g, x, weights[f"{name}.weight"])
        elif kind == "pool":
            _, idx, x_shape, level = entry
            # the pre-pool tensor also feeds the decoder skip at this level
            g = _pool_back(g, idx, x_shape) + skip_grads.pop(level)
    ordered = OrderedDict((name, grads[name]) for name in weights)
    dx = g.transpose(0, 3, 1, 2)
    return (dx[0] if cache["single"] else dx), ordered
