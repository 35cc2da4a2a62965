"""Adam over complex parameters, a step learning-rate schedule and
minibatch planning."""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

__all__ = ["AdamState", "LrSchedule", "adam_init", "adam_step", "lr_at", "minibatch_plan"]


@dataclass(frozen=True)
class AdamState:
    """Moments live on the real view of the parameter (re/im interleaved),
    so complex entries get two independent real channels."""

    m1: np.ndarray
    m2: np.ndarray
    step_count: int = 0
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8


def _real_view(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a)
    if np.iscomplexobj(a):
        return a.view(a.real.dtype)
    return a


def adam_init(param: np.ndarray, beta1=0.9, beta2=0.999, eps=1e-8) -> AdamState:
    shape = _real_view(param).shape
    dtype = _real_view(param).dtype
    return AdamState(np.zeros(shape, dtype), np.zeros(shape, dtype), 0, beta1, beta2, eps)


def adam_step(param: np.ndarray, grad: np.ndarray, state: AdamState, lr: float):
    """One bias-corrected Adam step; returns ``(new_param, new_state)``."""
    if not lr > 0:
        raise ValueError(f"learning rate must be positive, got {lr}")
    p = _real_view(np.array(param, copy=True))
    g = _real_view(np.asarray(grad, dtype=np.asarray(param).dtype))
    if g.shape != p.shape or state.m1.shape != p.shape:
        raise ValueError(
            f"shape mismatch: param {np.shape(param)}, grad {np.shape(grad)}, "
            f"moments {state.m1.shape}"
        )
    b1, b2 = state.beta1, state.beta2
    t = state.step_count + 1
    m1 = b1 * state.m1 + (1.0 - b1) * g
    m2 = b2 * state.m2 + (1.0 - b2) * (g * g)
    m1_hat = m1 / (1.0 - b1 ** t)
    m2_hat = m2 / (1.0 - b2 ** t)
    p -= lr * m1_hat / (np.sqrt(m2_hat) + state.eps)
    new_param = p.view(np.asarray(param).dtype).reshape(np.shape(param))
    return new_param, replace(state, m1=m1, m2=m2, step_count=t)


@dataclass(frozen=True)
class LrSchedule:
    base_lr: float = 0.005
    step_size: int = 50
    decay: float = 0.2

    def __post_init__(self):
        if not self.base_lr > 0:
            raise ValueError("base_lr must be positive")
        if self.step_size < 1:
            raise ValueError("step_size must be >= 1")
        if not 0 < self.decay <= 1:
            raise ValueError("decay must lie in (0, 1]")


def lr_at(schedule: LrSchedule, iteration: int) -> float:
    if iteration < 0:
        raise ValueError("iteration must be >= 0")
    return schedule.base_lr * schedule.decay ** (iteration // schedule.step_size)


def minibatch_plan(K: int, batch_size: int, rng_seed: int) -> list[np.ndarray]:
    """Seeded permutation of ``range(K)`` cut into contiguous chunks."""
    if K < 1:
        raise ValueError("cannot plan minibatches over zero positions")
    if batch_size < 1:
        raise ValueError("batch_size must be >= 1")
    perm = np.random.default_rng(rng_seed).permutation(K)
    return [perm[i:i + batch_size] for i in range(0, K, batch_size)]
