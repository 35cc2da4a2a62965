"""Gradient-based reconstruction loop with one-shot fast-forward insertion.

One iteration is one epoch over every scan position, split into minibatches
with an Adam step after each. ``ReconstructionState.iteration`` counts
completed epochs; the fast-forward operator fires when that counter equals
``i_ml``, before the next epoch's first minibatch.
"""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .fields import DiffractionDataset, NonFiniteError, ifft2_unitary
from .forward import PhysicsConfig, fresnel_transfer, model_intensity
from .objective import loss_and_gradients, poisson_nll
from .optim import AdamState, LrSchedule, adam_init, adam_step, lr_at, minibatch_plan

log = logging.getLogger(__name__)

__all__ = [
    "EngineConfig",
    "ReconstructionState",
    "sharp_probe_init",
    "apply_probe_support",
    "init_object",
    "init_state",
    "apply_fast_forward",
    "run",
    "embed_truth",
]

FastForward = Callable[[np.ndarray], np.ndarray]


@dataclass(frozen=True)
class EngineConfig:
    iterations: int = 100
    i_ml: int | None = 5
    batch_size: int = 50
    lr_schedule: LrSchedule = field(default_factory=LrSchedule)
    probe_support_radius: float = 200.0
    object_pad: int = 200
    rng_seed: int = 0
    snapshot_iterations: tuple[int, ...] = (5, 100)
    init_amplitude: float = 1e-3
    eps_amp: float = 1e-8
    nll_floor: float = 1e-12
    workers: int = 1
    reset_moments_without_operator: bool = False

    def __post_init__(self):
        if self.iterations < 0:
            raise ValueError("iterations must be >= 0")
        if self.i_ml is not None and not 0 < self.i_ml <= max(self.iterations, 1):
            raise ValueError(f"i_ml must lie in (0, iterations], got {self.i_ml}")
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        if self.object_pad < 0:
            raise ValueError("object_pad must be >= 0")
        object.__setattr__(self, "snapshot_iterations", tuple(int(i) for i in self.snapshot_iterations))

    @classmethod
    def desk(cls, probe_size: int, **overrides) -> "EngineConfig":
        """Small-problem defaults.

        Support radius and pad keep their 200 px / 512 px ratio to the probe
        size. The batch size is 2: on the simulator's default geometry
        (81 positions) larger batches leave a sizeable share of runs stalled
        well above the attainable NLL after 100 iterations.
        """
        ratio = 200.0 / 512.0
        kw = dict(probe_support_radius=round(ratio * probe_size, 1),
                  object_pad=int(round(ratio * probe_size)), batch_size=2)
        kw.update(overrides)
        return cls(**kw)


@dataclass
class ReconstructionState:
    probe: np.ndarray                 # (M, h, w), reference plane
    object: np.ndarray                # padded frame
    adam_probe: AdamState
    adam_object: AdamState
    positions: np.ndarray             # offsets into the padded frame
    iteration: int = 0
    loss_history: list = field(default_factory=list)   # (iteration, amplitude_mse, poisson_nll)
    snapshots: dict = field(default_factory=dict)
    events: list = field(default_factory=list)
    epoch_seconds: list = field(default_factory=list)
    fast_forward_applied: bool = False
    initial_nll: float | None = None

    def nll_curve(self) -> np.ndarray:
        """Full-data NLL indexed by completed iterations (entry 0: the start)."""
        head = [] if self.initial_nll is None else [self.initial_nll]
        return np.array(head + [row[2] for row in self.loss_history])

    def mse_curve(self) -> np.ndarray:
        return np.array([row[1] for row in self.loss_history])


def apply_probe_support(probe: np.ndarray, radius: float) -> np.ndarray:
    """Zero pixels farther than ``radius`` from the grid center ``(h//2, w//2)``."""
    if not radius > 0:
        raise ValueError("support radius must be positive")
    probe = np.asarray(probe)
    h, w = probe.shape[-2:]
    yy, xx = np.ogrid[:h, :w]
    mask = (yy - h // 2) ** 2 + (xx - w // 2) ** 2 <= radius ** 2
    return np.where(mask, probe, 0)


def sharp_probe_init(data: DiffractionDataset, modes: int, support_radius: float) -> np.ndarray:
    """Probe from the mean pattern: amplitude sqrt(mean I), zero phase, back to
    real space. Weaker modes are copies scaled by ``10**-m`` and rolled by
    ``m`` pixels along both axes."""
    mean = np.mean(data.patterns, axis=0)
    if not mean.any():
        raise ValueError("all diffraction patterns are zero; cannot seed a probe")
    p0 = apply_probe_support(ifft2_unitary(np.sqrt(mean).astype(np.complex128)), support_radius)
    stack = [p0]
    for m in range(1, modes):
        stack.append(apply_probe_support(10.0 ** (-m) * np.roll(p0, (m, m), axis=(0, 1)),
                                         support_radius))
    return np.stack(stack)


def object_frame(data: DiffractionDataset, pad: int) -> tuple[int, int]:
    H, W = data.positions.extent(data.probe_shape)
    return H + 2 * pad, W + 2 * pad


def init_object(data: DiffractionDataset, pad: int, init_amplitude: float = 1e-3,
                rng_seed: int = 0) -> np.ndarray:
    """Random-phase interior of amplitude ``init_amplitude``, zero pad ring."""
    if pad < 0:
        raise ValueError("pad must be >= 0")
    H, W = object_frame(data, pad)
    obj = np.zeros((H, W), dtype=np.complex128)
    rng = np.random.default_rng(rng_seed)
    phase = rng.uniform(-np.pi, np.pi, size=(H - 2 * pad, W - 2 * pad))
    obj[pad:H - pad, pad:W - pad] = init_amplitude * np.exp(1j * phase)
    return obj


def embed_truth(truth_object: np.ndarray, data: DiffractionDataset, pad: int) -> np.ndarray:
    """Place a ground-truth object (dataset frame) into the padded engine frame."""
    H, W = object_frame(data, pad)
    out = np.zeros((H, W), dtype=np.complex128)
    h, w = truth_object.shape
    h, w = min(h, H - 2 * pad), min(w, W - 2 * pad)
    out[pad:pad + h, pad:pad + w] = truth_object[:h, :w]
    return out


def init_state(data: DiffractionDataset, cfg: EngineConfig, physics: PhysicsConfig) -> ReconstructionState:
    probe = sharp_probe_init(data, physics.mode_count, cfg.probe_support_radius)
    obj = init_object(data, cfg.object_pad, cfg.init_amplitude, cfg.rng_seed)
    return ReconstructionState(
        probe=probe,
        object=obj,
        adam_probe=adam_init(probe),
        adam_object=adam_init(obj),
        positions=data.positions.positions + cfg.object_pad,
    )


def apply_fast_forward(state: ReconstructionState, operator: FastForward | None) -> ReconstructionState:
    """Replace the object by ``operator(object)`` and zero its Adam moments.

    ``operator=None`` only resets the moments (the control arm used to
    compare against an identity insertion).
    """
    if state.fast_forward_applied:
        raise RuntimeError("fast-forward operator already applied in this run")
    if operator is not None:
        new_obj = np.asarray(operator(state.object), dtype=np.complex128)
        if new_obj.shape != state.object.shape:
            raise ValueError(
                f"operator returned shape {new_obj.shape}, expected {state.object.shape}"
            )
        if not np.isfinite(new_obj).all():
            raise NonFiniteError("operator output is not finite")
        state.object = new_obj
    state.adam_object = adam_init(state.object)
    state.fast_forward_applied = True
    state.events.append({"iteration": state.iteration,
                         "event": "fast_forward" if operator is not None else "moment_reset"})
    return state


def full_nll(state: ReconstructionState, data: DiffractionDataset, physics: PhysicsConfig,
             floor: float = 1e-12) -> float:
    pred = model_intensity(state.probe, state.object, state.positions, physics)
    return poisson_nll(pred, data.patterns, floor)


def run(data: DiffractionDataset, cfg: EngineConfig, physics: PhysicsConfig,
        operator: FastForward | None = None, state: ReconstructionState | None = None,
        callback: Callable[[ReconstructionState], None] | None = None) -> ReconstructionState:
    """Run ``cfg.iterations`` epochs and return the final state."""
    if state is None:
        state = init_state(data, cfg, physics)
    kernel = None
    if physics.fresnel_distance != 0:
        kernel = fresnel_transfer(data.probe_shape, physics)
    patterns = data.patterns
    if state.iteration == 0 and state.initial_nll is None:
        state.initial_nll = full_nll(state, data, physics, cfg.nll_floor)
    wants_insert = cfg.i_ml is not None and (
        operator is not None or cfg.reset_moments_without_operator
    )

    while state.iteration < cfg.iterations:
        it = state.iteration
        if wants_insert and it == cfg.i_ml and not state.fast_forward_applied:
            apply_fast_forward(state, operator)
        lr = lr_at(cfg.lr_schedule, it)
        t0 = time.perf_counter()
        losses = []
        for batch in minibatch_plan(data.K, cfg.batch_size, [cfg.rng_seed, it]):
            loss, grads = loss_and_gradients(
                state.probe, state.object, patterns, state.positions, batch, physics,
                eps_amp=cfg.eps_amp, workers=cfg.workers, kernel=kernel,
                context=f"at iteration {it + 1}",
            )
            losses.append(loss)
            state.probe, state.adam_probe = adam_step(state.probe, grads.d_probe, state.adam_probe, lr)
            state.object, state.adam_object = adam_step(state.object, grads.d_object, state.adam_object, lr)
            state.probe = apply_probe_support(state.probe, cfg.probe_support_radius)
        state.epoch_seconds.append(time.perf_counter() - t0)
        state.iteration = it + 1
        mse = float(np.mean(losses))
        nll = full_nll(state, data, physics, cfg.nll_floor)
        if not (np.isfinite(mse) and np.isfinite(nll)):
            raise NonFiniteError(f"non-finite loss at iteration {state.iteration}")
        state.loss_history.append((state.iteration, mse, nll))
        if state.iteration in cfg.snapshot_iterations:
            state.snapshots[state.iteration] = state.object.copy()
        log.debug("iteration %d: mse=%.6g nll=%.6g", state.iteration, mse, nll)
        if callback is not None:
            callback(state)

    if wants_insert and cfg.i_ml == cfg.iterations and not state.fast_forward_applied:
        apply_fast_forward(state, operator)
    return state
