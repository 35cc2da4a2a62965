"""Supervised training of the fast-forward U-Net on early/late object patches."""

from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass, field

import numpy as np

from ..optim import LrSchedule, adam_init, adam_step, lr_at
from .operator import complex_to_channels
from .unet import UNetConfig, init_weights, unet_backward, unet_forward

log = logging.getLogger(__name__)

__all__ = ["TrainConfig", "TrainLog", "PairSet", "make_training_pairs", "split_by_dataset",
           "train_operator"]


@dataclass(frozen=True)
class TrainConfig:
    input_iteration: int = 5
    target_iteration: int = 100
    patches_per_dataset: int = 8
    patch_size: int = 64
    epochs: int = 40
    batch_size: int = 4
    lr: float = 1e-3
    lr_step: int = 100
    lr_decay: float = 0.2
    split_fraction: float = 0.98
    rng_seed: int = 0
    augment: bool = True

    def __post_init__(self):
        if not self.input_iteration < self.target_iteration:
            raise ValueError("input_iteration must precede target_iteration")
        if not 0 < self.split_fraction < 1:
            raise ValueError("split_fraction must lie in (0, 1)")
        if self.patches_per_dataset < 1 or self.patch_size < 1 or self.batch_size < 1:
            raise ValueError("patch count, patch size and batch size must be >= 1")
        if self.epochs < 0:
            raise ValueError("epochs must be >= 0")

    def check_unet(self, unet_cfg: UNetConfig) -> None:
        if self.patch_size % unet_cfg.divisor:
            raise ValueError(
                f"patch_size {self.patch_size} must be divisible by {unet_cfg.divisor}")

    @classmethod
    def full_scale(cls) -> "TrainConfig":
        return cls(patch_size=512, epochs=200, augment=False)


@dataclass
class PairSet:
    """Co-located complex patches; ``dataset_ids`` drive the train/val split."""

    inputs: np.ndarray            # (P, p, p) complex
    targets: np.ndarray           # (P, p, p) complex
    dataset_ids: np.ndarray       # (P,) int
    corners: np.ndarray           # (P, 2) int

    def __len__(self) -> int:
        return self.inputs.shape[0]

    @classmethod
    def concat(cls, sets) -> "PairSet":
        sets = list(sets)
        return cls(np.concatenate([s.inputs for s in sets]),
                   np.concatenate([s.targets for s in sets]),
                   np.concatenate([s.dataset_ids for s in sets]),
                   np.concatenate([s.corners for s in sets]))


@dataclass
class TrainLog:
    train_loss: list = field(default_factory=list)
    val_loss: list = field(default_factory=list)
    train_datasets: list = field(default_factory=list)
    val_datasets: list = field(default_factory=list)
    initial_val_loss: float | None = None


def make_training_pairs(snapshot_in, snapshot_tgt, cfg: TrainConfig, rng_seed,
                        dataset_id: int = 0) -> PairSet:
    """Cut ``N`` patches at identical random corners from both snapshots."""
    a = np.asarray(snapshot_in)
    b = np.asarray(snapshot_tgt)
    if a.shape != b.shape:
        raise ValueError(f"snapshot shapes differ: {a.shape} vs {b.shape}")
    H, W = a.shape
    p = cfg.patch_size
    if H < p or W < p:
        raise ValueError(f"snapshot {H}x{W} is smaller than patch size {p}")
    rng = np.random.default_rng(rng_seed)
    n = cfg.patches_per_dataset
    corners = np.stack([rng.integers(0, H - p + 1, size=n),
                        rng.integers(0, W - p + 1, size=n)], axis=1)
    ins = np.stack([a[r:r + p, c:c + p] for r, c in corners]).astype(np.complex128)
    tgts = np.stack([b[r:r + p, c:c + p] for r, c in corners]).astype(np.complex128)
    return PairSet(ins, tgts, np.full(n, dataset_id, dtype=np.int64), corners.astype(np.int64))


def split_by_dataset(dataset_ids, split_fraction: float, rng):
    """Shuffle datasets, then split; returns ``(train_ids, val_ids)``."""
    unique = np.unique(dataset_ids)
    order = rng.permutation(unique)
    n_val = int(round(len(unique) * (1.0 - split_fraction)))
    if n_val < 1:
        warnings.warn(f"{len(unique)} datasets give no validation set at split "
                      f"{split_fraction}; holding out 1 dataset instead", stacklevel=2)
        n_val = 1
    if n_val >= len(unique):
        raise ValueError(f"need at least 2 datasets to split, got {len(unique)}")
    return np.sort(order[n_val:]), np.sort(order[:n_val])


def _normalized(inputs, targets, dtype):
    s = np.sqrt(np.mean(np.abs(inputs) ** 2, axis=(1, 2)))
    s = np.where(s < 1e-12, 1.0, s)[:, None, None]
    return (complex_to_channels(inputs / s).astype(dtype),
            complex_to_channels(targets / s).astype(dtype))


def _dihedral(x, k):
    """One of the 8 square symmetries on the last two axes."""
    if k >= 4:
        x = x[..., ::-1]
    return np.rot90(x, k % 4, axes=(-2, -1))


def _mse(weights, cfg, x, y, chunk=16):
    total = 0.0
    for i in range(0, len(x), chunk):
        pred = unet_forward(x[i:i + chunk], weights, cfg)
        total += float(np.sum((pred.astype(np.float64) - y[i:i + chunk]) ** 2))
    return total / x.size


def train_operator(pairs: PairSet, cfg: TrainConfig, unet_cfg: UNetConfig,
                   dtype=np.float32, progress=None):
    """Fit the U-Net by minibatch Adam on normalized patch pairs.

    Returns ``(weights, TrainLog)``; with ``cfg.epochs == 0`` the weights are
    the seeded initialization.
    """
    cfg.check_unet(unet_cfg)
    rng = np.random.default_rng(cfg.rng_seed)
    train_ids, val_ids = split_by_dataset(pairs.dataset_ids, cfg.split_fraction, rng)
    tr = np.isin(pairs.dataset_ids, train_ids)
    if not tr.any():
        raise ValueError("no training pairs left after the split")
    x_tr, y_tr = _normalized(pairs.inputs[tr], pairs.targets[tr], dtype)
    x_va, y_va = _normalized(pairs.inputs[~tr], pairs.targets[~tr], dtype)

    weights = init_weights(unet_cfg, seed=cfg.rng_seed, dtype=dtype)
    states = {k: adam_init(v) for k, v in weights.items()}
    schedule = LrSchedule(cfg.lr, cfg.lr_step, cfg.lr_decay)
    tlog = TrainLog(train_datasets=[int(i) for i in train_ids],
                    val_datasets=[int(i) for i in val_ids])
    if len(x_va):
        tlog.initial_val_loss = _mse(weights, unet_cfg, x_va, y_va)

    n = len(x_tr)
    for epoch in range(cfg.epochs):
        lr = lr_at(schedule, epoch)
        order = rng.permutation(n)
        syms = rng.integers(0, 8, size=n) if cfg.augment else np.zeros(n, dtype=int)
        running = 0.0
        for start in range(0, n, cfg.batch_size):
            idx = order[start:start + cfg.batch_size]
            xb = np.stack([_dihedral(x_tr[i], syms[i]) for i in idx])
            yb = np.stack([_dihedral(y_tr[i], syms[i]) for i in idx])
            cache: dict = {}
            pred = unet_forward(xb, weights, unet_cfg, cache=cache)
            diff = pred - yb
            loss = float(np.mean(diff.astype(np.float64) ** 2))
            if not np.isfinite(loss):
                raise FloatingPointError(f"non-finite training loss in epoch {epoch + 1}")
            running += loss * len(idx)
            _, grads = unet_backward(cache, (2.0 / diff.size) * diff)
            for k in weights:
                weights[k], states[k] = adam_step(weights[k], grads[k], states[k], lr)
        tlog.train_loss.append(running / n)
        tlog.val_loss.append(_mse(weights, unet_cfg, x_va, y_va) if len(x_va) else float("nan"))
        log.info("epoch %d: train %.6g val %.6g", epoch + 1, tlog.train_loss[-1], tlog.val_loss[-1])
        if progress is not None:
            progress(epoch + 1, tlog)
    return weights, tlog
