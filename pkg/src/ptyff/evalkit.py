"""Convergence metrics, speedup reports, sweeps and difference maps."""

from __future__ import annotations

import csv
import json
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

import numpy as np

log = logging.getLogger(__name__)

__all__ = [
    "EvalConfig",
    "EvalReport",
    "iteration_to_epsilon",
    "speedup_table",
    "sweep",
    "align_global_phase",
    "difference_maps",
    "write_pgm16",
    "read_pgm16",
    "write_report",
]


@dataclass(frozen=True)
class EvalConfig:
    i_ref: int = 50
    epsilon_fraction: float = 0.01
    reference_run: str = "baseline"

    def __post_init__(self):
        if self.i_ref < 1:
            raise ValueError("i_ref must be >= 1")
        if not 0 < self.epsilon_fraction < 1:
            raise ValueError("epsilon_fraction must lie in (0, 1)")


@dataclass
class EvalReport:
    i_epsilon: int | None
    epsilon: float
    baseline_time_s: float | None = None
    ml_time_s: float | None = None
    speedup: float | None = None
    iteration_speedup: float | None = None
    converged: bool = True
    i_ref: int = 50
    baseline_reference_nll: float | None = None
    baseline_final_nll: float | None = None
    ml_final_nll: float | None = None
    final_nll_relative_gap: float | None = None
    curves: dict = field(default_factory=dict)
    metadata: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return asdict(self)

    def summary(self) -> str:
        def fmt(v, spec):
            return "n/a" if v is None else format(v, spec)
        lines = [
            f"{'quantity':<34}{'value':>18}",
            f"{'i_ref':<34}{self.i_ref:>18d}",
            f"{'epsilon':<34}{fmt(self.epsilon, '.6g'):>18}",
            f"{'ML iterations-to-epsilon':<34}{fmt(self.i_epsilon, 'd') if self.converged else 'not converged':>18}",
            f"{'baseline time to i_ref (s)':<34}{fmt(self.baseline_time_s, '.3f'):>18}",
            f"{'ML time to i_eps (s)':<34}{fmt(self.ml_time_s, '.3f'):>18}",
            f"{'wall-clock speedup':<34}{fmt(self.speedup, '.2f'):>18}",
            f"{'iteration speedup':<34}{fmt(self.iteration_speedup, '.2f'):>18}",
            f"{'baseline final NLL':<34}{fmt(self.baseline_final_nll, '.6g'):>18}",
            f"{'ML final NLL':<34}{fmt(self.ml_final_nll, '.6g'):>18}",
            f"{'final NLL relative gap':<34}{fmt(self.final_nll_relative_gap, '.3e'):>18}",
        ]
        return "\n".join(lines)


def iteration_to_epsilon(ml_curve, baseline_curve, cfg: EvalConfig = EvalConfig()):
    """First iteration whose ML NLL is within epsilon of the baseline at
    ``i_ref``; epsilon is ``epsilon_fraction`` of the baseline's range.

    Curves are indexed by iteration: entry ``i`` is the NLL after ``i``
    completed iterations, entry 0 the starting point.

    Returns ``(i_epsilon or None, epsilon)``.
    """
    ml = np.asarray(ml_curve, dtype=np.float64)
    base = np.asarray(baseline_curve, dtype=np.float64)
    if ml.size == 0 or base.size == 0:
        raise ValueError("NLL curves must be nonempty")
    if cfg.i_ref >= base.size:
        raise ValueError(f"i_ref={cfg.i_ref} lies beyond the baseline's last iteration {base.size - 1}")
    span = float(base.max() - base.min())
    if span == 0:
        raise ValueError("baseline NLL curve is constant, so epsilon (a fraction of its range) is zero")
    eps = cfg.epsilon_fraction * span
    ref = base[cfg.i_ref]
    # a few ulps of slack so that hand-exact boundary cases (|2.4 - 2.5| = 0.1) count
    slack = 4 * np.finfo(np.float64).eps * np.maximum(np.abs(ml), abs(ref))
    hits = np.flatnonzero(np.abs(ml - ref) <= eps + slack)
    return (int(hits[0]) if hits.size else None), eps


def speedup_table(baseline_nll, baseline_epoch_seconds, ml_nll, ml_epoch_seconds,
                  cfg: EvalConfig = EvalConfig(), metadata: dict | None = None) -> EvalReport:
    """Baseline wall-clock to ``i_ref`` versus ML wall-clock to ``i_epsilon``.

    NLL curves follow :func:`iteration_to_epsilon`; ``*_epoch_seconds[j]`` is
    the duration of iteration ``j + 1``.
    """
    base = np.asarray(baseline_nll, dtype=np.float64)
    ml = np.asarray(ml_nll, dtype=np.float64)
    i_eps, eps = iteration_to_epsilon(ml, base, cfg)
    bt = np.asarray(baseline_epoch_seconds, dtype=np.float64)
    mt = np.asarray(ml_epoch_seconds, dtype=np.float64)
    report = EvalReport(
        i_epsilon=i_eps,
        epsilon=eps,
        i_ref=cfg.i_ref,
        baseline_reference_nll=float(base[cfg.i_ref]),
        baseline_final_nll=float(base[-1]),
        ml_final_nll=float(ml[-1]),
        final_nll_relative_gap=float((ml[-1] - base[-1]) / abs(base[-1])) if base[-1] else None,
        curves={"baseline": base.tolist(), "ml": ml.tolist()},
        metadata=dict(metadata or {}),
    )
    if bt.size >= cfg.i_ref:
        report.baseline_time_s = float(bt[:cfg.i_ref].sum())
    if i_eps is None:
        report.converged = False
        return report
    report.iteration_speedup = cfg.i_ref / i_eps if i_eps else None
    if i_eps and mt.size >= i_eps:
        report.ml_time_s = float(mt[:i_eps].sum())
    if report.baseline_time_s is not None and report.ml_time_s:
        report.speedup = report.baseline_time_s / report.ml_time_s
    return report


def sweep(parameter: str, values, base_cfg, data, physics, operator=None,
          eval_cfg: EvalConfig = EvalConfig(), baseline=None, csv_path=None,
          concurrent: int = 1):
    """Run the engine once per value of ``parameter`` and report i_epsilon.

    ``parameter`` is ``"i_ml"``, ``"lr"`` or ``"batch_size"``. The baseline
    (no operator) is run with the same changed setting so each row compares
    like with like, unless a fixed ``baseline`` NLL curve is given. Failed
    runs are reported with ``status="failed: ..."`` instead of aborting the
    sweep. ``concurrent > 1`` runs values in a thread pool; each run owns
    its own state, and rows keep the order of ``values``.
    """
    from .engine import run

    values = list(values)
    if not values:
        raise ValueError("sweep needs at least one value")
    if parameter not in ("i_ml", "lr", "batch_size"):
        raise ValueError(f"cannot sweep {parameter!r}; choose i_ml, lr or batch_size")

    def one(value):
        try:
            if parameter == "i_ml":
                cfg = replace(base_cfg, i_ml=int(value))
            elif parameter == "lr":
                cfg = replace(base_cfg, lr_schedule=replace(base_cfg.lr_schedule, base_lr=float(value)))
            else:
                cfg = replace(base_cfg, batch_size=int(value))
            base_curve = baseline
            if base_curve is None:
                base_curve = run(data, replace(cfg, i_ml=None), physics).nll_curve()
            ml_state = run(data, cfg, physics, operator=operator)
            i_eps, eps = iteration_to_epsilon(ml_state.nll_curve(), base_curve, eval_cfg)
            return {"parameter": parameter, "value": value, "i_epsilon": i_eps,
                    "epsilon": eps, "final_nll": float(ml_state.nll_curve()[-1]),
                    "status": "ok"}
        except Exception as exc:  # noqa: BLE001 - keep partial results
            log.warning("sweep %s=%s failed: %s", parameter, value, exc)
            return {"parameter": parameter, "value": value, "i_epsilon": None,
                    "epsilon": None, "final_nll": None, "status": f"failed: {exc}"}

    if concurrent > 1:
        with ThreadPoolExecutor(max_workers=concurrent) as pool:
            rows = list(pool.map(one, values))
    else:
        rows = [one(v) for v in values]
    if csv_path is not None:
        with open(csv_path, "w", newline="") as fh:
            writer = csv.DictWriter(fh, fieldnames=list(rows[0]))
            writer.writeheader()
            writer.writerows(rows)
    return rows


def align_global_phase(reference, other):
    """``other * exp(i phi)`` with phi minimizing ||reference - other e^{i phi}||."""
    inner = np.vdot(other, reference)
    phi = float(np.angle(inner)) if inner != 0 else 0.0
    return np.asarray(other) * np.exp(1j * phi), phi


def _crop(a, crop):
    if not crop:
        return a
    if 2 * crop >= min(a.shape):
        raise ValueError(f"crop {crop} leaves nothing of a {a.shape} image")
    return a[crop:-crop, crop:-crop]


def _wrap(phase):
    """Wrap into (-pi, pi]."""
    w = np.angle(np.exp(1j * phase))
    return np.where(w <= -np.pi, w + 2 * np.pi, w)


def difference_maps(run_a, run_b, crop: int = 0, align_phase: bool = True) -> dict:
    """Amplitude/phase images of two objects and their absolute differences."""
    a = np.asarray(run_a, dtype=np.complex128)
    b = np.asarray(run_b, dtype=np.complex128)
    if a.shape != b.shape:
        raise ValueError(f"object shapes differ: {a.shape} vs {b.shape}")
    a, b = _crop(a, crop), _crop(b, crop)
    phi = 0.0
    if align_phase:
        b, phi = align_global_phase(a, b)
    maps = {
        "amplitude_a": np.abs(a),
        "amplitude_b": np.abs(b),
        "phase_a": _wrap(np.angle(a)),
        "phase_b": _wrap(np.angle(b)),
        "amplitude_diff": np.abs(np.abs(a) - np.abs(b)),
        "phase_diff": np.abs(_wrap(np.angle(b) - np.angle(a))),
    }
    maps["summary"] = {
        "global_phase_offset": phi,
        "amplitude_diff_max": float(maps["amplitude_diff"].max()),
        "amplitude_diff_mean": float(maps["amplitude_diff"].mean()),
        "phase_diff_max": float(maps["phase_diff"].max()),
        "phase_diff_mean": float(maps["phase_diff"].mean()),
    }
    return maps


def write_pgm16(path, image, vmin=None, vmax=None) -> None:
    """Binary 16-bit grayscale PGM, linearly scaled from [vmin, vmax]."""
    img = np.asarray(image, dtype=np.float64)
    lo = img.min() if vmin is None else vmin
    hi = img.max() if vmax is None else vmax
    scaled = np.zeros_like(img) if hi <= lo else (img - lo) / (hi - lo)
    pix = np.round(np.clip(scaled, 0, 1) * 65535).astype(">u2")
    h, w = img.shape
    with open(path, "wb") as fh:
        fh.write(f"P5\n{w} {h}\n65535\n".encode("ascii"))
        fh.write(pix.tobytes())


def read_pgm16(path) -> np.ndarray:
    raw = Path(path).read_bytes()
    parts = raw.split(maxsplit=4)
    if parts[0] != b"P5":
        raise ValueError(f"{path} is not a binary PGM")
    w, h, maxval = int(parts[1]), int(parts[2]), int(parts[3])
    if maxval != 65535:
        raise ValueError("only 16-bit PGM files are supported")
    return np.frombuffer(parts[4][:2 * w * h], dtype=">u2").reshape(h, w)


def write_report(directory, report: EvalReport) -> None:
    directory = Path(directory)
    (directory / "report.json").write_text(json.dumps(report.to_dict(), indent=2, sort_keys=True))
    (directory / "report.txt").write_text(report.summary() + "\n")
