"""Command-line batch pipeline.

    ptyff simulate [CONFIG] --out DIR [--count N]
    ptyff reconstruct DATASET --out DIR [--operator WEIGHTS|none] ...
    ptyff build-pairs RUN [RUN ...] --out DIR
    ptyff train-ff PAIRS --out DIR
    ptyff evaluate BASELINE_RUN ML_RUN --out DIR
    ptyff sweep DATASET --parameter i_ml --values 1,3,5 --out DIR
    ptyff pipeline --out DIR --seed 0

Every command writes its artifact directory atomically with a single
``manifest.json``; diagnostics go to stderr and failures exit nonzero.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
import time
import warnings
from dataclasses import asdict, fields, replace
from pathlib import Path

import numpy as np

from . import io
from .engine import EngineConfig, run
from .evalkit import (EvalConfig, difference_maps, speedup_table, sweep, write_pgm16,
                      write_report)
from .ffop import UNetConfig, UNetOperator
from .ffop.weights import write_weights
from .ffop.training import PairSet, TrainConfig, make_training_pairs, train_operator
from .forward import PhysicsConfig
from .optim import LrSchedule
from .simkit import SimConfig, corpus_seeds, synthesize

log = logging.getLogger("ptyff")

THREADS_ENV = "PTYFF_THREADS"


class CLIError(Exception):
    pass


# -- config handling --------------------------------------------------------

def _known(cls, section: dict, name: str) -> dict:
    allowed = {f.name for f in fields(cls)}
    unknown = set(section) - allowed
    if unknown:
        raise CLIError(f"unknown keys in [{name}] config section: {sorted(unknown)}")
    return dict(section)


def load_config(path) -> dict:
    """JSON file with optional flat sections: sim, physics, engine, train, unet, eval."""
    if path is None:
        return {}
    try:
        cfg = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise CLIError(f"cannot read config {path}: {exc}") from exc
    if not isinstance(cfg, dict):
        raise CLIError(f"config {path} must hold a JSON object")
    extra = set(cfg) - {"sim", "physics", "engine", "train", "unet", "eval"}
    if extra:
        raise CLIError(f"unknown config sections {sorted(extra)}")
    return cfg


def sim_config_from(cfg: dict) -> SimConfig:
    sim = _known(SimConfig, cfg.get("sim", {}), "sim")
    sim.pop("physics", None)
    base = SimConfig(**sim)
    phys = dict(asdict(base.physics))
    phys.update(_known(PhysicsConfig, cfg.get("physics", {}), "physics"))
    phys["mode_count"] = base.mode_count if "mode_count" not in cfg.get("physics", {}) else phys["mode_count"]
    return replace(base, physics=PhysicsConfig(**phys), mode_count=phys["mode_count"])


def _threads(arg) -> int:
    if arg is not None:
        return max(1, int(arg))
    return max(1, int(os.environ.get(THREADS_ENV, "1")))


def _int_list(text) -> list[int]:
    return [int(t) for t in str(text).split(",") if t.strip()]


def _manifest(command: str, args, **extra) -> dict:
    echo = {k: (str(v) if isinstance(v, Path) else v) for k, v in vars(args).items()
            if k not in ("func",)}
    return {"command": command, "arguments": echo, "build": io.build_id(), **extra}


# -- commands -----------------------------------------------------------------

def cmd_simulate(args) -> Path:
    cfg = load_config(args.config)
    sim = sim_config_from(cfg)
    if args.seed is not None:
        sim = replace(sim, texture_seed=args.seed)
    out = Path(args.out)
    if args.count is not None:
        if args.count < 1:
            raise CLIError("--count must be >= 1")
        seeds = corpus_seeds(args.count, sim.texture_seed)
        targets = [(out / f"dataset_{i:03d}", replace(sim, texture_seed=s))
                   for i, s in enumerate(seeds)]
    else:
        targets = [(out, sim)]
    for path, scfg in targets:
        t0 = time.perf_counter()
        data, truth = synthesize(scfg)
        io.save_dataset(path, data, truth, _manifest(
            "simulate", args,
            sim_config=asdict(scfg),
            seeds={"texture_seed": scfg.texture_seed},
            outputs=[str(path)],
            timing={"seconds": time.perf_counter() - t0},
        ))
        log.info("wrote dataset %s (K=%d)", path, data.K)
    return out


def _physics_for(manifest: dict, data, modes: int | None) -> PhysicsConfig:
    meta = manifest.get("meta", {})
    return PhysicsConfig(
        wavelength=data.wavelength,
        fresnel_distance=float(meta.get("fresnel_distance", 25e-6)),
        pixel_size=data.pixel_size,
        mode_count=int(modes if modes is not None else meta.get("mode_count", 1)),
    )


def engine_config_for(data, cfg: dict, args) -> EngineConfig:
    eng = _known(EngineConfig, cfg.get("engine", {}), "engine")
    lr = eng.pop("lr_schedule", None)
    ecfg = EngineConfig.desk(data.probe_shape[0], **eng)
    if lr is not None:
        ecfg = replace(ecfg, lr_schedule=LrSchedule(**lr))
    over = {}
    if args.iterations is not None:
        over["iterations"] = args.iterations
    if args.i_ml is not None:
        over["i_ml"] = None if str(args.i_ml).lower() == "none" else int(args.i_ml)
    if args.batch_size is not None:
        over["batch_size"] = args.batch_size
    if args.seed is not None:
        over["rng_seed"] = args.seed
    if args.snapshots is not None:
        over["snapshot_iterations"] = tuple(_int_list(args.snapshots))
    over["workers"] = _threads(args.threads)
    ecfg = replace(ecfg, **over)
    if args.lr is not None:
        ecfg = replace(ecfg, lr_schedule=replace(ecfg.lr_schedule, base_lr=args.lr))
    return ecfg


def cmd_reconstruct(args) -> Path:
    try:
        data, _, dmanifest = io.load_dataset(args.dataset)
    except (OSError, ValueError, KeyError) as exc:
        raise CLIError(f"cannot load dataset {args.dataset}: {exc}") from exc
    cfg = load_config(args.config)
    physics = _physics_for(dmanifest, data, args.modes)
    ecfg = engine_config_for(data, cfg, args)
    operator = None
    if args.operator and args.operator.lower() != "none":
        try:
            operator = UNetOperator.load(args.operator)
        except (OSError, ValueError, KeyError) as exc:
            raise CLIError(f"cannot load operator weights {args.operator}: {exc}") from exc
    t0 = time.perf_counter()
    state = run(data, ecfg, physics, operator=operator)
    elapsed = time.perf_counter() - t0
    out = Path(args.out)
    insertion = [e for e in state.events if e["event"] == "fast_forward"]
    with io.atomic_dir(out) as tmp:
        io.write_complex(tmp / "object.bin", state.object)
        io.write_complex(tmp / "probe.bin", state.probe)
        io.write_loss_csv(tmp / "loss.csv", state.loss_history)
        snaps = {}
        for it, obj in sorted(state.snapshots.items()):
            name = f"snapshot_{it:04d}.bin"
            io.write_complex(tmp / name, obj)
            snaps[str(it)] = name
        io.write_manifest(tmp, _manifest(
            "reconstruct", args,
            kind="run",
            dataset=str(args.dataset),
            physics=asdict(physics),
            engine_config=asdict(ecfg),
            seeds={"rng_seed": ecfg.rng_seed},
            operator=None if operator is None else str(args.operator),
            fast_forward_iteration=insertion[0]["iteration"] if insertion else None,
            events=state.events,
            object_shape=list(state.object.shape),
            probe_shape=list(state.probe.shape),
            snapshots=snaps,
            iterations_completed=state.iteration,
            initial_nll=state.initial_nll,
            epoch_seconds=state.epoch_seconds,
            timing={"seconds": elapsed, "threads": ecfg.workers},
        ))
    log.info("wrote run %s (%d iterations)", out, state.iteration)
    return out


def _load_run(path):
    m = io.read_manifest(path)
    if m.get("kind") != "run":
        raise CLIError(f"{path} is not a reconstruction run directory")
    return m


def cmd_build_pairs(args) -> Path:
    tcfg = TrainConfig(patch_size=args.patch_size, patches_per_dataset=args.n_patches,
                       input_iteration=args.input_iteration,
                       target_iteration=args.target_iteration, rng_seed=args.seed)
    sets, sources, skipped = [], [], []
    seeds = corpus_seeds(len(args.runs), args.seed)
    for idx, run_dir in enumerate(args.runs):
        run_dir = Path(run_dir)
        m = _load_run(run_dir)
        snaps = m.get("snapshots", {})
        need = [str(tcfg.input_iteration), str(tcfg.target_iteration)]
        missing = [it for it in need if it not in snaps]
        if missing:
            warnings.warn(f"{run_dir}: missing snapshot(s) {missing}; skipped")
            skipped.append({"run": str(run_dir), "missing": missing})
            continue
        shape = m["object_shape"]
        a = io.read_complex(run_dir / snaps[need[0]], shape)
        b = io.read_complex(run_dir / snaps[need[1]], shape)
        sets.append(make_training_pairs(a, b, tcfg, seeds[idx], dataset_id=idx))
        sources.append({"dataset_id": idx, "run": str(run_dir)})
    if not sets:
        raise CLIError("no run directory had both snapshots")
    pairs = PairSet.concat(sets)
    out = Path(args.out)
    p = tcfg.patch_size
    with io.atomic_dir(out) as tmp:
        io.write_complex(tmp / "inputs.bin", pairs.inputs)
        io.write_complex(tmp / "targets.bin", pairs.targets)
        io.write_manifest(tmp, _manifest(
            "build-pairs", args,
            kind="pairs",
            pair_count=len(pairs),
            patch_shape=[p, p],
            dataset_ids=pairs.dataset_ids.tolist(),
            corners=pairs.corners.tolist(),
            sources=sources,
            skipped=skipped,
            input_iteration=tcfg.input_iteration,
            target_iteration=tcfg.target_iteration,
            seeds={"master": args.seed, "per_run": seeds},
        ))
    return out


def load_pairs(path) -> PairSet:
    path = Path(path)
    m = io.read_manifest(path)
    if m.get("kind") != "pairs":
        raise CLIError(f"{path} is not a pair store")
    n = int(m["pair_count"])
    p, q = m["patch_shape"]
    ids = np.asarray(m["dataset_ids"], dtype=np.int64)
    corners = np.asarray(m["corners"], dtype=np.int64).reshape(-1, 2)
    if ids.size != n or corners.shape[0] != n:
        raise CLIError(f"{path}: pair count {n} disagrees with its id/corner lists")
    return PairSet(io.read_complex(path / "inputs.bin", (n, p, q)),
                   io.read_complex(path / "targets.bin", (n, p, q)), ids, corners)


def cmd_train_ff(args) -> Path:
    pairs = load_pairs(args.pairs)
    cfg = load_config(args.config)
    unet = UNetConfig(**_known(UNetConfig, cfg.get("unet", {}), "unet"))
    over = {k: getattr(args, k) for k in ("c_base", "depth", "growth") if getattr(args, k) is not None}
    unet = replace(unet, **over)
    tsec = _known(TrainConfig, cfg.get("train", {}), "train")
    tcfg = TrainConfig(**tsec)
    tover = {"patch_size": pairs.inputs.shape[-1]}
    for flag, key in (("epochs", "epochs"), ("batch_size", "batch_size"), ("lr", "lr"),
                      ("lr_step", "lr_step"), ("lr_decay", "lr_decay"),
                      ("split", "split_fraction"), ("seed", "rng_seed")):
        if getattr(args, flag) is not None:
            tover[key] = getattr(args, flag)
    if args.no_augment:
        tover["augment"] = False
    tcfg = replace(tcfg, **tover)
    t0 = time.perf_counter()
    try:
        weights, tlog = train_operator(pairs, tcfg, unet)
    except (ValueError, FloatingPointError) as exc:
        raise CLIError(str(exc)) from exc
    elapsed = time.perf_counter() - t0
    out = Path(args.out)
    with io.atomic_dir(out) as tmp:
        write_weights(tmp, weights, unet, extra={"run": _manifest(
            "train-ff", args,
            pairs=str(args.pairs),
            train_config=asdict(tcfg),
            train_datasets=tlog.train_datasets,
            val_datasets=tlog.val_datasets,
            seeds={"rng_seed": tcfg.rng_seed},
            timing={"seconds": elapsed},
        )})
        with open(tmp / "train_curve.csv", "w") as fh:
            fh.write("epoch,train_loss,val_loss\n")
            if tlog.initial_val_loss is not None:
                fh.write(f"0,,{tlog.initial_val_loss!r}\n")
            for e, (tr, va) in enumerate(zip(tlog.train_loss, tlog.val_loss), start=1):
                fh.write(f"{e},{tr!r},{va!r}\n")
    return out


def _nll_curve(manifest, rows) -> list[float]:
    """Iteration-indexed NLL: the run's starting value, then one per CSV row."""
    if manifest.get("initial_nll") is None:
        raise CLIError("run manifest lacks initial_nll")
    return [manifest["initial_nll"]] + [r[2] for r in rows]


def cmd_evaluate(args) -> Path:
    mb, mm = _load_run(args.baseline), _load_run(args.ml)
    base_rows = io.read_loss_csv(Path(args.baseline) / "loss.csv")
    ml_rows = io.read_loss_csv(Path(args.ml) / "loss.csv")
    ecfg = EvalConfig(i_ref=args.i_ref, epsilon_fraction=args.epsilon_fraction)
    try:
        report = speedup_table(
            _nll_curve(mb, base_rows), mb.get("epoch_seconds", []),
            _nll_curve(mm, ml_rows), mm.get("epoch_seconds", []), ecfg,
            metadata={"baseline_run": str(args.baseline), "ml_run": str(args.ml),
                      "threads": mm.get("timing", {}).get("threads"),
                      "object_shape": mm.get("object_shape")})
    except ValueError as exc:
        raise CLIError(f"evaluation failed: {exc}") from exc
    shape = mb["object_shape"]
    obj_b = io.read_complex(Path(args.baseline) / "object.bin", shape)
    obj_m = io.read_complex(Path(args.ml) / "object.bin", mm["object_shape"])
    maps = difference_maps(obj_b, obj_m, crop=args.crop)
    report.metadata["difference_summary"] = maps["summary"]
    out = Path(args.out)
    with io.atomic_dir(out) as tmp:
        write_report(tmp, report)
        with open(tmp / "curves.csv", "w") as fh:
            fh.write("iteration,baseline_amplitude_mse,baseline_poisson_nll,ml_amplitude_mse,ml_poisson_nll\n")
            fh.write(f"0,,{mb['initial_nll']!r},,{mm['initial_nll']!r}\n")
            for i in range(max(len(base_rows), len(ml_rows))):
                cells = []
                for rows in (base_rows, ml_rows):
                    cells += [repr(v) for v in rows[i][1:]] if i < len(rows) else ["", ""]
                fh.write(",".join([str(i + 1), *cells]) + "\n")
        phase_range = (-np.pi, np.pi)
        for key, img in maps.items():
            if key == "summary":
                continue
            lims = phase_range if key.startswith("phase_") and key != "phase_diff" else (None, None)
            write_pgm16(tmp / f"{key}.pgm", img, *lims)
        io.write_manifest(tmp, _manifest("evaluate", args, kind="evaluation",
                                         eval_config=asdict(ecfg)))
    print(report.summary())
    return out


def cmd_sweep(args) -> Path:
    data, _, dmanifest = io.load_dataset(args.dataset)
    physics = _physics_for(dmanifest, data, None)
    ecfg = engine_config_for(data, load_config(args.config), args)
    operator = None
    if args.operator and args.operator.lower() != "none":
        operator = UNetOperator.load(args.operator)
    values = [float(v) if args.parameter == "lr" else int(v) for v in args.values.split(",")]
    out = Path(args.out)
    with io.atomic_dir(out) as tmp:
        rows = sweep(args.parameter, values, ecfg, data, physics, operator=operator,
                     eval_cfg=EvalConfig(i_ref=args.i_ref), csv_path=tmp / "sweep.csv",
                     concurrent=args.concurrent)
        io.write_manifest(tmp, _manifest("sweep", args, kind="sweep", rows=rows))
    for r in rows:
        print(f"{r['parameter']}={r['value']}: i_eps={r['i_epsilon']} ({r['status']})")
    return out


def _call(argv) -> None:
    code = main([str(a) for a in argv])
    if code:
        raise CLIError(f"pipeline step failed (exit {code}): ptyff {' '.join(map(str, argv[:2]))}")


def cmd_pipeline(args) -> Path:
    """simulate -> reconstruct xN -> build-pairs -> train-ff -> reconstruct with
    operator -> evaluate, all from one master seed."""
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    seeds = corpus_seeds(2, args.seed)
    common = ["--threads", str(_threads(args.threads))]
    cfg = ["--config", str(args.config)] if args.config else []
    iters = ["--iterations", str(args.iterations)]
    _call(["simulate", *cfg, "--out", str(out / "train_data"), "--count", str(args.n_train),
          "--seed", str(seeds[0])])
    _call(["simulate", *cfg, "--out", str(out / "test_data"), "--count", str(args.n_test),
          "--seed", str(seeds[1])])
    train_runs = []
    for i in range(args.n_train):
        run_dir = out / "train_runs" / f"run_{i:03d}"
        _call(["reconstruct", str(out / "train_data" / f"dataset_{i:03d}"), "--out", str(run_dir),
              "--operator", "none", "--snapshots", f"{args.input_iteration},{args.iterations}",
              "--seed", str(args.seed + i), *iters, *common, *cfg])
        train_runs.append(str(run_dir))
    _call(["build-pairs", *train_runs, "--out", str(out / "pairs"), "--patch-size",
          str(args.patch_size), "--n-patches", str(args.n_patches), "--seed", str(args.seed),
          "--input-iteration", str(args.input_iteration),
          "--target-iteration", str(args.iterations)])
    _call(["train-ff", str(out / "pairs"), "--out", str(out / "weights"), "--epochs",
          str(args.epochs), "--seed", str(args.seed), *cfg])
    summary = []
    for i in range(args.n_test):
        ds = str(out / "test_data" / f"dataset_{i:03d}")
        base = out / "test_runs" / f"baseline_{i:03d}"
        ml = out / "test_runs" / f"ml_{i:03d}"
        seed = ["--seed", str(args.seed + 1000 + i)]
        _call(["reconstruct", ds, "--out", str(base), "--operator", "none", *seed, *iters,
              *common, *cfg])
        _call(["reconstruct", ds, "--out", str(ml), "--operator", str(out / "weights"),
              "--i-ml", str(args.i_ml), *seed, *iters, *common, *cfg])
        ev = out / "evaluation" / f"test_{i:03d}"
        _call(["evaluate", str(base), str(ml), "--out", str(ev), "--i-ref", str(args.i_ref)])
        summary.append(json.loads((ev / "report.json").read_text()))
    (out / "summary.json").write_text(json.dumps(
        [{k: r[k] for k in ("i_epsilon", "epsilon", "iteration_speedup", "speedup",
                            "baseline_final_nll", "ml_final_nll", "final_nll_relative_gap")}
         for r in summary], indent=2))
    return out


# -- argument parsing ----------------------------------------------------------

def _engine_flags(p):
    p.add_argument("--config", default=None, help="JSON config file")
    p.add_argument("--iterations", type=int, default=None)
    p.add_argument("--i-ml", dest="i_ml", default=None, help="insertion iteration or 'none'")
    p.add_argument("--batch-size", dest="batch_size", type=int, default=None)
    p.add_argument("--lr", type=float, default=None)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--snapshots", default=None, help="comma-separated iterations, e.g. 5,100")
    p.add_argument("--threads", type=int, default=None,
                   help=f"gradient workers (default ${THREADS_ENV} or 1; 1 is bitwise deterministic)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ptyff", description=__doc__.split("\n\n")[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="write a synthetic dataset")
    p.add_argument("config", nargs="?", default=None)
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=None, help="texture seed (master seed with --count)")
    p.add_argument("--count", type=int, default=None,
                   help="write COUNT datasets as OUT/dataset_NNN from a master seed")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("reconstruct", help="run the iterative solver")
    p.add_argument("dataset")
    p.add_argument("--out", required=True)
    p.add_argument("--operator", default="none", help="weights directory or 'none'")
    p.add_argument("--modes", type=int, default=None)
    _engine_flags(p)
    p.set_defaults(func=cmd_reconstruct)

    p = sub.add_parser("build-pairs", help="cut co-located training patches from run snapshots")
    p.add_argument("runs", nargs="+")
    p.add_argument("--out", required=True)
    p.add_argument("--patch-size", dest="patch_size", type=int, default=64)
    p.add_argument("--n-patches", dest="n_patches", type=int, default=8)
    p.add_argument("--input-iteration", dest="input_iteration", type=int, default=5)
    p.add_argument("--target-iteration", dest="target_iteration", type=int, default=100)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_build_pairs)

    p = sub.add_parser("train-ff", help="train the fast-forward U-Net")
    p.add_argument("pairs")
    p.add_argument("--out", required=True)
    p.add_argument("--config", default=None)
    p.add_argument("--epochs", type=int, default=None)
    p.add_argument("--batch-size", dest="batch_size", type=int, default=None)
    p.add_argument("--lr", type=float, default=None)
    p.add_argument("--lr-step", dest="lr_step", type=int, default=None)
    p.add_argument("--lr-decay", dest="lr_decay", type=float, default=None)
    p.add_argument("--split", type=float, default=None, help="training fraction (default 0.98)")
    p.add_argument("--c-base", dest="c_base", type=int, default=None)
    p.add_argument("--depth", type=int, default=None)
    p.add_argument("--growth", type=float, default=None)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--no-augment", dest="no_augment", action="store_true")
    p.set_defaults(func=cmd_train_ff)

    p = sub.add_parser("evaluate", help="compare a baseline run with an ML run")
    p.add_argument("baseline")
    p.add_argument("ml")
    p.add_argument("--out", required=True)
    p.add_argument("--i-ref", dest="i_ref", type=int, default=50)
    p.add_argument("--epsilon-fraction", dest="epsilon_fraction", type=float, default=0.01)
    p.add_argument("--crop", type=int, default=0, help="pixels cropped from each side of the maps")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("sweep", help="convergence iteration versus one engine setting")
    p.add_argument("dataset")
    p.add_argument("--out", required=True)
    p.add_argument("--parameter", choices=["i_ml", "lr", "batch_size"], required=True)
    p.add_argument("--values", required=True)
    p.add_argument("--operator", default="none")
    p.add_argument("--i-ref", dest="i_ref", type=int, default=50)
    p.add_argument("--concurrent", type=int, default=1, help="engine runs in flight at once")
    _engine_flags(p)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("pipeline", help="end-to-end run from one master seed")
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--config", default=None)
    p.add_argument("--n-train", dest="n_train", type=int, default=20)
    p.add_argument("--n-test", dest="n_test", type=int, default=3)
    p.add_argument("--iterations", type=int, default=100)
    p.add_argument("--input-iteration", dest="input_iteration", type=int, default=5)
    p.add_argument("--i-ml", dest="i_ml", type=int, default=5)
    p.add_argument("--i-ref", dest="i_ref", type=int, default=50)
    p.add_argument("--patch-size", dest="patch_size", type=int, default=64)
    p.add_argument("--n-patches", dest="n_patches", type=int, default=8)
    p.add_argument("--epochs", type=int, default=TrainConfig().epochs)
    p.add_argument("--threads", type=int, default=None)
    p.set_defaults(func=cmd_pipeline)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if not logging.getLogger().handlers:
        logging.basicConfig(stream=sys.stderr, format="%(levelname)s %(name)s: %(message)s",
                            level=logging.INFO if args.verbose else logging.WARNING)
    try:
        args.func(args)
    except CLIError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (OSError, ValueError, RuntimeError, FloatingPointError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
