"""Convergence iteration versus insertion point and learning rate.

Needs a trained weights directory (e.g. from ``ptyff pipeline``):

    python scripts/insertion_sweeps.py WEIGHTS_DIR --out sweeps/ [--seed 5]

Writes ``i_ml.csv`` and ``lr.csv``; each row holds i_epsilon for one run.
"""

import argparse
from dataclasses import replace
from pathlib import Path

import numpy as np

from ptyff.engine import EngineConfig, run
from ptyff.evalkit import EvalConfig, sweep
from ptyff.ffop import UNetOperator
from ptyff.simkit import SimConfig, synthesize


def main():
    ap = argparse.ArgumentParser(description=__doc__.split("\n\n")[0])
    ap.add_argument("weights")
    ap.add_argument("--out", required=True)
    ap.add_argument("--seed", type=int, default=5, help="texture seed of the test dataset")
    ap.add_argument("--iterations", type=int, default=100)
    ap.add_argument("--concurrent", type=int, default=1)
    args = ap.parse_args()

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    sim = SimConfig(texture_seed=args.seed)
    data, _ = synthesize(sim)
    cfg = EngineConfig.desk(sim.probe_size, iterations=args.iterations,
                            snapshot_iterations=())
    op = UNetOperator.load(args.weights)
    ecfg = EvalConfig()

    baseline = run(data, replace(cfg, i_ml=None), sim.physics).nll_curve()
    rows = sweep("i_ml", [1, 3, 5, 10, 20], cfg, data, sim.physics, operator=op, eval_cfg=ecfg,
                 baseline=baseline, csv_path=out / "i_ml.csv", concurrent=args.concurrent)
    for r in rows:
        print(f"i_ml={r['value']:>3}  i_eps={r['i_epsilon']}  final NLL {r['final_nll']:.6g}")

    # each learning rate is compared with a baseline run at that same rate
    rows = sweep("lr", [0.0025, 0.005], cfg, data, sim.physics, operator=op, eval_cfg=ecfg,
                 csv_path=out / "lr.csv", concurrent=args.concurrent)
    for r in rows:
        print(f"lr={r['value']:<7} i_eps={r['i_epsilon']}  final NLL {r['final_nll']:.6g}")
    np.savetxt(out / "baseline_nll.csv", baseline, header="poisson_nll", comments="")


if __name__ == "__main__":
    main()
