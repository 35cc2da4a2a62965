"""Operator-free solver convergence over several simulated objects.

    python scripts/baseline_convergence.py [--seeds 10] [--iterations 100]

Prints MSE(i)/MSE(1) at a few iterations and the iteration at which each
run comes within 1% of its own NLL range of its value at iteration 50.
"""

import argparse

import numpy as np

from ptyff.engine import EngineConfig, run
from ptyff.evalkit import iteration_to_epsilon
from ptyff.simkit import SimConfig, synthesize


def main():
    ap = argparse.ArgumentParser(description=__doc__.split("\n\n")[0])
    ap.add_argument("--seeds", type=int, default=10)
    ap.add_argument("--iterations", type=int, default=100)
    ap.add_argument("--photons", type=float, default=None, help="Poisson photons per pattern")
    args = ap.parse_args()

    marks = [m for m in (10, 25, 50, 100) if m <= args.iterations]
    print("seed  " + "  ".join(f"mse{m:>3}/mse1" for m in marks) + "  self i_eps")
    for seed in range(args.seeds):
        sim = SimConfig(texture_seed=seed, photons_per_pattern=args.photons)
        data, _ = synthesize(sim)
        cfg = EngineConfig.desk(sim.probe_size, iterations=args.iterations, i_ml=None,
                                rng_seed=seed, snapshot_iterations=())
        state = run(data, cfg, sim.physics)
        mse = state.mse_curve()
        nll = state.nll_curve()
        i_eps = iteration_to_epsilon(nll, nll)[0] if len(nll) > 50 else None
        ratios = "  ".join(f"{mse[m - 1] / mse[0]:>12.4f}" for m in marks)
        print(f"{seed:>4}  {ratios}  {i_eps!s:>10}")


if __name__ == "__main__":
    main()
