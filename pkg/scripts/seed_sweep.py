"""Learning gain and frozen-output ablation across split seeds on Iris.

Usage: python3 scripts/seed_sweep.py [first_seed] [count]
"""

import sys
from pathlib import Path

import numpy as np

from arrowflow.config import RunConfig
from arrowflow.data import load_csv
from arrowflow.experiment import run_experiment

IRIS = Path(__file__).resolve().parent.parent / "tests" / "fixtures" / "iris.csv"


def main(first: int = 40, count: int = 8) -> None:
    ds = load_csv(IRIS)
    print("seed,af_error,knn_error,learning_gain,llu_false,llu_true")
    gains, diffs = [], []
    for seed in range(first, first + count):
        best = run_experiment(RunConfig(layers=[64, 128], embed_dim=16, pol_degree=3, seed=seed),
                              ds, with_knn=True)
        frozen = run_experiment(RunConfig(seed=seed), ds).test_errors.mean()
        learned = run_experiment(RunConfig(seed=seed, llu=True), ds).test_errors.mean()
        af, knn = best.test_errors.mean(), best.knn_errors(1).mean()
        gains.append(best.learning_gain(1))
        diffs.append(frozen - learned)
        print(f"{seed},{100 * af:.2f},{100 * knn:.2f},{gains[-1]:.2f},"
              f"{100 * frozen:.2f},{100 * learned:.2f}", flush=True)
    print(f"# median gain {np.median(gains):.2f}; mean llu gap {100 * np.mean(diffs):+.2f} pp")


if __name__ == "__main__":
    main(*(int(a) for a in sys.argv[1:3]))
