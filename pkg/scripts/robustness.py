"""Perturbation report for one trained Iris or Wine ensemble, as CSV on stdout.

Usage: python3 scripts/robustness.py [iris|wine]
"""

import csv
import sys
from pathlib import Path

from arrowflow.config import RunConfig
from arrowflow.data import REPORT_FIELDS, PerturbationSpec, evaluate, load_csv
from arrowflow.experiment import run_experiment

FIXTURES = Path(__file__).resolve().parent.parent / "tests" / "fixtures"
CONFIGS = {"iris": RunConfig(layers=[64, 128], embed_dim=16, pol_degree=3),
           "wine": RunConfig(layers=[128], embed_dim=64, pol_degree=1)}
SPECS = ["none", "gaussian:0.1", "gaussian:0.25", "gaussian:0.5", "gaussian:1", "gaussian:2",
         "mask:0.1", "mask:0.3", "per_gene_scale:0.3", "per_gene_scale:0.7"]


def main(name: str = "iris") -> None:
    cfg = CONFIGS[name]
    result = run_experiment(cfg, load_csv(FIXTURES / f"{name}.csv"))
    models = [s.model for s in result.simulations]
    w = csv.DictWriter(sys.stdout, fieldnames=list(REPORT_FIELDS), lineterminator="\n")
    w.writeheader()
    for text in SPECS:
        rep = evaluate(models, result.test, PerturbationSpec.parse(text), result.train_stats,
                       perturb_seeds=range(5))
        w.writerow(rep.row(name, cfg.config_hash()))


if __name__ == "__main__":
    main(*sys.argv[1:2])
