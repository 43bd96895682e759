"""Experiment orchestration: repeated simulations, model selection, kNN comparison."""

from __future__ import annotations

import csv
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from .config import RunConfig, simulation_seed
from .data import DataError, Dataset, TrainStats, error_rate, stratified_split
from .ensemble import EnsembleModel, build_ensemble, knn_for_model, learning_gain


@dataclass
class Simulation:
    index: int
    seed: int
    model: EnsembleModel
    train_error: float
    test_error: float
    knn_errors: dict = field(default_factory=dict)  # k_neighbors -> error


@dataclass
class ExperimentResult:
    config: RunConfig
    dataset: str
    train: Dataset
    test: Dataset
    train_stats: TrainStats
    simulations: list

    @property
    def test_errors(self) -> np.ndarray:
        return np.array([s.test_error for s in self.simulations])

    @property
    def best(self) -> Simulation:
        """Lowest training error; ties go to the earlier simulation."""
        return min(self.simulations, key=lambda s: (s.train_error, s.index))

    def knn_errors(self, k: int) -> np.ndarray:
        return np.array([s.knn_errors[k] for s in self.simulations])

    def learning_gain(self, k: Optional[int] = None) -> float:
        k = self.config.knn_k[0] if k is None else k
        return learning_gain(float(self.knn_errors(k).mean()), float(self.test_errors.mean()))

    def summary_row(self) -> dict:
        e = self.test_errors
        return {"dataset": self.dataset, "config-id": self.config.config_hash(),
                "perturbation": "none", "error_mean": round(100 * float(e.mean()), 4),
                "error_std": round(100 * float(e.std()), 4), "n_reps": int(e.size)}

    def knn_rows(self) -> list[dict]:
        rows = []
        af = float(self.test_errors.mean())
        for k in self.config.knn_k:
            ke = self.knn_errors(k)
            rows.append({"dataset": self.dataset, "config-id": self.config.config_hash(),
                         "k_neighbors": k, "arrowflow_error": round(100 * af, 4),
                         "knn_error": round(100 * float(ke.mean()), 4),
                         "knn_std": round(100 * float(ke.std()), 4),
                         "learning_gain": round(self.learning_gain(k), 4),
                         "n_reps": int(ke.size)})
        return rows


def _run_simulation(args) -> Simulation:
    config, s, train, test, with_knn = args
    seed = simulation_seed(config.seed, s)
    model = build_ensemble(config.ensemble_config(), train.X, train.y, seed, classes=train.C)
    sim = Simulation(s, seed, model,
                     error_rate(model.predict_batch(train.X), train.y),
                     error_rate(model.predict_batch(test.X), test.y))
    if with_knn:
        for k in config.knn_k:
            pred, _ = knn_for_model(model, train.X, train.y, test.X, k)
            sim.knn_errors[k] = error_rate(pred, test.y)
    return sim


def run_experiment(config: RunConfig, ds: Dataset, threads: int = 1,
                   with_knn: bool = False) -> ExperimentResult:
    """Split once (seed = ``config.seed``) and train ``config.simulations`` ensembles."""
    if ds.C < 2:
        raise DataError("need at least two classes")
    train, test = stratified_split(ds, config.test_fraction, config.seed)
    jobs = [(config, s, train, test, with_knn) for s in range(config.simulations)]
    if threads > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            sims = list(pool.map(_run_simulation, jobs))
    else:
        sims = [_run_simulation(j) for j in jobs]
    return ExperimentResult(config, ds.name, train, test, TrainStats.of(train), sims)


LOG_FIELDS = ("simulation", "view", "t", "eta", "train_error")


def write_train_log(result: ExperimentResult, path) -> None:
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(LOG_FIELDS)
        for sim in result.simulations:
            for k, view in enumerate(sim.model.views):
                for t, eta, err in view.train_log:
                    w.writerow([sim.index, k, t, repr(eta), "" if err is None else repr(err)])
