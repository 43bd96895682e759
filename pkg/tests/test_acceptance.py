"""Acceptance criteria 1 to 13.

Each test prints one ``CRITERION n PASS|FAIL`` line (visible in ``pytest -v``
output) and then asserts the same condition.  Wall-clock limits are part of
the pass condition.
"""

import time

import numpy as np
import pytest

from arrowflow.config import RunConfig
from arrowflow.data import MONOTONE, PerturbationSpec, perturb, stratified_split
from arrowflow.energy import profile_inference, profile_mlp_layer, profile_sort_layer
from arrowflow.ensemble import EnsembleConfig, build_ensemble
from arrowflow.experiment import run_experiment
from arrowflow.layer import RankingFilter, SortLayer, accumulate, reorder, vote_matrix
from arrowflow.oracles import (check_accumulation_consistency, check_capacity,
                               check_ensemble_bound, check_gaussian_bound, check_manipulability,
                               check_metric_suite, check_mle_agreement, check_poly_noise,
                               check_stability, ordinal_capacity_bits)
from arrowflow.perm import Permutation, identity, make_rng


@pytest.fixture
def verdict(capsys):
    def emit(n, ok, detail, elapsed, limit):
        ok = bool(ok) and elapsed <= limit
        with capsys.disabled():
            print(f"\nCRITERION {n:>2} {'PASS' if ok else 'FAIL'}  {detail}  "
                  f"[{elapsed:.2f}s / limit {limit:g}s]")
        assert ok, detail
    return emit


class Timer:
    def __enter__(self):
        self.t0 = time.perf_counter()
        return self

    def __exit__(self, *exc):
        self.elapsed = time.perf_counter() - self.t0


# Iris headline configuration shared by criteria 9 and 10.
IRIS_BEST = RunConfig(layers=[64, 128], embed_dim=16, pol_degree=3, views=7, knn_k=[1])
WINE_BEST = RunConfig(layers=[128], embed_dim=64, pol_degree=1, views=7)


@pytest.fixture(scope="module")
def iris_run(iris):
    with Timer() as t:
        result = run_experiment(IRIS_BEST, iris, with_knn=True)
    return result, t.elapsed


def test_c01_worked_examples(verdict):
    A, B, C, D, E = range(5)
    with Timer() as t:
        layer = SortLayer(np.array([[A, B, C, D, E], [C, E, A, B, D], [E, D, B, A, C]]))
        res = layer.forward(Permutation([C, A, E, B, D]))
        f = RankingFilter(identity(4))
        reorder(accumulate(f, vote_matrix([C, A, D, B], 4), 1.0))
    ok = (res.distances.tolist() == [8, 2, 12] and res.output.tolist() == [1, 0, 2]
          and f.ordering.items.tolist() == [A, C, B, D])
    verdict(1, ok, f"distances={res.distances.tolist()} output={res.output.tolist()} "
                   f"filter={f.ordering.items.tolist()}", t.elapsed, 1)


def test_c02_metric_suite(verdict):
    with Timer() as t:
        reports = [check_metric_suite(V, 10_000, make_rng(100 + V)) for V in (5, 16, 64)]
    viol = sum(r.violations for r in reports)
    verdict(2, all(r.passed for r in reports),
            f"violations={viol} over 3x10^4 pairs, max dF/dK="
            f"{max(r.measured for r in reports):.3f}", t.elapsed, 10)


def test_c03_stability(verdict):
    with Timer() as t:
        stab = check_stability(10_000, 8, make_rng(7))
        gauss = check_gaussian_bound(4, None, 100_000, make_rng(8))
    verdict(3, stab.passed and gauss.passed,
            f"argsort changes={stab.violations}/10^4; flip rate {gauss.measured:.4g} "
            f"<= bound {gauss.bound:.4g} + 3*{gauss.details['stderr']:.2g}", t.elapsed, 30)


def test_c04_capacity(verdict):
    with Timer() as t:
        rep = check_capacity()
        bits = ordinal_capacity_bits(64)
    verdict(4, rep.passed, f"log2(64!)={bits:.3f}, exact for d<=20", t.elapsed, 1)


def test_c05_accumulation_and_mle(verdict):
    with Timer() as t:
        acc = check_accumulation_consistency(5, 2.0, 2000, 50, make_rng(21))
        mle = check_mle_agreement(5, 3.0, 500, 10, make_rng(22))
    verdict(5, acc.passed and mle.passed,
            f"recovery {acc.measured:.2f} (>=0.95, lam=2, T=2000); median agreement "
            f"{mle.measured:.2f} (lam=3, T=500)", t.elapsed, 120)


def test_c06_ensemble_bound(verdict):
    with Timer() as t:
        rep = check_ensemble_bound(7, 0.2, 200_000, make_rng(30))
    verdict(6, rep.passed and abs(rep.details["exact"] - 0.0333) < 5e-5,
            f"simulated {rep.measured:.4f} vs exact {rep.details['exact']:.4f} "
            f"(3 se = {3 * rep.details['stderr']:.4f}), Hoeffding {rep.bound:.4f}",
            t.elapsed, 10)


def test_c07_energy_tables(verdict):
    with Timer() as t:
        s, m = profile_sort_layer(128, 64), profile_mlp_layer(128, 64)
        inf = profile_inference([256], 64, 7, 10)
        ratio = float(m.energy / s.energy)
    ok = (round(s.energy) == 2547 and round(m.energy) == 37914 and abs(ratio - 14.9) <= 0.05
          and round(inf.arrowflow.energy) == 35014 and round(inf.mlp.energy) == 43571)
    verdict(7, ok, f"per-layer {round(s.energy)} vs {round(m.energy)} pJ (ratio {ratio:.3f}); "
                   f"inference {round(inf.arrowflow.energy)} vs {round(inf.mlp.energy)} pJ",
            t.elapsed, 1)


def test_c08_monotone_invariance(verdict, iris):
    with Timer() as t:
        train, test = stratified_split(iris, 0.2, 42)
        cfg = EnsembleConfig(hidden_sizes=(64,), views=1, encoding="native")
        model = build_ensemble(cfg, train.X, train.y, seed=42, classes=iris.C)
        clean = model.predict_batch(test.X)
        same = {name: np.array_equal(clean, model.predict_batch(
            perturb(test, PerturbationSpec("monotone", name=name)).X)) for name in MONOTONE}
    verdict(8, all(same.values()), f"bitwise identical: {same}", t.elapsed, 30)


def test_c09_learning_gain(verdict, iris_run):
    result, elapsed = iris_run
    af = float(result.test_errors.mean())
    knn = float(result.knn_errors(1).mean())
    verdict(9, af <= knn / 2,
            f"ArrowFlow {100 * af:.2f}% vs kNN-on-permutations {100 * knn:.2f}% "
            f"(gain {result.learning_gain(1):.2f}x, need >=2x)", elapsed, 300)


def test_c10_clean_accuracy(verdict, iris_run, wine):
    result, iris_elapsed = iris_run
    with Timer() as t:
        wine_res = run_experiment(WINE_BEST, wine)
    iris_err = float(result.test_errors.mean())
    wine_err = float(wine_res.test_errors.mean())
    verdict(10, iris_err <= 0.08 and wine_err <= 0.10,
            f"Iris {100 * iris_err:.2f}+-{100 * result.test_errors.std():.2f}% (<=8%), "
            f"Wine {100 * wine_err:.2f}+-{100 * wine_res.test_errors.std():.2f}% (<=10%)",
            iris_elapsed + t.elapsed, 600)


def test_c11_frozen_output_ablation(verdict, iris):
    with Timer() as t:
        frozen = run_experiment(RunConfig(llu=False), iris).test_errors
        learned = run_experiment(RunConfig(llu=True), iris).test_errors
    verdict(11, frozen.mean() <= learned.mean() + 0.01,
            f"llu=false {100 * frozen.mean():.2f}% vs llu=true {100 * learned.mean():.2f}% "
            f"over 5 simulation seeds (need <= +1pp)", t.elapsed, 300)


def test_c12_poly_noise(verdict):
    x = np.array([2.0, 3.0, -1.5])
    cases = ([0], [0, 1], [0, 1, 2], [0, 0])
    with Timer() as t:
        reps = [check_poly_noise(x, idx, 1e-3, 100_000, make_rng(40 + i))
                for i, idx in enumerate(cases)]
    worst = max(r.details["relative_error"] for r in reps)
    verdict(12, all(r.passed for r in reps),
            f"max relative error {worst:.4f} over k=1,2,3 distinct and x_i^2", t.elapsed, 30)


def test_c13_manipulability(verdict):
    with Timer() as t:
        rep = check_manipulability(5, 3, 20, 5, make_rng(50))
    verdict(13, rep.passed, f"banks failing Delta*<=4: {rep.violations}/20, "
                            f"worst per-bank minimum {rep.measured:g}", t.elapsed, 60)
