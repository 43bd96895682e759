"""Executable checks of the theoretical properties, with brute-force oracles.

Every check returns an ``OracleReport`` carrying the bound it tests, the
measured value and pass/fail.  All randomness comes from explicit generators.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from itertools import permutations
from typing import Optional, Sequence

import numpy as np
import scipy.optimize

from .encoder import min_gap
from .ensemble import exact_majority_error, hoeffding_majority_bound, simulate_majority_error
from .layer import RankingFilter, SortLayer, accumulate, reorder, vote_matrix
from .perm import (Permutation, footrule, identity, kendall_tau, make_rng,
                   random_permutation, reverse)


@dataclass
class OracleReport:
    name: str
    trials: int
    violations: int
    bound: float
    measured: float
    passed: bool
    details: dict = field(default_factory=dict)

    def line(self) -> str:
        status = "SKIP" if self.details.get("skipped") else ("PASS" if self.passed else "FAIL")
        return (f"{status}  {self.name:<28} trials={self.trials:<7} violations={self.violations:<5} "
                f"bound={self.bound:.6g} measured={self.measured:.6g}")


# -- metric suite ----------------------------------------------------------------

def check_metric_suite(V: int, pairs: int, rng: np.random.Generator) -> OracleReport:
    """Kendall/footrule sandwich on random pairs plus the diameter identity."""
    bad = 0
    worst = 0.0
    for _ in range(pairs):
        a, b = random_permutation(V, rng), random_permutation(V, rng)
        dk, df = kendall_tau(a, b), footrule(a, b)
        if not dk <= df <= 2 * dk:
            bad += 1
        if dk:
            worst = max(worst, df / dk)
    diameter = footrule(identity(V), reverse(V))
    ok_diam = diameter == V * V // 2
    return OracleReport(f"metric_suite[V={V}]", pairs, bad + (not ok_diam), 2.0, worst,
                        bad == 0 and ok_diam, {"diameter": diameter})


# -- argsort stability -------------------------------------------------------------

def _distinct_vector(d: int, rng: np.random.Generator) -> np.ndarray:
    while True:
        z = rng.normal(size=d)
        if np.unique(z).size == d:
            return z


def check_stability(trials: int, d: int, rng: np.random.Generator,
                    radius_factor: float = 0.999) -> OracleReport:
    """Perturb by ``||eps||_inf < radius_factor * min_gap / 2`` and count order changes.

    With ``radius_factor < 1`` the theorem forbids any change; larger factors
    probe the boundary and are reported without a pass requirement.
    """
    bad = 0
    for _ in range(trials):
        z = _distinct_vector(d, rng)
        r = radius_factor * min_gap(z) / 2
        eps = rng.uniform(-r, r, size=d)
        if not np.array_equal(np.argsort(-z, kind="stable"), np.argsort(-(z + eps), kind="stable")):
            bad += 1
    passed = bad == 0 if radius_factor < 1 else True
    return OracleReport(f"stability[d={d}]", trials, bad, 0.0, float(bad), passed,
                        {"radius_factor": radius_factor})


def gaussian_flip_bound(d: int, gap: float, sigma: float) -> float:
    return math.comb(d, 2) * math.exp(-gap * gap / (4 * sigma * sigma))


def check_gaussian_bound(d: int, sigma: Optional[float], trials: int,
                         rng: np.random.Generator, z=None) -> OracleReport:
    """Monte Carlo rate of argsort changes under N(0, sigma^2) noise vs the union bound.

    With ``sigma=None`` the noise scale is ``min_gap / 4``.
    """
    z = _distinct_vector(d, rng) if z is None else np.asarray(z, dtype=np.float64)
    gap = min_gap(z)
    sigma = gap / 4 if sigma is None else sigma
    base = np.argsort(-z, kind="stable")
    noisy = z + rng.normal(0.0, sigma, size=(trials, d)) if sigma > 0 else np.broadcast_to(z, (trials, d))
    flips = np.any(np.argsort(-noisy, axis=1, kind="stable") != base, axis=1)
    rate = float(flips.mean())
    stderr = math.sqrt(max(rate * (1 - rate), 1.0 / trials) / trials)
    bound = gaussian_flip_bound(d, gap, sigma) if sigma > 0 else 0.0
    return OracleReport(f"gaussian_bound[d={d}]", trials, int(flips.sum()), bound, rate,
                        rate <= bound + 3 * stderr, {"sigma": sigma, "min_gap": gap,
                                                     "stderr": stderr})


# -- capacity -----------------------------------------------------------------------

def ordinal_capacity_bits(d: int) -> float:
    """log2(d!) summed term by term."""
    if d < 0:
        raise ValueError("d must be >= 0")
    return float(sum(math.log2(i) for i in range(2, d + 1)))


def check_capacity() -> OracleReport:
    exact = [abs(ordinal_capacity_bits(d) - math.log2(math.factorial(d))) for d in range(1, 21)]
    bits64 = ordinal_capacity_bits(64)
    ok = abs(bits64 - 296.0) <= 0.5 and max(exact) < 1e-9
    return OracleReport("capacity", 20, sum(e >= 1e-9 for e in exact), 296.0, bits64, ok)


# -- Mallows model -------------------------------------------------------------------

@dataclass(frozen=True)
class MallowsSpec:
    center: Permutation
    lam: float

    def __post_init__(self):
        if not self.lam > 0:
            raise ValueError("lambda must be positive")


def mallows_exact(spec: MallowsSpec) -> tuple[np.ndarray, np.ndarray]:
    """All of S_V (lexicographic, position-ordered) with their exact probabilities."""
    V = spec.center.V
    perms = np.array(list(permutations(range(V))), dtype=np.int64)
    pos = np.argsort(perms, axis=1)
    d = np.abs(pos - spec.center.positions).sum(axis=1)
    w = np.exp(-spec.lam * (d - d.min()))
    return perms, w / w.sum()


def sample_mallows(spec: MallowsSpec, count: int, rng: np.random.Generator,
                   burn_in: Optional[int] = None, thin: Optional[int] = None) -> np.ndarray:
    """Metropolis chain on S_V with adjacent-transposition proposals.

    Targets ``P(pi) ~ exp(-lam * footrule(pi, center))``.  Defaults: burn-in
    ``10 V^2`` steps and one kept sample every ``V^2`` steps.  Returns a
    ``count x V`` array of position-ordered samples.
    """
    V = spec.center.V
    burn_in = 10 * V * V if burn_in is None else burn_in
    thin = V * V if thin is None else thin
    out = np.empty((count, V), dtype=np.int64)
    if V == 1:
        out[:] = 0
        return out
    target = spec.center.positions.tolist()
    items = spec.center.items.tolist()
    lam = spec.lam
    total = burn_in + count * thin
    props = rng.integers(0, V - 1, size=total).tolist()
    unif = rng.random(total).tolist()
    kept = 0
    for step in range(total):
        p = props[step]
        a, b = items[p], items[p + 1]
        # a moves p -> p+1, b moves p+1 -> p
        delta = (abs(p + 1 - target[a]) - abs(p - target[a])
                 + abs(p - target[b]) - abs(p + 1 - target[b]))
        if delta <= 0 or unif[step] < math.exp(-lam * delta):
            items[p], items[p + 1] = b, a
        if step >= burn_in and (step - burn_in + 1) % thin == 0:
            out[kept] = items
            kept += 1
    return out


def check_mallows_sampler(V: int, lam: float, count: int,
                          rng: np.random.Generator) -> OracleReport:
    """Pearson chi-square of sampler frequencies against exact enumeration."""
    import scipy.stats

    center = random_permutation(V, rng)
    spec = MallowsSpec(center, lam)
    perms, probs = mallows_exact(spec)
    index = {tuple(p): i for i, p in enumerate(perms.tolist())}
    samples = sample_mallows(spec, count, rng)
    counts = np.zeros(len(perms))
    for s in samples.tolist():
        counts[index[tuple(s)]] += 1
    expected = probs * count
    # pool sparse cells so every expected count is >= 5
    order = np.argsort(expected)
    obs_b, exp_b, acc_o, acc_e = [], [], 0.0, 0.0
    for i in order:
        acc_o += counts[i]
        acc_e += expected[i]
        if acc_e >= 5:
            obs_b.append(acc_o)
            exp_b.append(acc_e)
            acc_o = acc_e = 0.0
    if acc_e > 0:
        obs_b[-1] += acc_o
        exp_b[-1] += acc_e
    stat, p = scipy.stats.chisquare(obs_b, exp_b)
    return OracleReport(f"mallows_sampler[V={V},lam={lam}]", count, int(p <= 0.01), 0.01, float(p),
                        p > 0.01, {"chi2": float(stat), "cells": len(obs_b)})


def expected_positions(spec: MallowsSpec) -> np.ndarray:
    perms, probs = mallows_exact(spec)
    return probs @ np.argsort(perms, axis=1)


# -- accumulation consistency and the footrule median ---------------------------------

def accumulate_samples(samples: np.ndarray, V: int, init: Optional[Permutation] = None,
                       eta: float = 1.0) -> RankingFilter:
    """Feed samples one by one through accumulate + reorder of a fresh filter."""
    filt = RankingFilter(init if init is not None else identity(V))
    for s in samples:
        accumulate(filt, vote_matrix(s, V), eta)
        reorder(filt)
    return filt


def footrule_median_bruteforce(samples: np.ndarray, V: int) -> Permutation:
    """Exact argmin over S_V of the summed footrule to ``samples``.

    Ties resolve to the lexicographically smallest position-ordered list.
    """
    if V > 8:
        raise ValueError("brute force is limited to V <= 8")
    cost = _placement_cost(samples, V)
    perms = np.array(list(permutations(range(V))), dtype=np.int64)
    # perms[:, p] is the item at position p; cost[item, position]
    totals = cost[perms, np.arange(V)].sum(axis=1)
    return Permutation(perms[int(np.argmin(totals))])


def footrule_median_assignment(samples: np.ndarray, V: int) -> tuple[Permutation, float]:
    """Footrule median as a linear assignment of items to positions."""
    cost = _placement_cost(samples, V)
    rows, cols = scipy.optimize.linear_sum_assignment(cost)
    items = np.empty(V, dtype=np.int64)
    items[cols] = rows
    return Permutation(items), float(cost[rows, cols].sum())


def _placement_cost(samples: np.ndarray, V: int) -> np.ndarray:
    # cost[v, k] = sum over samples of |position of v in sample - k|
    samples = np.atleast_2d(np.asarray(samples, dtype=np.int64))
    pos = np.argsort(samples, axis=1)
    counts = np.zeros((V, V))
    np.add.at(counts, (np.arange(V)[None, :].repeat(len(pos), 0), pos), 1)
    k = np.arange(V)
    return counts @ np.abs(k[:, None] - k[None, :])


def check_accumulation_consistency(V: int, lam: float, T: int, runs: int,
                                   rng: np.random.Generator,
                                   min_rate: float = 0.95) -> OracleReport:
    """Recovery rate of the Mallows centre by the accumulation rule over seeded runs."""
    hits = 0
    gaps = []
    for _ in range(runs):
        spec = MallowsSpec(random_permutation(V, rng), lam)
        samples = sample_mallows(spec, T, rng)
        filt = accumulate_samples(samples, V)
        hits += filt.ordering == spec.center
        if V <= 8:
            e = np.sort(expected_positions(spec))
            gaps.append(float(np.diff(e).min()))
    rate = hits / runs
    return OracleReport(f"accumulation[V={V},lam={lam},T={T}]", runs, runs - hits, min_rate, rate,
                        rate >= min_rate, {"expected_position_gap": min(gaps) if gaps else None})


def check_mle_agreement(V: int, lam: float, T: int, runs: int,
                        rng: np.random.Generator) -> OracleReport:
    """Accumulation result vs brute-force footrule median in the concentrated regime."""
    agree = 0
    for _ in range(runs):
        spec = MallowsSpec(random_permutation(V, rng), lam)
        samples = sample_mallows(spec, T, rng)
        med = footrule_median_bruteforce(samples, V)
        acc = accumulate_samples(samples, V).ordering
        agree += (med == acc) and (med == spec.center)
    return OracleReport(f"mle_median[V={V},lam={lam},T={T}]", runs, runs - agree, 1.0,
                        agree / runs, agree == runs)


# -- manipulability -------------------------------------------------------------------

def min_adversarial_footrule(layer: SortLayer, inp: Permutation,
                             all_perms: Optional[np.ndarray] = None) -> Optional[int]:
    """Smallest footrule move of ``inp`` that changes the layer's output ranking.

    Searches footrule balls of growing radius over all of S_V; None when no
    input changes the output.
    """
    V = layer.V
    if all_perms is None:
        all_perms = np.array(list(permutations(range(V))), dtype=np.int64)
    pos = np.argsort(all_perms, axis=1)
    radius = np.abs(pos - inp.positions).sum(axis=1)
    base = layer.forward(inp).output
    outputs = layer.forward_batch(all_perms)[1]
    for r in np.unique(radius):
        if r == 0:
            continue
        ball = radius == r
        if np.any(np.any(outputs[ball] != base, axis=1)):
            return int(r)
    return None


def check_manipulability(V: int, N: int, banks: int, inputs_per_bank: int,
                         rng: np.random.Generator) -> OracleReport:
    """For each random bank, look for a sampled input with Delta* <= 2(N - 1)."""
    bound = 2 * (N - 1)
    if N < 2:
        return OracleReport(f"manipulability[V={V},N={N}]", 0, 0, bound, float("nan"), True,
                            {"skipped": True})
    all_perms = np.array(list(permutations(range(V))), dtype=np.int64)
    failed_banks = 0
    best = []
    for _ in range(banks):
        layer = SortLayer.random(N, V, rng)
        found = []
        for _ in range(inputs_per_bank):
            d = min_adversarial_footrule(layer, random_permutation(V, rng), all_perms)
            if d is not None:
                found.append(d)
        m = min(found) if found else math.inf
        best.append(m)
        failed_banks += not m <= bound
    return OracleReport(f"manipulability[V={V},N={N}]", banks, failed_banks, bound,
                        float(max(best)), failed_banks == 0)


# -- polynomial noise -------------------------------------------------------------------

def monomial_noise_variance(x, indices: Sequence[int], sigma: float) -> float:
    """First-order variance sigma^2 * ||grad f(x)||^2 of ``f = prod x[indices]``."""
    x = np.asarray(x, dtype=np.float64)
    idx = list(indices)
    grad = np.zeros_like(x)
    for s in range(len(idx)):
        rest = idx[:s] + idx[s + 1:]
        grad[idx[s]] += np.prod(x[rest]) if rest else 1.0
    return float(sigma * sigma * (grad ** 2).sum())


def check_poly_noise(x, indices: Sequence[int], sigma: float, trials: int,
                     rng: np.random.Generator, rel_tol: float = 0.05) -> OracleReport:
    x = np.asarray(x, dtype=np.float64)
    idx = list(indices)
    eps = rng.normal(0.0, sigma, size=(trials, x.size))
    diff = np.prod((x + eps)[:, idx], axis=1) - np.prod(x[idx])
    measured = float(diff.var())
    predicted = monomial_noise_variance(x, idx, sigma)
    rel = abs(measured - predicted) / predicted
    return OracleReport(f"poly_noise[{','.join(map(str, idx))}]", trials, int(rel > rel_tol),
                        predicted, measured, rel <= rel_tol, {"relative_error": rel})


# -- ensemble bound -----------------------------------------------------------------------

def check_ensemble_bound(K: int, p: float, trials: int, rng: np.random.Generator) -> OracleReport:
    exact = exact_majority_error(K, p)
    bound = hoeffding_majority_bound(K, p)
    sim = simulate_majority_error(K, p, trials, rng)
    stderr = math.sqrt(exact * (1 - exact) / trials)
    ok = abs(sim - exact) <= 3 * stderr and sim <= bound
    return OracleReport(f"ensemble_bound[K={K},p={p}]", trials, int(not ok), bound, sim, ok,
                        {"exact": exact, "stderr": stderr})


# -- full suite ------------------------------------------------------------------------------

def run_all(seed: int = 0, quick: bool = False) -> list[OracleReport]:
    """Every oracle on disjoint seeds derived from ``seed``."""
    scale = 10 if quick else 1
    r = lambda k: make_rng(seed * 1009 + k)  # noqa: E731
    reports = []
    for i, V in enumerate((5, 16, 64)):
        reports.append(check_metric_suite(V, 10_000 // scale, r(i)))
    reports.append(check_stability(10_000 // scale, 8, r(10)))
    reports.append(check_gaussian_bound(4, None, 100_000 // scale, r(11)))
    reports.append(check_capacity())
    reports.append(check_mallows_sampler(4, 1.0, 20_000 // scale, r(12)))
    reports.append(check_accumulation_consistency(5, 2.0, 2000 // scale, 50 // (5 if quick else 1), r(13)))
    reports.append(check_mle_agreement(5, 3.0, 500 // scale, 10 // (5 if quick else 1), r(14)))
    reports.append(check_manipulability(5, 3, 20 // (4 if quick else 1), 5, r(15)))
    x = np.array([2.0, 3.0, -1.5])
    for i, idx in enumerate(([0], [0, 1], [0, 1, 2], [0, 0])):
        reports.append(check_poly_noise(x, idx, 1e-3, 100_000, r(20 + i)))
    reports.append(check_ensemble_bound(7, 0.2, 200_000, r(30)))
    return reports
