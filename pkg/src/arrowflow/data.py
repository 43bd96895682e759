"""Dataset ingestion, splits, perturbations and error reporting."""

from __future__ import annotations

import csv
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Callable, Optional, Sequence

import numpy as np

from .encoder import native_rank_encode  # noqa: F401  (re-exported)
from .perm import make_rng


class DataError(ValueError):
    pass


@dataclass
class Dataset:
    X: np.ndarray
    y: np.ndarray
    names: Optional[list] = None
    classes: Optional[list] = None  # original label values, index = class-id
    name: str = "data"

    def __post_init__(self):
        self.X = np.asarray(self.X, dtype=np.float64)
        self.y = np.asarray(self.y, dtype=np.int64)
        if self.X.ndim != 2 or self.X.shape[0] != self.y.shape[0]:
            raise DataError("X and y have inconsistent shapes")
        if self.classes is None:
            self.classes = list(range(int(self.y.max()) + 1)) if self.y.size else []

    @property
    def C(self) -> int:
        return len(self.classes)

    @property
    def n(self) -> int:
        return self.X.shape[0]

    def subset(self, idx) -> "Dataset":
        return replace(self, X=self.X[idx], y=self.y[idx])


def load_csv(path) -> Dataset:
    """Header row, numeric feature columns, label in the last column.

    Labels are mapped to dense ids in order of first appearance after sorting
    the distinct values (numerically when they all parse as numbers).
    """
    path = Path(path)
    try:
        with path.open(newline="") as fh:
            rows = [r for r in csv.reader(fh) if r and any(c.strip() for c in r)]
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc}") from exc
    if len(rows) < 2:
        raise DataError(f"{path}: need a header and at least one data row")
    header, body = rows[0], rows[1:]
    width = len(header)
    if width < 2:
        raise DataError(f"{path}: need at least one feature and a label column")
    X, raw = [], []
    for lineno, row in enumerate(body, start=2):
        if len(row) != width:
            raise DataError(f"{path}:{lineno}: expected {width} fields, got {len(row)}")
        try:
            X.append([float(c) for c in row[:-1]])
        except ValueError as exc:
            raise DataError(f"{path}:{lineno}: non-numeric feature ({exc})") from exc
        if any(v != v for v in X[-1]):
            raise DataError(f"{path}:{lineno}: NaN feature")
        raw.append(row[-1].strip())
    try:
        distinct = sorted(set(raw), key=float)
    except ValueError:
        distinct = sorted(set(raw))
    lookup = {v: i for i, v in enumerate(distinct)}
    y = np.array([lookup[v] for v in raw])
    return Dataset(np.array(X), y, header[:-1], distinct, path.stem)


def save_csv(ds: Dataset, path) -> None:
    names = ds.names or [f"x{i}" for i in range(ds.X.shape[1])]
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(list(names) + ["label"])
        for row, label in zip(ds.X, ds.y):
            w.writerow([repr(float(v)) for v in row] + [ds.classes[label]])


def stratified_split(ds: Dataset, test_fraction: float = 0.2,
                     seed: int = 42) -> tuple[Dataset, Dataset]:
    """Per-class proportional split; every class keeps at least one row on each side."""
    if not 0 < test_fraction < 1:
        raise DataError("test_fraction must be in (0, 1)")
    rng = make_rng(seed)
    train_idx, test_idx = [], []
    for c in range(ds.C):
        idx = np.flatnonzero(ds.y == c)
        if idx.size == 0:
            continue
        if idx.size < 2:
            raise DataError(f"class {ds.classes[c]!r} has fewer than 2 samples")
        idx = rng.permutation(idx)
        n_test = int(np.clip(round(test_fraction * idx.size), 1, idx.size - 1))
        test_idx.extend(idx[:n_test].tolist())
        train_idx.extend(idx[n_test:].tolist())
    return ds.subset(np.sort(train_idx)), ds.subset(np.sort(test_idx))


# -- perturbations ------------------------------------------------------------

MONOTONE = {
    "log1p": np.log1p,
    "sqrt_abs": lambda x: np.sqrt(np.abs(x)),
    "signed_square": lambda x: np.sign(x) * x * x,
    "scale_0.01": lambda x: x * 0.01,
    "scale_100": lambda x: x * 100.0,
}
KINDS = ("none", "gaussian", "mask", "rank_transform", "monotone", "per_gene_scale")


@dataclass(frozen=True)
class PerturbationSpec:
    kind: str = "none"
    sigma: float = 0.0
    fraction: float = 0.0
    name: str = ""
    seed: int = 0

    def __post_init__(self):
        if self.kind not in KINDS:
            raise DataError(f"unknown perturbation kind {self.kind!r}")
        if self.sigma < 0:
            raise DataError("sigma must be >= 0")
        if not 0 <= self.fraction <= 1:
            raise DataError("fraction must be in [0, 1]")
        if self.kind == "monotone" and self.name not in MONOTONE:
            raise DataError(f"monotone transform must be one of {sorted(MONOTONE)}")

    @classmethod
    def parse(cls, text: str, seed: int = 0) -> "PerturbationSpec":
        """``gaussian:0.5``, ``mask:0.1``, ``rank_transform``, ``monotone:log1p``,
        ``per_gene_scale:0.3`` or ``none``."""
        kind, _, arg = text.strip().partition(":")
        try:
            if kind in ("gaussian", "per_gene_scale"):
                return cls(kind, sigma=float(arg), seed=seed)
            if kind == "mask":
                return cls(kind, fraction=float(arg), seed=seed)
            if kind == "monotone":
                return cls(kind, name=arg, seed=seed)
        except ValueError as exc:
            raise DataError(f"bad perturbation argument in {text!r}") from exc
        return cls(kind, seed=seed)

    def label(self) -> str:
        if self.kind in ("gaussian", "per_gene_scale"):
            return f"{self.kind}:{self.sigma:g}"
        if self.kind == "mask":
            return f"mask:{self.fraction:g}"
        if self.kind == "monotone":
            return f"monotone:{self.name}"
        return self.kind

    def with_seed(self, seed: int) -> "PerturbationSpec":
        return replace(self, seed=seed)


@dataclass(frozen=True)
class TrainStats:
    means: np.ndarray
    stds: np.ndarray

    @classmethod
    def of(cls, ds: Dataset) -> "TrainStats":
        return cls(ds.X.mean(axis=0), ds.X.std(axis=0))


def rank_transform(X) -> np.ndarray:
    """Per-column ordinal ranks 0..n-1 (ties by row index)."""
    X = np.asarray(X, dtype=np.float64)
    order = np.argsort(X, axis=0, kind="stable")
    R = np.empty_like(order)
    np.put_along_axis(R, order, np.arange(X.shape[0])[:, None].repeat(X.shape[1], 1), axis=0)
    return R.astype(np.float64)


def perturb(ds: Dataset, spec: PerturbationSpec,
            train_stats: Optional[TrainStats] = None) -> Dataset:
    """Return a perturbed copy of ``ds``.  Noise and masking use train-split statistics."""
    X = ds.X.copy()
    rng = make_rng(spec.seed)
    if spec.kind == "none":
        pass
    elif spec.kind == "gaussian":
        if train_stats is None:
            raise DataError("gaussian noise needs train statistics")
        if spec.sigma > 0:
            X = X + rng.normal(size=X.shape) * (spec.sigma * train_stats.stds)
    elif spec.kind == "mask":
        if train_stats is None:
            raise DataError("masking needs train statistics")
        hit = rng.random(X.shape) < spec.fraction
        X = np.where(hit, np.broadcast_to(train_stats.means, X.shape), X)
    elif spec.kind == "rank_transform":
        X = rank_transform(X)
    elif spec.kind == "monotone":
        X = MONOTONE[spec.name](X)
    elif spec.kind == "per_gene_scale":
        X = X * np.exp(rng.normal(0.0, spec.sigma, size=X.shape[1]))
    return replace(ds, X=X)


# -- evaluation ----------------------------------------------------------------

@dataclass
class EvalReport:
    perturbation: str
    errors: np.ndarray  # outer perturbation seeds x inner models

    @property
    def error_mean(self) -> float:
        return float(self.errors.mean())

    @property
    def error_std(self) -> float:
        return float(self.errors.std())

    @property
    def n_reps(self) -> int:
        return int(self.errors.size)

    def row(self, dataset: str, config_id: str) -> dict:
        return {"dataset": dataset, "config-id": config_id, "perturbation": self.perturbation,
                "error_mean": round(100 * self.error_mean, 4),
                "error_std": round(100 * self.error_std, 4), "n_reps": self.n_reps}


REPORT_FIELDS = ("dataset", "config-id", "perturbation", "error_mean", "error_std", "n_reps")


def error_rate(pred, y) -> float:
    y = np.asarray(y)
    if y.size == 0:
        raise DataError("empty test set")
    return float(np.mean(np.asarray(pred) != y))


def evaluate(models: Sequence, test: Dataset, spec: Optional[PerturbationSpec] = None,
             train_stats: Optional[TrainStats] = None, perturb_seeds: Sequence[int] = (0,),
             predict: Optional[Callable] = None) -> EvalReport:
    """Error of each model on each perturbed copy of ``test``.

    ``models`` are the inner repetitions (anything with ``predict_batch``);
    ``perturb_seeds`` the outer ones.  Errors are fractions in [0, 1].
    """
    if test.n == 0:
        raise DataError("empty test set")
    spec = spec or PerturbationSpec()
    seeds = list(perturb_seeds) if spec.kind in ("gaussian", "mask", "per_gene_scale") else [0]
    predict = predict or (lambda m, X: m.predict_batch(X))
    errors = np.empty((len(seeds), len(models)))
    for i, s in enumerate(seeds):
        pt = perturb(test, spec.with_seed(s), train_stats)
        for j, m in enumerate(models):
            errors[i, j] = error_rate(predict(m, pt.X), pt.y)
    return EvalReport(spec.label(), errors)
