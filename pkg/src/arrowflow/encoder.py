"""Real vectors -> permutations.

Pipeline order: polynomial expansion, column standardisation, linear
projection to ``e`` coordinates, descending argsort.  A ``native`` pipeline
skips all of that and argsorts the raw features.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from itertools import combinations_with_replacement
from typing import Optional

import numpy as np
import scipy.linalg

from .perm import Permutation, argsort_desc, argsort_desc_rows

STRATEGIES = ("random", "target-aware", "calibrated")
STD_FLOOR = 1e-8
DEFAULT_LDA_RATIO = 0.5


@lru_cache(maxsize=None)
def monomial_indices(d: int, k: int) -> tuple:
    """Index tuples of every monomial of degree 1..k in graded-lex order."""
    if d < 1:
        raise ValueError("d must be >= 1")
    if k < 1:
        raise ValueError("polynomial degree must be >= 1")
    out = []
    for deg in range(1, k + 1):
        out.extend(combinations_with_replacement(range(d), deg))
    return tuple(out)


def expanded_dim(d: int, k: int) -> int:
    return math.comb(d + k, k) - 1


def poly_expand(x, k: int) -> np.ndarray:
    """All monomials of total degree 1..k of ``x`` (no constant term).

    Works on a single vector or on the rows of a matrix.
    """
    X = np.asarray(x, dtype=np.float64)
    single = X.ndim == 1
    if single:
        X = X[None, :]
    idx = monomial_indices(X.shape[1], k)
    if k == 1:
        out = X.copy()
    else:
        out = np.empty((X.shape[0], len(idx)))
        for c, term in enumerate(idx):
            out[:, c] = np.prod(X[:, list(term)], axis=1)
    return out[0] if single else out


@dataclass(frozen=True)
class ScalerStats:
    means: np.ndarray
    stds: np.ndarray

    def apply(self, x) -> np.ndarray:
        return (np.asarray(x, dtype=np.float64) - self.means) / self.stds


def fit_scaler(X) -> ScalerStats:
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[0] < 2:
        raise ValueError("need at least 2 rows to fit a scaler")
    means = X.mean(axis=0)
    stds = np.maximum(X.std(axis=0), STD_FLOOR)
    return ScalerStats(means, stds)


def apply_scaler(stats: ScalerStats, x) -> np.ndarray:
    return stats.apply(x)


@dataclass(frozen=True)
class ProjectionMatrix:
    entries: np.ndarray
    strategy: str

    @property
    def d_in(self) -> int:
        return self.entries.shape[0]

    @property
    def e(self) -> int:
        return self.entries.shape[1]


def _random_columns(d_in: int, e: int, rng: np.random.Generator) -> np.ndarray:
    return rng.normal(0.0, 1.0 / math.sqrt(d_in), size=(d_in, e))


def _unit_variance(W: np.ndarray, X: np.ndarray) -> np.ndarray:
    sd = (X @ W).std(axis=0)
    return W / np.maximum(sd, STD_FLOOR)


def lda_directions(X, y, n_components: int) -> np.ndarray:
    """Top generalised eigenvectors of (between, within) class scatter.

    A ridge of 1e-6 * trace(S_w) / d keeps S_w invertible on small samples.
    Returns at most ``C - 1`` columns.
    """
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y)
    classes = np.unique(y)
    d = X.shape[1]
    mu = X.mean(axis=0)
    Sw = np.zeros((d, d))
    Sb = np.zeros((d, d))
    for c in classes:
        Xc = X[y == c]
        diff = Xc - Xc.mean(axis=0)
        Sw += diff.T @ diff
        m = (Xc.mean(axis=0) - mu)[:, None]
        Sb += Xc.shape[0] * (m @ m.T)
    ridge = 1e-6 * np.trace(Sw) / d
    if ridge <= 0:
        ridge = 1e-6
    Sw += ridge * np.eye(d)
    n = min(n_components, len(classes) - 1, d)
    if n <= 0:
        return np.zeros((d, 0))
    vals, vecs = scipy.linalg.eigh(Sb, Sw)
    order = np.argsort(vals)[::-1][:n]
    W = vecs[:, order]
    # fix the sign so the largest-magnitude loading is positive
    signs = np.sign(W[np.argmax(np.abs(W), axis=0), np.arange(W.shape[1])])
    signs[signs == 0] = 1.0
    return W * signs


def make_projection(strategy: str, d_in: int, e: int, rng: np.random.Generator,
                    train_X=None, train_y=None,
                    lda_ratio: float = DEFAULT_LDA_RATIO) -> ProjectionMatrix:
    """Build a ``d_in x e`` projection.

    ``train_X`` is the already expanded and standardised training matrix; it
    is required by ``target-aware`` and ``calibrated``.
    """
    if e < 2:
        raise ValueError("embedding dimension e must be >= 2")
    if strategy not in STRATEGIES:
        raise ValueError(f"unknown projection strategy {strategy!r}")
    W = _random_columns(d_in, e, rng)
    if strategy == "random":
        return ProjectionMatrix(W, strategy)
    if train_X is None:
        raise ValueError(f"{strategy} projection needs training data")
    X = np.asarray(train_X, dtype=np.float64)
    if X.shape[1] != d_in:
        raise ValueError("training matrix width does not match d_in")
    if strategy == "calibrated":
        return ProjectionMatrix(_unit_variance(W, X), strategy)
    if train_y is None:
        raise ValueError("target-aware projection needs labels")
    n_lda = min(math.ceil(lda_ratio * e), e)
    L = lda_directions(X, train_y, n_lda)
    W[:, :L.shape[1]] = L
    return ProjectionMatrix(_unit_variance(W, X), strategy)


@dataclass
class EncodingPipeline:
    """Fitted encoder.  ``projection`` is None for the native-rank path."""

    input_dim: int
    poly_degree: int = 1
    scaler: Optional[ScalerStats] = None
    projection: Optional[ProjectionMatrix] = None

    @property
    def native(self) -> bool:
        return self.projection is None

    @property
    def e(self) -> int:
        return self.input_dim if self.native else self.projection.e

    def scores(self, X) -> np.ndarray:
        """Pre-argsort coordinates ``z`` for a vector or a matrix of rows."""
        X = np.asarray(X, dtype=np.float64)
        if X.shape[-1] != self.input_dim:
            raise ValueError(f"expected {self.input_dim} features, got {X.shape[-1]}")
        if np.isnan(X).any():
            raise ValueError("NaN in input")
        if self.native:
            return X.copy()
        return self.scaler.apply(poly_expand(X, self.poly_degree)) @ self.projection.entries

    def encode(self, x) -> Permutation:
        return argsort_desc(self.scores(x))

    def encode_batch(self, X) -> np.ndarray:
        """Row-wise encoding; returns an ``n x e`` array of position-ordered items."""
        return argsort_desc_rows(self.scores(np.atleast_2d(X)))


def fit_preprocessing(X, poly_degree: int) -> tuple[ScalerStats, np.ndarray]:
    """Fit the shared expansion + scaler stage; returns (stats, scaled train)."""
    P = poly_expand(np.asarray(X, dtype=np.float64), poly_degree)
    stats = fit_scaler(P)
    return stats, stats.apply(P)


def fit_pipeline(X, y, poly_degree: int, e: int, strategy: str,
                 rng: np.random.Generator, lda_ratio: float = DEFAULT_LDA_RATIO,
                 shared: Optional[tuple[ScalerStats, np.ndarray]] = None
                 ) -> EncodingPipeline:
    X = np.asarray(X, dtype=np.float64)
    stats, Z = shared if shared is not None else fit_preprocessing(X, poly_degree)
    proj = make_projection(strategy, Z.shape[1], e, rng, Z, y, lda_ratio)
    return EncodingPipeline(X.shape[1], poly_degree, stats, proj)


def native_pipeline(input_dim: int) -> EncodingPipeline:
    return EncodingPipeline(input_dim)


def native_rank_encode(x) -> Permutation:
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1 or x.size < 2:
        raise ValueError("need a vector of length >= 2")
    return argsort_desc(x)


def encode(pipeline: EncodingPipeline, x) -> Permutation:
    return pipeline.encode(x)


def min_gap(z) -> float:
    """Smallest absolute difference between two coordinates of ``z``."""
    z = np.asarray(z, dtype=np.float64)
    if z.ndim != 1 or z.size < 2:
        raise ValueError("min_gap needs at least two values")
    return float(np.diff(np.sort(z)).min())
