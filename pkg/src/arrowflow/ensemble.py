"""Multi-view ensembles: one (encoder, network) pair per projection, majority vote."""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, fields
from typing import Optional, Sequence

import numpy as np

from .encoder import (DEFAULT_LDA_RATIO, STRATEGIES, EncodingPipeline, fit_pipeline,
                      fit_preprocessing, native_pipeline)
from .network import Network, NetworkConfig
from .perm import make_rng

DEFAULT_CYCLE = ("target-aware", "random", "calibrated")


@dataclass
class EnsembleConfig:
    hidden_sizes: Sequence[int] = (128,)
    embed_dim: int = 32
    poly_degree: int = 2
    views: int = 7
    eta: float = 0.1
    iterations: int = 300
    llu: bool = False
    augment: int = 0
    lr_schedule: str = "constant"
    strategy_cycle: Sequence[str] = DEFAULT_CYCLE
    lda_ratio: float = DEFAULT_LDA_RATIO
    encoding: str = "projection"
    hidden_rule: str = "motion"
    target_top: float = 0.25
    log_every: int = 0

    def __post_init__(self):
        self.hidden_sizes = tuple(int(n) for n in self.hidden_sizes)
        self.strategy_cycle = tuple(self.strategy_cycle)
        if self.views < 1:
            raise ValueError("views must be >= 1")
        if self.poly_degree < 1:
            raise ValueError("poly_degree must be >= 1")
        if self.embed_dim < 2:
            raise ValueError("embed_dim must be >= 2")
        if not self.strategy_cycle or any(s not in STRATEGIES for s in self.strategy_cycle):
            raise ValueError(f"strategy_cycle entries must be in {STRATEGIES}")
        if self.encoding not in ("projection", "native"):
            raise ValueError("encoding must be 'projection' or 'native'")

    def strategy(self, k: int) -> str:
        return self.strategy_cycle[k % len(self.strategy_cycle)]

    def network_config(self, classes: int) -> NetworkConfig:
        return NetworkConfig(hidden_sizes=self.hidden_sizes, classes=classes,
                             iterations=self.iterations, eta=self.eta, llu=self.llu,
                             augment_count=self.augment, lr_schedule=self.lr_schedule,
                             hidden_rule=self.hidden_rule, target_top=self.target_top,
                             log_every=self.log_every)

    def to_dict(self) -> dict:
        return {f.name: (list(v) if isinstance(v := getattr(self, f.name), tuple) else v)
                for f in fields(self)}


@dataclass
class View:
    pipeline: EncodingPipeline
    network: Network
    strategy: str
    train_log: list = field(default_factory=list)

    def predict_batch(self, X) -> tuple[np.ndarray, np.ndarray]:
        """Predicted classes and raw output distances for rows of ``X``."""
        d = self.network.distances_batch(self.pipeline.encode_batch(X))
        return np.argmin(d, axis=1), d


@dataclass
class EnsembleModel:
    views: list
    config: EnsembleConfig
    classes: int

    @property
    def K(self) -> int:
        return len(self.views)

    def view_outputs(self, X) -> tuple[np.ndarray, np.ndarray]:
        """``(K x n)`` predictions and ``(K x n x C)`` normalised distances."""
        X = np.atleast_2d(np.asarray(X, dtype=np.float64))
        preds, dists = [], []
        for v in self.views:
            p, d = v.predict_batch(X)
            V_out = v.network.output_layer.V
            preds.append(p)
            dists.append(d / (V_out * V_out / 2.0))
        return np.stack(preds), np.stack(dists)

    def predict_batch(self, X) -> np.ndarray:
        preds, dists = self.view_outputs(X)
        return combine_votes(preds, dists, self.classes)

    def predict(self, x) -> int:
        return int(self.predict_batch(np.atleast_2d(x))[0])


def combine_votes(preds: np.ndarray, dists: Optional[np.ndarray], classes: int) -> np.ndarray:
    """Plurality vote over views for each column of ``preds``.

    Ties go to the tied class with the smallest summed normalised distance,
    then to the smallest class-id.  Neither rule depends on view order.
    """
    preds = np.atleast_2d(preds)
    K, n = preds.shape
    counts = np.zeros((n, classes), dtype=np.int64)
    np.add.at(counts, (np.arange(n)[None, :].repeat(K, 0), preds), 1)
    best = counts.max(axis=1, keepdims=True)
    tied = counts == best
    if dists is None:
        return np.argmax(tied, axis=1)
    score = np.where(tied, dists.sum(axis=0), np.inf)
    return np.argmin(score, axis=1)


def _train_view(args) -> View:
    config, k, seed, X, y, classes, shared = args
    rng = make_rng(seed ^ k)
    strategy = config.strategy(k)
    if config.encoding == "native":
        pipe = native_pipeline(X.shape[1])
        strategy = "native"
    else:
        pipe = fit_pipeline(X, y, config.poly_degree, config.embed_dim, strategy, rng,
                            config.lda_ratio, shared=shared)
    P = pipe.encode_batch(X)
    net = Network.build(config.network_config(classes), pipe.e, rng)
    log = net.fit(list(P), y, rng)
    return View(pipe, net, strategy, log)


def build_ensemble(config: EnsembleConfig, train_X, train_y, seed: int,
                   classes: Optional[int] = None, threads: int = 1) -> EnsembleModel:
    """Fit one encoder and train one network per view.

    View ``k`` draws from its own generator seeded with ``seed ^ k``.  The
    polynomial expansion and scaler are fitted once and shared by all views.
    """
    X = np.asarray(train_X, dtype=np.float64)
    y = np.asarray(train_y, dtype=np.int64)
    if X.ndim != 2 or X.shape[0] != y.shape[0]:
        raise ValueError("train_X and train_y have inconsistent shapes")
    C = int(classes if classes is not None else y.max() + 1)
    shared = None if config.encoding == "native" else fit_preprocessing(X, config.poly_degree)
    jobs = [(config, k, seed, X, y, C, shared) for k in range(config.views)]
    if threads > 1 and config.views > 1:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            views = list(pool.map(_train_view, jobs))
    else:
        views = [_train_view(j) for j in jobs]
    return EnsembleModel(views, config, C)


def ensemble_predict(model: EnsembleModel, x) -> int:
    return model.predict(x)


def knn_view_predict(train_perms: np.ndarray, train_y: np.ndarray, query_perms: np.ndarray,
                     k_neighbors: int = 1, classes: Optional[int] = None) -> np.ndarray:
    """k-NN under footrule distance for rows of position-ordered permutations.

    Neighbour ties go to the earlier training row; vote ties to the smaller class-id.
    """
    train_perms = np.atleast_2d(train_perms)
    query_perms = np.atleast_2d(query_perms)
    train_y = np.asarray(train_y, dtype=np.int64)
    n = train_perms.shape[0]
    if not 1 <= k_neighbors <= n:
        raise ValueError("k_neighbors must be in 1..n_train")
    C = int(classes if classes is not None else train_y.max() + 1)
    # footrule between orderings = L1 distance between their position vectors
    pos_tr = np.argsort(train_perms, axis=1)
    pos_q = np.argsort(query_perms, axis=1)
    out = np.empty(query_perms.shape[0], dtype=np.int64)
    step = max(1, 4_000_000 // (n * train_perms.shape[1]))
    for s in range(0, pos_q.shape[0], step):
        D = np.abs(pos_q[s:s + step, None, :] - pos_tr[None, :, :]).sum(axis=-1)
        nn = np.argsort(D, axis=1, kind="stable")[:, :k_neighbors]
        for r, idx in enumerate(nn):
            out[s + r] = np.bincount(train_y[idx], minlength=C).argmax()
    return out


def knn_permutation_baseline(train_perms_per_view: Sequence[np.ndarray], train_y,
                             query_perms_per_view: Sequence[np.ndarray],
                             k_neighbors: int = 1, classes: Optional[int] = None) -> np.ndarray:
    """Per-view footrule k-NN combined by the same plurality vote as the ensemble."""
    y = np.asarray(train_y, dtype=np.int64)
    C = int(classes if classes is not None else y.max() + 1)
    preds = np.stack([knn_view_predict(tr, y, q, k_neighbors, C)
                      for tr, q in zip(train_perms_per_view, query_perms_per_view)])
    return combine_votes(preds, None, C)


def knn_for_model(model: EnsembleModel, train_X, train_y, query_X,
                  k_neighbors: int = 1) -> tuple[np.ndarray, np.ndarray]:
    """kNN on exactly the permutations the model's views see.

    Returns ``(ensemble_predictions, per_view_predictions)``.
    """
    y = np.asarray(train_y, dtype=np.int64)
    per_view = []
    for v in model.views:
        per_view.append(knn_view_predict(v.pipeline.encode_batch(train_X), y,
                                         v.pipeline.encode_batch(query_X),
                                         k_neighbors, model.classes))
    per_view = np.stack(per_view)
    return combine_votes(per_view, None, model.classes), per_view


def learning_gain(knn_error: float, model_error: float) -> float:
    """kNN ensemble error divided by the trained model's error."""
    if model_error == 0:
        return math.inf if knn_error > 0 else 1.0
    return knn_error / model_error


def exact_majority_error(K: int, p: float) -> float:
    """P(more than half of K independent voters are wrong), each wrong w.p. p."""
    return sum(math.comb(K, i) * p ** i * (1 - p) ** (K - i) for i in range(K // 2 + 1, K + 1))


def hoeffding_majority_bound(K: int, p: float) -> float:
    return math.exp(-2 * K * (0.5 - p) ** 2)


def simulate_majority_error(K: int, p: float, trials: int, rng: np.random.Generator) -> float:
    wrong = rng.random((trials, K)) < p
    return float(np.mean(wrong.sum(axis=1) > K / 2))
