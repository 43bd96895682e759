"""Ranking filters and the sort layer built from a bank of them."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .perm import Permutation, Ranking, _items_of, random_permutation


def vote_matrix(inp: Ranking, V: int) -> np.ndarray:
    """One-hot ``V x V`` matrix: row ``v`` votes for ``v``'s input position.

    Rows of items missing from a partial input stay zero.
    """
    items = _items_of(inp)
    if items.size and (items.min() < 0 or items.max() >= V):
        raise ValueError("input item outside the layer vocabulary")
    phi = np.zeros((V, V))
    phi[items, np.arange(items.size)] = 1.0
    return phi


def position_scores(A: np.ndarray) -> np.ndarray:
    """Weighted mean position of every item (row) of one or more accumulators."""
    sums = A.sum(axis=-1)
    if np.any(sums <= 0):
        raise ValueError("accumulator has a row with zero mass")
    return (A @ np.arange(A.shape[-1], dtype=np.float64)) / sums


def _orderings_from(A: np.ndarray) -> np.ndarray:
    # ascending weighted position, ties to the smaller item-id
    return np.argsort(position_scores(A), axis=-1, kind="stable")


def _perm_matrix(items: np.ndarray) -> np.ndarray:
    V = items.size
    A = np.zeros((V, V))
    A[items, np.arange(V)] = 1.0
    return A


class RankingFilter:
    """A learned ordering plus its ``V x V`` evidence accumulator.

    The accumulator starts as the permutation matrix of the initial ordering,
    which is the identity when the ordering is the identity.
    """

    def __init__(self, ordering: Permutation, accumulator: Optional[np.ndarray] = None):
        self.ordering = ordering
        if accumulator is None:
            accumulator = _perm_matrix(ordering.items)
        accumulator = np.array(accumulator, dtype=np.float64)
        if accumulator.shape != (ordering.V, ordering.V):
            raise ValueError("accumulator shape does not match the ordering")
        self.A = accumulator

    @property
    def V(self) -> int:
        return self.ordering.V

    def __repr__(self) -> str:
        return f"RankingFilter({self.ordering.to_text()})"


def accumulate(filt: RankingFilter, phi: np.ndarray, eta: float = 1.0) -> RankingFilter:
    """Add ``eta * phi`` to the accumulator; the ordering is left alone."""
    if eta <= 0:
        raise ValueError("eta must be positive")
    filt.A += eta * np.asarray(phi, dtype=np.float64)
    return filt


def reorder(filt: RankingFilter) -> RankingFilter:
    filt.ordering = Permutation._trusted(_orderings_from(filt.A))
    return filt


@dataclass
class ForwardResult:
    distances: np.ndarray
    output: np.ndarray  # filter-ids, closest first

    def permutation(self) -> Permutation:
        return Permutation._trusted(self.output.copy())


class SortLayer:
    """Bank of ``N`` ranking filters over a shared vocabulary of size ``V``.

    Filters live in stacked arrays so the forward pass is one gather:
    ``orderings[j]`` is filter ``j`` position-ordered, ``positions[j]`` its
    inverse and ``acc[j]`` its accumulator.
    """

    def __init__(self, orderings: np.ndarray, acc: Optional[np.ndarray] = None, *,
                 q: int = 1, frozen: bool = False, winners: int = 1,
                 penalty_position: Optional[int] = None):
        orderings = np.asarray(orderings, dtype=np.int64)
        if orderings.ndim != 2 or orderings.shape[0] < 1:
            raise ValueError("orderings must be an N x V array with N >= 1")
        N, V = orderings.shape
        if not np.array_equal(np.sort(orderings, axis=1), np.broadcast_to(np.arange(V), (N, V))):
            raise ValueError("every filter must be a permutation of 0..V-1")
        if q not in (0, 1, 2):
            raise ValueError("q must be 0, 1 or 2")
        if winners < 1:
            raise ValueError("winners must be >= 1")
        self.orderings = orderings.copy()
        self.positions = np.argsort(self.orderings, axis=1)
        if acc is None:
            acc = np.zeros((N, V, V))
            acc[np.arange(N)[:, None], self.orderings, np.arange(V)[None, :]] = 1.0
        acc = np.array(acc, dtype=np.float64)
        if acc.shape != (N, V, V):
            raise ValueError("accumulator stack must be N x V x V")
        self.acc = acc
        self.q = q
        self.frozen = frozen
        self.winners = winners
        self.penalty_position = V if penalty_position is None else int(penalty_position)

    @classmethod
    def random(cls, N: int, V: int, rng: np.random.Generator, **kw) -> "SortLayer":
        orderings = np.stack([random_permutation(V, rng).items for _ in range(N)])
        return cls(orderings, **kw)

    @classmethod
    def from_filters(cls, filters: Sequence[RankingFilter], **kw) -> "SortLayer":
        return cls(np.stack([f.ordering.items for f in filters]),
                   np.stack([f.A for f in filters]), **kw)

    @property
    def N(self) -> int:
        return self.orderings.shape[0]

    @property
    def V(self) -> int:
        return self.orderings.shape[1]

    def filter(self, j: int) -> RankingFilter:
        """Copy of filter ``j`` as a standalone object."""
        return RankingFilter(Permutation._trusted(self.orderings[j].copy()), self.acc[j].copy())

    @property
    def filters(self) -> list[RankingFilter]:
        return [self.filter(j) for j in range(self.N)]

    def copy(self) -> "SortLayer":
        return SortLayer(self.orderings, self.acc, q=self.q, frozen=self.frozen,
                         winners=self.winners, penalty_position=self.penalty_position)

    # -- forward -----------------------------------------------------------

    def _norm(self, m: np.ndarray) -> np.ndarray:
        if self.q == 0:
            return np.count_nonzero(m, axis=-1).astype(np.float64)
        if self.q == 1:
            return np.abs(m).sum(axis=-1).astype(np.float64)
        return np.sqrt((m.astype(np.float64) ** 2).sum(axis=-1))

    def distances(self, inp: Ranking) -> np.ndarray:
        items = _items_of(inp)
        if items.size == 0:
            raise ValueError("empty input")
        if items.min() < 0 or items.max() >= self.V:
            raise ValueError("input item outside the layer vocabulary")
        m = self.positions[:, items] - np.arange(items.size)
        if items.size == self.V:
            return self._norm(m)
        # absent filter items are treated as sitting at penalty_position
        present = np.zeros(self.V, dtype=bool)
        present[items] = True
        absent_pos = self.positions[:, ~present]
        pen = self.penalty_position - absent_pos
        return self._norm(np.concatenate([m, pen], axis=1))

    def distances_batch(self, inputs: np.ndarray) -> np.ndarray:
        """``n x N`` distances for ``n`` full-length inputs (rows of item-ids)."""
        inputs = np.atleast_2d(np.asarray(inputs, dtype=np.int64))
        if inputs.shape[1] != self.V:
            return np.stack([self.distances(row) for row in inputs])
        out = np.empty((inputs.shape[0], self.N))
        ar = np.arange(self.V)
        step = max(1, 2_000_000 // (self.N * self.V))
        for s in range(0, inputs.shape[0], step):
            chunk = inputs[s:s + step]
            m = self.positions[:, chunk] - ar  # N x n x V
            out[s:s + step] = self._norm(m).T
        return out

    def forward(self, inp: Ranking) -> ForwardResult:
        d = self.distances(inp)
        return ForwardResult(d, np.argsort(d, kind="stable"))

    def forward_batch(self, inputs: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        d = self.distances_batch(inputs)
        return d, np.argsort(d, axis=1, kind="stable")

    # -- update ------------------------------------------------------------

    def attract(self, inp: Ranking, filter_ids, eta: float, weights=None) -> None:
        """Accumulate the vote matrix of ``inp`` into the chosen filters, then reorder them."""
        if self.frozen:
            raise RuntimeError("cannot update a frozen layer")
        if eta <= 0:
            raise ValueError("eta must be positive")
        ids = np.atleast_1d(np.asarray(filter_ids, dtype=np.int64))
        if ids.size == 0:
            return
        items = _items_of(inp)
        w = np.ones(ids.size) if weights is None else np.asarray(weights, dtype=np.float64)
        self.acc[ids[:, None], items[None, :], np.arange(items.size)[None, :]] += (eta * w)[:, None]
        new = _orderings_from(self.acc[ids])
        self.orderings[ids] = new
        self.positions[ids[:, None], new] = np.arange(self.V)[None, :]

    def repel(self, inp: Ranking, filter_ids, eta: float, weights=None) -> None:
        """Accumulate the mirrored input (position p voted as V-1-p).

        Pushes the chosen filters toward the reverse of ``inp``, away from it.
        """
        items = _items_of(inp)
        if items.size != self.V:
            raise ValueError("repel needs a full-length input")
        self.attract(items[::-1], filter_ids, eta, weights)

    def update(self, inp: Ranking, target_filter: Optional[int] = None,
               eta: float = 1.0) -> np.ndarray:
        """Supervised update of ``target_filter`` or competitive update of the winners.

        Returns the ids of the filters that were updated.
        """
        if self.frozen:
            raise RuntimeError("cannot update a frozen layer")
        if target_filter is not None:
            if not 0 <= target_filter < self.N:
                raise ValueError("target filter out of range")
            ids = np.array([target_filter])
        else:
            d = self.distances(inp)
            ids = np.argsort(d, kind="stable")[:self.winners]
        self.attract(inp, ids, eta)
        return ids


def layer_forward(layer: SortLayer, inp: Ranking) -> ForwardResult:
    return layer.forward(inp)


def layer_update(layer: SortLayer, inp: Ranking, target_filter: Optional[int] = None,
                 eta: float = 1.0) -> np.ndarray:
    return layer.update(inp, target_filter, eta)
