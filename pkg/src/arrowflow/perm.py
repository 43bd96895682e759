"""Permutations over a dense vocabulary 0..V-1 and the metrics between them.

A ``Permutation`` is stored position-ordered: ``items[p]`` is the item sitting
at position ``p``.  The inverse table (item -> position) is built once so that
``rank_of`` is a single array lookup.
"""

from __future__ import annotations

from typing import Iterable, Sequence, Union

import numpy as np

__all__ = [
    "Permutation",
    "SeededRng",
    "make_rng",
    "rank_of",
    "motion",
    "footrule",
    "lq_distance",
    "kendall_tau",
    "argsort_desc",
    "adjacent_transpose_augment",
    "random_permutation",
    "identity",
    "reverse",
]

SeededRng = np.random.Generator


def make_rng(seed: int) -> np.random.Generator:
    """Counter-based (Philox) generator; the same seed gives the same stream."""
    return np.random.Generator(np.random.Philox(int(seed) & 0xFFFFFFFFFFFFFFFF))


class Permutation:
    """An immutable ordering of the items ``0..V-1``."""

    __slots__ = ("_items", "_inv")

    def __init__(self, items: Iterable[int]):
        arr = np.array(list(items) if not isinstance(items, np.ndarray) else items,
                       dtype=np.int64)
        if arr.ndim != 1 or arr.size == 0:
            raise ValueError("permutation must be a non-empty 1-D sequence")
        V = arr.size
        inv = np.full(V, -1, dtype=np.int64)
        if arr.min() < 0 or arr.max() >= V:
            raise ValueError(f"items must lie in 0..{V - 1}")
        inv[arr] = np.arange(V)
        if (inv < 0).any():
            raise ValueError("items must be a bijection on 0..V-1")
        arr.flags.writeable = False
        inv.flags.writeable = False
        self._items = arr
        self._inv = inv

    @classmethod
    def _trusted(cls, items: np.ndarray) -> "Permutation":
        # caller guarantees a bijection
        obj = cls.__new__(cls)
        items = np.ascontiguousarray(items, dtype=np.int64)
        inv = np.empty_like(items)
        inv[items] = np.arange(items.size)
        items.flags.writeable = False
        inv.flags.writeable = False
        obj._items = items
        obj._inv = inv
        return obj

    @classmethod
    def parse(cls, text: str) -> "Permutation":
        """Parse the fixture form ``2,0,4,1,3`` (position-ordered)."""
        return cls(int(tok) for tok in text.strip().split(","))

    @property
    def items(self) -> np.ndarray:
        return self._items

    @property
    def positions(self) -> np.ndarray:
        """Inverse table: ``positions[v]`` is the position of item ``v``."""
        return self._inv

    @property
    def V(self) -> int:
        return int(self._items.size)

    def __len__(self) -> int:
        return self.V

    def __iter__(self):
        return iter(self._items.tolist())

    def __getitem__(self, p):
        return self._items[p]

    def __eq__(self, other) -> bool:
        if not isinstance(other, Permutation):
            return NotImplemented
        return np.array_equal(self._items, other._items)

    def __hash__(self) -> int:
        return hash(self._items.tobytes())

    def __repr__(self) -> str:
        return f"Permutation([{self.to_text()}])"

    def to_text(self) -> str:
        return ",".join(str(v) for v in self._items.tolist())


Ranking = Union[Permutation, Sequence[int], np.ndarray]


def identity(V: int) -> Permutation:
    return Permutation._trusted(np.arange(V))


def reverse(V: int) -> Permutation:
    return Permutation._trusted(np.arange(V)[::-1].copy())


def _items_of(x: Ranking) -> np.ndarray:
    if isinstance(x, Permutation):
        return x.items
    arr = np.asarray(x, dtype=np.int64)
    if arr.ndim != 1:
        raise ValueError("ranking must be 1-D")
    if np.unique(arr).size != arr.size:
        raise ValueError("ranking has repeated items")
    return arr


def _check_same_vocab(a: Permutation, b: Permutation) -> None:
    if a.V != b.V:
        raise ValueError(f"vocabulary mismatch: {a.V} vs {b.V}")


def rank_of(pi: Permutation, item: int) -> int:
    """Position of ``item`` in ``pi``."""
    if not 0 <= item < pi.V:
        raise ValueError(f"item {item} outside vocabulary of size {pi.V}")
    return int(pi.positions[item])


def motion(inp: Ranking, filt: Permutation) -> np.ndarray:
    """Signed displacement of each input position towards ``filt``.

    ``inp`` may be a full permutation or a prefix / partial ranking of distinct
    items.  Entry ``p`` is ``rank(filt, inp[p]) - p``.
    """
    items = _items_of(inp)
    if items.size and (items.min() < 0 or items.max() >= filt.V):
        raise ValueError("input contains an item unknown to the filter")
    return filt.positions[items] - np.arange(items.size)


def footrule(a: Permutation, b: Permutation) -> int:
    _check_same_vocab(a, b)
    return int(np.abs(b.positions[a.items] - np.arange(a.V)).sum())


def lq_distance(a: Permutation, b: Permutation, q: int = 1) -> float:
    _check_same_vocab(a, b)
    m = motion(a, b)
    if q == 0:
        return float(np.count_nonzero(m))
    if q == 1:
        return float(np.abs(m).sum())
    if q == 2:
        return float(np.sqrt((m * m).sum()))
    raise ValueError(f"q must be 0, 1 or 2, got {q}")


def kendall_tau(a: Permutation, b: Permutation) -> int:
    """Number of item pairs ordered differently by ``a`` and ``b``.

    Counts inversions of ``b``'s positions read in ``a``'s order by merge sort,
    so it stays usable at V in the thousands.
    """
    _check_same_vocab(a, b)
    seq = b.positions[a.items].tolist()

    def sort_count(xs):
        if len(xs) <= 1:
            return xs, 0
        mid = len(xs) // 2
        left, cl = sort_count(xs[:mid])
        right, cr = sort_count(xs[mid:])
        merged, count, i, j = [], cl + cr, 0, 0
        while i < len(left) and j < len(right):
            if left[i] <= right[j]:
                merged.append(left[i])
                i += 1
            else:
                merged.append(right[j])
                count += len(left) - i
                j += 1
        merged.extend(left[i:])
        merged.extend(right[j:])
        return merged, count

    return sort_count(seq)[1]


def argsort_desc(scores) -> Permutation:
    """Items ordered by decreasing score; equal scores keep index order."""
    s = np.asarray(scores, dtype=np.float64)
    if s.ndim != 1 or s.size == 0:
        raise ValueError("scores must be a non-empty vector")
    if np.isnan(s).any():
        raise ValueError("NaN score")
    return Permutation._trusted(np.argsort(-s, kind="stable"))


def argsort_desc_rows(scores: np.ndarray) -> np.ndarray:
    """Row-wise ``argsort_desc`` returning raw item arrays (no validation)."""
    return np.argsort(-np.asarray(scores, dtype=np.float64), axis=-1, kind="stable")


def adjacent_transpose_augment(pi: Permutation, count: int,
                               rng: np.random.Generator) -> Permutation:
    """Apply ``count`` swaps of uniformly chosen adjacent positions."""
    if count < 0:
        raise ValueError("count must be non-negative")
    if count == 0 or pi.V < 2:
        return pi
    items = pi.items.copy()
    for p in rng.integers(0, pi.V - 1, size=count):
        items[p], items[p + 1] = items[p + 1], items[p]
    return Permutation._trusted(items)


def random_permutation(V: int, rng: np.random.Generator) -> Permutation:
    if V < 1:
        raise ValueError("V must be at least 1")
    return Permutation._trusted(rng.permutation(V))
