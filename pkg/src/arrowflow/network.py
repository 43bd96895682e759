"""Stacked sort layers with a class-filter output layer."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .layer import SortLayer
from .perm import Permutation, _items_of, adjacent_transpose_augment

HIDDEN_RULES = ("motion", "competitive")
SCHEDULES = ("constant", "cosine")


@dataclass
class NetworkConfig:
    hidden_sizes: Sequence[int] = (128,)
    classes: int = 2
    iterations: int = 300
    eta: float = 0.1
    llu: bool = False
    augment_count: int = 0
    lr_schedule: str = "constant"
    hidden_rule: str = "motion"
    winners: int = 1
    target_top: float = 0.25
    q: int = 1
    log_every: int = 0

    def __post_init__(self):
        self.hidden_sizes = tuple(int(n) for n in self.hidden_sizes)
        if any(n < 1 for n in self.hidden_sizes):
            raise ValueError("hidden layer widths must be >= 1")
        if self.classes < 2:
            raise ValueError("need at least 2 classes")
        if self.iterations < 1:
            raise ValueError("iterations must be >= 1")
        if self.eta <= 0:
            raise ValueError("eta must be positive")
        if self.augment_count < 0:
            raise ValueError("augment_count must be >= 0")
        if self.lr_schedule not in SCHEDULES:
            raise ValueError(f"lr_schedule must be one of {SCHEDULES}")
        if self.hidden_rule not in HIDDEN_RULES:
            raise ValueError(f"hidden_rule must be one of {HIDDEN_RULES}")
        if not 0 < self.target_top <= 1:
            raise ValueError("target_top must be in (0, 1]")


def eta_at(cfg: NetworkConfig, t: int) -> float:
    """Learning rate for iteration ``t`` (1-based)."""
    if cfg.lr_schedule == "cosine":
        return cfg.eta * (1.0 + math.cos(math.pi * t / cfg.iterations)) / 2.0
    return cfg.eta


@dataclass
class Network:
    layers: list
    config: NetworkConfig

    @classmethod
    def build(cls, config: NetworkConfig, input_vocab: int,
              rng: np.random.Generator) -> "Network":
        layers = []
        V = input_vocab
        for N in config.hidden_sizes:
            layers.append(SortLayer.random(N, V, rng, q=config.q, winners=config.winners))
            V = N
        layers.append(SortLayer.random(config.classes, V, rng, q=config.q,
                                       frozen=not config.llu))
        return cls(layers, config)

    @property
    def hidden(self) -> list:
        return self.layers[:-1]

    @property
    def output_layer(self) -> SortLayer:
        return self.layers[-1]

    @property
    def input_vocab(self) -> int:
        return self.layers[0].V

    def check(self) -> None:
        for a, b in zip(self.layers, self.layers[1:]):
            if b.V != a.N:
                raise ValueError("layer vocabulary chain mismatch")
        if self.output_layer.N != self.config.classes:
            raise ValueError("output layer must have one filter per class")

    def forward(self, inp) -> tuple[list, np.ndarray]:
        """Per-layer output rankings and the output layer's class distances."""
        items = _items_of(inp)
        if items.size != self.input_vocab and (items.size == 0 or items.max() >= self.input_vocab):
            raise ValueError("input does not match the first layer vocabulary")
        outputs = []
        x = items
        for layer in self.hidden:
            x = layer.forward(x).output
            outputs.append(x)
        return outputs, self.output_layer.distances(x)

    def represent_batch(self, inputs: np.ndarray) -> np.ndarray:
        x = np.atleast_2d(inputs)
        for layer in self.hidden:
            x = layer.forward_batch(x)[1]
        return x

    def distances_batch(self, inputs: np.ndarray) -> np.ndarray:
        return self.output_layer.distances_batch(self.represent_batch(inputs))

    def predict(self, inp) -> int:
        return int(np.argmin(self.forward(inp)[1]))

    def predict_batch(self, inputs: np.ndarray) -> np.ndarray:
        return np.argmin(self.distances_batch(inputs), axis=1)

    def copy(self) -> "Network":
        return Network([l.copy() for l in self.layers], self.config)

    # -- training ----------------------------------------------------------

    def head_size(self, layer: SortLayer) -> int:
        return max(1, int(round(self.config.target_top * layer.N)))

    def hidden_targets(self, label: int) -> list:
        """Target output ranking for each hidden layer, bottom layer first.

        The last hidden layer aims at the frozen output filter of the true
        class.  A lower layer aims at the mean-position consensus of the
        filters heading its upper layer's target.
        """
        targets = [None] * len(self.hidden)
        tau = self.output_layer.orderings[label]
        for i in range(len(self.hidden) - 1, -1, -1):
            targets[i] = tau
            layer = self.hidden[i]
            head = tau[:self.head_size(layer)]
            tau = np.argsort(layer.positions[head].mean(axis=0), kind="stable")
        return targets

    def train_step(self, inp, label: int, eta: float) -> None:
        """One forward pass followed by one update round."""
        items = _items_of(inp)
        xs = [items]
        for layer in self.hidden:
            xs.append(layer.forward(xs[-1]).output)
        if eta <= 0:
            return
        if self.config.hidden_rule == "motion":
            for layer, x, out, tau in zip(self.hidden, xs, xs[1:], self.hidden_targets(label)):
                k = self.head_size(layer)
                current = np.empty(layer.N, dtype=np.int64)
                current[out] = np.arange(layer.N)
                wanted = np.empty(layer.N, dtype=np.int64)
                wanted[tau] = np.arange(layer.N)
                pull = np.flatnonzero((wanted < k) & (current >= k))
                push = np.flatnonzero((wanted >= k) & (current < k))
                if pull.size:
                    layer.attract(x, pull, eta)
                if push.size:
                    layer.repel(x, push, eta)
        else:
            for layer, x in zip(self.hidden, xs):
                layer.update(x, None, eta)
        if not self.output_layer.frozen:
            self.output_layer.update(xs[-1], label, eta)

    def fit(self, data: Sequence, labels: Sequence[int], rng: np.random.Generator) -> list:
        """Present ``iterations`` single samples in epoch-shuffled cyclic order.

        Returns a log of ``(t, eta, train_error_or_None)`` rows.
        """
        data = [np.asarray(_items_of(x)) for x in data]
        labels = np.asarray(labels, dtype=np.int64)
        if len(data) == 0:
            raise ValueError("empty training data")
        if labels.min() < 0 or labels.max() >= self.config.classes:
            raise ValueError("label out of range")
        cfg = self.config
        log = []
        order = rng.permutation(len(data))
        pos = 0
        for t in range(1, cfg.iterations + 1):
            if pos == len(order):
                order = rng.permutation(len(data))
                pos = 0
            i = order[pos]
            pos += 1
            x = data[i]
            if cfg.augment_count:
                x = adjacent_transpose_augment(Permutation._trusted(x.copy()),
                                               cfg.augment_count, rng).items
            eta = eta_at(cfg, t)
            self.train_step(x, int(labels[i]), eta)
            err = None
            if cfg.log_every and (t % cfg.log_every == 0 or t == cfg.iterations):
                err = float(np.mean(self.predict_batch(np.stack(data)) != labels))
            log.append((t, eta, err))
        return log


def network_forward(net: Network, inp):
    return net.forward(inp)


def predict(net: Network, inp) -> int:
    return net.predict(inp)


def train(net: Network, data, labels, rng: np.random.Generator) -> tuple[Network, list]:
    log = net.fit(data, labels, rng)
    return net, log
