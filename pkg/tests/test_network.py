import numpy as np
import pytest

from arrowflow.layer import SortLayer
from arrowflow.network import Network, NetworkConfig, eta_at, network_forward, predict, train
from arrowflow.perm import adjacent_transpose_augment, make_rng, random_permutation


def toy_data(seed=0, V=10, n=20):
    rng = make_rng(seed)
    centers = [random_permutation(V, rng) for _ in range(2)]
    X, y = [], []
    for i in range(n):
        c = i % 2
        X.append(adjacent_transpose_augment(centers[c], 2, rng).items)
        y.append(c)
    return np.stack(X), np.array(y)


def build(seed=0, **kw):
    cfg = NetworkConfig(**{"hidden_sizes": (16,), "classes": 2, "iterations": 200, **kw})
    return Network.build(cfg, 10, make_rng(seed))


def test_config_validation():
    for bad in ({"iterations": 0}, {"eta": 0}, {"classes": 1}, {"lr_schedule": "step"},
                {"hidden_rule": "x"}, {"hidden_sizes": (0,)}, {"augment_count": -1}):
        with pytest.raises(ValueError):
            NetworkConfig(**bad)


def test_shapes():
    net = build()
    outs, d = network_forward(net, random_permutation(10, make_rng(1)))
    assert len(outs) == 1 and sorted(outs[0].tolist()) == list(range(16))
    assert d.shape == (2,)
    assert net.output_layer.frozen
    net.check()
    with pytest.raises(ValueError):
        net.forward(list(range(12)))


def test_predict_rules():
    out = SortLayer(np.array([[0, 1, 2], [2, 1, 0]]), frozen=True)
    net = Network([out], NetworkConfig(hidden_sizes=(), classes=2))
    assert predict(net, [2, 1, 0]) == 1  # exact match, distance 0
    assert net.forward([2, 1, 0])[1][1] == 0
    tie = Network([SortLayer(np.array([[0, 1, 2], [0, 1, 2]]), frozen=True)],
                  NetworkConfig(hidden_sizes=(), classes=2))
    assert predict(tie, [1, 0, 2]) == 0


def test_batch_agrees_with_single():
    net = build()
    X, _ = toy_data()
    assert net.predict_batch(X).tolist() == [net.predict(x) for x in X]


@pytest.mark.parametrize("seed", range(4))
def test_training_smoke_reaches_zero_error(seed):
    X, y = toy_data(seed)
    net, log = train(build(seed, hidden_sizes=(128,)), X, y, make_rng(seed + 100))
    assert len(log) == 200
    assert (net.predict_batch(X) == y).all()


def test_frozen_output_untouched_and_deterministic():
    X, y = toy_data()
    a = build(seed=3)
    before = a.output_layer.acc.copy(), a.output_layer.orderings.copy()
    a.fit(X, y, make_rng(9))
    assert np.array_equal(a.output_layer.acc, before[0])
    assert np.array_equal(a.output_layer.orderings, before[1])
    b = build(seed=3)
    b.fit(X, y, make_rng(9))
    for la, lb in zip(a.layers, b.layers):
        assert np.array_equal(la.acc, lb.acc)


def test_llu_updates_output():
    X, y = toy_data()
    net = build(llu=True)
    acc = net.output_layer.acc.copy()
    net.fit(X, y, make_rng(0))
    assert not np.array_equal(acc, net.output_layer.acc)


def test_single_iteration_single_round():
    X, y = toy_data()
    net = build(iterations=1)
    log = net.fit(X, y, make_rng(0))
    assert [t for t, _, _ in log] == [1]


def test_cosine_schedule():
    cfg = NetworkConfig(eta=0.2, iterations=50, lr_schedule="cosine")
    assert eta_at(cfg, 50) < eta_at(cfg, 1)
    assert eta_at(cfg, 25) == pytest.approx(0.2 * (1 + np.cos(np.pi * 0.5)) / 2)
    assert eta_at(NetworkConfig(eta=0.3), 7) == 0.3


def test_log_every_records_train_error():
    X, y = toy_data()
    log = build(log_every=50).fit(X, y, make_rng(0))
    errs = [e for _, _, e in log if e is not None]
    assert len(errs) == 4 and all(0 <= e <= 1 for e in errs)


def test_fit_errors():
    net = build()
    with pytest.raises(ValueError):
        net.fit([], [], make_rng(0))
    X, y = toy_data()
    with pytest.raises(ValueError):
        net.fit(X, y + 5, make_rng(0))


@pytest.mark.parametrize("rule", ["motion", "competitive"])
def test_deep_network_trains(rule):
    X, y = toy_data(seed=2)
    net = build(hidden_sizes=(12, 16), hidden_rule=rule)
    net.fit(X, y, make_rng(1))
    assert net.predict_batch(X).shape == (20,)
