import numpy as np
import pytest

from fairhome.data import Instance, encode_matrix, protected_domains
from fairhome.errors import ShapeError, TrainingError, UsageError
from fairhome.model import (
    LogisticModel,
    TrainConfig,
    fit_logistic,
    fit_mlp,
    init_mlp_params,
    load_model,
    logistic_loss_grad,
    mlp_loss_grad,
    predict_proba,
    reweighting_weights,
    save_model,
)

from conftest import make_dataset, make_schema

SCHEMA_1P = make_schema(protected=("sex",), extra=(("x1", "numeric"), ("x2", "numeric")))


def separable_dataset():
    """20 points, label decided by x1 > x2 with a clear margin."""
    rows, labels = [], []
    rng = np.random.default_rng(5)
    while len(rows) < 20:
        x1, x2 = rng.uniform(0, 1, 2)
        if abs(x1 - x2) < 0.25:
            continue
        rows.append((str(rng.choice(["M", "F"])), round(x1, 3), round(x2, 3)))
        labels.append(int(x1 > x2))
    return make_dataset(SCHEMA_1P, rows, labels)


def xor_dataset():
    # balanced corners, so a linear model tops out at exactly 3 of 4 right
    rows, labels = [], []
    for a in (0, 1):
        for b in (0, 1):
            for _ in range(20):
                rows.append(("M", float(a), float(b)))
                labels.append(a ^ b)
    return make_dataset(SCHEMA_1P, rows, labels)


def training_accuracy(model, ds):
    X = encode_matrix(ds.instances(), ds.schema, model.encoding)
    pred = (model.proba_matrix(X) >= 0.5).astype(int)
    return float(np.mean(pred == np.asarray(ds.labels)))


def test_logistic_separable_reaches_full_accuracy():
    ds = separable_dataset()
    model = fit_logistic(ds, TrainConfig(learning_rate=0.5, epochs=400, batch_size=None, seed=0))
    assert training_accuracy(model, ds) == 1.0


def test_neutral_weights_match_absent_weights():
    ds = separable_dataset()
    cfg_a = TrainConfig(seed=3)
    cfg_b = TrainConfig(seed=3, instance_weights=np.ones(len(ds)))
    m_a = fit_logistic(ds, cfg_a)
    m_b = fit_logistic(ds, cfg_b)
    assert np.array_equal(m_a.weights, m_b.weights) and m_a.bias == m_b.bias


def test_single_class_training_rejected():
    ds = separable_dataset()
    ds.labels = [1] * len(ds)
    with pytest.raises(TrainingError):
        fit_logistic(ds, TrainConfig())
    with pytest.raises(TrainingError):
        fit_mlp(ds, TrainConfig(), hidden_layers=(4,))


def test_mlp_parameter_count_matches_architecture():
    ds = separable_dataset()
    model = fit_mlp(ds, TrainConfig(epochs=1), hidden_layers=(64, 32, 16, 8, 4))
    d = model.encoding.dim
    expected = ((d * 64 + 64) + (64 * 32 + 32) + (32 * 16 + 16)
                + (16 * 8 + 8) + (8 * 4 + 4) + (4 * 1 + 1))
    actual = sum(W.size + b.size for W, b in zip(model.layer_weights, model.layer_biases))
    assert actual == expected


def test_mlp_learns_xor_where_logistic_cannot():
    ds = xor_dataset()
    mlp = fit_mlp(ds, TrainConfig(learning_rate=0.5, epochs=600, batch_size=None, seed=1),
                  hidden_layers=(4, 4))
    lr = fit_logistic(ds, TrainConfig(learning_rate=0.5, epochs=600, batch_size=None, seed=1))
    assert training_accuracy(mlp, ds) > 0.9
    assert training_accuracy(lr, ds) <= 0.75


def test_mlp_deterministic_given_seed():
    ds = separable_dataset()
    cfg = TrainConfig(epochs=20, seed=11)
    probe = ds.instance(0)
    p1 = fit_mlp(ds, cfg, hidden_layers=(8, 4)).predict_proba(probe)
    p2 = fit_mlp(ds, TrainConfig(epochs=20, seed=11), hidden_layers=(8, 4)).predict_proba(probe)
    assert p1 == p2


def test_predict_proba_contracts():
    ds = separable_dataset()
    enc_model = fit_logistic(ds, TrainConfig(epochs=1))
    zero = LogisticModel(weights=np.zeros_like(enc_model.weights), bias=0.0,
                         encoding=enc_model.encoding, schema=ds.schema)
    assert predict_proba(zero, ds.instance(0)) == 0.5

    biased = LogisticModel(weights=np.zeros_like(enc_model.weights), bias=10.0,
                           encoding=enc_model.encoding, schema=ds.schema)
    assert predict_proba(biased, ds.instance(0)) > 0.999

    with pytest.raises(ShapeError):
        predict_proba(zero, Instance(("M", 1.0)))


def test_predict_proba_in_range_property(rng):
    schema = make_schema(protected=("p",), extra=(("x", "numeric"), ("c", "categorical")))
    rows = [(str(rng.choice(["a", "b"])), float(rng.uniform(0, 5)),
             str(rng.choice(["u", "v", "w"]))) for _ in range(30)]
    ds = make_dataset(schema, rows, [int(rng.random() < 0.5) for _ in range(30)])
    model = fit_mlp(ds, TrainConfig(epochs=5, seed=2), hidden_layers=(4,))
    for _ in range(100):
        probe = Instance((str(rng.choice(["a", "b", "zz"])), float(rng.uniform(-5, 15)),
                          str(rng.choice(["u", "v", "w", "??"]))))
        assert 0.0 <= predict_proba(model, probe) <= 1.0


def central_diff(f, x, eps=1e-6):
    g = np.zeros_like(x)
    for i in range(x.size):
        flat = x.ravel()
        old = flat[i]
        flat[i] = old + eps
        hi = f()
        flat[i] = old - eps
        lo = f()
        flat[i] = old
        g.ravel()[i] = (hi - lo) / (2 * eps)
    return g


def test_gradient_checks_logistic_and_mlp(rng):
    rel_err_bound = 1e-4
    for case in range(12):
        n, d = int(rng.integers(3, 10)), int(rng.integers(1, 8))
        X = rng.normal(size=(n, d))
        y = rng.integers(0, 2, n).astype(float)
        sw = rng.uniform(0.5, 2.0, n)
        l2 = float(rng.choice([0.0, 1e-3, 1e-2]))

        w = rng.normal(size=d)
        b = float(rng.normal())
        loss, gw, gb = logistic_loss_grad(w, b, X, y, sw, l2)
        num_w = central_diff(lambda: logistic_loss_grad(w, b, X, y, sw, l2)[0], w)
        scale = max(1.0, float(np.abs(gw).max()))
        assert np.abs(gw - num_w).max() / scale < rel_err_bound

        weights, biases = init_mlp_params(d, (4, 4), seed=case)
        loss, gws, gbs = mlp_loss_grad(weights, biases, X, y, sw, l2)
        for layer in range(len(weights)):
            num = central_diff(
                lambda: mlp_loss_grad(weights, biases, X, y, sw, l2)[0], weights[layer]
            )
            scale = max(1.0, float(np.abs(gws[layer]).max()))
            assert np.abs(gws[layer] - num).max() / scale < rel_err_bound


def test_full_batch_loss_non_increasing():
    ds = separable_dataset()
    cfg = TrainConfig(learning_rate=1e-3, epochs=50, batch_size=None, seed=0)
    for fit in (fit_logistic, lambda d, c: fit_mlp(d, c, hidden_layers=(4, 4))):
        history = fit(ds, cfg).meta["loss_history"]
        diffs = np.diff(history)
        assert (diffs <= 1e-12).all()


def test_reweighting_hand_example():
    schema = make_schema(protected=("g",), extra=(("x", "numeric"),))
    rows = [("A", 1.0), ("A", 2.0), ("B", 3.0), ("B", 4.0)]
    ds = make_dataset(schema, rows, [1, 1, 0, 0])
    w = reweighting_weights(ds, protected_domains(ds))
    # (N_A * N_1) / (N * N_A1) = (2*2)/(4*2) = 0.5, same for (B, 0)
    assert np.allclose(w, [0.5, 0.5, 0.5, 0.5])


def test_reweighting_independence_gives_unit_weights():
    schema = make_schema(protected=("g",), extra=(("x", "numeric"),))
    rows, labels = [], []
    for g, y, count in [("A", 1, 6), ("A", 0, 2), ("B", 1, 3), ("B", 0, 1)]:
        for _ in range(count):
            rows.append((g, 1.0))
            labels.append(y)
    ds = make_dataset(schema, rows, labels)
    assert np.allclose(reweighting_weights(ds, protected_domains(ds)), 1.0)


def test_reweighting_balances_cell_mass(rng):
    schema = make_schema(protected=("g", "h"), extra=(("x", "numeric"),))
    n = 60
    rows = [(str(rng.choice(["a", "b"])), str(rng.choice(["c", "d"])), 0.0) for _ in range(n)]
    labels = [int(rng.random() < 0.6) for _ in range(n)]
    ds = make_dataset(schema, rows, labels)
    w = reweighting_weights(ds, protected_domains(ds))
    # weighted mass of each (subgroup, label) cell equals N_s*N_y/N exactly
    cells = {}
    for row, y, wi in zip(rows, labels, w):
        cells.setdefault((row[:2], y), []).append(wi)
    n_s = {}
    n_y = {}
    for row, y in zip(rows, labels):
        n_s[row[:2]] = n_s.get(row[:2], 0) + 1
        n_y[y] = n_y.get(y, 0) + 1
    for (s, y), ws in cells.items():
        assert sum(ws) == pytest.approx(n_s[s] * n_y[y] / n, abs=1e-9)

    # doubling every row leaves weights unchanged
    ds2 = make_dataset(schema, rows + rows, labels + labels)
    w2 = reweighting_weights(ds2, protected_domains(ds2))
    assert np.allclose(w2[:n], w)


def test_save_load_round_trip(tmp_path):
    ds = separable_dataset()
    for fit in (lambda: fit_logistic(ds, TrainConfig(epochs=30, seed=4)),
                lambda: fit_mlp(ds, TrainConfig(epochs=10, seed=4), hidden_layers=(6, 3))):
        model = fit()
        path = tmp_path / "m.json"
        save_model(model, path)
        clone = load_model(path)
        for inst in ds.instances():
            assert clone.predict_proba(inst) == model.predict_proba(inst)
