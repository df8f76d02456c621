import json

import numpy as np
import pytest

from oracles import finite_difference_check
from zdtdetect.errors import ChecksumMismatch, DimensionMismatch, EmptyMatrix, InsufficientData, VersionMismatch
from zdtdetect.neural import (
    AEModel,
    NormalizationParams,
    TrainConfig,
    build_architecture,
    dumps_model,
    fit_autoencoder,
    fit_normalizer,
    forward,
    init_params,
    load_model,
    loads_model,
    normalize,
    reconstruction_loss,
    save_model,
    train,
)


def _model(input_dim=8, seed=0, params=None):
    arch = build_architecture(input_dim)
    w, b = init_params(arch, seed)
    rng = np.random.default_rng(seed)
    b = [rng.uniform(-0.1, 0.1, x.shape).astype(np.float32) for x in b]
    params = params or NormalizationParams(np.zeros(input_dim), np.ones(input_dim))
    return AEModel(arch, tuple(w), tuple(b), params)


def test_fit_normalizer_examples():
    p = fit_normalizer(np.array([[0.0], [5.0], [10.0]]))
    assert (p.min[0], p.max[0]) == (0.0, 10.0)
    p = fit_normalizer(np.array([[3.0], [3.0]]))
    assert p.min[0] == p.max[0] == 3.0
    m = np.array([[1.0, -2.0], [4.0, 7.0], [2.0, 0.5]])
    p = fit_normalizer(m)
    for j in range(2):
        pj = fit_normalizer(m[:, [j]])
        assert (p.min[j], p.max[j]) == (pj.min[0], pj.max[0])
    with pytest.raises(EmptyMatrix):
        fit_normalizer(np.zeros((0, 3)))


def test_normalize_examples():
    col = np.array([[0.0], [5.0], [10.0]])
    p = fit_normalizer(col)
    assert normalize(col, p).ravel().tolist() == [0.0, 0.5, 1.0]
    assert normalize(np.array([[12.0]]), p)[0, 0] == 1.0
    assert normalize(np.array([[-3.0]]), p)[0, 0] == 0.0
    const = np.array([[3.0], [3.0]])
    assert normalize(const, fit_normalizer(const)).ravel().tolist() == [0.0, 0.0]
    with pytest.raises(DimensionMismatch):
        normalize(np.zeros((2, 3)), p)


def test_normalized_training_data_in_unit_box():
    x = np.random.default_rng(0).normal(size=(200, 5)) * [1, 10, 100, 0.1, 5]
    z = normalize(x, fit_normalizer(x))
    assert z.min() >= 0.0 and z.max() <= 1.0


def test_architecture_27():
    arch = build_architecture(27)
    assert arch.widths == (27, 19, 14, 10, 6, 10, 14, 19, 27)
    assert arch.encoder == (27, 19, 14, 10) and arch.latent == 6


def test_architecture_edge_and_symmetry():
    assert build_architecture(6).widths == (6, 6, 6)
    assert build_architecture(1).widths == (1, 6, 1)
    for d in range(1, 201):
        arch = build_architecture(d)
        assert arch.decoder == tuple(reversed(arch.encoder))
        assert arch.latent == 6
        enc = arch.encoder
        assert all(a > b for a, b in zip(enc, enc[1:]))
        assert all(w > 8 for w in enc[1:])


def test_forward_zero_weights_gives_bias():
    m = _model()
    zero = AEModel(m.architecture, tuple(np.zeros_like(w) for w in m.weights), m.biases, m.normalization)
    out = forward(zero, np.random.default_rng(1).uniform(size=(5, 8)))
    np.testing.assert_array_equal(out, np.tile(m.biases[-1], (5, 1)))


def test_forward_batch_invariance():
    m = _model(27)
    x = np.random.default_rng(2).uniform(size=(300, 27))
    batch = forward(m, x)
    rows = np.stack([forward(m, row) for row in x])
    np.testing.assert_array_equal(batch, rows)
    np.testing.assert_array_equal(forward(m, x[:7]), batch[:7])


def test_forward_dimension_check():
    with pytest.raises(DimensionMismatch):
        forward(_model(8), np.zeros((2, 9)))


def test_gradient_check():
    worst, count = finite_difference_check(input_dim=10)
    assert count == 136
    assert worst < 1e-4


def test_reconstruction_loss_examples():
    assert reconstruction_loss([1.0, 2.0], [1.0, 2.0]) == 0.0
    assert reconstruction_loss([1.0, 0.0], [0.0, 0.0]) == 0.5
    rng = np.random.default_rng(3)
    a, b = rng.uniform(size=(10, 4)), rng.uniform(size=(10, 4))
    per_row = reconstruction_loss(a, b)
    assert per_row.shape == (10,)
    assert np.mean(per_row) == pytest.approx(np.mean((a - b) ** 2), rel=1e-15)
    with pytest.raises(DimensionMismatch):
        reconstruction_loss(np.zeros((2, 3)), np.zeros((2, 4)))


def test_memorize_single_vector():
    v = np.random.default_rng(4).uniform(size=27)
    data = np.tile(v, (500, 1))
    # the default batch of 256 gives only two Adam steps per epoch here
    result = train(build_architecture(27), data, TrainConfig(batch_size=32, max_epochs=50, seed=1))
    assert result.history[-1]["train_loss"] < 1e-4


def test_training_deterministic_and_history():
    x = np.random.default_rng(5).uniform(size=(400, 10))
    cfg = TrainConfig(batch_size=32, max_epochs=8, patience=2, seed=3)
    a = train(build_architecture(10), x, cfg)
    b = train(build_architecture(10), x, cfg)
    assert a.history == b.history
    for wa, wb in zip(a.model.weights, b.model.weights):
        assert wa.tobytes() == wb.tobytes()
    assert 1 <= len(a.history) <= cfg.max_epochs
    best = [h["best_val_loss"] for h in a.history]
    assert all(x2 <= x1 for x1, x2 in zip(best, best[1:]))
    assert a.best_val_loss == best[-1]


def test_train_errors():
    with pytest.raises(InsufficientData):
        train(build_architecture(4), np.zeros((10, 4)), TrainConfig(batch_size=32))
    with pytest.raises(DimensionMismatch):
        train(build_architecture(4), np.zeros((100, 5)), TrainConfig(batch_size=8))
    with pytest.raises(ValueError):
        TrainConfig(validation_fraction=1.0)
    with pytest.raises(ValueError):
        TrainConfig.from_dict({"epochs": 3})


def test_persistence_round_trip(tmp_path):
    raw = np.random.default_rng(6).normal(size=(300, 12)) * 50
    res = fit_autoencoder(raw, TrainConfig(batch_size=32, max_epochs=3, seed=2), columns=tuple(f"c{i}" for i in range(12)))
    path = tmp_path / "m.json"
    digest = save_model(res.model, path)
    back = load_model(path)
    x = np.random.default_rng(7).normal(size=(100, 12)) * 50
    assert back.score(x).tobytes() == res.model.score(x).tobytes()
    assert back.columns == res.model.columns
    header = json.loads(path.read_text().split("\n", 1)[0])
    assert header["sha256"] == digest and header["seed"] == 2
    assert header["widths"] == [12, 9, 6, 9, 12]
    assert dumps_model(back) == path.read_text()


def test_persistence_errors(tmp_path):
    text = dumps_model(_model())
    with pytest.raises(ChecksumMismatch):
        loads_model(text[: len(text) // 2])
    head, rest = text.split("\n", 1)
    future = json.loads(head)
    future["version"] = 99
    with pytest.raises(VersionMismatch):
        loads_model(json.dumps(future) + "\n" + rest)
    with pytest.raises(OSError):
        load_model(tmp_path / "missing.json")
