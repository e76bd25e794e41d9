import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from qphish.base import Classifier
from qphish.errors import ConfigurationError, UsageError
from qphish.vqc import (
    VqcClassifier,
    VqcConfig,
    VqcModel,
    cross_entropy,
    even_parity_mask,
    parity_label_probability,
    predict_from_probability,
    predict_vqc,
    realizable_dataset,
    train_vqc,
    vqc_cost,
)


def test_parity_examples():
    assert parity_label_probability([1, 0, 0, 0]) == 1.0
    assert parity_label_probability([0, 1, 0, 0]) == 0.0
    assert parity_label_probability([0, 0, 0, 1]) == 1.0


def test_parity_mask_against_popcount():
    mask = even_parity_mask(5)
    assert all(mask[i] == (bin(i).count("1") % 2 == 0) for i in range(32))


@given(st.integers(1, 6), st.integers(0, 2**32 - 1))
def test_parity_partition_is_exact(n, seed):
    p = np.random.default_rng(seed).dirichlet(np.ones(2**n))
    plus = parity_label_probability(p)
    minus = p[~even_parity_mask(n)].sum()
    assert plus + minus == pytest.approx(1.0, abs=1e-9)


def test_cost_examples():
    assert cross_entropy([1.0, 0.0], [1, -1]) < 1e-8
    assert cross_entropy([0.5, 0.5, 0.5], [1, -1, 1]) == pytest.approx(np.log(2))
    assert cross_entropy([0.9], [1]) == pytest.approx(0.10536, abs=1e-5)
    # clamp keeps the cost finite for confidently wrong outputs
    assert cross_entropy([0.0], [1]) == pytest.approx(-np.log(1e-9))


def test_prediction_rule():
    assert list(predict_from_probability([0.7, 0.3, 0.5])) == [1, -1, 1]


def _threshold_set(n=40, seed=0):
    x = np.random.default_rng(seed).uniform(0, np.pi, (n, 1))
    return x, np.where(x[:, 0] < np.pi / 2, -1, 1)


def test_one_feature_threshold_toy():
    x, y = _threshold_set()
    model = train_vqc(x, y, VqcConfig(encoder="z", reps=1, ansatz_id=1, max_evaluations=100, seed=0))
    assert (predict_vqc(model, x) == y).mean() >= 0.9


def test_budget_one_keeps_initial_draw():
    x, y = _threshold_set()
    model = train_vqc(x, y, VqcConfig(reps=1, max_evaluations=1, seed=3))
    init = np.random.default_rng(3).uniform(0, 2 * np.pi, 2)
    assert np.array_equal(model.trained_params, init)


def test_training_deterministic_and_trace_monotone():
    X, y = realizable_dataset(30, 2, VqcConfig(reps=1), seed=2)
    a = train_vqc(X, y, VqcConfig(reps=1, seed=5, max_evaluations=40))
    b = train_vqc(X, y, VqcConfig(reps=1, seed=5, max_evaluations=40))
    assert np.array_equal(a.trained_params, b.trained_params)
    assert all(u >= v for u, v in zip(a.cost_trace, a.cost_trace[1:]))
    assert len(a.trained_params) == 4


def test_cost_function_matches_model_probabilities():
    X, y = realizable_dataset(10, 2, VqcConfig(reps=1), seed=1)
    m = train_vqc(X, y, VqcConfig(reps=1, seed=0, max_evaluations=5))
    from qphish.encoders import encode_scaled
    states = encode_scaled(m.scaler.transform(X), m.encoder)
    direct = cross_entropy(m.label_probabilities(X), y)
    assert vqc_cost(m.trained_params, states, y, m.ansatz()) == pytest.approx(direct, abs=1e-12)


def test_qubit_mismatch_is_configuration_error():
    X = np.random.default_rng(0).uniform(size=(6, 3))
    y = np.array([1, -1] * 3)
    with pytest.raises(ConfigurationError):
        train_vqc(X, y, VqcConfig(encoder="z"), n_qubits=4)
    with pytest.raises(ConfigurationError):
        train_vqc(X[:, :1], y, VqcConfig(encoder="zz"))


def test_shot_mode_converges_to_exact():
    X, y = realizable_dataset(80, 2, VqcConfig(reps=1), seed=4)
    m = train_vqc(X, y, VqcConfig(reps=1, seed=0, max_evaluations=30))
    p = m.label_probabilities(X)
    keep = np.abs(p - 0.5) >= 0.05
    Xk = X[keep][:50]
    exact = predict_vqc(m, Xk)
    shots = predict_vqc(m, Xk, shots=10**5, rng=0)
    assert len(Xk) >= 30
    assert (exact == shots).mean() >= 0.99
    assert np.array_equal(predict_vqc(m, Xk), exact)


def test_classifier_contract_and_round_trip():
    X, y = realizable_dataset(20, 2, VqcConfig(reps=1), seed=0)
    clf = VqcClassifier(reps=1, max_evaluations=20, seed=1)
    with pytest.raises(UsageError):
        clf.predict(X)
    clf.fit(X, y)
    again = Classifier.from_dict(clf.to_dict())
    assert np.array_equal(again.predict(X), clf.predict(X))
    m2 = VqcModel.from_dict(clf.model.to_dict())
    assert np.array_equal(m2.trained_params, clf.model.trained_params)
    assert clf.positive_probability(X).shape == (20,)


@pytest.mark.parametrize("encoder", ["z", "zz", "amplitude"])
def test_every_encoder_trains(encoder):
    rng = np.random.default_rng(0)
    X = rng.uniform(size=(16, 4))
    y = np.where(X[:, 0] > 0.5, 1, -1)
    m = train_vqc(X, y, VqcConfig(encoder=encoder, ansatz_id=9, layers=2, max_evaluations=10))
    expected_width = 2 if encoder == "amplitude" else 4
    assert m.ansatz().n_qubits == expected_width
    assert len(m.trained_params) == m.ansatz().n_params
