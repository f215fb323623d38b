import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fedcry.errors import DimensionMismatch, EmptyDataset, InvalidLabel, NonFiniteGradient
from fedcry.svm import (
    AdamState,
    SvmModel,
    TrainConfig,
    accuracy,
    adam_step,
    augment,
    hinge_loss,
    objective,
    predict,
    subgradient,
    train_local,
)

from oracles import finite_difference_grad, objective_ref


def model(w, lam=0.0):
    return SvmModel(np.array(w, dtype=float), lam)


# -- hinge / objective --------------------------------------------------------------

@pytest.mark.parametrize("x,y", [([0.3, -2.0], 1), ([5.0, 1.0], -1)])
def test_hinge_at_zero_weights(x, y):
    assert hinge_loss(model([0, 0, 0]), x, y) == 1.0


def test_hinge_beyond_margin():
    assert hinge_loss(model([2, 0, 0]), [1, 0], 1) == 0.0


def test_hinge_inside_margin():
    assert hinge_loss(model([1, 0, 0]), [0.5, 0], 1) == 0.5


def test_hinge_errors():
    with pytest.raises(DimensionMismatch):
        hinge_loss(model([1, 0]), [1, 2], 1)
    with pytest.raises(InvalidLabel):
        hinge_loss(model([1, 0]), [1], 0)


def test_objective_values():
    X = np.random.default_rng(0).normal(size=(7, 2))
    y = np.array([1, -1, 1, 1, -1, -1, 1])
    assert objective(SvmModel(np.zeros(3), 5.0), X, y) == 1.0
    assert objective(model([2, 0], 0.0), [[1.0]], [1]) == 0.0
    assert objective(model([1, 1], 2.0), [[1.0]], [1]) == 2.0


def test_objective_empty():
    with pytest.raises(EmptyDataset):
        objective(model([0, 0]), np.zeros((0, 1)), np.zeros(0))


@given(seed=st.integers(0, 2**31), lam=st.floats(0, 1))
@settings(max_examples=30)
def test_objective_matches_loop_reference(seed, lam):
    rng = np.random.default_rng(seed)
    X = rng.normal(size=(9, 3))
    y = np.where(rng.uniform(size=9) > 0.5, 1, -1)
    w = rng.normal(size=4)
    assert objective(SvmModel(w, lam), X, y) == pytest.approx(objective_ref(w, lam, X, y), rel=1e-12)


@given(seed=st.integers(0, 2**31), theta=st.floats(0.01, 0.99))
@settings(max_examples=50)
def test_objective_is_convex(seed, theta):
    rng = np.random.default_rng(seed)
    X = rng.normal(size=(12, 3))
    y = np.where(rng.uniform(size=12) > 0.5, 1, -1)
    w1, w2 = rng.normal(size=(2, 4)) * 2
    f = lambda w: objective(SvmModel(w, 0.1), X, y)
    assert f(theta * w1 + (1 - theta) * w2) <= theta * f(w1) + (1 - theta) * f(w2) + 1e-9


@given(seed=st.integers(0, 2**31))
@settings(max_examples=30)
def test_objective_nonnegative(seed):
    rng = np.random.default_rng(seed)
    X = rng.normal(size=(5, 2))
    y = np.where(rng.uniform(size=5) > 0.5, 1, -1)
    assert objective(SvmModel(rng.normal(size=3) * 10, rng.uniform()), X, y) >= 0


# -- subgradient ---------------------------------------------------------------------

def test_subgradient_inactive_hinge():
    X = np.array([[3.0, 0.0], [-3.0, 0.0]])
    g = subgradient(model([1, 0, 0]), X, [1, -1])
    np.testing.assert_array_equal(g, 0)


def test_subgradient_at_zero():
    g = subgradient(model([0, 0, 0]), [[0.5, -2.0]], [1])
    np.testing.assert_array_equal(g, [-0.5, 2.0, -1.0])


def test_subgradient_kink_contributes_zero():
    # margin exactly 1
    g = subgradient(model([1, 0]), [[1.0]], [1])
    np.testing.assert_array_equal(g, [0, 0])


def test_subgradient_matches_finite_differences():
    rng = np.random.default_rng(1)
    X = rng.normal(size=(16, 5))
    y = np.where(rng.uniform(size=16) > 0.5, 1, -1)
    w = rng.normal(size=6)
    g = subgradient(SvmModel(w, 0.01), X, y)
    fd = finite_difference_grad(lambda v: objective_ref(v, 0.01, X, y), w)
    np.testing.assert_allclose(g, fd, rtol=1e-5, atol=1e-8)


def test_subgradient_dimension_mismatch():
    with pytest.raises(DimensionMismatch):
        subgradient(model([0, 0, 0]), [[1.0]], [1])


# -- Adam --------------------------------------------------------------------------------

def test_adam_zero_grad_noop():
    st0 = AdamState.fresh(3)
    w = np.array([1.0, -2.0, 0.5])
    w2, st1 = adam_step(st0, np.zeros(3), w)
    np.testing.assert_array_equal(w2, w)
    assert not st1.m.any() and not st1.v.any() and st1.t == 1


def test_adam_first_step():
    w2, st1 = adam_step(AdamState.fresh(1, alpha=1e-3), np.array([1.0]), np.array([0.0]))
    assert w2[0] == pytest.approx(-1e-3 / (1 + 1e-8), rel=1e-12)
    assert st1.m[0] == pytest.approx(0.1) and st1.v[0] == pytest.approx(0.001)


def test_adam_first_step_scale_free():
    g = np.array([0.3, -4.0, 0.2])
    w = np.zeros(3)
    a, _ = adam_step(AdamState.fresh(3), g, w)
    b, _ = adam_step(AdamState.fresh(3), 2 * g, w)
    assert np.max(np.abs(a - b)) <= 10 * 1e-8 * 1e-3


def test_adam_matches_hand_recursion():
    rng = np.random.default_rng(2)
    grads = rng.normal(size=(6, 2))
    state, w = AdamState.fresh(2, alpha=0.01), np.zeros(2)
    m = v = np.zeros(2)
    ref = np.zeros(2)
    for t, g in enumerate(grads, start=1):
        w, state = adam_step(state, g, w)
        m = 0.9 * m + 0.1 * g
        v = 0.999 * v + 0.001 * g * g
        ref = ref - 0.01 * (m / (1 - 0.9**t)) / (np.sqrt(v / (1 - 0.999**t)) + 1e-8)
        assert state.t == t
        assert np.all(state.v >= 0)
    np.testing.assert_allclose(w, ref, rtol=1e-13)


def test_adam_rejects_nonfinite():
    with pytest.raises(NonFiniteGradient):
        adam_step(AdamState.fresh(2), np.array([np.nan, 0]), np.zeros(2))


# -- training / prediction ------------------------------------------------------------

def test_zero_epochs_is_noop(blobs):
    X, y = blobs
    m0 = SvmModel(np.array([0.1, -0.2, 0.3]), 0.01)
    m1, trace = train_local(m0, X, y, TrainConfig(epochs=0))
    np.testing.assert_array_equal(m1.weights, m0.weights)
    assert len(trace) == 0


def test_separable_blobs_fit(blobs):
    X, y = blobs
    m, trace = train_local(SvmModel.zeros(2), X, y, TrainConfig(epochs=50, seed=3))
    assert accuracy(m, X, y) == 1.0
    assert len(trace) == 50
    assert all(v >= 0 for v in trace)


def test_separable_hinge_goes_to_zero(blobs):
    X, y = blobs
    m, _ = train_local(SvmModel.zeros(2, lam=0.0), X, y, TrainConfig(epochs=200, lam=0.0, seed=0))
    assert objective(m, X, y) < 0.01


def test_training_is_deterministic(blobs):
    X, y = blobs
    a, ta = train_local(SvmModel.zeros(2), X, y, TrainConfig(epochs=7, seed=9))
    b, tb = train_local(SvmModel.zeros(2), X, y, TrainConfig(epochs=7, seed=9))
    assert a.weights.tobytes() == b.weights.tobytes()
    assert ta.values == tb.values


def test_training_does_not_mutate_input(blobs):
    X, y = blobs
    m0 = SvmModel.zeros(2)
    train_local(m0, X, y, TrainConfig(epochs=2))
    assert not m0.weights.any()


def test_train_empty():
    with pytest.raises(EmptyDataset):
        train_local(SvmModel.zeros(2), np.zeros((0, 2)), np.zeros(0), TrainConfig())


def test_predict_tie_is_positive():
    assert predict(model([0, 0, 0]), [1.0, 2.0]) == (1, 0.0)


def test_predict_simple():
    assert predict(model([1, 0, 0]), [3, 0]) == (1, 3.0)


@given(seed=st.integers(0, 2**31), c=st.floats(1e-3, 1e3))
def test_predict_positive_scaling(seed, c):
    rng = np.random.default_rng(seed)
    w, x = rng.normal(size=4), rng.normal(size=3)
    assert predict(model(w), x)[0] == predict(model(c * w), x)[0]


def test_predict_dimension_mismatch():
    with pytest.raises(DimensionMismatch):
        predict(model([1, 0, 0]), [1.0])


def test_augment():
    np.testing.assert_array_equal(augment([[1, 2], [3, 4]]), [[1, 2, 1], [3, 4, 1]])


def test_model_json_roundtrip(tmp_path):
    m = SvmModel(np.random.default_rng(0).normal(size=5), 0.003)
    m.save(tmp_path / "m.json")
    m2 = SvmModel.load(tmp_path / "m.json")
    assert m2.weights.tobytes() == m.weights.tobytes()
    assert m2.lam == m.lam
    import json
    d = json.loads((tmp_path / "m.json").read_text())
    assert d["label_map"] == {"+1": "asphyxia", "-1": "normal"}
    assert "feature_selector" not in d
