import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from sklearn.svm import SVC

from combo_kernel_lab.exceptions import KernelNotPsd, ShapeMismatch, SingleClassTrainingSet, ValidationError
from combo_kernel_lab.svm import (
    SvmModel,
    TrainConfig,
    decision_values,
    dual_objective,
    kkt_violations,
    load_model,
    predict_labels,
    save_model,
    train,
)


def block_kernel(n=40, seed=0):
    """Two classes, high within-class similarity, near zero across."""
    r = np.random.default_rng(seed)
    y = np.array([1] * (n // 2) + [-1] * (n - n // 2))
    x = np.zeros((n, 8))
    x[y == 1, :4] = r.uniform(0.5, 1.0, size=((y == 1).sum(), 4))
    x[y == -1, 4:] = r.uniform(0.5, 1.0, size=((y == -1).sum(), 4))
    return x @ x.T, y


def noisy_kernel(n, seed):
    r = np.random.default_rng(seed)
    x = r.normal(size=(n, 3))
    y = np.where(x[:, 0] + 0.5 * r.normal(size=n) > 0, 1, -1)
    if np.unique(y).size < 2:
        y[0] = -y[0]
    k = np.exp(-0.5 * ((x[:, None, :] - x[None, :, :]) ** 2).sum(-1))
    return k, y


def test_two_points_identity():
    m = train(np.eye(2), [1, -1], TrainConfig(C=10))
    assert set(m.support_indices) == {0, 1}
    f = decision_values(m, np.eye(2))
    assert f[0] > 0 > f[1]
    # closed form: alpha = 1, bias = 0, f = +-1
    assert np.allclose(m.alphas, 1.0, atol=1e-9) and abs(m.bias) < 1e-9


def test_conflicting_duplicates_terminate():
    m = train(np.ones((2, 2)), [1, -1], TrainConfig(C=1))
    pred = predict_labels(decision_values(m, np.ones((2, 2))))
    assert (pred == [1, -1]).sum() == 1


def test_block_diagonal_separable():
    k, y = block_kernel()
    cfg = TrainConfig(C=1.0)
    m = train(k, y, cfg, record_objective=True)
    assert m.converged
    assert (predict_labels(decision_values(m, k)) == y).all()
    assert kkt_violations(m, k).max() <= 1e-3
    assert abs(m.alphas @ y) <= 1e-8 * cfg.C * len(y)
    assert np.all(np.diff(m.objective_trace) >= -1e-12)
    assert m.objective_trace[-1] == pytest.approx(dual_objective(m.alphas, y, k), abs=1e-9)


def test_margin_on_free_support_vectors():
    k, y = block_kernel(seed=4)
    m = train(k, y, TrainConfig(C=10.0))
    f = decision_values(m, k)
    free = (m.alphas > 0) & (m.alphas < m.C)
    assert free.any()
    assert np.all(np.abs(f[free]) >= 1 - 1e-3)


def test_zero_alphas_give_bias():
    m = SvmModel(np.zeros(3), np.array([1, -1, 1]), 0.25, 1.0)
    assert np.all(decision_values(m, np.random.default_rng(0).random((4, 3))) == 0.25)


def test_predict_zero_is_positive():
    assert predict_labels([0.0, -0.0, -1e-300, 2]).tolist() == [1, 1, -1, 1]


def test_errors():
    with pytest.raises(SingleClassTrainingSet):
        train(np.eye(3), [1, 1, 1])
    with pytest.raises(KernelNotPsd):
        train(np.array([[1.0, 2.0], [2.0, 1.0]]), [1, -1])
    with pytest.raises(ShapeMismatch):
        train(np.eye(3), [1, -1])
    m = train(np.eye(2), [1, -1])
    with pytest.raises(ShapeMismatch):
        decision_values(m, np.ones((1, 3)))
    with pytest.raises(ValidationError):
        train(np.eye(2), [1, 0])
    with pytest.raises(ValidationError):
        TrainConfig(C=0)
    with pytest.raises(ValidationError):
        TrainConfig(kkt_tol=0)


@pytest.mark.parametrize("seed", range(5))
def test_matches_libsvm(seed):
    k, y = noisy_kernel(60, seed)
    m = train(k, y, TrainConfig(C=1.0, kkt_tol=1e-6))
    ref = SVC(C=1.0, kernel="precomputed", tol=1e-6).fit(k, y)
    assert np.allclose(decision_values(m, k), ref.decision_function(k), atol=1e-4)


@settings(max_examples=25, deadline=None)
@given(st.integers(4, 40), st.integers(0, 2**32 - 1), st.sampled_from([0.1, 1.0, 10.0]))
def test_feasibility_and_monotone_objective(n, seed, c):
    k, y = noisy_kernel(n, seed)
    m = train(k, y, TrainConfig(C=c), record_objective=True)
    assert np.all(m.alphas >= 0) and np.all(m.alphas <= c)
    assert abs(m.alphas @ y) <= 1e-8 * c * n
    assert np.all(np.diff(m.objective_trace) >= -1e-12 * max(1.0, abs(m.objective_trace[-1])))
    if m.converged:
        assert kkt_violations(m, k).max() <= 2e-3


@pytest.mark.parametrize("seed", range(5))
def test_label_flip_negates(seed):
    k, y = noisy_kernel(30, seed)
    test_rows = k[:7]
    a = train(k, y, TrainConfig(kkt_tol=1e-8))
    b = train(k, -y, TrainConfig(kkt_tol=1e-8))
    assert np.allclose(decision_values(a, test_rows), -decision_values(b, test_rows), atol=1e-6)


@pytest.mark.parametrize("seed", range(5))
def test_reordering_invariance(seed):
    k, y = noisy_kernel(30, seed)
    perm = np.random.default_rng(seed + 100).permutation(30)
    cfg = TrainConfig(kkt_tol=1e-8)
    a = train(k, y, cfg)
    b = train(k[np.ix_(perm, perm)], y[perm], cfg)
    test_rows = k[:5]
    assert np.allclose(decision_values(a, test_rows), decision_values(b, test_rows[:, perm]), atol=1e-6)


def test_model_round_trip(tmp_path):
    k, y = block_kernel()
    m = train(k, y)
    save_model(m, tmp_path / "model.txt")
    back = load_model(tmp_path / "model.txt")
    assert back.C == m.C and back.bias == m.bias
    assert np.array_equal(back.alphas, m.alphas)
    assert np.array_equal(decision_values(back, k), decision_values(m, k))
    header = (tmp_path / "model.txt").read_text().splitlines()[0].split("\t")
    assert int(header[0]) == 40


def test_max_passes_reported():
    k, y = noisy_kernel(40, 1)
    m = train(k, y, TrainConfig(C=100.0, kkt_tol=1e-12, max_passes=1))
    assert not m.converged and m.n_iter == 40
