import numpy as np
import pytest

from miml.core import Bag, MimlDataset
from miml.subcod import (
    GmmModel,
    SubCodConfig,
    assign_subconcepts,
    derive_label_vectors,
    em_fit_gmm,
    fit,
    polish_labels,
    polish_objective,
    predict,
    predict_label,
)


def _mil_binary_ds(rng, m=12, d=2, sep=4.0):
    """Two-class multi-instance data with planted per-class clusters."""
    examples = []
    for i in range(m):
        cls = i % 2
        n = int(rng.integers(1, 4))
        center = np.zeros(d)
        center[0] = sep if cls else -sep
        feats = center + 0.3 * rng.normal(size=(n, d))
        examples.append((Bag(f"b{i}", feats), frozenset({cls})))
    return MimlDataset(tuple(examples), T=2, d=d)


# ------------------------------------------------------------------ GMM

def test_em_single_component_closed_form(rng):
    X = rng.normal(size=(40, 3)) * 1.7 + 2.0
    gmm = em_fit_gmm(X, M=1, seed=0, max_iters=50)
    assert np.allclose(gmm.means[0], X.mean(axis=0), atol=1e-8)
    assert gmm.weights[0] == pytest.approx(1.0)
    emp = np.cov(X.T, bias=True)
    # covariance matches the biased MLE up to the trace regularizer
    assert np.allclose(gmm.covs[0], emp, atol=1e-4 * np.trace(emp))


def test_responsibilities_row_stochastic(rng):
    X = np.vstack([rng.normal(size=(20, 2)) - 3, rng.normal(size=(20, 2)) + 3])
    gmm = em_fit_gmm(X, M=2, seed=1)
    R = gmm.responsibilities(X)
    assert np.allclose(R.sum(axis=1), 1.0, atol=1e-10)
    assert np.all(R >= 0)


def test_log_likelihood_non_decreasing(rng):
    for seed in range(6):
        X = np.vstack([rng.normal(size=(15, 2)) - 2, rng.normal(size=(15, 2)) + 2])
        gmm = em_fit_gmm(X, M=3, seed=seed)
        hist = gmm.history
        assert len(hist) >= 2
        for a, b in zip(hist, hist[1:]):
            assert b >= a - 1e-9


def test_em_rejects_too_many_components(rng):
    with pytest.raises(ValueError):
        em_fit_gmm(rng.normal(size=(3, 2)), M=4, seed=0)


def test_assign_matches_density_oracle(rng):
    X = np.vstack([rng.normal(size=(15, 2)) - 2, rng.normal(size=(15, 2)) + 2])
    gmm = em_fit_gmm(X, M=2, seed=0)
    got = assign_subconcepts(gmm, X)
    # independent density route: explicit inverse and determinant
    N = X.shape[0]
    dens = np.zeros((N, 2))
    for k in range(2):
        inv = np.linalg.inv(gmm.covs[k])
        det = np.linalg.det(gmm.covs[k])
        diff = X - gmm.means[k]
        quad = np.sum(diff @ inv * diff, axis=1)
        dens[:, k] = gmm.weights[k] * np.exp(-0.5 * quad) / np.sqrt(
            (2 * np.pi) ** 2 * det)
    assert np.array_equal(got, np.argmax(dens / dens.sum(axis=1, keepdims=True), axis=1))


def test_assign_tie_goes_to_lowest_index():
    gmm = GmmModel(
        means=np.array([[-1.0], [1.0]]),
        covs=np.array([[[1.0]], [[1.0]]]),
        weights=np.array([0.5, 0.5]),
    )
    assert assign_subconcepts(gmm, np.array([[0.0]]))[0] == 0


def test_em_m1_assigns_all_zero(rng):
    X = rng.normal(size=(10, 2))
    gmm = em_fit_gmm(X, M=1, seed=0)
    assert np.all(assign_subconcepts(gmm, X) == 0)


# --------------------------------------------------------- label vectors

def test_derive_label_vectors_cases():
    sizes = np.array([3, 2])
    assignments = np.array([2, 2, 2, 0, 1])
    c = derive_label_vectors(sizes, assignments, 4)
    assert np.array_equal(c[0], [-1, -1, 1, -1])
    assert np.array_equal(c[1], [1, 1, -1, -1])


def test_derive_label_vectors_membership_oracle(rng):
    for _ in range(20):
        sizes = rng.integers(1, 5, size=5)
        M = 3
        assignments = rng.integers(0, M, size=int(sizes.sum()))
        c = derive_label_vectors(sizes, assignments, M)
        off = np.concatenate(([0], np.cumsum(sizes)))
        for i in range(5):
            seen = set(int(a) for a in assignments[off[i]:off[i + 1]])
            for j in range(M):
                assert c[i, j] == (1.0 if j in seen else -1.0)


# -------------------------------------------------------------- polishing

def test_polish_pinning_theta_keeps_everything(rng):
    m, M = 3, 3  # odd product so the pinning budget is integral
    c = np.where(rng.random((m, M)) < 0.5, 1.0, -1.0)
    y = np.array([1.0, -1.0, 1.0])
    theta = (m * M + 1) // 2  # 2*theta - 1 = m*M pins every z at +1
    c_tilde, history, Z = polish_labels(c, y, theta, C=1.0)
    assert np.array_equal(c_tilde, c)
    assert np.allclose(Z, 1.0, atol=1e-9)


def test_polish_objective_non_increasing_and_beats_all_ones(rng):
    for seed in range(4):
        r = np.random.default_rng(seed)
        m, M = 6, 3
        c = np.where(r.random((m, M)) < 0.5, 1.0, -1.0)
        y = np.where(r.random(m) < 0.5, 1.0, -1.0)
        if not (np.any(y > 0) and np.any(y < 0)):
            continue
        theta = int(round(0.4 * m * M))
        c_tilde, history, Z = polish_labels(c, y, theta, C=1.0)
        for a, b in zip(history, history[1:]):
            assert b <= a + 1e-9
        assert np.all(np.abs(c_tilde) == 1.0)
        assert Z.sum() >= 2 * theta - 1 - 1e-9
        # reference point: the unpolished labels (Z = all ones)
        from miml.subcod import _polish_qp
        w1, b1 = _polish_qp(c, y, C=1.0)
        ref = polish_objective(w1, b1, np.ones((m, M)), c, y, C=1.0)
        w2, b2 = _polish_qp(c * Z, y, C=1.0)
        final = polish_objective(w2, b2, Z, c, y, C=1.0)
        assert final <= ref + 1e-6


def test_polish_rejects_single_sign():
    with pytest.raises(ValueError):
        polish_labels(np.ones((3, 2)), np.ones(3), theta=1, C=1.0)


def test_polish_rejects_infeasible_theta():
    with pytest.raises(ValueError):
        polish_labels(np.ones((2, 2)), np.array([1.0, -1.0]), theta=4, C=1.0)


# ------------------------------------------------------------------- fit

def test_fit_pipeline_shapes(rng):
    ds = _mil_binary_ds(rng, m=12)
    cfg = SubCodConfig(M=2, seed=0)
    model = fit(ds, cfg)
    assert model.c_tilde.shape == (12, 2)
    assert np.all(np.abs(model.c_tilde) == 1.0)
    assert np.all(model.c_tilde.max(axis=1) == 1.0)  # no all-negative rows
    assert model.inner.T == 2  # pseudo-labels count
    assert model.mapper_classes == (0, 1)


def test_fit_m1_predicts_majority(rng):
    examples = []
    for i in range(9):
        cls = 0 if i < 6 else 1  # majority class 0
        examples.append((Bag(f"b{i}", rng.normal(size=(2, 2))), frozenset({cls})))
    ds = MimlDataset(tuple(examples), T=2, d=2)
    model = fit(ds, SubCodConfig(M=1, seed=0))
    assert np.all(model.c_tilde == 1.0)
    for bag, _ in ds.examples:
        assert predict_label(model, bag) == 0


def test_fit_deterministic_and_predicts(rng):
    ds = _mil_binary_ds(rng, m=14)
    m1 = fit(ds, SubCodConfig(M=2, seed=5))
    m2 = fit(ds, SubCodConfig(M=2, seed=5))
    assert m1 == m2
    correct = sum(predict_label(m1, bag) == next(iter(labels))
                  for bag, labels in ds.examples)
    assert correct >= 0.9 * ds.m  # separable training data
    ls = predict(m1, ds.bags()[0])
    assert len(ls.predicted) == 1


def test_fit_recovers_planted_subconcepts(rng):
    ds = _mil_binary_ds(rng, m=16, sep=6.0)
    model = fit(ds, SubCodConfig(M=2, seed=1))
    assigns = model.history["assignments"]
    planted = []
    for bag, labels in ds.examples:
        planted.extend([next(iter(labels))] * bag.size)
    planted = np.array(planted)
    agree = max(np.mean(assigns == planted), np.mean(assigns == 1 - planted))
    assert agree > 0.8
