import math

import numpy as np
import pytest

from hpcdetect.errors import SingleClass
from hpcdetect.features import FeatureMatrix
from hpcdetect.pca import apply_pca, fit_pca, jacobi_eigh, reconstruct
from hpcdetect.ranking import equal_width_bins, fisher_scores, information_gain, top_k


def test_jacobi_matches_numpy(rng):
    A = rng.normal(size=(6, 6))
    A = A + A.T
    w, v = jacobi_eigh(A)
    ref = np.sort(np.linalg.eigvalsh(A))[::-1]
    assert np.allclose(w, ref, atol=1e-9)
    assert np.allclose(A @ v, v * w, atol=1e-8)


def test_line_y_equals_x():
    t = np.linspace(-1, 1, 21)
    X = np.column_stack([t, t])
    p = fit_pca(X, 0.95)
    assert p.components.shape == (1, 2)
    assert np.allclose(np.abs(p.components[0]), [1 / math.sqrt(2)] * 2, atol=1e-12)
    assert p.explained_variance[0] / p.total_variance == pytest.approx(1.0)


def test_identity_covariance_keeps_all():
    X = np.array([[1, 0, 0], [-1, 0, 0], [0, 1, 0], [0, -1, 0], [0, 0, 1], [0, 0, -1]], float)
    assert fit_pca(X, 0.95).components.shape[0] == 3


def test_full_rank_reconstruction(rng):
    X = rng.normal(size=(50, 5))
    p = fit_pca(X, 1.0)
    assert p.components.shape == (5, 5)
    assert np.allclose(p.components @ p.components.T, np.eye(5), atol=1e-8)
    Z = apply_pca(p, FeatureMatrix(X, tuple("abcde"), tuple(map(str, range(50)))))
    assert Z.feature_names == ("pc1", "pc2", "pc3", "pc4", "pc5")
    assert np.max(np.abs(reconstruct(p, Z.rows) - X)) < 1e-8
    assert np.all(np.diff(p.explained_variance) <= 0)
    total = np.var(X, axis=0).sum()
    assert abs(p.eigenvalues.sum() - total) <= 1e-6 * total


def test_pca_warns_when_underdetermined(rng):
    with pytest.warns(RuntimeWarning):
        fit_pca(rng.normal(size=(3, 5)), 0.9)


def _fisher_oracle(col, y):
    mu = col.mean()
    num = den = 0.0
    for c in (-1, 1):
        v = col[y == c]
        num += len(v) * (v.mean() - mu) ** 2
        den += len(v) * v.var()
    return num / (den + 1e-12)


def test_fisher_hand_example():
    X = np.array([[0.0], [0.1], [1.0], [1.1]])
    y = np.array([-1, -1, 1, 1])
    # means 0.05 / 1.05, overall 0.55; within-class variance 0.0025 each
    expected = (2 * 0.25 + 2 * 0.25) / (2 * 0.0025 + 2 * 0.0025 + 1e-12)
    assert fisher_scores(X, y)[0] == pytest.approx(expected, rel=1e-12)


def test_fisher_properties(rng):
    X = rng.normal(size=(60, 4))
    y = np.where(rng.random(60) < 0.5, -1, 1)
    X[:, 0] = 7.0
    s = fisher_scores(X, y)
    assert s[0] == 0.0
    for j in range(1, 4):
        assert s[j] == pytest.approx(_fisher_oracle(X[:, j], y), rel=1e-10)
    perm = rng.permutation(60)
    assert np.allclose(fisher_scores(X[perm], y[perm]), s, rtol=1e-12)
    assert np.allclose(fisher_scores(X * 3.0 + 1.0, y)[1:], s[1:], rtol=1e-9)
    with pytest.raises(SingleClass):
        fisher_scores(X, np.ones(60))


def _entropy(p):
    p = np.asarray([x for x in p if x > 0])
    return float(-(p * np.log2(p)).sum())


def test_ig_perfect_binary():
    X = np.array([[0.0], [0.0], [1.0], [1.0]])
    y = np.array([-1, -1, 1, 1])
    assert information_gain(X, y)[0] == pytest.approx(1.0)
    assert information_gain(np.ones((4, 1)), y)[0] == 0.0


def test_ig_three_bin_table():
    # values land in bins 0, 1, 2 with bins=3 over [0, 3]
    col = np.array([0.0, 0.5, 1.5, 1.6, 2.9, 3.0, 3.0, 0.2])
    y = np.array([1, 1, -1, 1, -1, -1, -1, 1])
    assert equal_width_bins(col, 3).tolist() == [0, 0, 1, 1, 2, 2, 2, 0]
    h = _entropy([0.5, 0.5])
    cond = 3 / 8 * _entropy([1.0]) + 2 / 8 * _entropy([0.5, 0.5]) + 3 / 8 * _entropy([1.0])
    assert information_gain(col[:, None], y, bins=3)[0] == pytest.approx(h - cond, abs=1e-12)


def test_ig_bounds_and_permutation(rng):
    X = rng.normal(size=(80, 3))
    y = np.where(X[:, 0] + rng.normal(scale=0.5, size=80) > 0, 1, -1)
    ig = information_gain(X, y)
    h = _entropy([np.mean(y > 0), np.mean(y < 0)])
    assert np.all(ig >= 0) and np.all(ig <= h + 1e-12)
    perm = rng.permutation(80)
    assert np.allclose(information_gain(X[perm], y[perm]), ig)
    assert top_k(ig, 1) == [int(np.argmax(ig))]


def test_top_k_ties():
    assert top_k([1.0, 3.0, 3.0, 0.0], 2) == [1, 2]
