import numpy as np
import pytest
from numpy.testing import assert_allclose

from aicm._rng import substream
from aicm.dataset import Dataset
from aicm.sdr import cse_target, estimate_subspace, mrer, sign_normalize
from aicm.simulation import Scenario, dgp_generate, rank_frequencies


def cse_brute(Z, Y):
    n, p = Z.shape
    M = np.zeros((p, p))
    for j in range(n):
        alpha = np.zeros(p)
        for i in range(n):
            if Y[i] <= Y[j]:
                alpha += Z[i]
        alpha /= n
        M += np.outer(alpha, alpha)
    return M / n


@pytest.mark.parametrize("ties", [False, True])
def test_cse_matches_double_sum(rng, ties):
    Z = rng.normal(size=(37, 4))
    Y = rng.normal(size=37)
    if ties:
        Y = np.round(Y, 1)
    assert_allclose(cse_target(Z, Y), cse_brute(Z, Y), atol=1e-13)


def test_cse_symmetric_psd(rng):
    M = cse_target(rng.normal(size=(100, 5)), rng.normal(size=100))
    assert_allclose(M, M.T)
    assert np.linalg.eigvalsh(M).min() > -1e-14


@pytest.mark.parametrize(
    "lam, c, expected",
    [((4.0, 3.0, 0.0, 0.0), 0.01, 2), ((1.0, 0.0, 0.0), 1e-3, 1), ((1.0, 1.0, 1.0), 0.1, 1)],
)
def test_mrer_examples(lam, c, expected):
    assert mrer(np.array(lam), c) == expected


def test_mrer_rejects_bad_input():
    with pytest.raises(ValueError):
        mrer(np.array([1.0]), 0.1)
    with pytest.raises(ValueError):
        mrer(np.array([0.0, 1.0]), 0.1)
    with pytest.raises(ValueError):
        mrer(np.array([1.0, 0.0]), 0.0)


def test_sign_normalize():
    B = np.array([[0.1, -0.2], [-0.9, 0.3]])
    out = sign_normalize(B)
    assert_allclose(out, [[-0.1, -0.2], [0.9, 0.3]])


def single_index_data(rng, n=2000, p=6):
    b = np.zeros(p)
    b[:2] = [1.0, -1.0]
    b /= np.linalg.norm(b)
    X = rng.normal(size=(n, p))
    return X, X @ b + 0.5 * rng.normal(size=n), b


def test_single_index_direction(rng):
    X, Y, b = single_index_data(rng)
    res = estimate_subspace(Dataset(X, Y))
    assert res.q_hat == 1
    assert abs(float(res.B_hat[:, 0] @ b)) >= 0.95
    assert res.c_n == pytest.approx(np.log(2000) / 2000)


def test_eigen_contract(rng):
    X, Y, _ = single_index_data(rng, n=300)
    res = estimate_subspace(Dataset(X, Y), q=3)
    lam = res.eigenvalues
    assert lam.shape == (6,)
    assert np.all(lam >= 0) and np.all(np.diff(lam) <= 0)
    assert_allclose(res.B_hat.T @ res.B_hat, np.eye(3), atol=1e-12)
    assert np.all(res.B_hat[np.argmax(np.abs(res.B_hat), axis=0), range(3)] > 0)
    assert set(res.to_dict()) >= {"B_hat", "eigenvalues", "q_hat"}


def test_scale_and_monotone_invariance(rng):
    X, Y, _ = single_index_data(rng, n=300)
    base = estimate_subspace(Dataset(X, Y), q=2)
    scaled = estimate_subspace(Dataset(3.0 * X + 1.0, Y), q=2)
    monotone = estimate_subspace(Dataset(X, np.exp(Y)), q=2)
    assert_allclose(scaled.B_hat, base.B_hat, atol=1e-8)
    assert_allclose(monotone.B_hat, base.B_hat, atol=1e-12)
    assert_allclose(monotone.eigenvalues, base.eigenvalues, atol=1e-14)


def test_no_structure_flag():
    X = np.random.default_rng(0).normal(size=(20, 3))
    res = estimate_subspace(Dataset(X, np.zeros(20)))
    assert res.no_structure
    assert res.q_hat == 1


def test_requires_n_greater_than_p(rng):
    with pytest.raises(ValueError, match="n > p"):
        estimate_subspace(Dataset(rng.normal(size=(3, 3)), rng.normal(size=3)))
    with pytest.raises(ValueError, match="p >= 2"):
        estimate_subspace(Dataset(rng.normal(size=(10, 1)), rng.normal(size=10)))


def test_h13_null_selects_one():
    q = rank_frequencies(Scenario("H13", 0.0, 400, p=17), reps=100, seed=5)
    assert np.mean(q == 1) >= 0.95


def test_rank_frequencies_deterministic():
    s = Scenario("H14", 1.0, 100)
    assert np.array_equal(rank_frequencies(s, 10, seed=1), rank_frequencies(s, 10, seed=1))
    d = dgp_generate(s, substream(1, 0))
    assert estimate_subspace(d).q_hat == rank_frequencies(s, 1, seed=1)[0]
