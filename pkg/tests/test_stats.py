import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from numpy.polynomial.hermite_e import hermegauss
from numpy.testing import assert_allclose

from aicm.errors import NoLocalMassError
from aicm.stats import (
    GAUSSIAN,
    ProjectedCvMStatistic,
    ProjectionBundle,
    aicm,
    gaussian_gram,
    gwz,
    gwz_bandwidth,
    icm,
    offdiagonal_mean,
    pcvm_mc,
    quartic_kernel,
    uniform_directions,
    zheng,
    zheng_bandwidth,
)

NODES, WEIGHTS = hermegauss(60)
WEIGHTS = WEIGHTS / np.sqrt(2 * np.pi)  # probabilists' Hermite weights integrate the N(0,1) density


def integrated_moment(e, U):
    """``int |n^{-1/2} sum_j e_j exp(i t'U_j)|^2 phi(t) dt`` by tensor Gauss-Hermite."""
    n, k = U.shape
    grids = np.meshgrid(*([NODES] * k), indexing="ij")
    wts = np.prod(np.meshgrid(*([WEIGHTS] * k), indexing="ij"), axis=0).ravel()
    T = np.column_stack([g.ravel() for g in grids])
    phase = T @ U.T
    S = (np.cos(phase) @ e) ** 2 + (np.sin(phase) @ e) ** 2
    return float(wts @ S / n)


def test_kernel_closed_form_by_quadrature():
    for u in (0.0, 0.3, 1.7, 4.0):
        assert WEIGHTS @ np.cos(NODES * u) == pytest.approx(np.exp(-u * u / 2), abs=1e-13)
    assert GAUSSIAN.evaluate(np.array([3.0, 4.0])) == pytest.approx(np.exp(-12.5))


@pytest.mark.parametrize("seed", range(5))
def test_icm_matches_quadrature(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(2, 9))
    X, e = rng.normal(size=(n, 1)), rng.normal(size=n)
    assert icm(e, X) == pytest.approx(integrated_moment(e, X), rel=1e-6)


@pytest.mark.parametrize("seed", range(5))
def test_aicm_matches_quadrature(seed):
    rng = np.random.default_rng(100 + seed)
    n = int(rng.integers(2, 9))
    proj = ProjectionBundle(rng.normal(size=n), rng.normal(size=n))
    e = rng.normal(size=n)
    U = proj.stacked("joint")
    assert aicm(e, proj) == pytest.approx(integrated_moment(e, U), rel=1e-6)
    assert aicm(e, proj, blocks="sdr") == pytest.approx(integrated_moment(e, proj.P_B), rel=1e-6)


def test_two_point_example():
    proj = ProjectionBundle(np.array([0.0, 0.0]), np.array([0.0, 0.0]))
    assert aicm(np.array([1.0, 1.0]), proj) == pytest.approx(2.0)
    assert aicm(np.array([1.0, -1.0]), proj) == pytest.approx(0.0)


def test_aicm_stacking_order(rng):
    Pb, PB = rng.normal(size=(10, 2)), rng.normal(size=(10, 1))
    proj = ProjectionBundle(Pb, PB)
    assert proj.stacked().shape == (10, 3)
    assert_allclose(proj.stacked()[:, 0], PB[:, 0])
    X = rng.normal(size=(10, 4))
    b, B = rng.normal(size=4), rng.normal(size=(4, 2))
    fd = ProjectionBundle.from_directions(X, b, B)
    assert_allclose(fd.P_beta[:, 0], X @ b)
    assert_allclose(fd.P_B, X @ B)


def test_icm_degenerates_in_high_dimension(rng):
    X = rng.normal(size=(200, 50))
    W = gaussian_gram(X)
    assert offdiagonal_mean(W) < 1e-10  # population value 3^{-25}
    e = rng.normal(size=200)
    # only the diagonal survives
    assert icm(e, X) == pytest.approx(np.mean(e * e), rel=1e-8)


def test_offdiagonal_mean_gaussian_oracle():
    # E exp(-|X1-X2|^2/2) = 3^{-p/2} for standard normal X
    rng = np.random.default_rng(9)
    X = rng.normal(size=(2000, 2))
    assert offdiagonal_mean(gaussian_gram(X)) == pytest.approx(1 / 3, rel=0.05)


def test_quartic_kernel():
    assert quartic_kernel(0.5) == pytest.approx(0.52734375)
    assert quartic_kernel(0.0) == pytest.approx(15 / 16)
    assert quartic_kernel(1.2) == 0.0
    assert quartic_kernel(np.array([-1.0, 1.0])).tolist() == [0.0, 0.0]
    u = np.linspace(-1, 1, 20001)
    f = quartic_kernel(u)
    assert np.sum((f[1:] + f[:-1]) / 2 * np.diff(u)) == pytest.approx(1.0, abs=1e-8)


def test_bandwidths():
    assert gwz_bandwidth(100, 1) == pytest.approx(0.597163, abs=1e-5)
    assert zheng_bandwidth(100, 8) == pytest.approx(1.5 * 100 ** (-1 / 12))


def zheng_brute(e, X, h):
    n = len(e)
    num = den = 0.0
    for i in range(n):
        for j in range(n):
            if i != j:
                k = np.prod(quartic_kernel((X[i] - X[j]) / h))
                num += k * e[i] * e[j]
                den += k * k * e[i] ** 2 * e[j] ** 2
    return num / np.sqrt(2 * den)


def test_zheng_matches_double_loop(rng):
    X, e = rng.normal(size=(25, 2)), rng.normal(size=25)
    assert zheng(e, X, h=1.3) == pytest.approx(zheng_brute(e, X, 1.3), rel=1e-12)
    assert zheng(e, X) == pytest.approx(zheng_brute(e, X, zheng_bandwidth(25, 2)), rel=1e-12)


def test_gwz_reduces_to_zheng(rng):
    X, e = rng.normal(size=(40, 1)), rng.normal(size=40)
    assert gwz(e, X) == pytest.approx(zheng(e, X), rel=1e-14)
    P = rng.normal(size=(40, 3))
    h = 0.9
    assert gwz(e, P, h) == pytest.approx(h ** (-1.0) * zheng(e, P, h), rel=1e-12)


def test_zero_residuals_have_no_local_mass(rng):
    with pytest.raises(NoLocalMassError):
        zheng(np.zeros(10), rng.normal(size=(10, 2)))
    with pytest.raises(NoLocalMassError):
        gwz(np.ones(5), np.arange(5.0) * 10.0)


def test_zheng_null_is_standardized():
    rng = np.random.default_rng(2024)
    vals = []
    for _ in range(500):
        X = rng.normal(size=(100, 2))
        vals.append(zheng(rng.normal(size=100), X))
    vals = np.array(vals)
    assert abs(vals.mean()) < 0.15
    assert 0.7 < vals.var() < 1.3


def pcvm_brute_1d(e, x):
    n = len(e)
    return sum(sum(e[i] for i in range(n) if x[i] <= x[r]) ** 2 for r in range(n)) / n**2


def test_pcvm_one_dimension_exact(rng):
    x = rng.normal(size=30)
    e = rng.normal(size=30)
    e -= e.mean()
    expected = pcvm_brute_1d(e, x)
    for seed in range(3):
        assert pcvm_mc(e, x, n_dirs=7, rng=seed) == pytest.approx(expected, rel=1e-12)


def test_pcvm_direction_mc_matches_brute(rng):
    X, e = rng.normal(size=(15, 3)), rng.normal(size=15)
    X[5] = X[2]  # tied projections in every direction
    A = uniform_directions(3, 4, rng)
    brute = np.mean([pcvm_brute_1d(e, X @ a) for a in A])
    assert ProjectedCvMStatistic(X, A)(e) == pytest.approx(brute, rel=1e-12)
    assert_allclose(np.linalg.norm(A, axis=1), 1.0)


def test_pcvm_seed_stability(rng):
    X, e = rng.normal(size=(100, 4)), rng.normal(size=100)
    vals = [pcvm_mc(e, X, n_dirs=1000, rng=s) for s in range(5)]
    assert (max(vals) - min(vals)) / np.mean(vals) < 0.05
    assert pcvm_mc(e, X, rng=3) == pcvm_mc(e, X, rng=3)


def test_residual_length_checked(rng):
    with pytest.raises(ValueError, match="length"):
        icm(np.ones(3), rng.normal(size=(4, 2)))


# ---------------------------------------------------------------------------
# properties on random instances


@st.composite
def instances(draw):
    seed = draw(st.integers(0, 2**32 - 1))
    rng = np.random.default_rng(seed)
    n = draw(st.integers(2, 30))
    d = draw(st.integers(1, 3))
    q = draw(st.integers(1, 3))
    return rng, ProjectionBundle(rng.normal(size=(n, d)), rng.normal(size=(n, q))), rng.normal(size=n)


def random_rotation(rng, k):
    Q, R = np.linalg.qr(rng.normal(size=(k, k)))
    return Q * np.sign(np.diag(R))


@settings(max_examples=100, deadline=None)
@given(instances())
def test_aicm_nonnegative(inst):
    _, proj, e = inst
    assert aicm(e, proj) >= -1e-12


@settings(max_examples=100, deadline=None)
@given(instances())
def test_aicm_rotation_invariant(inst):
    rng, proj, e = inst
    U = proj.stacked()
    R = random_rotation(rng, U.shape[1])
    rotated = ProjectionBundle(np.zeros(len(e)), U @ R)
    assert aicm(e, rotated, blocks="sdr") == pytest.approx(aicm(e, proj), rel=1e-9, abs=1e-12)
    P_beta = proj.P_beta @ random_rotation(rng, proj.P_beta.shape[1])
    P_B = proj.P_B @ random_rotation(rng, proj.P_B.shape[1])
    assert aicm(e, ProjectionBundle(P_beta, P_B)) == pytest.approx(aicm(e, proj), rel=1e-9, abs=1e-12)


@settings(max_examples=100, deadline=None)
@given(instances(), st.floats(-10, 10).filter(lambda s: abs(s) > 1e-3))
def test_aicm_scales_quadratically(inst, s):
    _, proj, e = inst
    assert aicm(s * e, proj) == pytest.approx(s * s * aicm(e, proj), rel=1e-9, abs=1e-12)


@settings(max_examples=100, deadline=None)
@given(instances())
def test_aicm_permutation_invariant(inst):
    rng, proj, e = inst
    perm = rng.permutation(len(e))
    permuted = ProjectionBundle(proj.P_beta[perm], proj.P_B[perm])
    assert aicm(e[perm], permuted) == pytest.approx(aicm(e, proj), rel=1e-9, abs=1e-12)
