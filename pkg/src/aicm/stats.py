"""Residual-marked specification test statistics.

Each statistic is available as a plain function and as a *prepared* object
that caches everything depending only on the covariates (kernel matrices,
projection orderings), so the bootstrap can re-evaluate it cheaply for many
residual vectors. Double sums are reduced with numpy's pairwise summation
over contiguous arrays, which keeps the result independent of threading.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Literal, Protocol

import numpy as np

from .errors import NoLocalMassError

__all__ = [
    "NoLocalMassError",
    "ProjectionBundle",
    "KernelWeight",
    "GAUSSIAN",
    "ResidualStatistic",
    "GaussianKernelStatistic",
    "SmoothingStatistic",
    "ProjectedCvMStatistic",
    "gaussian_gram",
    "quartic_kernel",
    "zheng_bandwidth",
    "gwz_bandwidth",
    "aicm",
    "icm",
    "zheng",
    "gwz",
    "pcvm_mc",
    "uniform_directions",
    "offdiagonal_mean",
]

Blocks = Literal["joint", "sdr", "index"]


class ResidualStatistic(Protocol):
    def __call__(self, residuals: np.ndarray) -> float: ...


@dataclass(frozen=True)
class ProjectionBundle:
    """Projected covariates ``beta_hat' X_j`` (n x d) and ``B_hat' X_j`` (n x q)."""

    P_beta: np.ndarray
    P_B: np.ndarray

    def __post_init__(self) -> None:
        Pb = np.asarray(self.P_beta, dtype=float)
        PB = np.asarray(self.P_B, dtype=float)
        Pb = Pb[:, None] if Pb.ndim == 1 else Pb
        PB = PB[:, None] if PB.ndim == 1 else PB
        if Pb.ndim != 2 or PB.ndim != 2 or Pb.shape[0] != PB.shape[0]:
            raise ValueError("projection blocks have different row counts")
        if not (np.all(np.isfinite(Pb)) and np.all(np.isfinite(PB))):
            raise ValueError("projections must be finite")
        object.__setattr__(self, "P_beta", Pb)
        object.__setattr__(self, "P_B", PB)

    @classmethod
    def from_directions(cls, X: np.ndarray, beta_hat: np.ndarray, B_hat: np.ndarray) -> "ProjectionBundle":
        X = np.asarray(X, dtype=float)
        return cls(X @ np.asarray(beta_hat).reshape(X.shape[1], -1),
                   X @ np.asarray(B_hat).reshape(X.shape[1], -1))

    @property
    def n(self) -> int:
        return self.P_beta.shape[0]

    def stacked(self, blocks: Blocks = "joint") -> np.ndarray:
        """Columns entering the kernel: both blocks, SDR block only, or index block only."""
        if blocks == "joint":
            return np.hstack([self.P_B, self.P_beta])
        if blocks == "sdr":
            return self.P_B
        if blocks == "index":
            return self.P_beta
        raise ValueError(f"unknown projection blocks {blocks!r}")


@dataclass(frozen=True)
class KernelWeight:
    """Closed form ``K(u) = int cos(t'u) phi(t) dt`` of a spherical weight ``phi``.

    Only the standard Gaussian weight is provided, for which
    ``K(u) = exp(-|u|^2 / 2)``.
    """

    kind: str = "gaussian"

    def __post_init__(self) -> None:
        if self.kind != "gaussian":
            raise ValueError(f"unsupported weight {self.kind!r}")

    def evaluate(self, u: np.ndarray) -> np.ndarray | float:
        u = np.asarray(u, dtype=float)
        sq = np.sum(u * u, axis=-1) if u.ndim else u * u
        return np.exp(-0.5 * sq)

    def from_sqdist(self, sq: np.ndarray) -> np.ndarray:
        return np.exp(-0.5 * sq)


GAUSSIAN = KernelWeight()


def _sqdist(P: np.ndarray) -> np.ndarray:
    # column-wise accumulation keeps memory at n^2 and avoids |a|^2+|b|^2-2ab cancellation
    P = np.atleast_2d(P)
    n, k = P.shape
    D = np.zeros((n, n))
    for c in range(k):
        diff = P[:, c, None] - P[None, :, c]
        D += diff * diff
    return D


def gaussian_gram(P: np.ndarray, weight: KernelWeight = GAUSSIAN) -> np.ndarray:
    """n x n matrix ``K(P_j - P_k)``."""
    return weight.from_sqdist(_sqdist(np.asarray(P, dtype=float)))


def _check_residuals(residuals: np.ndarray, n: int) -> np.ndarray:
    e = np.asarray(residuals, dtype=float).reshape(-1)
    if e.shape[0] != n:
        raise ValueError(f"residuals have length {e.shape[0]}, expected {n}")
    return e


class GaussianKernelStatistic:
    """``(1/n) sum_{j,k} e_j e_k W_jk`` for a fixed kernel matrix ``W``."""

    def __init__(self, W: np.ndarray):
        self.W = np.ascontiguousarray(W, dtype=float)
        self.n = self.W.shape[0]

    @classmethod
    def from_projections(cls, P: np.ndarray, weight: KernelWeight = GAUSSIAN) -> "GaussianKernelStatistic":
        return cls(gaussian_gram(P, weight))

    def __call__(self, residuals: np.ndarray) -> float:
        e = _check_residuals(residuals, self.n)
        return float(np.sum(self.W * np.outer(e, e)) / self.n)


def aicm(
    residuals: np.ndarray,
    proj: ProjectionBundle,
    weight: KernelWeight = GAUSSIAN,
    blocks: Blocks = "joint",
) -> float:
    """Adaptive-to-model ICM statistic.

    ``(1/n) sum_{j,k} e_j e_k exp(-(|B'X_j - B'X_k|^2 + |b'X_j - b'X_k|^2)/2)``
    with the default ``blocks="joint"``. ``blocks="sdr"`` drops the fitted
    index block and weights by the SDR projections alone.
    """
    return GaussianKernelStatistic.from_projections(proj.stacked(blocks), weight)(residuals)


def icm(residuals: np.ndarray, X: np.ndarray) -> float:
    """Bierens' ICM statistic with standard normal weight on the raw covariates."""
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    return GaussianKernelStatistic.from_projections(X)(residuals)


def offdiagonal_mean(W: np.ndarray) -> float:
    n = W.shape[0]
    return float((np.sum(W) - np.trace(W)) / (n * (n - 1)))


# ---------------------------------------------------------------------------
# local smoothing tests


def quartic_kernel(u: np.ndarray | float) -> np.ndarray | float:
    """Biweight kernel ``(15/16)(1 - u^2)^2`` on ``|u| <= 1``."""
    u = np.asarray(u, dtype=float)
    out = np.where(np.abs(u) <= 1.0, 15.0 / 16.0 * (1.0 - u * u) ** 2, 0.0)
    return out if out.ndim else float(out)


def zheng_bandwidth(n: int, p: int) -> float:
    return 1.5 * n ** (-1.0 / (4 + p))


def gwz_bandwidth(n: int, q: int) -> float:
    return 1.5 * n ** (-1.0 / (4 + q))


def _product_kernel(P: np.ndarray, h: float) -> np.ndarray:
    P = np.atleast_2d(P) / h
    n, k = P.shape
    K = np.ones((n, n))
    for c in range(k):
        K *= quartic_kernel(P[:, c, None] - P[None, :, c])
    np.fill_diagonal(K, 0.0)
    return K


class SmoothingStatistic:
    """Standardized degenerate U-statistic ``c * S1 / sqrt(2 S2)``.

    ``S1 = sum_{i != j} K_ij e_i e_j`` and ``S2 = sum_{i != j} K_ij^2 e_i^2 e_j^2``,
    with ``K`` a product quartic kernel on ``(P_i - P_j)/h`` and ``c`` a fixed
    bandwidth factor.
    """

    def __init__(self, P: np.ndarray, h: float, factor: float = 1.0):
        if not h > 0:
            raise ValueError("bandwidth must be positive")
        self.h = float(h)
        self.factor = float(factor)
        self.K = _product_kernel(np.asarray(P, dtype=float), self.h)
        self.K2 = self.K * self.K
        self.n = self.K.shape[0]

    def __call__(self, residuals: np.ndarray) -> float:
        e = _check_residuals(residuals, self.n)
        num = np.sum(self.K * np.outer(e, e))
        e2 = e * e
        den = 2.0 * np.sum(self.K2 * np.outer(e2, e2))
        if not den > 0:
            raise NoLocalMassError("no local mass: kernel-weighted residual products all vanish")
        return float(self.factor * num / np.sqrt(den))


def zheng(residuals: np.ndarray, X: np.ndarray, h: float | str = "auto") -> float:
    """Zheng's kernel test with bandwidth ``1.5 n^{-1/(4+p)}`` by default."""
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    n, p = X.shape
    if n < 2:
        raise ValueError("need n >= 2")
    hh = zheng_bandwidth(n, p) if h == "auto" else float(h)
    return SmoothingStatistic(X, hh)(residuals)


def gwz_statistic(P_B: np.ndarray, h: float | str = "auto") -> SmoothingStatistic:
    P_B = np.asarray(P_B, dtype=float)
    if P_B.ndim == 1:
        P_B = P_B[:, None]
    n, q = P_B.shape
    if n < 2 or q < 1:
        raise ValueError("need n >= 2 and q >= 1")
    hh = gwz_bandwidth(n, q) if h == "auto" else float(h)
    # h^{1/2} h^{-q} in the numerator over (h^{-q})^{1/2} in the denominator
    return SmoothingStatistic(P_B, hh, factor=hh ** ((1.0 - q) / 2.0))


def gwz(residuals: np.ndarray, P_B: np.ndarray, h: float | str = "auto") -> float:
    """Model-adaptive smoothing test on the SDR projections ``B_hat' X``."""
    return gwz_statistic(P_B, h)(residuals)


# ---------------------------------------------------------------------------
# projected Cramer-von Mises


def uniform_directions(p: int, n_dirs: int, rng: np.random.Generator) -> np.ndarray:
    """``n_dirs`` x ``p`` array of directions uniform on the unit sphere."""
    A = rng.standard_normal((n_dirs, p))
    norms = np.linalg.norm(A, axis=1, keepdims=True)
    norms[norms == 0] = 1.0
    return A / norms


class ProjectedCvMStatistic:
    """``(1/n^2) mean_a sum_r (sum_i e_i 1{a'X_i <= a'X_r})^2`` over fixed directions."""

    def __init__(self, X: np.ndarray, directions: np.ndarray):
        X = np.asarray(X, dtype=float)
        if X.ndim == 1:
            X = X[:, None]
        self.n = X.shape[0]
        self.directions = np.atleast_2d(directions)
        proj = self.directions @ X.T  # n_dirs x n
        self.order = np.argsort(proj, axis=1, kind="stable")
        srt = np.take_along_axis(proj, self.order, axis=1)
        self.last = np.empty_like(self.order)
        for a in range(proj.shape[0]):
            self.last[a] = np.searchsorted(srt[a], proj[a], side="right") - 1

    def __call__(self, residuals: np.ndarray) -> float:
        e = _check_residuals(residuals, self.n)
        cs = np.cumsum(e[self.order], axis=1)
        marked = np.take_along_axis(cs, self.last, axis=1)
        return float(np.sum(marked * marked) / (self.n**2 * self.directions.shape[0]))


def pcvm_mc(
    residuals: np.ndarray,
    X: np.ndarray,
    n_dirs: int = 1000,
    rng: np.random.Generator | int | None = None,
) -> float:
    """Escanciano's projected CvM statistic, sphere integral by Monte Carlo."""
    if n_dirs < 1:
        raise ValueError("n_dirs must be >= 1")
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    rng = np.random.default_rng(rng)
    return ProjectedCvMStatistic(X, uniform_directions(X.shape[1], n_dirs, rng))(residuals)
