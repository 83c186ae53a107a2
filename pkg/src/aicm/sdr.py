"""Cumulative slicing estimation of the central subspace.

The target matrix averages outer products of indicator-weighted covariate
means ``alpha_t = (1/n) sum_i Z_i 1{Y_i <= t}`` over ``t = Y_j``; the
structural dimension is chosen by the minimum ridge-type eigenvalue ratio.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .dataset import Dataset, standardize

__all__ = ["SdrResult", "cse_target", "mrer", "estimate_subspace", "sign_normalize"]


@dataclass(frozen=True)
class SdrResult:
    B_hat: np.ndarray
    eigenvalues: np.ndarray
    q_hat: int
    c_n: float
    M_hat: np.ndarray
    no_structure: bool = False

    def to_dict(self) -> dict:
        return {
            "q_hat": self.q_hat,
            "c_n": self.c_n,
            "eigenvalues": self.eigenvalues.tolist(),
            "B_hat": self.B_hat.tolist(),
            "no_structure": self.no_structure,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict())


def cse_target(Z: np.ndarray, Y: np.ndarray) -> np.ndarray:
    """Sample CSE matrix ``(1/n) sum_j alpha_{Y_j} alpha_{Y_j}'``.

    Uses a sort and prefix sums, so ties in ``Y`` are handled exactly as the
    ``<=`` comparison in the double sum.
    """
    Z = np.atleast_2d(np.asarray(Z, dtype=float))
    Y = np.asarray(Y, dtype=float).reshape(-1)
    if Z.shape[0] != Y.shape[0]:
        raise ValueError(f"Z has {Z.shape[0]} rows but Y has length {Y.shape[0]}")
    n = Z.shape[0]
    order = np.argsort(Y, kind="stable")
    ys = Y[order]
    prefix = np.cumsum(Z[order], axis=0)
    # last sorted position whose value is <= Y_j
    last = np.searchsorted(ys, Y, side="right") - 1
    alpha = prefix[last] / n
    M = alpha.T @ alpha / n
    return 0.5 * (M + M.T)


def mrer(eigenvalues: np.ndarray, c_n: float) -> int:
    """Rank minimizing ``(lam_{j+1}^2 + c_n) / (lam_j^2 + c_n)`` over ``1..p-1``.

    Ties go to the smallest index.
    """
    lam = np.asarray(eigenvalues, dtype=float)
    if lam.ndim != 1 or lam.size < 2:
        raise ValueError("need at least two eigenvalues")
    if c_n <= 0:
        raise ValueError("c_n must be positive")
    if np.any(np.diff(lam) > 1e-12 * max(1.0, abs(lam[0]))):
        raise ValueError("eigenvalues must be sorted in descending order")
    sq = lam**2
    ratios = (sq[1:] + c_n) / (sq[:-1] + c_n)
    return int(np.argmin(ratios)) + 1


def sign_normalize(B: np.ndarray) -> np.ndarray:
    """Flip columns so each has its largest-magnitude entry positive."""
    B = np.array(B, dtype=float, copy=True)
    idx = np.argmax(np.abs(B), axis=0)
    signs = np.sign(B[idx, np.arange(B.shape[1])])
    signs[signs == 0] = 1.0
    return B * signs


def estimate_subspace(
    data: Dataset,
    c_n: float | str = "auto",
    ridge: float = 1e-8,
    q: int | None = None,
) -> SdrResult:
    """Estimate directions of the central subspace and its dimension.

    Covariates are whitened, the CSE matrix is eigendecomposed, and the
    leading eigenvectors are mapped back to the original ``X`` coordinates
    and re-orthonormalized. ``c_n="auto"`` uses ``log(n)/n``. Passing ``q``
    fixes the rank instead of selecting it.
    """
    n, p = data.n, data.p
    if p < 2:
        raise ValueError("dimension reduction needs p >= 2")
    if n <= p:
        raise ValueError(f"dimension reduction needs n > p (n={n}, p={p})")
    cn = float(np.log(n) / n) if c_n == "auto" else float(c_n)
    st = standardize(data, mode="whitened", ridge=ridge)
    M = cse_target(st.Z, data.Y)
    w, V = np.linalg.eigh(M)
    w, V = w[::-1], V[:, ::-1]
    lam = np.clip(w, 0.0, None)
    q_hat = mrer(lam, cn) if q is None else int(q)
    if not 1 <= q_hat <= p:
        raise ValueError(f"rank {q_hat} outside 1..{p}")
    Q, _ = np.linalg.qr(st.transform @ V[:, :q_hat])
    return SdrResult(
        B_hat=sign_normalize(Q),
        eigenvalues=lam,
        q_hat=q_hat,
        c_n=cn,
        M_hat=M,
        no_structure=bool(lam[0] <= 1e-10),
    )
