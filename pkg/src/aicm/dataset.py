"""Dataset container, CSV ingestion and covariate standardization."""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Literal, Sequence

import numpy as np

from .errors import DataError, SingularCovarianceError

__all__ = [
    "DataError",
    "Dataset",
    "StandardizedDataset",
    "load_csv",
    "load_boston",
    "standardize",
    "inverse_sqrt_psd",
]

Mode = Literal["marginal", "whitened"]


@dataclass(frozen=True)
class Dataset:
    """Covariates ``X`` (n x p), response ``Y`` (n,) and column labels."""

    X: np.ndarray
    Y: np.ndarray
    names: tuple[str, ...] = ()
    source: str = ""

    def __post_init__(self) -> None:
        X = np.array(self.X, dtype=np.float64)
        Y = np.array(self.Y, dtype=np.float64).reshape(-1)
        if X.ndim == 1:
            X = X[:, None]
        if X.ndim != 2:
            raise DataError(f"X must be two-dimensional, got shape {X.shape}")
        if X.shape[0] != Y.shape[0]:
            raise DataError(f"X has {X.shape[0]} rows but Y has length {Y.shape[0]}")
        if X.shape[0] < 2:
            raise DataError(f"need at least 2 observations, got {X.shape[0]}")
        if X.shape[1] < 1:
            raise DataError("need at least one covariate")
        if not np.all(np.isfinite(X)):
            i, j = np.argwhere(~np.isfinite(X))[0]
            raise DataError(f"non-finite covariate at row {i}, column {j}")
        if not np.all(np.isfinite(Y)):
            i = int(np.argwhere(~np.isfinite(Y))[0, 0])
            raise DataError(f"non-finite response at row {i}")
        names = tuple(self.names) or tuple(f"x{j + 1}" for j in range(X.shape[1]))
        if len(names) != X.shape[1]:
            raise DataError(f"{len(names)} names for {X.shape[1]} columns")
        X.setflags(write=False)
        Y.setflags(write=False)
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "Y", Y)
        object.__setattr__(self, "names", names)

    @property
    def n(self) -> int:
        return self.X.shape[0]

    @property
    def p(self) -> int:
        return self.X.shape[1]

    def with_response(self, Y: np.ndarray) -> "Dataset":
        return Dataset(self.X, Y, self.names, self.source)

    def to_json(self) -> str:
        return json.dumps(
            {"names": list(self.names), "X": self.X.tolist(), "Y": self.Y.tolist(),
             "source": self.source}
        )

    @classmethod
    def from_json(cls, text: str) -> "Dataset":
        obj = json.loads(text)
        return cls(np.asarray(obj["X"], dtype=float), np.asarray(obj["Y"], dtype=float),
                   tuple(obj["names"]), obj.get("source", ""))


@dataclass(frozen=True)
class StandardizedDataset:
    """Transformed covariates ``Z_i = transform @ (X_i - mean)``."""

    Z: np.ndarray
    mean: np.ndarray
    transform: np.ndarray
    mode: Mode
    ridge: float = 0.0
    names: tuple[str, ...] = field(default=())

    def inverse(self, Z: np.ndarray | None = None) -> np.ndarray:
        """Map standardized rows back to the original covariate scale."""
        Z = self.Z if Z is None else np.asarray(Z, dtype=float)
        return np.linalg.solve(self.transform, Z.T).T + self.mean


def _parse_cell(text: str, row: int, col: int, name: str) -> float:
    try:
        value = float(text)
    except ValueError:
        raise DataError(f"cannot parse {text!r} at row {row}, column {col} ({name})") from None
    if not math.isfinite(value):
        raise DataError(f"non-finite value {text!r} at row {row}, column {col} ({name})")
    return value


def load_csv(path: str | Path, response: str | int = -1, header: bool = True) -> Dataset:
    """Read a comma-separated numeric table into a :class:`Dataset`.

    Parameters
    ----------
    path : path to the file.
    response : column name (requires ``header``) or integer position of the
        response; negative positions count from the end.
    header : whether the first row carries column labels.

    Row numbers in error messages are 1-based file lines.
    """
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"no such file: {path}")
    with path.open(newline="") as fh:
        rows = [r for r in csv.reader(fh) if r and any(c.strip() for c in r)]
    if not rows:
        raise DataError(f"{path}: empty file")
    first_line = 1
    if header:
        labels = [c.strip() for c in rows[0]]
        rows = rows[1:]
        first_line = 2
    else:
        labels = [f"x{j + 1}" for j in range(len(rows[0]))]
    width = len(labels)

    if isinstance(response, str) and not response.lstrip("-").isdigit():
        if response not in labels:
            raise DataError(f"{path}: response column {response!r} not found in {labels}")
        ridx = labels.index(response)
    else:
        ridx = int(response)
        if not -width <= ridx < width:
            raise DataError(f"{path}: response index {ridx} out of range for {width} columns")
        ridx %= width

    if len(rows) < 2:
        raise DataError(f"{path}: need at least 2 data rows, got {len(rows)}")
    table = np.empty((len(rows), width))
    for i, row in enumerate(rows):
        line = i + first_line
        if len(row) != width:
            raise DataError(f"{path}: row {line} has {len(row)} fields, expected {width}")
        for j, cell in enumerate(row):
            table[i, j] = _parse_cell(cell.strip(), line, j + 1, labels[j])

    keep = [j for j in range(width) if j != ridx]
    return Dataset(table[:, keep], table[:, ridx], tuple(labels[j] for j in keep), str(path))


def load_boston(log_response: bool = False) -> Dataset:
    """The Boston house-price data (506 tracts, 13 covariates, response MEDV)."""
    ref = resources.files("aicm") / "_data" / "boston.csv"
    with resources.as_file(ref) as path:
        d = load_csv(path, response="MEDV")
    if log_response:
        d = d.with_response(np.log(d.Y))
    return Dataset(d.X, d.Y, d.names, "boston" + (":log" if log_response else ""))


def inverse_sqrt_psd(S: np.ndarray, ridge: float = 0.0, floor: float = 1e-12) -> np.ndarray:
    """Symmetric ``(S + ridge I)^{-1/2}`` via eigendecomposition.

    Eigenvalues of ``S + ridge I`` are clamped below at ``ridge``; a smallest
    eigenvalue under ``floor`` is treated as singular.
    """
    S = 0.5 * (S + S.T)
    w, V = np.linalg.eigh(S)
    w = np.maximum(w + ridge, ridge)
    if w.min() <= floor:
        raise SingularCovarianceError(
            f"covariance is numerically singular (min eigenvalue {w.min():.3e}); use ridge > 0"
        )
    T = (V / np.sqrt(w)) @ V.T
    return 0.5 * (T + T.T)


def standardize(d: Dataset | np.ndarray, mode: Mode = "whitened", ridge: float = 0.0) -> StandardizedDataset:
    """Center covariates and scale them marginally or whiten them jointly.

    ``marginal`` divides each column by its sample standard deviation
    (``ddof=1``); ``whitened`` multiplies by ``(Sigma_hat + ridge I)^{-1/2}``.
    """
    if isinstance(d, Dataset):
        X, names = d.X, d.names
    else:
        X = np.atleast_2d(np.asarray(d, dtype=float))
        names = tuple(f"x{j + 1}" for j in range(X.shape[1]))
    if X.shape[0] < 2:
        raise DataError("need at least 2 observations to standardize")
    mean = X.mean(axis=0)
    Xc = X - mean
    if mode == "marginal":
        var = Xc.var(axis=0, ddof=1)
        bad = np.flatnonzero(var <= 1e-12)
        if bad.size:
            raise DataError(f"constant column {names[bad[0]]!r} cannot be standardized")
        transform = np.diag(1.0 / np.sqrt(var))
        Z = Xc / np.sqrt(var)
    elif mode == "whitened":
        S = np.atleast_2d(np.cov(Xc, rowvar=False, ddof=1))
        transform = inverse_sqrt_psd(S, ridge)
        Z = Xc @ transform
    else:
        raise ValueError(f"unknown standardization mode {mode!r}")
    return StandardizedDataset(Z, mean, transform, mode, ridge, tuple(names))


def standardize_response(Y: Sequence[float] | np.ndarray) -> np.ndarray:
    """Center and scale a response vector to unit sample variance."""
    Y = np.asarray(Y, dtype=float)
    sd = Y.std(ddof=1)
    if sd <= 1e-12:
        raise DataError("constant response cannot be standardized")
    return (Y - Y.mean()) / sd
