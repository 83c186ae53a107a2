"""Parametric multiple-index mean functions and their least-squares fit.

A model ``g(theta, x)`` is parametrized by ``theta = [vec(beta), nuisance]``
where ``beta`` is ``p x d`` (columns stacked) and the nuisance block has
length ``l``. Mean functions and Jacobians are vectorized over the rows of
``X``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .dataset import Dataset
from .errors import NumericalError

__all__ = [
    "NumericalError",
    "ModelSpec",
    "FitResult",
    "LMOptions",
    "builtin_model",
    "BUILTIN_MODELS",
    "fit_least_squares",
    "residuals",
]

MeanFn = Callable[[np.ndarray, np.ndarray], np.ndarray]


@dataclass(frozen=True)
class ModelSpec:
    """A parametric regression mean ``g(theta, X)``.

    ``mean(theta, X)`` returns the n-vector of fitted means and
    ``grad(theta, X)`` the n x m Jacobian ``dg/dtheta`` with ``m = p*d + l``.
    ``initializer(X, Y)``, when given, replaces the default "auto" start.
    """

    label: str
    p: int
    d: int
    l: int
    mean: MeanFn
    grad: MeanFn
    initializer: Callable[[np.ndarray, np.ndarray], np.ndarray] | None = None

    @property
    def n_params(self) -> int:
        return self.p * self.d + self.l

    def beta(self, theta: np.ndarray) -> np.ndarray:
        """Leading ``p*d`` block of ``theta`` reshaped to ``p x d``."""
        return np.asarray(theta[: self.p * self.d]).reshape(self.d, self.p).T

    def auto_init(self, X: np.ndarray, Y: np.ndarray) -> np.ndarray:
        if self.initializer is not None:
            return np.asarray(self.initializer(X, Y), dtype=float)
        theta = np.zeros(self.n_params)
        theta[: self.p] = np.linalg.lstsq(X, Y, rcond=None)[0]
        return theta


@dataclass(frozen=True)
class LMOptions:
    tol: float = 1e-8
    max_iter: int = 200
    lm_damping: float = 1e-3


@dataclass(frozen=True)
class FitResult:
    theta_hat: np.ndarray
    beta_hat: np.ndarray
    residuals: np.ndarray
    rss: float
    iterations: int
    converged: bool
    gram: np.ndarray
    grad_norm: float
    objective_trace: tuple[float, ...] = field(default=(), repr=False)
    label: str = ""

    def to_dict(self) -> dict:
        return {
            "model": self.label,
            "theta": self.theta_hat.tolist(),
            "rss": self.rss,
            "iterations": self.iterations,
            "converged": self.converged,
            "grad_norm": self.grad_norm,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict())


# ---------------------------------------------------------------------------
# builtin models


def _linear(p: int) -> ModelSpec:
    return ModelSpec(
        "linear", p, 1, 0,
        mean=lambda th, X: X @ th,
        grad=lambda th, X: X,
    )


def _linear_intercept(p: int) -> ModelSpec:
    def init(X, Y):
        return np.linalg.lstsq(np.column_stack([X, np.ones(len(X))]), Y, rcond=None)[0]

    return ModelSpec(
        "linear_intercept", p, 1, 1,
        mean=lambda th, X: X @ th[:p] + th[p],
        grad=lambda th, X: np.column_stack([X, np.ones(len(X))]),
        initializer=init,
    )


def _single_index_exp(p: int) -> ModelSpec:
    def mean(th, X):
        return np.exp(X @ th)

    def grad(th, X):
        return np.exp(X @ th)[:, None] * X

    def init(X, Y):
        # log-linear start when the response is positive, otherwise zeros
        if np.all(Y > 0):
            return np.linalg.lstsq(X, np.log(Y), rcond=None)[0]
        return np.zeros(p)

    return ModelSpec("single_index_exp", p, 1, 0, mean, grad, init)


def _double_index_linear_exp(p: int) -> ModelSpec:
    def mean(th, X):
        return X @ th[:p] + np.exp(X @ th[p:])

    def grad(th, X):
        return np.column_stack([X, np.exp(X @ th[p:])[:, None] * X])

    def profile(X, Y, b2):
        with np.errstate(over="ignore", invalid="ignore"):
            z = Y - np.exp(X @ b2)
        if not np.all(np.isfinite(z)):
            return None, np.inf
        b1 = np.linalg.lstsq(X, z, rcond=None)[0]
        r = z - X @ b1
        return np.r_[b1, b2], float(r @ r)

    def init(X, Y):
        # beta2 = 0 is a stationary point of the profile objective, so start
        # from the leading direction of a quadratic regression instead:
        # exp(b'x) ~ 1 + b'x + (b'x)^2 / 2
        n = len(X)
        cands = [np.zeros(p)]
        iu = np.triu_indices(p)
        if n > p + iu[0].size + 1:
            quad = (X[:, iu[0]] * X[:, iu[1]]) * np.where(iu[0] == iu[1], 1.0, 2.0)
            coef = np.linalg.lstsq(np.column_stack([np.ones(n), X, quad]), Y, rcond=None)[0]
            A = np.zeros((p, p))
            A[iu] = coef[1 + p:]
            A = A + np.triu(A, 1).T
            w, V = np.linalg.eigh(A)
            if w[-1] > 0:
                b = np.sqrt(2.0 * w[-1]) * V[:, -1]
                # the quadratic term also absorbs higher-order curvature, so shrink
                cands += [s * b for s in (1.0, -1.0, 0.5, -0.5, 0.25, -0.25)]
        return min((profile(X, Y, b) for b in cands), key=lambda t: t[1])[0]

    return ModelSpec("double_index_H2x", p, 2, 0, mean, grad, init)


BUILTIN_MODELS: dict[str, Callable[[int], ModelSpec]] = {
    "linear": _linear,
    "linear_intercept": _linear_intercept,
    "single_index_exp": _single_index_exp,
    "single_index_expnull": _single_index_exp,
    "double_index_H2x": _double_index_linear_exp,
    "linear_exp": _double_index_linear_exp,
}


def builtin_model(kind: str, p: int) -> ModelSpec:
    """Return a shipped :class:`ModelSpec` for covariate dimension ``p``.

    ``linear``: ``g = beta'x``. ``linear_intercept``: ``g = beta'x + c``.
    ``single_index_exp``: ``g = exp(beta'x)``. ``double_index_H2x``:
    ``g = beta1'x + exp(beta2'x)``, the null of the two-index designs.
    """
    try:
        factory = BUILTIN_MODELS[kind]
    except KeyError:
        raise ValueError(f"unknown model kind {kind!r}; valid: {sorted(BUILTIN_MODELS)}") from None
    if p < 1:
        raise ValueError("p must be positive")
    return factory(int(p))


# ---------------------------------------------------------------------------
# Levenberg-Marquardt


def _objective(model: ModelSpec, theta: np.ndarray, X: np.ndarray, Y: np.ndarray):
    r = Y - model.mean(theta, X)
    return r, float(r @ r)


def fit_least_squares(
    model: ModelSpec,
    data: Dataset,
    init: np.ndarray | str = "auto",
    opts: LMOptions | None = None,
) -> FitResult:
    """Minimize ``sum_i (Y_i - g(theta, X_i))^2`` by Levenberg-Marquardt.

    Convergence is declared when the max-norm of the gradient of the
    mean-squared objective, ``(2/n) J' r``, drops to ``opts.tol``. A fit
    that runs out of iterations or damping room returns ``converged=False``
    rather than raising.
    """
    opts = opts or LMOptions()
    X, Y = data.X, data.Y
    n = X.shape[0]
    m = model.n_params
    if X.shape[1] != model.p:
        raise ValueError(f"model expects p={model.p}, data has p={X.shape[1]}")
    if n <= m:
        raise ValueError(f"need n > number of parameters ({n} <= {m})")

    theta = model.auto_init(X, Y) if isinstance(init, str) else np.array(init, dtype=float)
    if theta.shape != (m,):
        raise ValueError(f"init has length {theta.size}, expected {m}")

    r, f = _objective(model, theta, X, Y)
    if not np.isfinite(f):
        raise NumericalError(f"non-finite objective at theta={theta.tolist()}")
    J = model.grad(theta, X)
    grad = -2.0 / n * (J.T @ r)
    trace = [f]
    mu = opts.lm_damping
    it = 0
    converged = bool(np.max(np.abs(grad)) <= opts.tol)

    while not converged and it < opts.max_iter:
        it += 1
        A = J.T @ J
        g = J.T @ r
        diag = np.maximum(np.diag(A), 1e-12 * max(1.0, np.max(np.diag(A))))
        accepted = False
        while mu < 1e16:
            try:
                step = np.linalg.solve(A + mu * np.diag(diag), g)
            except np.linalg.LinAlgError:
                step = np.linalg.lstsq(A + mu * np.diag(diag), g, rcond=None)[0]
            trial = theta + step
            r_new, f_new = _objective(model, trial, X, Y)
            if np.isfinite(f_new) and f_new <= f:
                theta, r, f = trial, r_new, f_new
                mu = max(mu / 10.0, 1e-15)
                accepted = True
                break
            mu *= 10.0
        if not accepted:
            break
        trace.append(f)
        J = model.grad(theta, X)
        if not np.all(np.isfinite(J)):
            raise NumericalError(f"non-finite Jacobian at theta={theta.tolist()}")
        grad = -2.0 / n * (J.T @ r)
        converged = bool(np.max(np.abs(grad)) <= opts.tol)

    gram = J.T @ J / n
    return FitResult(
        theta_hat=theta,
        beta_hat=model.beta(theta),
        residuals=r,
        rss=float(r @ r),
        iterations=it,
        converged=converged,
        gram=0.5 * (gram + gram.T),
        grad_norm=float(np.max(np.abs(grad))),
        objective_trace=tuple(trace),
        label=model.label,
    )


def residuals(fit: FitResult, model: ModelSpec, data: Dataset) -> np.ndarray:
    """``Y_j - g(theta_hat, X_j)`` recomputed on ``data``."""
    if fit.theta_hat.shape != (model.n_params,) or data.p != model.p:
        raise ValueError("fit, model and data shapes do not agree")
    r = data.Y - model.mean(fit.theta_hat, data.X)
    if not np.all(np.isfinite(r)):
        raise NumericalError("non-finite residuals")
    return r
