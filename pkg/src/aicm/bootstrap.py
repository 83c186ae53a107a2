"""Wild bootstrap calibration of residual-marked statistics.

Bootstrap responses are ``Y* = g(theta_hat, X) + e * V`` with Mammen
two-point multipliers ``V``. Each replicate refits ``theta`` by least squares
while projections that depend on the original sample (fitted index and SDR
directions, PCvM directions) are held fixed.
"""

from __future__ import annotations

import hashlib
import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Literal

import numpy as np

from ._rng import DEFAULT_SEED, substream
from .dataset import Dataset
from .errors import NumericalError
from .estimator import FitResult, LMOptions, ModelSpec, fit_least_squares
from .sdr import SdrResult, estimate_subspace
from .stats import (
    GaussianKernelStatistic,
    ProjectedCvMStatistic,
    ProjectionBundle,
    ResidualStatistic,
    SmoothingStatistic,
    gwz_statistic,
    uniform_directions,
    zheng_bandwidth,
)

__all__ = [
    "STATISTICS",
    "BootstrapError",
    "BootstrapConfig",
    "TestResult",
    "MAMMEN_LOW",
    "MAMMEN_HIGH",
    "MAMMEN_P_LOW",
    "mammen_multipliers",
    "prepare_statistic",
    "wild_bootstrap_test",
]

STATISTICS = ("aicm", "icm", "zheng", "gwz", "pcvm")

SQRT5 = math.sqrt(5.0)
MAMMEN_LOW = (1.0 - SQRT5) / 2.0
MAMMEN_HIGH = (1.0 + SQRT5) / 2.0
MAMMEN_P_LOW = (1.0 + SQRT5) / (2.0 * SQRT5)


class BootstrapError(RuntimeError):
    """Too many bootstrap replicates failed to produce a statistic."""


@dataclass(frozen=True)
class BootstrapConfig:
    B: int = 500
    multiplier: Literal["mammen_two_point"] = "mammen_two_point"
    seed: int = DEFAULT_SEED
    refit_policy: Literal["refit_theta_fixed_sdr"] = "refit_theta_fixed_sdr"
    n_jobs: int = 1
    max_skip_fraction: float = 0.2

    def __post_init__(self) -> None:
        if self.B < 1:
            raise ValueError("bootstrap needs B >= 1 replicates")
        if self.multiplier != "mammen_two_point":
            raise ValueError(f"unsupported multiplier {self.multiplier!r}")
        if self.refit_policy != "refit_theta_fixed_sdr":
            raise ValueError(f"unsupported refit policy {self.refit_policy!r}")


@dataclass(frozen=True)
class TestResult:
    statistic: float
    boot_stats: np.ndarray
    p_value: float
    skipped: int
    B: int
    statistic_name: str
    fingerprint: str
    fit: FitResult | None = field(default=None, repr=False)
    sdr: SdrResult | None = field(default=None, repr=False)

    __test__ = False  # keep pytest from collecting this as a test class

    @property
    def q_hat(self) -> int | None:
        return None if self.sdr is None else self.sdr.q_hat

    def to_dict(self) -> dict:
        out = {
            "statistic_name": self.statistic_name,
            "statistic": self.statistic,
            "p_value": self.p_value,
            "B": self.B,
            "skipped": self.skipped,
            "fingerprint": self.fingerprint,
            "boot_stats": self.boot_stats.tolist(),
        }
        if self.sdr is not None:
            out["q_hat"] = self.sdr.q_hat
        if self.fit is not None:
            out["theta_hat"] = self.fit.theta_hat.tolist()
        return out

    def to_json(self) -> str:
        return json.dumps(self.to_dict())


def mammen_multipliers(n: int, rng: np.random.Generator) -> np.ndarray:
    """Two-point golden-ratio multipliers with mean 0, variance 1, skewness 1."""
    if n < 1:
        raise ValueError("n must be >= 1")
    return np.where(rng.random(n) < MAMMEN_P_LOW, MAMMEN_LOW, MAMMEN_HIGH)


def prepare_statistic(
    name: str,
    X: np.ndarray,
    fit: FitResult | None = None,
    sdr: SdrResult | None = None,
    *,
    blocks: str = "joint",
    h: float | str = "auto",
    directions: np.ndarray | None = None,
) -> ResidualStatistic:
    """Build the statistic as a function of the residual vector alone."""
    n, p = X.shape
    if name == "aicm":
        if fit is None or sdr is None:
            raise ValueError("aicm needs a fit and an SDR result")
        proj = ProjectionBundle.from_directions(X, fit.beta_hat, sdr.B_hat)
        return GaussianKernelStatistic.from_projections(proj.stacked(blocks))
    if name == "icm":
        return GaussianKernelStatistic.from_projections(X)
    if name == "zheng":
        return SmoothingStatistic(X, zheng_bandwidth(n, p) if h == "auto" else float(h))
    if name == "gwz":
        if sdr is None:
            raise ValueError("gwz needs an SDR result")
        return gwz_statistic(X @ sdr.B_hat, h)
    if name == "pcvm":
        if directions is None:
            raise ValueError("pcvm needs sphere directions")
        return ProjectedCvMStatistic(X, directions)
    raise ValueError(f"unknown statistic {name!r}; valid: {STATISTICS}")


def _fingerprint(payload: dict) -> str:
    blob = json.dumps(payload, sort_keys=True, default=str).encode()
    return hashlib.sha256(blob).hexdigest()[:16]


def wild_bootstrap_test(
    data: Dataset,
    model: ModelSpec,
    statistic: str = "aicm",
    cfg: BootstrapConfig | None = None,
    *,
    key: tuple[int | str, ...] = (),
    blocks: str = "joint",
    c_n: float | str = "auto",
    h: float | str = "auto",
    n_dirs: int = 1000,
    lm: LMOptions | None = None,
) -> TestResult:
    """Test ``H0: E(Y|X) = g(theta, X)`` with a wild-bootstrap p-value.

    Replicate ``b`` draws its multipliers from substream ``(cfg.seed, *key, b)``,
    so results do not depend on ``cfg.n_jobs``. Replicates whose refit fails
    to converge are skipped and counted; more than
    ``cfg.max_skip_fraction * B`` skips raises :class:`BootstrapError`.
    """
    cfg = cfg or BootstrapConfig()
    if statistic not in STATISTICS:
        raise ValueError(f"unknown statistic {statistic!r}; valid: {STATISTICS}")
    X = data.X
    n = data.n

    fit = fit_least_squares(model, data, "auto", lm)
    if not fit.converged:
        raise NumericalError(
            f"least-squares fit of {model.label!r} did not converge "
            f"(gradient {fit.grad_norm:.3e} after {fit.iterations} iterations)"
        )
    sdr = estimate_subspace(data, c_n) if statistic in ("aicm", "gwz") else None
    directions = None
    if statistic == "pcvm":
        directions = uniform_directions(data.p, n_dirs, substream(cfg.seed, *key, "pcvm-directions"))
    stat_fn = prepare_statistic(statistic, X, fit, sdr, blocks=blocks, h=h, directions=directions)

    fitted = model.mean(fit.theta_hat, X)
    e = data.Y - fitted
    observed = stat_fn(e)
    if not math.isfinite(observed):
        raise NumericalError("observed statistic is not finite")

    def replicate(b: int) -> float | None:
        V = mammen_multipliers(n, substream(cfg.seed, *key, b))
        y_star = fitted + e * V
        boot = data.with_response(y_star)
        # start from whichever of the cheap "auto" guess and theta_hat fits better
        start = fit.theta_hat
        auto = model.auto_init(X, y_star)
        with np.errstate(over="ignore", invalid="ignore"):
            r_auto = y_star - model.mean(auto, X)
        r_warm = y_star - model.mean(start, X)
        if np.isfinite(r_auto @ r_auto) and r_auto @ r_auto <= r_warm @ r_warm:
            start = auto
        try:
            f_star = fit_least_squares(model, boot, start, lm)
        except NumericalError:
            return None
        if not f_star.converged:
            return None
        try:
            value = stat_fn(y_star - model.mean(f_star.theta_hat, X))
        except NumericalError:
            return None
        return value if math.isfinite(value) else None

    if cfg.n_jobs == 1:
        values = [replicate(b) for b in range(cfg.B)]
    else:
        with ThreadPoolExecutor(max_workers=cfg.n_jobs) as pool:
            values = list(pool.map(replicate, range(cfg.B)))

    boot_stats = np.array([v for v in values if v is not None], dtype=float)
    skipped = cfg.B - boot_stats.size
    if skipped > cfg.max_skip_fraction * cfg.B:
        raise BootstrapError(f"{skipped} of {cfg.B} bootstrap replicates failed")
    p_value = (1.0 + np.count_nonzero(boot_stats >= observed)) / (boot_stats.size + 1.0)

    payload = {
        "statistic": statistic,
        "cfg": {k: v for k, v in asdict(cfg).items() if k != "n_jobs"},
        "key": list(key),
        "model": model.label,
        "n": n,
        "p": data.p,
        "blocks": blocks if statistic == "aicm" else None,
        "c_n": c_n,
        "h": h,
        "n_dirs": n_dirs if statistic == "pcvm" else None,
    }
    return TestResult(
        statistic=observed,
        boot_stats=boot_stats,
        p_value=float(p_value),
        skipped=skipped,
        B=cfg.B,
        statistic_name=statistic,
        fingerprint=_fingerprint(payload),
        fit=fit,
        sdr=sdr,
    )
