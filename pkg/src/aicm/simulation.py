"""Monte Carlo size and power experiments for the single- and two-index designs."""

from __future__ import annotations

import csv
import io
import math
import time
from dataclasses import dataclass, field, replace
from typing import Iterable, Sequence

import numpy as np
from joblib import Parallel, delayed

from ._rng import DEFAULT_SEED, substream
from .bootstrap import STATISTICS, BootstrapConfig, BootstrapError, wild_bootstrap_test
from .dataset import Dataset
from .errors import NumericalError
from .estimator import ModelSpec, builtin_model, fit_least_squares
from .sdr import estimate_subspace

__all__ = [
    "SCENARIOS",
    "Scenario",
    "SimulationReport",
    "dimension_rule",
    "directions",
    "dgp_generate",
    "null_model",
    "true_theta",
    "run_size_power",
    "sweep",
    "rank_frequencies",
    "estimation_errors",
    "CSV_FIELDS",
    "reports_to_csv",
    "format_table",
]

SCENARIOS = ("H11", "H12", "H13", "H14", "H21", "H22", "H23")
CSV_FIELDS = ("scenario", "test", "n", "p", "a", "reps", "B", "alpha", "rejection_rate", "seed", "seconds")


def dimension_rule(n: int) -> int:
    """``floor(3 n^{1/3}) - 5``, computed in exact integer arithmetic."""
    if n < 8:
        raise ValueError("dimension rule needs n >= 8")
    k = int(round(3 * n ** (1.0 / 3.0)))
    while k**3 > 27 * n:
        k -= 1
    while (k + 1) ** 3 <= 27 * n:
        k += 1
    p = k - 5
    if p < 1:
        raise ValueError(f"dimension rule gives p={p} for n={n}")
    return p


@dataclass(frozen=True)
class Scenario:
    id: str
    a: float = 0.0
    n: int = 100
    p: int | None = None
    local_rate: float | None = None

    def __post_init__(self) -> None:
        if self.id not in SCENARIOS:
            raise ValueError(f"unknown scenario {self.id!r}; valid: {', '.join(SCENARIOS)}")
        if self.p is None:
            object.__setattr__(self, "p", dimension_rule(self.n))
        if self.p < 2:
            raise ValueError("scenarios need p >= 2")
        if self.n < 2:
            raise ValueError("scenarios need n >= 2")

    @property
    def amplitude(self) -> float:
        return self.a if self.local_rate is None else self.a * self.local_rate


def directions(p: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Unit vectors ``beta0`` (all ones) and ``beta1``/``beta2`` (first/last ``p//2`` ones)."""
    p1 = p // 2
    b0 = np.ones(p) / math.sqrt(p)
    b1 = np.zeros(p)
    b1[:p1] = 1.0 / math.sqrt(p1)
    b2 = np.zeros(p)
    b2[p - p1:] = 1.0 / math.sqrt(p1)
    return b0, b1, b2


def _mean_function(s: Scenario, X: np.ndarray) -> np.ndarray:
    b0, b1, b2 = directions(s.p)
    a = s.amplitude
    if s.id in ("H11", "H12"):
        t = X @ b0
        dev = np.exp(-t * t) if s.id == "H11" else np.cos(0.6 * np.pi * t)
        return t + a * dev
    t1, t2 = X @ b1, X @ b2
    if s.id == "H13":
        return t1 + a * t2 * t2
    if s.id == "H14":
        return t1 + a * np.exp(t2)
    base = t1 + np.exp(t2)
    if s.id == "H21":
        return base + a * t2 * t2
    if s.id == "H22":
        return base + a * np.cos(0.6 * np.pi * t2)
    return base + a * t1 * t2


def dgp_generate(s: Scenario, rng: np.random.Generator) -> Dataset:
    """Draw ``n`` observations with ``X ~ N(0, I_p)`` and standard normal errors."""
    X = rng.standard_normal((s.n, s.p))
    eps = rng.standard_normal(s.n)
    return Dataset(X, _mean_function(s, X) + eps, source=f"{s.id}(a={s.a})")


def null_model(s: Scenario) -> ModelSpec:
    """Parametric model of the null hypothesis for the scenario family."""
    return builtin_model("linear" if s.id.startswith("H1") else "double_index_H2x", s.p)


def true_theta(s: Scenario) -> np.ndarray:
    """Parameter of the null model under ``a = 0``."""
    b0, b1, b2 = directions(s.p)
    if s.id in ("H11", "H12"):
        return b0
    if s.id in ("H13", "H14"):
        return b1
    return np.concatenate([b1, b2])


@dataclass(frozen=True)
class SimulationReport:
    scenario: Scenario
    test: str
    replications: int
    rejection_rate: float
    mean_statistic: float
    seed: int
    seconds: float
    B: int
    alpha: float
    failures: int = 0
    p_values: np.ndarray = field(default_factory=lambda: np.empty(0), repr=False)
    statistics: np.ndarray = field(default_factory=lambda: np.empty(0), repr=False)

    def csv_row(self, timing: bool = True) -> dict:
        """Row for :data:`CSV_FIELDS`; ``timing=False`` blanks the wall time."""
        s = self.scenario
        return {
            "scenario": s.id, "test": self.test, "n": s.n, "p": s.p, "a": s.a,
            "reps": self.replications, "B": self.B, "alpha": self.alpha,
            "rejection_rate": f"{self.rejection_rate:.4f}", "seed": self.seed,
            "seconds": f"{self.seconds:.2f}" if timing else "",
        }


def _one_replication(s: Scenario, test: str, i: int, B: int, seed: int, test_kwargs: dict):
    data = dgp_generate(s, substream(seed, i))
    cfg = BootstrapConfig(B=B, seed=seed)
    try:
        res = wild_bootstrap_test(data, null_model(s), test, cfg, key=(i, "boot"), **test_kwargs)
    except (NumericalError, BootstrapError):
        return None
    return res.p_value, res.statistic


def run_size_power(
    s: Scenario,
    test: str = "aicm",
    reps: int = 500,
    B: int = 300,
    alpha: float = 0.05,
    seed: int = DEFAULT_SEED,
    n_jobs: int = 1,
    failure_budget: float = 0.05,
    **test_kwargs,
) -> SimulationReport:
    """Empirical rejection frequency of ``test`` at level ``alpha``.

    Replication ``i`` draws its data from substream ``(seed, i)`` and its
    bootstrap multipliers from ``(seed, i, "boot", b)``; the report is the
    same for any ``n_jobs``. Replications whose fit or bootstrap fails are
    dropped, up to ``failure_budget * reps`` of them.
    """
    if reps < 1:
        raise ValueError("reps must be >= 1")
    if test not in STATISTICS:
        raise ValueError(f"unknown test {test!r}; valid: {STATISTICS}")
    t0 = time.perf_counter()
    if n_jobs == 1:
        out = [_one_replication(s, test, i, B, seed, test_kwargs) for i in range(reps)]
    else:
        out = Parallel(n_jobs=n_jobs)(
            delayed(_one_replication)(s, test, i, B, seed, test_kwargs) for i in range(reps)
        )
    ok = [o for o in out if o is not None]
    failures = reps - len(ok)
    if failures > failure_budget * reps:
        raise RuntimeError(f"{failures} of {reps} replications failed for {s} / {test}")
    pv = np.array([o[0] for o in ok])
    st = np.array([o[1] for o in ok])
    return SimulationReport(
        scenario=s,
        test=test,
        replications=len(ok),
        rejection_rate=float(np.mean(pv <= alpha)),
        mean_statistic=float(np.mean(st)),
        seed=seed,
        seconds=time.perf_counter() - t0,
        B=B,
        alpha=alpha,
        failures=failures,
        p_values=pv,
        statistics=st,
    )


def sweep(
    base: Scenario,
    param: str,
    values: Iterable[float],
    test: str = "aicm",
    **kwargs,
) -> list[SimulationReport]:
    """Run :func:`run_size_power` over a grid of one scenario field.

    ``param`` is ``a``, ``p`` or ``n``; sweeping ``n`` re-derives ``p`` from
    :func:`dimension_rule`.
    """
    if param not in ("a", "n", "p"):
        raise ValueError("sweep parameter must be one of a, n, p")
    reports = []
    for v in values:
        if param == "a":
            s = replace(base, a=float(v))
        elif param == "p":
            s = replace(base, p=int(v))
        else:
            s = replace(base, n=int(v), p=dimension_rule(int(v)))
        reports.append(run_size_power(s, test, **kwargs))
    return reports


def rank_frequencies(s: Scenario, reps: int, seed: int = DEFAULT_SEED, c_n: float | str = "auto") -> np.ndarray:
    """Selected structural dimensions ``q_hat`` over ``reps`` simulated samples."""
    return np.array(
        [estimate_subspace(dgp_generate(s, substream(seed, i)), c_n).q_hat for i in range(reps)]
    )


def estimation_errors(s: Scenario, reps: int, seed: int = DEFAULT_SEED) -> np.ndarray:
    """``|theta_hat - theta_0|`` of the null-model fit over ``reps`` samples."""
    model = null_model(s)
    theta0 = true_theta(s)
    errs = []
    for i in range(reps):
        fit = fit_least_squares(model, dgp_generate(s, substream(seed, i)))
        errs.append(np.linalg.norm(fit.theta_hat - theta0))
    return np.array(errs)


def reports_to_csv(reports: Sequence[SimulationReport], header: bool = True, timing: bool = True) -> str:
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=CSV_FIELDS, lineterminator="\n")
    if header:
        w.writeheader()
    for r in reports:
        w.writerow(r.csv_row(timing))
    return buf.getvalue()


def format_table(reports: Sequence[SimulationReport]) -> str:
    """Tests x amplitude rows against (n, p) columns."""
    cols = sorted({(r.scenario.n, r.scenario.p) for r in reports})
    rows = sorted({(r.test, r.scenario.a) for r in reports}, key=lambda t: (STATISTICS.index(t[0]), t[1]))
    cell = {(r.test, r.scenario.a, r.scenario.n, r.scenario.p): r.rejection_rate for r in reports}
    head1 = f"{'':<8}{'a':>6}" + "".join(f"{'n=' + str(n):>10}" for n, _ in cols)
    head2 = f"{'':<8}{'':>6}" + "".join(f"{'p=' + str(p):>10}" for _, p in cols)
    lines = [head1, head2, "-" * len(head1)]
    last = None
    for test, a in rows:
        label = test.upper() if test != last else ""
        last = test
        vals = "".join(
            f"{cell[(test, a, n, p)]:>10.4f}" if (test, a, n, p) in cell else f"{'':>10}" for n, p in cols
        )
        lines.append(f"{label:<8}{a:>6.2f}{vals}")
    return "\n".join(lines)
