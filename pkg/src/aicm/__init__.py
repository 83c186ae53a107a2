"""Adaptive-to-model integrated conditional moment tests for multiple-index regression."""

from .bootstrap import BootstrapConfig, TestResult, mammen_multipliers, wild_bootstrap_test
from .dataset import Dataset, StandardizedDataset, load_boston, load_csv, standardize
from .errors import DataError, NoLocalMassError, NumericalError, SingularCovarianceError
from .estimator import FitResult, LMOptions, ModelSpec, builtin_model, fit_least_squares, residuals
from .sdr import SdrResult, cse_target, estimate_subspace, mrer
from .simulation import Scenario, SimulationReport, dgp_generate, dimension_rule, run_size_power, sweep
from .stats import GAUSSIAN, KernelWeight, ProjectionBundle, aicm, gwz, icm, pcvm_mc, quartic_kernel, zheng

__version__ = "0.1.0"

__all__ = [
    "BootstrapConfig", "TestResult", "mammen_multipliers", "wild_bootstrap_test",
    "Dataset", "StandardizedDataset", "load_boston", "load_csv", "standardize",
    "DataError", "NoLocalMassError", "NumericalError", "SingularCovarianceError",
    "FitResult", "LMOptions", "ModelSpec", "builtin_model", "fit_least_squares", "residuals",
    "SdrResult", "cse_target", "estimate_subspace", "mrer",
    "Scenario", "SimulationReport", "dgp_generate", "dimension_rule", "run_size_power", "sweep",
    "GAUSSIAN", "KernelWeight", "ProjectionBundle", "aicm", "gwz", "icm", "pcvm_mc",
    "quartic_kernel", "zheng",
]
