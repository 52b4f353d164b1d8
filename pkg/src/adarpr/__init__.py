"""Robust phase retrieval with quantile-adaptive step sizes."""
from .bench import AlgoSpec, ExperimentConfig, emit_csv, load_csv, run_algorithm, run_experiment, summarize
from .estimators import RobustPhaseRetrieval
from .objective import (RprProblem, distance_to_truth, model_value, objective_value,
                        quantile_residual, relative_error, subgradient)
from .operators import DenseOperator, HadamardEnsemble, MeasurementOperator, fwht_normalized, spectral_norm
from .problems import (ImageSpec, SyntheticSpec, gen_hadamard_problem, gen_synthetic, read_ppm,
                       spectral_init, warm_start, write_ppm)
from .prox_linear import InnerStop, Subproblem, apd_solve, apg_solve, build_subproblem, prox_linear_run
from .selftest import selftest
from .subgradient import ada_subgrad_run, geometric_run, polyak_run
from .trace import RunTrace, Status

__version__ = "0.1.0"

__all__ = [
    "AlgoSpec",
    "ExperimentConfig",
    "emit_csv",
    "load_csv",
    "run_algorithm",
    "run_experiment",
    "summarize",
    "RobustPhaseRetrieval",
    "RprProblem",
    "distance_to_truth",
    "model_value",
    "objective_value",
    "quantile_residual",
    "relative_error",
    "subgradient",
    "DenseOperator",
    "HadamardEnsemble",
    "MeasurementOperator",
    "fwht_normalized",
    "spectral_norm",
    "ImageSpec",
    "SyntheticSpec",
    "gen_hadamard_problem",
    "gen_synthetic",
    "read_ppm",
    "spectral_init",
    "warm_start",
    "write_ppm",
    "InnerStop",
    "Subproblem",
    "apd_solve",
    "apg_solve",
    "build_subproblem",
    "prox_linear_run",
    "selftest",
    "ada_subgrad_run",
    "geometric_run",
    "polyak_run",
    "RunTrace",
    "Status",
]
