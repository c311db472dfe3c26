"""Nonparametric tests for treatment effect heterogeneity with a binary instrument."""

from __future__ import annotations

from ._backend import BACKEND
from .bootstrap import (
    BootstrapDraws,
    MultiplierSpec,
    bootstrap_draws,
    critical_value,
    draw_multipliers,
    p_value,
    simulate_sup,
)
from .bootstrap.runner import run_test
from .config import RunConfig
from .core import Dataset, Grid, TestReport, from_arrays, grid_for, make_grid, validate_dataset
from .dgp import DgpSpec, RejectionTable, gen_dgp, monte_carlo
from .errors import DegeneracyError, HetfxError, ValidationError
from .io import ColumnMap, read_csv, write_report
from .kernel import KernelSpec
from .late import construct_w, delta_continuous, delta_discrete

__version__ = "0.1.0"

__all__ = [
    "BACKEND",
    "BootstrapDraws",
    "ColumnMap",
    "Dataset",
    "DegeneracyError",
    "DgpSpec",
    "Grid",
    "HetfxError",
    "KernelSpec",
    "MultiplierSpec",
    "RejectionTable",
    "RunConfig",
    "TestReport",
    "ValidationError",
    "bootstrap_draws",
    "construct_w",
    "critical_value",
    "delta_continuous",
    "delta_discrete",
    "draw_multipliers",
    "from_arrays",
    "gen_dgp",
    "grid_for",
    "make_grid",
    "monte_carlo",
    "p_value",
    "read_csv",
    "run_test",
    "simulate_sup",
    "validate_dataset",
    "write_report",
]
