"""End-to-end test: first stage, Ŵ, statistic, influence matrix, bootstrap."""

from __future__ import annotations

from contextlib import contextmanager
from dataclasses import dataclass
from typing import Any

import numpy as np

from .._backend import resolve_threads
from ..config import RunConfig
from ..core import CONTINUOUS, DISCRETE, Dataset, Grid, TestReport, grid_for
from ..errors import HetfxError, UnsupportedCovariateMix
from ..kernel import weight_matrix
from ..ks_continuous import (build_g_functional, influence_continuous, ks_statistic_continuous,
                             projection_influence)
from ..ks_discrete import InfluenceMatrix, influence_discrete, ks_statistic_discrete
from ..late import construct_w, delta_continuous, delta_discrete
from .multiplier import BootstrapDraws, bootstrap_draws, critical_value, p_value


@contextmanager
def _stage(name: str):
    try:
        yield
    except HetfxError as exc:
        if exc.stage is None:
            exc.with_stage(name)
        raise


@dataclass(frozen=True, eq=False)
class TestDetails:
    """Intermediate objects of one run, for inspection."""

    __test__ = False

    w_hat: np.ndarray
    delta: Any
    influence: InfluenceMatrix
    draws: BootstrapDraws


def _branch(dataset: Dataset, config: RunConfig) -> str:
    branch = dataset.branch if config.branch == "auto" else config.branch
    if branch == CONTINUOUS and dataset.x.shape[1] != 1:
        raise UnsupportedCovariateMix("the continuous test takes exactly one covariate")
    return branch


def _discrete(dataset: Dataset, config: RunConfig, threads: int):
    with _stage("first_stage"):
        delta = delta_discrete(dataset, config.relevance_tol)
        w_hat = construct_w(dataset, delta)
        first = {"cells": [[float(v) for v in row] for row in delta.labels],
                 "delta": [float(c.delta) for c in delta.cells]}
    with _stage("statistic"):
        grid = grid_for(w_hat, dataset, config.grid_w, config.grid_x)
        stat = ks_statistic_discrete(dataset, w_hat, grid)
    with _stage("influence"):
        boot_grid = grid
        if config.bootstrap_points == "matched":
            # same w points as the statistic's exact sup
            boot_grid = Grid(np.union1d(grid.w_points, w_hat), grid.x_points, grid.kind,
                             grid.degenerate)
        infl = influence_discrete(dataset, w_hat, boot_grid, config.density_bandwidth,
                                  config.relevance_tol, config.kappa_truncate)
        infl.check(dataset.n)
    return delta, w_hat, grid, stat, infl, first


def _continuous(dataset: Dataset, config: RunConfig, threads: int):
    x = dataset.x_scalar
    with _stage("first_stage"):
        h = config.kernel.resolve(x)
        K = weight_matrix(x, x, h, threads=threads)
        K_loo = K.copy()
        np.fill_diagonal(K_loo, 0.0)
        delta = delta_continuous(dataset, config.kernel, config.relevance_tol, K=K_loo)
        w_hat = construct_w(dataset, delta)
        first = {"bandwidth": float(h), "delta_mean": float(delta.values.mean()),
                 "delta_min": float(delta.values.min()), "delta_max": float(delta.values.max())}
    with _stage("statistic"):
        h_q = config.kernel.resolve_q(x)
        K_q = K_loo if h_q == h else weight_matrix(x, x, h_q, leave_one_out=True, threads=threads)
        gf = build_g_functional(dataset, w_hat, config.kernel, h_q, K=K_q)
        grid = grid_for(w_hat, dataset, config.grid_w, config.grid_x)
        stat = ks_statistic_continuous(gf, grid, dataset.n <= config.exact_kinks_max_n, threads)
        first["q_bandwidth"] = float(h_q)
    with _stage("influence"):
        if config.continuous_influence == "projection":
            infl = projection_influence(dataset, w_hat, delta, gf, grid, K_loo, K_q, config.q_floor)
        else:
            infl = influence_continuous(dataset, w_hat, gf, grid, h, config.relevance_tol,
                                        config.q_floor, config.phi_sign, config.psi_form, K=K)
        infl.check(dataset.n)
    return delta, w_hat, grid, stat, infl, first


def run_test(dataset: Dataset, config: RunConfig | None = None, *,
             details: bool = False) -> TestReport | tuple[TestReport, TestDetails]:
    """Run the heterogeneity test on ``dataset``.

    The covariate kinds pick the branch unless ``config.branch`` forces
    one. Errors raised along the way carry the stage they came from.
    With ``details=True`` the intermediate objects are returned as well.
    """
    config = config or RunConfig()
    threads = resolve_threads(config.threads)
    with _stage("setup"):
        branch = _branch(dataset, config)
    run = _discrete if branch == DISCRETE else _continuous
    delta, w_hat, grid, stat, infl, first = run(dataset, config, threads)
    with _stage("bootstrap"):
        draws = bootstrap_draws(infl, config.multiplier, threads)
        crit = {a: critical_value(draws, a) for a in config.report_alphas}
        pval = p_value(draws, stat)
    report = TestReport(
        statistic=stat,
        p_value=pval,
        critical_values=crit,
        n=dataset.n,
        bootstrap_reps=draws.reps,
        grid_sizes=grid.sizes,
        config_echo=config.to_dict(),
        seed=config.seed,
        branch=branch,
        draws_summary=draws.summary(),
        first_stage=first,
    )
    if details:
        return report, TestDetails(w_hat, delta, infl, draws)
    return report


def rerun_from_echo(dataset: Dataset, report: TestReport) -> TestReport:
    """Repeat a run using only the configuration echoed in ``report``."""
    return run_test(dataset, RunConfig.from_dict(report.config_echo))
