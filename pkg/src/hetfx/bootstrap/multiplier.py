"""Multiplier bootstrap for the supremum of the limiting process."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np

from .._backend import kernels, resolve_threads
from ..errors import DimensionMismatch, InvalidAlpha, InvalidConfig
from ..ks_discrete import InfluenceMatrix

DISTRIBUTIONS = ("standard_normal", "rademacher", "mammen")
_SQRT5 = math.sqrt(5.0)
MAMMEN_LOW = (1.0 - _SQRT5) / 2.0
MAMMEN_HIGH = (1.0 + _SQRT5) / 2.0
MAMMEN_P_LOW = (_SQRT5 + 1.0) / (2.0 * _SQRT5)

# replicates per kernel call; fixed so results never depend on batching
_BATCH = 64


@dataclass(frozen=True)
class MultiplierSpec:
    distribution: str = "standard_normal"
    reps: int = 1000
    seed: int = 0

    def __post_init__(self):
        if self.distribution not in DISTRIBUTIONS:
            raise InvalidConfig(f"multiplier distribution must be one of {DISTRIBUTIONS}")
        if int(self.reps) < 1:
            raise InvalidConfig("bootstrap reps must be at least 1")
        if int(self.seed) < 0:
            raise InvalidConfig("seed must be a nonnegative integer")

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True, eq=False)
class BootstrapDraws:
    sup_values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.sup_values, dtype=float).reshape(-1)
        if v.size == 0:
            raise InvalidConfig("no bootstrap draws")
        if not np.all(np.isfinite(v)) or np.any(v < 0):
            raise DimensionMismatch("bootstrap sups must be finite and nonnegative")
        object.__setattr__(self, "sup_values", v)

    @property
    def reps(self) -> int:
        return int(self.sup_values.size)

    def summary(self) -> dict[str, float]:
        v = self.sup_values
        return {"mean": float(v.mean()), "sd": float(v.std()), "min": float(v.min()),
                "median": float(np.median(v)), "max": float(v.max())}


def _rng(seed: int, rep_index: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(int(seed), spawn_key=(int(rep_index),)))


def draw_multipliers(n: int, spec: MultiplierSpec, rep_index: int) -> np.ndarray:
    """i.i.d. mean-zero, unit-variance draws for replicate ``rep_index``.

    The stream is keyed by ``(spec.seed, rep_index)`` alone.
    """
    rng = _rng(spec.seed, rep_index)
    if spec.distribution == "standard_normal":
        return rng.standard_normal(n)
    u = rng.random(n)
    if spec.distribution == "rademacher":
        return np.where(u < 0.5, -1.0, 1.0)
    return np.where(u < MAMMEN_P_LOW, MAMMEN_LOW, MAMMEN_HIGH)


def simulate_sup(influence, multipliers) -> float:
    """``max_col |(1/sqrt n) Σ_i U_i * influence[i, col]|``.

    ``influence`` is an :class:`InfluenceMatrix` or a dense 2-D array.
    """
    u = np.asarray(multipliers, dtype=float).reshape(-1)
    if isinstance(influence, InfluenceMatrix):
        if u.size != influence.n:
            raise DimensionMismatch(f"{u.size} multipliers for {influence.n} records")
        if influence.dense:
            return float(np.abs(u @ influence.row_weights).max() / math.sqrt(influence.n))
        V = np.ascontiguousarray(influence.row_weights[influence.order])
        U = np.ascontiguousarray(u[influence.order][None, :])
        return float(kernels.prefix_sup(U, V, influence.checkpoints, influence.reset, 1)[0]
                     / math.sqrt(influence.n))
    M = np.asarray(influence, dtype=float)
    if M.ndim != 2 or M.shape[0] != u.size:
        raise DimensionMismatch(f"{u.size} multipliers for a matrix of shape {M.shape}")
    if M.size == 0:
        return 0.0
    return float(np.abs(u @ M).max() / math.sqrt(u.size))


def bootstrap_draws(influence: InfluenceMatrix, spec: MultiplierSpec,
                    threads: int | None = None) -> BootstrapDraws:
    """Simulate ``spec.reps`` suprema; replicate r always uses stream r."""
    n = influence.n
    threads = resolve_threads(threads)
    order = influence.order
    V = np.ascontiguousarray(influence.row_weights[order])
    out = np.empty(spec.reps)
    scale = 1.0 / math.sqrt(n)
    for start in range(0, spec.reps, _BATCH):
        stop = min(start + _BATCH, spec.reps)
        U = np.empty((stop - start, n))
        for r in range(start, stop):
            U[r - start] = draw_multipliers(n, spec, r)[order]
        if influence.dense:
            out[start:stop] = np.abs(U @ V).max(axis=1) * scale
        else:
            out[start:stop] = kernels.prefix_sup(U, V, influence.checkpoints, influence.reset,
                                                 threads) * scale
    return BootstrapDraws(out)


def _rank_count(alpha: float, reps: int) -> int:
    # floor(alpha * reps), robust to binary representation of alpha
    return int(math.floor(alpha * reps + 1e-9))


def critical_value(draws: BootstrapDraws | np.ndarray, alpha: float) -> float:
    """Order statistic of rank ``ceil((1 − α) reps)``."""
    if not (0.0 < float(alpha) < 1.0):
        raise InvalidAlpha(f"alpha must lie in (0, 1), got {alpha}")
    v = np.sort(draws.sup_values if isinstance(draws, BootstrapDraws)
                else np.asarray(draws, dtype=float).reshape(-1))
    reps = v.size
    k = max(reps - _rank_count(float(alpha), reps), 1)
    return float(v[k - 1])


def p_value(draws: BootstrapDraws | np.ndarray, statistic: float) -> float:
    """Share of bootstrap sups at or above the statistic."""
    v = draws.sup_values if isinstance(draws, BootstrapDraws) else np.asarray(draws, dtype=float)
    return float(np.mean(v >= statistic))
