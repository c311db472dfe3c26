"""Shared domain types, dataset validation and grid construction."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Any, Iterator, NamedTuple, Sequence

import numpy as np

from .errors import (
    DegenerateInstrument,
    DegenerateRangeWarning,
    EmptyInput,
    InvalidConfig,
    NonBinaryInstrument,
    NonBinaryTreatment,
    NonFiniteValue,
    RaggedInput,
    UnsupportedCovariateMix,
)

DISCRETE = "discrete"
CONTINUOUS = "continuous"
KINDS = (DISCRETE, CONTINUOUS)


class Observation(NamedTuple):
    y: float
    d: int
    z: int
    x: tuple


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a)
    a.flags.writeable = False
    return a


@dataclass(frozen=True, eq=False)
class Dataset:
    """Columnar store of validated ``(Y, D, Z, X)`` records.

    Arrays are read-only; a dataset can be shared across threads and
    processes without copying.
    """

    y: np.ndarray
    d: np.ndarray
    z: np.ndarray
    x: np.ndarray  # shape (n, p)
    covariate_kinds: tuple[str, ...]

    @property
    def n(self) -> int:
        return int(self.y.shape[0])

    @property
    def branch(self) -> str:
        """``discrete`` when every covariate is discrete, else ``continuous``."""
        if not self.covariate_kinds or all(k == DISCRETE for k in self.covariate_kinds):
            return DISCRETE
        return CONTINUOUS

    @property
    def x_scalar(self) -> np.ndarray:
        if self.x.shape[1] != 1:
            raise UnsupportedCovariateMix(
                "continuous covariate tests need exactly one covariate, "
                f"got {self.x.shape[1]}"
            )
        return self.x[:, 0]

    @property
    def records(self) -> list[Observation]:
        return list(iter(self))

    def __iter__(self) -> Iterator[Observation]:
        for i in range(self.n):
            yield Observation(float(self.y[i]), int(self.d[i]), int(self.z[i]),
                              tuple(float(v) for v in self.x[i]))

    def __len__(self) -> int:
        return self.n

    def replace(self, **changes: Any) -> "Dataset":
        """Return a validated copy with some columns swapped out."""
        cols = dict(y=self.y, d=self.d, z=self.z, x=self.x)
        cols.update(changes)
        return from_arrays(cols["y"], cols["d"], cols["z"], cols["x"], self.covariate_kinds)

    def cells(self) -> tuple[np.ndarray, np.ndarray]:
        """Distinct covariate rows and the cell index of every record.

        Cells are ordered lexicographically by covariate value.
        """
        if self.x.shape[1] == 0:
            return np.zeros((1, 0)), np.zeros(self.n, dtype=np.intp)
        labels, index = np.unique(self.x, axis=0, return_inverse=True)
        return labels, index.reshape(-1).astype(np.intp)


def _check_kinds(kinds: Sequence[str], p: int) -> tuple[str, ...]:
    kinds = tuple(str(k).lower() for k in kinds)
    if len(kinds) != p:
        raise RaggedInput(f"{p} covariate columns but {len(kinds)} kind tags")
    for k in kinds:
        if k not in KINDS:
            raise InvalidConfig(f"unknown covariate kind {k!r}")
    if CONTINUOUS in kinds and len(kinds) > 1:
        raise UnsupportedCovariateMix(
            "continuous covariates must appear alone (one scalar covariate); "
            f"got kinds {kinds}"
        )
    return kinds


def from_arrays(y, d, z, x=None, kinds: Sequence[str] = ()) -> Dataset:
    """Validate column arrays and build a :class:`Dataset`."""
    y = np.asarray(y, dtype=float).reshape(-1)
    n = y.shape[0]
    if n == 0:
        raise EmptyInput("dataset has no records")
    d_raw = np.asarray(d, dtype=float).reshape(-1)
    z_raw = np.asarray(z, dtype=float).reshape(-1)
    if x is None:
        x = np.zeros((n, 0))
    x = np.asarray(x, dtype=float)
    if x.ndim == 1:
        x = x.reshape(-1, 1)
    if d_raw.shape[0] != n or z_raw.shape[0] != n or x.shape[0] != n:
        raise RaggedInput("columns have different lengths")
    kinds = _check_kinds(kinds, x.shape[1])

    if not np.all(np.isfinite(y)):
        i = int(np.flatnonzero(~np.isfinite(y))[0])
        raise NonFiniteValue(f"outcome is not finite at record {i}")
    if not np.all(np.isfinite(x)):
        i = int(np.flatnonzero(~np.all(np.isfinite(x), axis=1))[0])
        raise NonFiniteValue(f"covariate is not finite at record {i}")
    bad = ~np.isin(d_raw, (0.0, 1.0))
    if bad.any():
        i = int(np.flatnonzero(bad)[0])
        raise NonBinaryTreatment(f"treatment must be 0 or 1, got {d_raw[i]!r} at record {i}")
    bad = ~np.isin(z_raw, (0.0, 1.0))
    if bad.any():
        i = int(np.flatnonzero(bad)[0])
        raise NonBinaryInstrument(f"instrument must be 0 or 1, got {z_raw[i]!r} at record {i}")
    n1 = int(z_raw.sum())
    if n1 == 0 or n1 == n:
        raise DegenerateInstrument("instrument takes a single value; both arms are required")

    return Dataset(_frozen(y), _frozen(d_raw.astype(np.int8)), _frozen(z_raw.astype(np.int8)),
                   _frozen(x), kinds)


def validate_dataset(raw: Sequence[Sequence[float]], kinds: Sequence[str] = ()) -> Dataset:
    """Build a dataset from rows laid out as ``(y, d, z, x_1, ..., x_p)``.

    Records keep their input order.
    """
    rows = list(raw)
    if not rows:
        raise EmptyInput("no rows")
    width = len(rows[0])
    if width < 3:
        raise RaggedInput("each row needs at least y, d and z")
    for i, r in enumerate(rows):
        if len(r) != width:
            raise RaggedInput(f"row {i} has {len(r)} fields, expected {width}")
    try:
        arr = np.array(rows, dtype=float)
    except (TypeError, ValueError) as exc:
        raise NonFiniteValue(f"non-numeric value in input: {exc}") from None
    return from_arrays(arr[:, 0], arr[:, 1], arr[:, 2], arr[:, 3:], kinds)


def make_grid(values, count: int) -> np.ndarray:
    """``count`` equally spaced points from ``min(values)`` to ``max(values)``.

    A zero-width range yields the single point and a
    :class:`DegenerateRangeWarning`.
    """
    v = np.asarray(values, dtype=float).reshape(-1)
    if v.size == 0:
        raise EmptyInput("cannot build a grid from no values")
    if not np.all(np.isfinite(v)):
        raise NonFiniteValue("grid values must be finite")
    if int(count) < 2:
        raise InvalidConfig("grid count must be at least 2")
    lo, hi = float(v.min()), float(v.max())
    if hi <= lo:
        warnings.warn(f"zero-width range at {lo}; grid collapses to one point",
                      DegenerateRangeWarning, stacklevel=2)
        return np.array([lo])
    pts = np.linspace(lo, hi, int(count))
    pts[0], pts[-1] = lo, hi
    return pts


@dataclass(frozen=True, eq=False)
class Grid:
    """Evaluation points for suprema.

    For the discrete branch ``x_points`` holds the distinct covariate rows
    (shape ``(k, p)``); for the continuous branch it is an increasing 1-D
    array.
    """

    w_points: np.ndarray
    x_points: np.ndarray
    kind: str = DISCRETE
    degenerate: bool = False

    def __post_init__(self):
        w = np.asarray(self.w_points, dtype=float)
        if w.ndim != 1 or w.size == 0:
            raise InvalidConfig("w_points must be a non-empty 1-D sequence")
        if np.any(np.diff(w) <= 0):
            raise InvalidConfig("w_points must be strictly increasing")
        if w.size < 2 and not self.degenerate:
            raise InvalidConfig("w_points needs at least two points")
        object.__setattr__(self, "w_points", _frozen(w))
        xp = np.asarray(self.x_points, dtype=float)
        if self.kind == CONTINUOUS:
            if xp.ndim != 1 or np.any(np.diff(xp) <= 0):
                raise InvalidConfig("continuous x_points must be strictly increasing")
        object.__setattr__(self, "x_points", _frozen(xp))

    @property
    def sizes(self) -> tuple[int, int]:
        return int(self.w_points.shape[0]), int(self.x_points.shape[0])


def grid_for(values_w, dataset: Dataset, count_w: int = 100, count_x: int = 100) -> Grid:
    """Grid spanning the sample range of Ŵ (and of X when it is continuous)."""
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", DegenerateRangeWarning)
        w_pts = make_grid(values_w, count_w)
    degenerate = any(issubclass(c.category, DegenerateRangeWarning) for c in caught)
    if dataset.branch == DISCRETE:
        labels, _ = dataset.cells()
        return Grid(w_pts, labels, DISCRETE, degenerate)
    x_pts = make_grid(dataset.x_scalar, count_x)
    return Grid(w_pts, x_pts, CONTINUOUS, degenerate or x_pts.size < 2)


@dataclass
class TestReport:
    """Outcome of one heterogeneity test."""

    __test__ = False  # keep pytest from collecting this class

    statistic: float
    p_value: float
    critical_values: dict[float, float]
    n: int
    bootstrap_reps: int
    grid_sizes: tuple[int, int]
    config_echo: dict[str, Any]
    seed: int
    branch: str = DISCRETE
    draws_summary: dict[str, float] = field(default_factory=dict)
    first_stage: dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        if not (0.0 <= self.p_value <= 1.0):
            raise ValueError(f"p_value {self.p_value} outside [0, 1]")
        if not (self.statistic >= 0.0) or math.isnan(self.statistic):
            raise ValueError(f"statistic {self.statistic} must be nonnegative")

    def reject(self, alpha: float) -> bool:
        """Reject iff the statistic exceeds the critical value at ``alpha``."""
        if alpha in self.critical_values:
            return self.statistic > self.critical_values[alpha]
        return self.p_value <= alpha

    def to_dict(self) -> dict[str, Any]:
        return {
            "statistic": self.statistic,
            "p_value": self.p_value,
            "critical_values": {repr(float(a)): c for a, c in sorted(self.critical_values.items())},
            "n": self.n,
            "bootstrap_reps": self.bootstrap_reps,
            "grid_sizes": list(self.grid_sizes),
            "config_echo": self.config_echo,
            "seed": self.seed,
            "branch": self.branch,
            "draws_summary": self.draws_summary,
            "first_stage": self.first_stage,
        }

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "TestReport":
        return cls(
            statistic=float(data["statistic"]),
            p_value=float(data["p_value"]),
            critical_values={float(a): float(c) for a, c in data["critical_values"].items()},
            n=int(data["n"]),
            bootstrap_reps=int(data["bootstrap_reps"]),
            grid_sizes=tuple(int(g) for g in data["grid_sizes"]),
            config_echo=dict(data["config_echo"]),
            seed=int(data["seed"]),
            branch=data.get("branch", DISCRETE),
            draws_summary=dict(data.get("draws_summary", {})),
            first_stage=dict(data.get("first_stage", {})),
        )
