"""Kolmogorov–Smirnov statistic for discrete covariates and its influence matrix."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import CONTINUOUS, DISCRETE, Dataset, Grid
from .errors import DimensionMismatch, EmptyCell, EmptyMask, WeakInstrument
from .kernel import kernel_weight, silverman_bandwidth


@dataclass(frozen=True, eq=False)
class InfluenceMatrix:
    """Estimated influence values, stored in factored form.

    Entry ``(i, (w, k))`` equals ``row_weights[i, w]`` when record ``i``
    belongs to column group ``k`` (``member[i, k]``) and zero otherwise.
    Discrete groups are covariate cells; continuous groups are the sets
    ``{X_i <= x_k}``. Flattened column index is ``k * n_w + w``.
    """

    row_weights: np.ndarray  # (n, n_w)
    member: np.ndarray  # (n, n_x) bool
    grid: Grid
    kind: str
    order: np.ndarray  # record permutation used by the prefix-sum kernel
    checkpoints: np.ndarray  # positions (in ``order``) closing each group
    reset: bool  # groups are disjoint segments (discrete) or nested prefixes
    dense: bool = False  # row_weights already holds every column; member is unused

    @property
    def n(self) -> int:
        return int(self.row_weights.shape[0])

    @property
    def shape(self) -> tuple[int, int]:
        if self.dense:
            return self.row_weights.shape
        return self.n, self.row_weights.shape[1] * self.member.shape[1]

    @property
    def values(self) -> np.ndarray:
        """Dense ``n × G`` table (materialised on demand)."""
        if self.dense:
            return self.row_weights
        n, n_w = self.row_weights.shape
        n_x = self.member.shape[1]
        out = np.zeros((n, n_x * n_w))
        for k in range(n_x):
            out[:, k * n_w:(k + 1) * n_w] = self.row_weights * self.member[:, k, None]
        return out

    @classmethod
    def for_cells(cls, row_weights, cell_index, grid: Grid) -> "InfluenceMatrix":
        n_x = grid.x_points.shape[0]
        member = cell_index[:, None] == np.arange(n_x)[None, :]
        order = np.argsort(cell_index, kind="stable")
        checkpoints = np.cumsum(np.bincount(cell_index, minlength=n_x)).astype(np.intp)
        return cls(np.ascontiguousarray(row_weights), member, grid, DISCRETE,
                   order.astype(np.intp), checkpoints, True)

    @classmethod
    def for_prefixes(cls, row_weights, x, grid: Grid) -> "InfluenceMatrix":
        member = x[:, None] <= grid.x_points[None, :]
        order = np.argsort(x, kind="stable")
        checkpoints = np.searchsorted(x[order], grid.x_points, side="right").astype(np.intp)
        return cls(np.ascontiguousarray(row_weights), member, grid, CONTINUOUS,
                   order.astype(np.intp), checkpoints, False)

    @classmethod
    def from_dense(cls, values, grid: Grid, kind: str) -> "InfluenceMatrix":
        values = np.ascontiguousarray(values, dtype=float)
        n = values.shape[0]
        return cls(values, np.ones((n, 1), dtype=bool), grid, kind, np.arange(n, dtype=np.intp),
                   np.array([n], dtype=np.intp), False, dense=True)

    def check(self, n: int | None = None) -> None:
        if not np.all(np.isfinite(self.row_weights)):
            raise DimensionMismatch("influence matrix has non-finite entries")
        if n is not None and self.n != n:
            raise DimensionMismatch(f"influence matrix has {self.n} rows, dataset has {n}")


def conditional_ecdf(w_hat, mask, w):
    """Share of masked Ŵ values at or below ``w`` (scalar or array)."""
    vals = np.sort(np.asarray(w_hat, dtype=float)[np.asarray(mask, dtype=bool)])
    if vals.size == 0:
        raise EmptyMask("conditional ECDF over an empty subset")
    out = np.searchsorted(vals, np.asarray(w, dtype=float), side="right") / vals.size
    return float(out) if np.ndim(out) == 0 else out


def _cell_masks(dataset: Dataset, cell_index: np.ndarray, k: int, labels) -> tuple[np.ndarray, np.ndarray]:
    in_cell = cell_index == k
    m0 = in_cell & (dataset.z == 0)
    m1 = in_cell & (dataset.z == 1)
    for arm, m in ((0, m0), (1, m1)):
        if not m.any():
            raise EmptyCell(f"covariate cell {labels[k].tolist()} has no records with z={arm}",
                            cell=labels[k].tolist(), arm=arm)
    return m0, m1


def ks_statistic_discrete(dataset: Dataset, w_hat, grid: Grid | None = None) -> float:
    """``sqrt(n) max_{w, x} |F̂(w | x, 0) − F̂(w | x, 1)|``.

    The supremum over w is exact: both step functions are evaluated at
    every observed Ŵ of the cell (plus the grid points).
    """
    w_hat = np.asarray(w_hat, dtype=float)
    labels, cell_index = dataset.cells()
    best = 0.0
    for k in range(labels.shape[0]):
        m0, m1 = _cell_masks(dataset, cell_index, k, labels)
        a = np.sort(w_hat[m0])
        b = np.sort(w_hat[m1])
        pts = np.concatenate([a, b])
        if grid is not None:
            pts = np.concatenate([pts, grid.w_points])
        gap = np.abs(np.searchsorted(a, pts, side="right") / a.size
                     - np.searchsorted(b, pts, side="right") / b.size)
        best = max(best, float(gap.max()))
    return float(np.sqrt(dataset.n) * best)


def untreated_density(w_hat, dataset: Dataset, mask, w, h: float):
    """``f̂_{WD|XZ}(w, 0 | x, z)``: kernel density of untreated Ŵ in ``mask``,
    scaled by the untreated share of the subset."""
    mask = np.asarray(mask, dtype=bool)
    total = int(mask.sum())
    if total == 0:
        raise EmptyCell("density over an empty cell")
    vals = np.asarray(w_hat, dtype=float)[mask & (dataset.d == 0)]
    w = np.atleast_1d(np.asarray(w, dtype=float))
    if vals.size == 0:
        dens = np.zeros(w.shape)
    else:
        dens = kernel_weight((vals[None, :] - w[:, None]) / h).sum(axis=1) / (total * h)
    return dens


def kappa_hat(dataset: Dataset, w_hat, cell, w, density_bandwidth: float,
              relevance_tol: float = 0.01, truncate: bool = False):
    """``−(f̂(w,0|x,1) − f̂(w,0|x,0)) / (p̂(x,1) − p̂(x,0))`` for one covariate cell.

    ``cell`` is the covariate value (scalar or row). Returns an array when
    ``w`` is an array.
    """
    labels, cell_index = dataset.cells()
    key = np.atleast_1d(np.asarray(cell, dtype=float))
    hit = np.flatnonzero(np.all(labels == key, axis=1))
    if hit.size == 0:
        raise EmptyCell(f"covariate value {key.tolist()} not observed", cell=key.tolist())
    k = int(hit[0])
    m0, m1 = _cell_masks(dataset, cell_index, k, labels)
    out = _kappa_cell(dataset, np.asarray(w_hat, dtype=float), m0, m1, np.atleast_1d(w),
                      density_bandwidth, relevance_tol, truncate, labels[k])
    return float(out[0]) if np.ndim(w) == 0 else out


def _kappa_cell(dataset, w_hat, m0, m1, w, h, relevance_tol, truncate, label):
    p0 = float(dataset.d[m0].mean())
    p1 = float(dataset.d[m1].mean())
    if abs(p1 - p0) <= relevance_tol:
        raise WeakInstrument(f"propensity gap {p1 - p0:.4g} in cell {np.asarray(label).tolist()} "
                             f"is within relevance_tol={relevance_tol}", where=np.asarray(label).tolist())
    f0 = untreated_density(w_hat, dataset, m0, w, h)
    f1 = untreated_density(w_hat, dataset, m1, w, h)
    kap = -(f1 - f0) / (p1 - p0)
    if truncate:
        kap = np.maximum(kap, 0.0)
    return kap


def influence_discrete(dataset: Dataset, w_hat, grid: Grid, density_bandwidth: float | None = None,
                       relevance_tol: float = 0.01, truncate_kappa: bool = False) -> InfluenceMatrix:
    """Estimated ``ψ̂ + φ̂`` on the grid for the discrete-covariate test.

    For record ``i`` in cell ``x`` and arm ``z``::

        [1(Ŵ_i <= w) − F̂(w|x) + κ̂(w, x) (Ŵ_i − mean(Ŵ | x))] * b_i

    with ``b_i = 1/P̂(x, 0)`` if ``z = 0`` and ``−1/P̂(x, 1)`` if ``z = 1``;
    ``F̂(·|x)`` and the mean pool both arms.
    """
    w_hat = np.asarray(w_hat, dtype=float)
    labels, cell_index = dataset.cells()
    if grid.x_points.shape[0] != labels.shape[0]:
        raise DimensionMismatch("grid cells do not match the dataset's covariate support")
    if density_bandwidth is None:
        density_bandwidth = silverman_bandwidth(w_hat)
    n = dataset.n
    w_pts = grid.w_points
    rows = np.zeros((n, w_pts.size))
    for k in range(labels.shape[0]):
        m0, m1 = _cell_masks(dataset, cell_index, k, labels)
        in_cell = m0 | m1
        vals = w_hat[in_cell]
        F_pool = np.searchsorted(np.sort(vals), w_pts, side="right") / vals.size
        mean_pool = float(vals.mean())
        kap = _kappa_cell(dataset, w_hat, m0, m1, w_pts, density_bandwidth, relevance_tol,
                          truncate_kappa, labels[k])
        P0 = m0.sum() / n
        P1 = m1.sum() / n
        idx = np.flatnonzero(in_cell)
        wi = w_hat[idx]
        b = np.where(dataset.z[idx] == 0, 1.0 / P0, -1.0 / P1)
        psi = (wi[:, None] <= w_pts[None, :]).astype(float) - F_pool[None, :]
        phi = kap[None, :] * (wi - mean_pool)[:, None]
        rows[idx] = (psi + phi) * b[:, None]
    return InfluenceMatrix.for_cells(rows, cell_index, grid)
