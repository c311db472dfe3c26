"""First-stage conditional LATE and the transformed outcome Ŵ."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import DISCRETE, Dataset
from .errors import EmptyCell, InvalidConfig, MissingCell, UnsupportedCovariateMix, WeakInstrument
from .kernel import KernelSpec, loo_nw_means, weight_matrix


@dataclass(frozen=True)
class CellDelta:
    delta: float
    mu0: float
    mu1: float
    p0: float
    p1: float
    n0: int
    n1: int


@dataclass(frozen=True, eq=False)
class DeltaTable:
    """δ̂ per discrete covariate cell.

    ``labels[k]`` is the covariate row of cell ``k`` and ``index[i]`` the
    cell of record ``i``.
    """

    labels: np.ndarray
    index: np.ndarray
    cells: tuple[CellDelta, ...]

    def __getitem__(self, key) -> CellDelta:
        key = np.atleast_1d(np.asarray(key, dtype=float))
        hit = np.flatnonzero(np.all(self.labels == key, axis=1))
        if hit.size == 0:
            raise MissingCell(f"no first-stage estimate for covariate value {key.tolist()}")
        return self.cells[int(hit[0])]

    @property
    def deltas(self) -> np.ndarray:
        return np.array([c.delta for c in self.cells])

    def per_record(self, dataset: Dataset) -> np.ndarray:
        """δ̂(X_i) looked up by covariate value."""
        labels, index = dataset.cells()
        if labels.shape == self.labels.shape and np.array_equal(labels, self.labels):
            return self.deltas[index]
        out = np.empty(dataset.n)
        for k, row in enumerate(labels):
            out[index == k] = self[row].delta
        return out


@dataclass(frozen=True, eq=False)
class DeltaSeries:
    """δ̂(X_i) for every record of a continuous-covariate dataset."""

    values: np.ndarray
    bandwidth: float
    mu: np.ndarray  # (2, n) leave-one-out outcome means by arm
    p: np.ndarray  # (2, n) leave-one-out propensities by arm

    def per_record(self, dataset: Dataset) -> np.ndarray:
        if self.values.shape[0] != dataset.n:
            raise MissingCell("δ̂ series length does not match the dataset")
        return self.values


def delta_discrete(dataset: Dataset, relevance_tol: float = 0.01) -> DeltaTable:
    """Cell-mean Wald ratio ``(μ̂1 − μ̂0) / (p̂1 − p̂0)`` for each covariate cell."""
    if not relevance_tol > 0:
        raise InvalidConfig("relevance_tol must be positive")
    labels, index = dataset.cells()
    # centring at one record's outcome makes δ̂ bit-identical under exact shifts of Y
    anchor = float(dataset.y[0])
    y = dataset.y - anchor
    d = dataset.d.astype(float)
    cells = []
    for k in range(labels.shape[0]):
        in_cell = index == k
        stats = {}
        for arm in (0, 1):
            m = in_cell & (dataset.z == arm)
            cnt = int(m.sum())
            if cnt == 0:
                raise EmptyCell(f"covariate cell {labels[k].tolist()} has no records with z={arm}",
                                cell=labels[k].tolist(), arm=arm)
            stats[arm] = (float(y[m].mean()), float(d[m].mean()), cnt)
        (mu0, p0, n0), (mu1, p1, n1) = stats[0], stats[1]
        if abs(p1 - p0) <= relevance_tol:
            raise WeakInstrument(
                f"propensity gap {p1 - p0:.4g} in cell {labels[k].tolist()} is within "
                f"relevance_tol={relevance_tol}", where=labels[k].tolist())
        cells.append(CellDelta((mu1 - mu0) / (p1 - p0), mu0 + anchor, mu1 + anchor, p0, p1, n0, n1))
    return DeltaTable(labels, index, tuple(cells))


def delta_continuous(dataset: Dataset, kernel: KernelSpec | None = None,
                     relevance_tol: float = 0.01, K: np.ndarray | None = None) -> DeltaSeries:
    """Leave-one-out kernel Wald ratio at every ``X_i``."""
    if dataset.branch == DISCRETE:
        raise UnsupportedCovariateMix("delta_continuous needs a continuous covariate")
    if dataset.n < 4:
        raise EmptyCell("continuous first stage needs at least four records")
    kernel = kernel or KernelSpec()
    x = dataset.x_scalar
    h = kernel.resolve(x)
    if K is None:
        K = weight_matrix(x, x, h, leave_one_out=True)
    anchor = float(dataset.y[0])
    both = loo_nw_means(dataset, np.column_stack([dataset.y - anchor, dataset.d.astype(float)]),
                        h, K=K)
    mu, p = both[:, :, 0], both[:, :, 1]
    gap = p[1] - p[0]
    weak = np.abs(gap) <= relevance_tol
    if np.any(weak):
        i = int(np.flatnonzero(weak)[0])
        raise WeakInstrument(
            f"local propensity gap {gap[i]:.4g} at record {i} (x={x[i]:.4g}) is within "
            f"relevance_tol={relevance_tol}", where=i)
    return DeltaSeries((mu[1] - mu[0]) / gap, h, mu + anchor, p)


def construct_w(dataset: Dataset, delta: DeltaTable | DeltaSeries) -> np.ndarray:
    """``Ŵ_i = Y_i + (1 − D_i) δ̂(X_i)``."""
    dx = delta.per_record(dataset)
    return dataset.y + (1 - dataset.d) * dx
