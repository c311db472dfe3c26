"""Modified KS statistic for a continuous covariate.

Distributions of Ŵ are compared through the primitive of the conditional
CDF, ``Π(w | x, z) = E[λ(W − w) | x, z]`` with ``λ(t) = max(−t, 0)``, turned
into an unconditional moment by integrating over ``X <= x`` with density
weights q̂ from the opposite arm.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._backend import kernels, resolve_threads
from .core import CONTINUOUS, Dataset, Grid
from .errors import DensityFloor, InvalidConfig, WeakInstrument
from .kernel import KernelSpec, loo_densities, weight_matrix
from .late import DeltaSeries
from .ks_discrete import InfluenceMatrix

PHI_SIGNS = ("population", "negated")
PSI_FORMS = ("consistent", "mirrored")
INFLUENCE_FORMS = ("projection", "asymptotic")


def lam(t):
    """``λ(t) = −t · 1(t <= 0)``."""
    t = np.asarray(t, dtype=float)
    out = np.where(t <= 0.0, -t, 0.0)
    out = out + 0.0  # turn -0.0 into 0.0
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True, eq=False)
class GFunctional:
    """Per-record caches behind ``Ĝ(w, x; z)``."""

    x: np.ndarray
    z: np.ndarray
    w_hat: np.ndarray
    q: np.ndarray  # (2, n): leave-one-out q̂(X_i, 0), q̂(X_i, 1)
    h_q: float

    @property
    def n(self) -> int:
        return int(self.x.shape[0])

    def signed_weights(self) -> np.ndarray:
        """``c_i`` with ``Ĝ(·;0) − Ĝ(·;1) = (1/n) Σ 1(X_i <= x) c_i λ(Ŵ_i − w)``."""
        return np.where(self.z == 0, self.q[1], -self.q[0])


def build_g_functional(dataset: Dataset, w_hat, kernel: KernelSpec | None = None,
                       h_q: float | None = None, K: np.ndarray | None = None) -> GFunctional:
    kernel = kernel or KernelSpec()
    x = dataset.x_scalar
    if h_q is None:
        h_q = kernel.resolve_q(x)
    q = loo_densities(dataset, h_q, K=K)
    return GFunctional(x, dataset.z.copy(), np.asarray(w_hat, dtype=float), q, float(h_q))


def g_hat(gf: GFunctional, w, x, z: int):
    """``(1/n) Σ 1(X_i <= x, Z_i = z) q̂(X_i, 1 − z) λ(Ŵ_i − w)``; broadcasts over w and x."""
    w_arr, x_arr = np.broadcast_arrays(np.asarray(w, dtype=float), np.asarray(x, dtype=float))
    sel = gf.z == z
    xs = gf.x[sel]
    qs = gf.q[1 - z][sel]
    ws = gf.w_hat[sel]
    flat_w = w_arr.reshape(-1)
    flat_x = x_arr.reshape(-1)
    terms = qs[:, None] * lam(ws[:, None] - flat_w[None, :])
    terms = terms * (xs[:, None] <= flat_x[None, :])
    out = (terms.sum(axis=0) / gf.n).reshape(w_arr.shape)
    return float(out) if out.ndim == 0 else out


def ks_statistic_continuous(gf: GFunctional, grid: Grid, exact_kinks: bool | None = None,
                            threads: int | None = None) -> float:
    """``sqrt(n) max |Ĝ(w, x; 0) − Ĝ(w, x; 1)|`` over the grid.

    Ĝ is piecewise linear in w with kinks at the Ŵ_i; with ``exact_kinks``
    (default when n <= 5000) those are evaluated too.
    """
    n = gf.n
    if exact_kinks is None:
        exact_kinks = n <= 5000
    order = np.argsort(gf.x, kind="stable")
    xs = gf.x[order]
    cps = np.searchsorted(xs, grid.x_points, side="right").astype(np.intp)
    w_pts = grid.w_points
    if exact_kinks:
        w_pts = np.unique(np.concatenate([w_pts, gf.w_hat]))
    best = kernels.lambda_gap_sup(np.ascontiguousarray(gf.w_hat[order]),
                                  np.ascontiguousarray(gf.signed_weights()[order]),
                                  np.ascontiguousarray(w_pts), cps, resolve_threads(threads))
    return float(np.sqrt(n) * best / n)


def untreated_cdf(dataset: Dataset, w_hat, w_points, K: np.ndarray, arm: int) -> np.ndarray:
    """``F̂_{WD|XZ}(w, 0 | X_i, z)``: kernel share of ``{Ŵ_j <= w, D_j = 0}`` in arm z; (n, W)."""
    Ka = K * (dataset.z == arm).astype(float)[None, :]
    den = Ka.sum(axis=1)
    ind = ((np.asarray(w_hat)[:, None] <= np.asarray(w_points)[None, :])
           & (dataset.d == 0)[:, None]).astype(float)
    return (Ka @ ind) / den[:, None]


def kappa_c_hat(dataset: Dataset, w_hat, w_points, h: float, relevance_tol: float = 0.01,
                K: np.ndarray | None = None) -> np.ndarray:
    """κ̂ᶜ(w, X_i) for every record (rows) and every ``w`` (columns).

    Numerator and denominator are plug-in kernel estimates at the record's
    own covariate value.
    """
    x = dataset.x_scalar
    if K is None:
        K = weight_matrix(x, x, h)
    w_points = np.atleast_1d(np.asarray(w_points, dtype=float))
    d = dataset.d.astype(float)
    p = []
    for arm in (0, 1):
        Ka = K * (dataset.z == arm).astype(float)[None, :]
        p.append((Ka @ d) / Ka.sum(axis=1))
    gap = p[1] - p[0]
    weak = np.abs(gap) <= relevance_tol
    if np.any(weak):
        i = int(np.flatnonzero(weak)[0])
        raise WeakInstrument(f"local propensity gap {gap[i]:.4g} at record {i} is within "
                             f"relevance_tol={relevance_tol}", where=i)
    F0 = untreated_cdf(dataset, w_hat, w_points, K, 0)
    F1 = untreated_cdf(dataset, w_hat, w_points, K, 1)
    return -(F1 - F0) / gap[:, None]


def influence_continuous(dataset: Dataset, w_hat, gf: GFunctional, grid: Grid, h: float,
                         relevance_tol: float = 0.01, q_floor: float = 1e-8,
                         phi_sign: str = "population", psi_form: str = "consistent",
                         K: np.ndarray | None = None) -> InfluenceMatrix:
    """Estimated ``ψ̂ᶜ + φ̂ᶜ`` on the w × x grid.

    Entry ``(i, (w, x))`` is ``1(X_i <= x) c_i v_i(w)`` where ``c_i`` is
    ``q̂(X_i, 1)`` for ``Z_i = 0`` and ``−q̂(X_i, 0)`` for ``Z_i = 1`` and::

        v_i(w) = λ_i(w) − Ê[λ(w) | X_i] ± κ̂ᶜ(w, X_i) (Ŵ_i − Ê[W | X_i])

    ``psi_form="consistent"`` uses ``λ(Ŵ − w)``, the same orientation as Ĝ;
    ``"mirrored"`` uses ``λ(w − Ŵ)``. ``phi_sign`` picks ``+`` (population)
    or ``−`` (negated) for the κ̂ᶜ term.
    """
    if phi_sign not in PHI_SIGNS:
        raise InvalidConfig(f"phi_sign must be one of {PHI_SIGNS}")
    if psi_form not in PSI_FORMS:
        raise InvalidConfig(f"psi_form must be one of {PSI_FORMS}")
    for arm in (0, 1):
        low = gf.q[arm] <= q_floor
        if np.any(low):
            i = int(np.flatnonzero(low)[0])
            raise DensityFloor(f"q̂(X_{i}, {arm}) = {gf.q[arm][i]:.3g} is at or below "
                               f"q_floor={q_floor}", index=i, arm=arm)
    x = dataset.x_scalar
    w_hat = np.asarray(w_hat, dtype=float)
    if K is None:
        K = weight_matrix(x, x, h)
    w_pts = grid.w_points
    den = K.sum(axis=1)
    diff = w_hat[:, None] - w_pts[None, :]
    Lam = lam(diff) if psi_form == "consistent" else lam(-diff)
    cond_lam = (K @ Lam) / den[:, None]
    cond_w = (K @ w_hat) / den
    kap = kappa_c_hat(dataset, w_hat, w_pts, h, relevance_tol, K=K)
    sign = 1.0 if phi_sign == "population" else -1.0
    v = (Lam - cond_lam) + sign * kap * (w_hat - cond_w)[:, None]
    rows = v * gf.signed_weights()[:, None]
    return InfluenceMatrix.for_prefixes(rows, x, grid)


def projection_influence(dataset: Dataset, w_hat, delta: DeltaSeries, gf: GFunctional,
                         grid: Grid, K_first: np.ndarray, K_q: np.ndarray | None = None,
                         q_floor: float = 1e-8, center: bool = True) -> InfluenceMatrix:
    """First-order projection of ``Ĝ(·;0) − Ĝ(·;1)`` onto single records.

    Both smoothing steps are linearised exactly in sample rather than
    through their limits. The q̂ weights make the gap a second-order
    U-statistic; its projection keeps the kernel-smoothed indicator
    ``Σ_j K_kj 1(X_j <= x) λ(Ŵ_j − w)`` over the opposite arm. The δ̂ step
    adds each record's share of the local Wald ratio, with residuals
    centred at the fitted arm means. Both pieces converge to the
    asymptotic influence but keep the O(sqrt h) boundary terms that
    dominate at moderate n. Columns are centred; the result is dense.

    ``K_first`` and ``K_q`` are leave-one-out kernel matrices at the
    first-stage and q̂ bandwidths (``K_q`` defaults to ``K_first``).
    ``center=False`` keeps the raw columns, whose q̂ part sums to twice
    ``n (Ĝ(·;0) − Ĝ(·;1))`` and whose δ̂ part sums to zero.
    """
    for arm in (0, 1):
        low = gf.q[arm] <= q_floor
        if np.any(low):
            i = int(np.flatnonzero(low)[0])
            raise DensityFloor(f"q̂(X_{i}, {arm}) = {gf.q[arm][i]:.3g} is at or below "
                               f"q_floor={q_floor}", index=i, arm=arm)
    n = dataset.n
    x = dataset.x_scalar
    z = dataset.z.astype(np.intp)
    y = dataset.y
    d = dataset.d.astype(float)
    w_hat = np.asarray(w_hat, dtype=float)
    K_q = K_first if K_q is None else K_q
    w_pts = grid.w_points
    c = gf.signed_weights()
    s = np.where(z == 0, 1.0, -1.0)

    lam_w = lam(w_hat[:, None] - w_pts[None, :])
    # derivative of c_i λ(Ŵ_i − w) with respect to δ̂(X_i)
    dlam = -(c * (1.0 - d))[:, None] * (w_hat[:, None] < w_pts[None, :])

    opposite = z[None, :] != z[:, None]
    P = np.where(opposite, K_q, 0.0) * (-s / ((n - 1) * gf.h_q))[:, None]

    in1 = (z == 1).astype(float)
    S1 = K_first @ in1
    S0 = K_first @ (1.0 - in1)
    omega = np.where(z[None, :] == 1, 1.0 / S1[:, None], -1.0 / S0[:, None])
    gap = delta.p[1] - delta.p[0]
    # resid[i, j]: record j's residual in the local Wald ratio at X_i
    resid = (y[None, :] - delta.mu.T[:, z]) - delta.values[:, None] * (d[None, :] - delta.p.T[:, z])
    Q = np.ascontiguousarray((K_first * omega * resid / gap[:, None]).T)

    order = np.argsort(x, kind="stable")
    cps = np.searchsorted(x[order], grid.x_points, side="right")
    n_w, n_x = w_pts.size, grid.x_points.size
    out = np.empty((n, n_x, n_w))
    acc = np.zeros((n, n_w))
    own = c[:, None] * lam_w
    start = 0
    for m, stop in enumerate(cps):
        if stop > start:
            seg = order[start:stop]
            acc += P[:, seg] @ lam_w[seg] + Q[:, seg] @ dlam[seg]
            start = stop
        out[:, m, :] = acc + own * (x <= grid.x_points[m])[:, None]
    out = out.reshape(n, n_x * n_w)
    if center:
        out -= out.mean(axis=0)
    return InfluenceMatrix.from_dense(out, grid, CONTINUOUS)
