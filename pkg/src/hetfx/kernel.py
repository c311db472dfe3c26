"""Gaussian kernel smoothing with a Silverman default bandwidth.

The scalar functions (``loo_nw_mean``, ``loo_density``, ``nw_at_point``)
evaluate one point with plain loops and are meant for checking; the
vectorised ``*_all`` variants feed the test statistics.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, asdict
from typing import Any

import numpy as np

from ._backend import kernels, resolve_threads
from .core import Dataset
from .errors import DegenerateBandwidth, EmptyArm, InvalidConfig, ZeroWeightSum

INV_SQRT_2PI = 1.0 / math.sqrt(2.0 * math.pi)
# weight sums below this count as zero
UNDERFLOW = 1e-300


@dataclass(frozen=True)
class KernelSpec:
    """Kernel family and bandwidth rule.

    ``bandwidth_rule`` is ``"silverman"`` or ``"fixed"`` (then ``bandwidth``
    gives h). ``scale`` multiplies whatever the rule returns, so values
    below one undersmooth. ``q_bandwidth`` optionally sets a separate
    bandwidth for the density weights q̂; by default they share h.
    """

    family: str = "gaussian"
    bandwidth_rule: str = "silverman"
    bandwidth: float | None = None
    scale: float = 1.0
    q_bandwidth: float | None = None

    def __post_init__(self):
        if self.family != "gaussian":
            raise InvalidConfig(f"unsupported kernel family {self.family!r}")
        if self.bandwidth_rule not in ("silverman", "fixed"):
            raise InvalidConfig(f"unknown bandwidth rule {self.bandwidth_rule!r}")
        if self.bandwidth_rule == "fixed" and not (self.bandwidth and self.bandwidth > 0):
            raise InvalidConfig("fixed bandwidth rule needs bandwidth > 0")
        if not self.scale > 0:
            raise InvalidConfig("bandwidth scale must be positive")
        if self.q_bandwidth is not None and not self.q_bandwidth > 0:
            raise InvalidConfig("q_bandwidth must be positive")

    def resolve(self, sample) -> float:
        if self.bandwidth_rule == "fixed":
            return float(self.bandwidth) * self.scale
        return silverman_bandwidth(sample, self.scale)

    def resolve_q(self, sample) -> float:
        if self.q_bandwidth is not None:
            return float(self.q_bandwidth)
        return self.resolve(sample)

    def to_dict(self) -> dict[str, Any]:
        return asdict(self)


def kernel_weight(u):
    """Standard normal density; accepts scalars or arrays."""
    u = np.asarray(u, dtype=float)
    out = INV_SQRT_2PI * np.exp(-0.5 * u * u)
    return float(out) if out.ndim == 0 else out


def silverman_bandwidth(sample, scale: float = 1.0) -> float:
    """``1.06 * min(sd, IQR / 1.34) * n ** (-1/5)``, times ``scale``.

    Falls back to whichever spread measure is positive when the other
    vanishes (heavy ties); raises :class:`DegenerateBandwidth` if both do.
    """
    x = np.asarray(sample, dtype=float).reshape(-1)
    n = x.size
    if n < 2:
        raise DegenerateBandwidth("bandwidth needs at least two observations")
    sd = float(np.std(x, ddof=1))
    q75, q25 = np.percentile(x, [75.0, 25.0])
    iqr = float(q75 - q25) / 1.34
    spreads = [s for s in (sd, iqr) if s > 0]
    if not spreads:
        raise DegenerateBandwidth("constant sample has no spread")
    return 1.06 * min(spreads) * n ** (-0.2) * scale


# -- single-point estimators -------------------------------------------------

def loo_nw_mean(dataset: Dataset, values, i: int, z: int, h: float) -> float:
    """Leave-one-out Nadaraya–Watson mean of ``values`` at ``X_i`` within arm ``z``."""
    x = dataset.x_scalar
    values = np.asarray(values, dtype=float)
    num = 0.0
    den = 0.0
    for j in range(dataset.n):
        if j == i or dataset.z[j] != z:
            continue
        k = kernel_weight((x[j] - x[i]) / h)
        num += values[j] * k
        den += k
    if den <= UNDERFLOW:
        raise EmptyArm(f"no kernel weight from arm {z} around record {i}")
    return num / den


def loo_density(dataset: Dataset, i: int, z: int, h: float) -> float:
    """Leave-one-out estimate of ``q(X_i, z) = f(X_i | z) P(Z = z)``."""
    x = dataset.x_scalar
    n = dataset.n
    if n < 2:
        raise EmptyArm("density needs at least two records")
    s = 0.0
    for j in range(n):
        if j != i and dataset.z[j] == z:
            s += kernel_weight((x[j] - x[i]) / h)
    return s / ((n - 1) * h)


def nw_at_point(dataset: Dataset, values, x: float, z: int | None, h: float) -> float:
    """Plug-in Nadaraya–Watson mean at ``x`` using every record (optionally one arm)."""
    xs = dataset.x_scalar
    values = np.asarray(values, dtype=float)
    num = 0.0
    den = 0.0
    for j in range(dataset.n):
        if z is not None and dataset.z[j] != z:
            continue
        k = kernel_weight((xs[j] - x) / h)
        num += values[j] * k
        den += k
    if den <= UNDERFLOW:
        raise ZeroWeightSum(f"kernel weights vanish at x={x}")
    return num / den


# -- vectorised versions ------------------------------------------------------

def weight_matrix(x_eval, x_data, h: float, leave_one_out: bool = False,
                  threads: int | None = None) -> np.ndarray:
    """``K[i, j] = K((x_data[j] - x_eval[i]) / h)``, diagonal zeroed for leave-one-out."""
    return kernels.gaussian_weights(np.ascontiguousarray(x_eval, dtype=float),
                                    np.ascontiguousarray(x_data, dtype=float),
                                    float(h), bool(leave_one_out), resolve_threads(threads))


def _ratio(num: np.ndarray, den: np.ndarray, what: str) -> np.ndarray:
    bad = den <= UNDERFLOW
    if np.any(bad):
        i = int(np.flatnonzero(bad.reshape(bad.shape[0], -1).any(axis=1))[0])
        raise EmptyArm(f"{what}: no kernel weight at evaluation point {i}")
    return num / den


def loo_nw_means(dataset: Dataset, values, h: float, K: np.ndarray | None = None) -> np.ndarray:
    """Leave-one-out NW means at every ``X_i`` for both arms.

    ``values`` may be 1-D (n,) or 2-D (n, m). Returns an array with a
    leading axis of length 2 indexed by arm.
    """
    x = dataset.x_scalar
    if K is None:
        K = weight_matrix(x, x, h, leave_one_out=True)
    v = np.asarray(values, dtype=float)
    out = []
    for arm in (0, 1):
        mask = (dataset.z == arm).astype(float)
        Ka = K * mask[None, :]
        den = Ka.sum(axis=1)
        num = Ka @ v
        den_b = den if v.ndim == 1 else den[:, None]
        out.append(_ratio(num, den_b, f"leave-one-out mean, arm {arm}"))
    return np.stack(out)


def loo_densities(dataset: Dataset, h: float, K: np.ndarray | None = None) -> np.ndarray:
    """``q̂(X_i, z)`` for every record and both arms; shape (2, n)."""
    x = dataset.x_scalar
    n = dataset.n
    if K is None:
        K = weight_matrix(x, x, h, leave_one_out=True)
    out = np.empty((2, n))
    for arm in (0, 1):
        mask = (dataset.z == arm).astype(float)
        out[arm] = (K @ mask) / ((n - 1) * h)
    return out


def nw_at_points(dataset: Dataset, values, x_eval, h: float, arm: int | None = None,
                 K: np.ndarray | None = None) -> np.ndarray:
    """Plug-in NW means at each point of ``x_eval``; ``values`` (n,) or (n, m)."""
    xs = dataset.x_scalar
    if K is None:
        K = weight_matrix(x_eval, xs, h)
    v = np.asarray(values, dtype=float)
    if arm is not None:
        K = K * (dataset.z == arm).astype(float)[None, :]
    den = K.sum(axis=1)
    num = K @ v
    bad = den <= UNDERFLOW
    if np.any(bad):
        raise ZeroWeightSum(f"kernel weights vanish at {int(bad.sum())} evaluation points")
    return num / (den if v.ndim == 1 else den[:, None])
