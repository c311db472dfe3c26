from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from hetfx import from_arrays
from hetfx.core import Dataset
from hetfx.errors import DegenerateBandwidth, EmptyArm, InvalidConfig, ZeroWeightSum
from hetfx.kernel import (KernelSpec, kernel_weight, loo_densities, loo_density, loo_nw_mean,
                          loo_nw_means, nw_at_point, nw_at_points, silverman_bandwidth,
                          weight_matrix)

# high-precision reference values
K0 = 0.39894228040143267794
K1 = 0.2419707245191433498
SILVERMAN_100 = 0.42199360078670708582
NW_MID_ALL = 0.84191844789206870897


def _raw(x, z, y=None, d=None):
    """Dataset without validation, for single-arm corner cases."""
    n = len(x)
    y = np.zeros(n) if y is None else np.asarray(y, float)
    d = np.zeros(n, np.int8) if d is None else np.asarray(d, np.int8)
    return Dataset(y, d, np.asarray(z, np.int8), np.asarray(x, float).reshape(-1, 1),
                   ("continuous",))


def test_kernel_values():
    assert kernel_weight(0.0) == pytest.approx(K0, abs=1e-15)
    assert kernel_weight(1.0) == pytest.approx(K1, abs=1e-15)
    assert kernel_weight(1.0) == kernel_weight(-1.0)


@given(st.floats(-30, 30))
def test_kernel_symmetric_and_peaked(u):
    assert kernel_weight(u) == kernel_weight(-u)
    assert 0.0 <= kernel_weight(u) <= kernel_weight(0.0)


def test_silverman_unit_spread():
    # uniform-looking sample rescaled to sd 1; its IQR/1.34 exceeds 1, so sd binds
    x = np.linspace(-1.0, 1.0, 100)
    x = x / x.std(ddof=1)
    q75, q25 = np.percentile(x, [75, 25])
    assert (q75 - q25) / 1.34 > 1.0
    assert silverman_bandwidth(x) == pytest.approx(SILVERMAN_100, abs=1e-12)


def test_silverman_scale_equivariance():
    x = np.random.default_rng(1).normal(size=50)
    assert silverman_bandwidth(2 * x) == pytest.approx(2 * silverman_bandwidth(x), rel=1e-13)
    assert silverman_bandwidth(x, 0.5) == pytest.approx(0.5 * silverman_bandwidth(x), rel=1e-15)


def test_silverman_ties_fall_back_to_sd():
    x = np.array([0.0] * 10 + [1.0])
    assert silverman_bandwidth(x) == pytest.approx(1.06 * np.std(x, ddof=1) * 11 ** -0.2)


@pytest.mark.parametrize("x", [[3.0, 3.0, 3.0], [1.0]])
def test_silverman_degenerate(x):
    with pytest.raises(DegenerateBandwidth):
        silverman_bandwidth(x)


def test_kernel_spec_validation():
    with pytest.raises(InvalidConfig):
        KernelSpec(bandwidth_rule="fixed")
    with pytest.raises(InvalidConfig):
        KernelSpec(family="epanechnikov")
    assert KernelSpec(bandwidth_rule="fixed", bandwidth=0.3, scale=2).resolve([0, 1]) == 0.6


def test_loo_mean_three_points():
    ds = _raw([0.0, 0.5, 1.0], [1, 0, 1])
    assert loo_nw_mean(ds, [0.0, 1.0, 2.0], 1, 1, 1.0) == pytest.approx(1.0, abs=1e-15)


def test_loo_mean_identical_x_is_arm_mean():
    ds = _raw([0.3] * 5, [1, 1, 1, 0, 1])
    v = [1.0, 2.0, 4.0, 9.0, 7.0]
    assert loo_nw_mean(ds, v, 0, 1, 0.2) == pytest.approx((2 + 4 + 7) / 3, abs=1e-14)


def test_loo_mean_constant_values():
    ds = _raw([0.1, 0.4, 0.8, 0.9], [1, 1, 0, 1])
    assert loo_nw_mean(ds, [1, 1, 1, 1], 0, 1, 0.3) == pytest.approx(1.0, abs=1e-15)


def test_loo_mean_empty_arm():
    ds = _raw([0.1, 0.4, 0.8], [0, 1, 0])
    with pytest.raises(EmptyArm):
        loo_nw_mean(ds, [1, 2, 3], 1, 1, 0.3)
    far = _raw([0.0, 1000.0, 0.1], [0, 1, 0])
    with pytest.raises(EmptyArm):
        loo_nw_mean(far, [1, 2, 3], 0, 1, 0.01)


def test_loo_density_single_term():
    ds = _raw([0.5, 0.5], [1, 1])
    assert loo_density(ds, 0, 1, 1.0) == pytest.approx(K0, abs=1e-15)
    assert loo_density(ds, 0, 0, 1.0) == 0.0


def test_loo_density_change_of_variables():
    x = np.array([0.1, 0.35, 0.5, 0.9])
    a = _raw(x, [0, 1, 1, 0])
    b = _raw(3 * x, [0, 1, 1, 0])
    for i in range(4):
        assert loo_density(b, i, 1, 0.6) * 3 == pytest.approx(loo_density(a, i, 1, 0.2), rel=1e-13)


def test_nw_at_point_three_points():
    ds = _raw([0.0, 0.5, 1.0], [1, 0, 1])
    v = [0.0, 1.0, 2.0]
    assert nw_at_point(ds, v, 0.0, None, 1.0) == pytest.approx(NW_MID_ALL, abs=1e-15)
    assert nw_at_point(ds, v, 0.5, None, 1.0) == pytest.approx(1.0, abs=1e-15)
    assert nw_at_point(ds, [4, 4, 4], 0.2, 1, 0.1) == pytest.approx(4.0, abs=1e-15)


def test_nw_localizes_as_bandwidth_shrinks():
    x = np.array([0.0, 0.3, 1.0])
    ratios = [kernel_weight(0.0) / kernel_weight((x[0] - x[1]) / h) for h in (1.0, 0.5, 0.2, 0.1)]
    assert all(b > a for a, b in zip(ratios, ratios[1:]))
    ds = _raw(x, [1, 0, 1])
    assert nw_at_point(ds, [0.0, 1.0, 2.0], 0.3, None, 0.01) == pytest.approx(1.0, abs=1e-12)


def test_nw_zero_weight():
    ds = _raw([0.0, 0.1], [0, 1])
    with pytest.raises(ZeroWeightSum):
        nw_at_point(ds, [1, 2], 1e6, None, 0.01)


def test_vectorised_match_scalar():
    rng = np.random.default_rng(3)
    n = 25
    ds = from_arrays(rng.normal(size=n), rng.integers(0, 2, n), np.r_[np.zeros(12), np.ones(13)],
                     rng.uniform(size=n), ("continuous",))
    h = 0.2
    means = loo_nw_means(ds, ds.y, h)
    dens = loo_densities(ds, h)
    pts = nw_at_points(ds, ds.y, ds.x_scalar, h, arm=1)
    for i in range(n):
        for z in (0, 1):
            assert means[z, i] == pytest.approx(loo_nw_mean(ds, ds.y, i, z, h), rel=1e-12)
            assert dens[z, i] == pytest.approx(loo_density(ds, i, z, h), rel=1e-12)
        assert pts[i] == pytest.approx(nw_at_point(ds, ds.y, ds.x_scalar[i], 1, h), rel=1e-12)


def test_weight_matrix_loo_diagonal():
    x = np.array([0.0, 0.2, 0.7])
    K = weight_matrix(x, x, 0.5, leave_one_out=True)
    assert np.all(np.diag(K) == 0)
    assert K[0, 1] == pytest.approx(kernel_weight(0.4), rel=1e-15)
