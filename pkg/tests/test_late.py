from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from hetfx import from_arrays
from hetfx.errors import EmptyCell, MissingCell, UnsupportedCovariateMix, WeakInstrument
from hetfx.kernel import KernelSpec
from hetfx.late import construct_w, delta_continuous, delta_discrete

# leave-one-out Wald ratios of the six-row cell, computed in exact arithmetic
LOO_SIX = [15.0, 18.0, 21 / 4, 21 / 4, 18.0, 15.0]


def test_six_row_cell(six_rows):
    cell = delta_discrete(six_rows)[[1.0]]
    assert cell.mu0 == pytest.approx(2.0, abs=1e-12)
    assert cell.mu1 == pytest.approx(5.0, abs=1e-12)
    assert cell.p0 == pytest.approx(1 / 3, abs=1e-12)
    assert cell.p1 == pytest.approx(2 / 3, abs=1e-12)
    assert cell.delta == pytest.approx(9.0, abs=1e-12)
    assert (cell.n0, cell.n1) == (3, 3)


def test_construct_w_from_six_rows(six_rows):
    w = construct_w(six_rows, delta_discrete(six_rows))
    assert w[0] == pytest.approx(10.0, abs=1e-12)
    treated = six_rows.d == 1
    assert np.array_equal(w[treated], six_rows.y[treated])


def test_constant_outcome_gives_zero(six_rows):
    ds = six_rows.replace(y=np.full(6, 2.5))
    assert delta_discrete(ds).deltas.tolist() == [0.0]


def test_weak_and_empty_cells():
    same_d = from_arrays([1, 2, 3, 4], [1, 0, 1, 0], [0, 0, 1, 1], np.ones((4, 1)), ("discrete",))
    with pytest.raises(WeakInstrument):
        delta_discrete(same_d)
    lonely = from_arrays([1, 2, 3, 4], [0, 1, 0, 1], [0, 1, 0, 1], [[1], [1], [2], [1]],
                         ("discrete",))
    with pytest.raises(EmptyCell):
        delta_discrete(lonely)


def test_missing_cell_lookup(six_rows):
    with pytest.raises(MissingCell):
        delta_discrete(six_rows)[[2.0]]


def test_delta_continuous_identical_x(six_rows):
    ds = from_arrays(six_rows.y, six_rows.d, six_rows.z, np.full((6, 1), 0.4), ("continuous",))
    kern = KernelSpec(bandwidth_rule="fixed", bandwidth=0.3)
    series = delta_continuous(ds, kern)
    assert np.allclose(series.values, LOO_SIX, rtol=0, atol=1e-12)


def test_delta_continuous_needs_four(six_rows):
    ds = from_arrays([1, 2, 3], [0, 1, 1], [0, 1, 1], [0.1, 0.2, 0.3], ("continuous",))
    with pytest.raises(EmptyCell):
        delta_continuous(ds, KernelSpec(bandwidth_rule="fixed", bandwidth=1.0))
    with pytest.raises(UnsupportedCovariateMix):
        delta_continuous(six_rows)


def _random(seed, n, kind):
    rng = np.random.default_rng(seed)
    z = rng.permutation(np.r_[np.zeros(n // 2), np.ones(n - n // 2)])
    d = (rng.uniform(size=n) < 0.2 + 0.6 * z).astype(int)
    x = rng.integers(1, 3, n) if kind == "discrete" else rng.uniform(size=n)
    # keep each arm of each cell mixed
    d[:4] = [0, 1, 0, 1]
    z[:4] = [0, 0, 1, 1]
    return from_arrays(rng.normal(size=n), d, z, np.asarray(x, float)[:, None], (kind,))


@given(st.integers(0, 10_000), st.floats(-50, 50))
def test_location_shift_invariance_continuous(seed, c):
    ds = _random(seed, 40, "continuous")
    kern = KernelSpec(bandwidth_rule="fixed", bandwidth=0.5)
    try:
        a = delta_continuous(ds, kern, relevance_tol=1e-6).values
    except WeakInstrument:
        return
    b = delta_continuous(ds.replace(y=ds.y + c), kern, relevance_tol=1e-6).values
    assert np.allclose(a, b, rtol=1e-9, atol=1e-9 * (1 + abs(c)))


@given(st.integers(0, 10_000))
def test_instrument_relabel_invariance(seed):
    ds = _random(seed, 40, "continuous")
    kern = KernelSpec(bandwidth_rule="fixed", bandwidth=0.5)
    try:
        a = delta_continuous(ds, kern, relevance_tol=1e-6).values
    except WeakInstrument:
        return
    b = delta_continuous(ds.replace(z=(1 - ds.z).astype(np.int8)), kern, relevance_tol=1e-6).values
    assert np.array_equal(a, b)


@given(st.integers(0, 10_000))
def test_discrete_relabel_invariance(seed):
    ds = _random(seed, 60, "discrete")
    try:
        a = delta_discrete(ds, 1e-6).deltas
    except (WeakInstrument, EmptyCell):
        return
    b = delta_discrete(ds.replace(z=(1 - ds.z).astype(np.int8)), 1e-6).deltas
    assert np.array_equal(a, b)


def test_discrete_shift_invariance_exact(six_rows):
    a = delta_discrete(six_rows).deltas
    b = delta_discrete(six_rows.replace(y=six_rows.y + 8.0)).deltas
    assert np.array_equal(a, b)
