from __future__ import annotations

import math

import numpy as np
import pytest

from hetfx import MultiplierSpec, RunConfig
from hetfx.dgp import (DgpSpec, RejectionTable, expand_specs, gen_dgp, monte_carlo,
                       replicate_seed)
from hetfx.errors import InvalidConfig

# P(ρε + sqrt(1 − ρ²)u < 1) for independent uniforms, by exact integration
TAKE_UP = {0.5: 0.84529946162074847098, 0.7: 0.82845139255942436992, 0.9: 0.8562047401438202601}


@pytest.mark.parametrize("dgp", [1, 2, 3, 4])
def test_structure(dgp):
    ds = gen_dgp(DgpSpec(dgp, 2000, 0.7, 0.5, 0.4, seed=dgp))
    assert np.all(ds.d[ds.z == 0] == 0)
    n = ds.n
    assert abs(ds.z.mean() - 0.4) < 5 / math.sqrt(n)
    x = ds.x_scalar
    if dgp in (1, 2):
        assert set(np.unique(x)) == {1.0, 2.0, 3.0, 4.0, 5.0}
        assert abs(x.mean() - 3.0) < 5 * math.sqrt(2) / math.sqrt(n)
        assert ds.branch == "discrete"
    else:
        assert x.min() >= 0 and x.max() < 1
        assert abs(x.mean() - 0.5) < 5 / math.sqrt(12 * n)
        assert ds.branch == "continuous"


@pytest.mark.parametrize("rho", sorted(TAKE_UP))
def test_take_up_rate(rho):
    ds = gen_dgp(DgpSpec(1, 200_000, rho, 0.0, 0.5, seed=3))
    treated = ds.d[ds.z == 1]
    p = TAKE_UP[rho]
    assert abs(treated.mean() - p) < 4 * math.sqrt(p * (1 - p) / treated.size)


def test_gamma_zero_collapses():
    a = gen_dgp(DgpSpec(1, 300, seed=8))
    b = gen_dgp(DgpSpec(2, 300, gamma=0.0, seed=8))
    for f in ("y", "d", "z", "x"):
        assert np.array_equal(getattr(a, f), getattr(b, f))


def test_outcome_formula():
    s = DgpSpec(4, 50, 0.6, 0.7, 0.5, 2)
    ds = gen_dgp(s)
    base = gen_dgp(DgpSpec(3, 50, 0.6, 0.0, 0.5, 2))
    x, d = ds.x_scalar, ds.d
    # ε is shared: recover it from the homogeneous design
    eps = (base.y - base.d * x) / x
    assert np.allclose(ds.y, d * x + (1 + 0.7 * d) * x * eps, rtol=1e-12)


def test_deterministic_and_prefix_consistent():
    a = gen_dgp(DgpSpec(3, 500, seed=5))
    b = gen_dgp(DgpSpec(3, 500, seed=5))
    c = gen_dgp(DgpSpec(3, 800, seed=5))
    assert np.array_equal(a.y, b.y)
    assert np.array_equal(a.y, c.y[:500])


def test_replicate_seed():
    assert replicate_seed(0, 3) == replicate_seed(0, 3)
    assert len({replicate_seed(7, r) for r in range(200)}) == 200


@pytest.mark.parametrize("kw", [{"id": 5}, {"n": 0}, {"rho": 1.0}, {"pz": 0.0}, {"gamma": -1}])
def test_spec_validation(kw):
    with pytest.raises(InvalidConfig):
        DgpSpec(**kw)


FAST = RunConfig(grid_w=20, multiplier=MultiplierSpec(reps=50, seed=1))


def test_single_replicate_rate():
    t = monte_carlo(DgpSpec(1, 200, seed=4), 1, FAST, workers=1)
    assert all(r in (0.0, 1.0) for r in t.rows[(1, 200, 0.5, 0.7, 0.0)].values())


def test_workers_do_not_change_results():
    specs = expand_specs(2, [150], [0.7], [0.5], [0.0, 0.5], seed=3)
    a = monte_carlo(specs, 4, FAST, workers=1)
    b = monte_carlo(specs, 4, FAST, workers=3)
    assert a.rows == b.rows
    assert a.rate(0.05, gamma=0.5) == b.rate(0.05, gamma=0.5)


def test_decision_rules_agree():
    spec = DgpSpec(2, 200, gamma=0.3, seed=6)
    a = monte_carlo(spec, 5, FAST, workers=1, decision="pvalue")
    b = monte_carlo(spec, 5, FAST, workers=1, decision="critical")
    assert a.rows == b.rows


def test_failures_are_counted(caplog):
    # a tiny sample leaves covariate cells without both arms
    t = monte_carlo(DgpSpec(1, 6, seed=1), 3, FAST, workers=1)
    key = (1, 6, 0.5, 0.7, 0.0)
    assert t.failures[key] + t.completed[key] == 3
    assert t.failures[key] > 0


def _table():
    rows = {(1, 500, 0.5, 0.7, 0.0): {0.05: 0.04, 0.1: 0.09},
            (1, 500, 0.5, 0.5, 0.0): {0.05: 0.05, 0.1: 0.11},
            (1, 1000, 0.3, 0.7, 0.0): {0.05: 0.06, 0.1: 0.12}}
    return RejectionTable(rows, 100, 200)


def test_table_json_roundtrip():
    t = _table()
    back = RejectionTable.from_json(t.to_json())
    assert back.rows == t.rows and back.reps == 100


def test_table_csv_layout():
    lines = _table().to_csv().strip().splitlines()
    assert lines[0] == ("dgp,gamma,n,pz,alpha=0.05/rho=0.5,alpha=0.05/rho=0.7,"
                        "alpha=0.1/rho=0.5,alpha=0.1/rho=0.7")
    assert len(lines) == 3  # one row per (n, pz)
    assert lines[1].startswith("1,0,500,0.5,0.0500,0.0400")


def test_table_rate_lookup():
    t = _table()
    assert t.rate(0.1, n=1000) == 0.12
    with pytest.raises(KeyError):
        t.rate(0.05, n=500)
    with pytest.raises(InvalidConfig):
        RejectionTable({(1, 1, 0.5, 0.7, 0.0): {0.05: 1.5}}, 1, 1)
