from __future__ import annotations

import numpy as np
import pytest

from hetfx import _backend, _fallback

pytestmark = pytest.mark.skipif(not _backend.HAVE_COMPILED, reason="compiled kernels not built")


def test_active_backend_is_compiled():
    assert _backend.BACKEND == "compiled"
    assert _backend.get("python") is _fallback
    with pytest.raises(ValueError):
        _backend.get("fortran")


@pytest.mark.parametrize("loo", [False, True])
def test_gaussian_weights_agree(loo):
    rng = np.random.default_rng(0)
    x = rng.uniform(size=57)
    y = rng.uniform(size=57) if not loo else x
    a = _backend.get("compiled").gaussian_weights(x, y, 0.13, loo, 3)
    b = _fallback.gaussian_weights(x, y, 0.13, loo, 1)
    assert np.allclose(a, b, rtol=1e-14, atol=0)


@pytest.mark.parametrize("reset", [False, True])
def test_prefix_sup_agree(reset):
    rng = np.random.default_rng(1)
    U = rng.normal(size=(9, 80))
    V = rng.normal(size=(80, 6))
    cps = np.array([10, 35, 35, 80], dtype=np.intp)
    a = _backend.get("compiled").prefix_sup(U, V, cps, reset, 2)
    b = _fallback.prefix_sup(U, V, cps, reset, 1)
    assert np.allclose(a, b, rtol=1e-12)


def test_lambda_gap_sup_agree():
    rng = np.random.default_rng(2)
    w = rng.normal(size=300)
    c = rng.normal(size=300)
    pts = np.sort(rng.normal(size=40))
    cps = np.array([50, 120, 300], dtype=np.intp)
    a = _backend.get("compiled").lambda_gap_sup(w, c, pts, cps, 2)
    b = _fallback.lambda_gap_sup(w, c, pts, cps, 1)
    assert np.allclose(a, b, rtol=1e-11)


def test_threads_env(monkeypatch):
    monkeypatch.setenv("HETFX_THREADS", "3")
    assert _backend.resolve_threads() == 3
    assert _backend.resolve_threads(2) == 2
    monkeypatch.setenv("HETFX_THREADS", "junk")
    assert _backend.resolve_threads() >= 1
