"""Pure numpy versions of the compiled inner loops.

Selected automatically when the extension module is not built. Sums run in
the same order as the compiled loops.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor

import numpy as np

INV_SQRT_2PI = 0.3989422804014327


def gaussian_weights(x_eval, x_data, h, exclude_diag=False, threads=1):
    """Matrix ``K[i, j] = phi((x_data[j] - x_eval[i]) / h)`` of Gaussian density values.

    With ``exclude_diag`` the entries ``K[i, i]`` are zeroed (leave-one-out).
    """
    x_eval = np.asarray(x_eval, dtype=float)
    x_data = np.asarray(x_data, dtype=float)
    u = (x_data[None, :] - x_eval[:, None]) * (1.0 / h)
    u *= u
    u *= -0.5
    np.exp(u, out=u)
    u *= INV_SQRT_2PI
    if exclude_diag:
        m = min(u.shape)
        u[np.arange(m), np.arange(m)] = 0.0
    return u


def _prefix_sup_one(u, V, checkpoints, reset):
    best = 0.0
    pos = 0
    acc = np.zeros(V.shape[1])
    for stop in checkpoints:
        if stop > pos:
            block = u[pos:stop, None] * V[pos:stop]
            block[0] += acc
            np.cumsum(block, axis=0, out=block)
            acc = block[-1]
        pos = stop
        if acc.size:
            best = max(best, float(np.abs(acc).max()))
        if reset:
            acc = np.zeros(V.shape[1])
    return best


def prefix_sup(U, V, checkpoints, reset, threads=1):
    """Largest running partial sum, per row of ``U``.

    For each row ``u`` of ``U`` the columns of ``V`` are accumulated as
    ``acc[w] += u[i] * V[i, w]`` over records in order. At every checkpoint
    position the running ``max |acc[w]|`` is updated; with ``reset`` the
    accumulator restarts at zero after each checkpoint (segment sums).
    """
    U = np.ascontiguousarray(U, dtype=float)
    V = np.ascontiguousarray(V, dtype=float)
    if V.shape[0] != U.shape[1]:
        raise ValueError("U and V disagree on the number of records")
    cps = [int(c) for c in checkpoints]
    if threads <= 1 or U.shape[0] < 2:
        return np.array([_prefix_sup_one(U[b], V, cps, reset) for b in range(U.shape[0])])
    with ThreadPoolExecutor(max_workers=threads) as pool:
        res = list(pool.map(lambda b: _prefix_sup_one(U[b], V, cps, reset), range(U.shape[0])))
    return np.array(res)


def lambda_gap_sup(w_hat, c, w_points, checkpoints, threads=1, chunk=256):
    """``max_{w, k} |sum_{i < checkpoints[k]} c[i] * max(w - w_hat[i], 0)|``."""
    w_hat = np.asarray(w_hat, dtype=float)
    c = np.asarray(c, dtype=float)
    w_points = np.asarray(w_points, dtype=float)
    cps = np.asarray(checkpoints, dtype=np.intp)
    best = 0.0
    if cps.size == 0 or w_points.size == 0:
        return best
    for start in range(0, w_points.size, chunk):
        wp = w_points[start:start + chunk]
        t = w_hat[:, None] - wp[None, :]
        terms = np.where(t < 0.0, c[:, None] * (-t), 0.0)
        csum = np.cumsum(terms, axis=0)
        sel = cps[cps > 0] - 1
        if sel.size:
            best = max(best, float(np.abs(csum[sel]).max()))
    return best
