"""Pick the compiled kernels when available, the numpy fallback otherwise.

Set ``HETFX_BACKEND=python`` to force the fallback.
"""

from __future__ import annotations

import os

from . import _fallback

try:  # pragma: no cover - depends on the build
    from . import _kernels as _compiled
except ImportError:  # pragma: no cover
    _compiled = None


def _select(name: str | None = None):
    name = (name or os.environ.get("HETFX_BACKEND", "")).lower()
    if name == "python" or _compiled is None:
        return _fallback
    return _compiled


kernels = _select()
BACKEND = "compiled" if kernels is not _fallback else "python"
HAVE_COMPILED = _compiled is not None


def get(name: str):
    """Return the kernel module called ``name`` (``compiled`` or ``python``)."""
    if name == "compiled":
        if _compiled is None:
            raise ImportError("compiled kernels are not built")
        return _compiled
    if name == "python":
        return _fallback
    raise ValueError(f"unknown backend {name!r}")


def resolve_threads(threads: int | None = None) -> int:
    """Worker count: explicit value, else ``HETFX_THREADS``, else all cores."""
    if threads is not None and int(threads) > 0:
        return int(threads)
    env = os.environ.get("HETFX_THREADS")
    if env:
        try:
            val = int(env)
        except ValueError:
            val = 0
        if val > 0:
            return val
    return os.cpu_count() or 1
