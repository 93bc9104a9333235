"""Optional numba acceleration.

Hot kernels are written once in numba-compatible Python.  When numba is
importable and ``ARTIFACT_DISABLE_NUMBA`` is unset (or ``0``), they are
compiled with ``njit``; otherwise the plain Python/numpy version runs.
Both paths must produce identical results.
"""

import os

_FLAG = os.environ.get("ARTIFACT_DISABLE_NUMBA", "0").strip().lower()
_DISABLED = _FLAG not in ("", "0", "false", "no")

try:
    if _DISABLED:
        raise ImportError
    from numba import njit as _njit

    NUMBA_ENABLED = True
except ImportError:  # pragma: no cover - exercised via the env flag
    _njit = None
    NUMBA_ENABLED = False


def jit(func):
    """Compile ``func`` with numba when enabled; keep the Python original
    reachable as ``.py_func`` in both modes."""
    if NUMBA_ENABLED:
        compiled = _njit(cache=False)(func)
        return compiled
    func.py_func = func
    return func
