"""Upper concave envelope of a function sampled on an increasing grid.

The monotone-chain scan is the hot loop of every concavification, so it is
compiled with numba when available (see :mod:`artifact._accel`).
"""

from __future__ import annotations

import numpy as np

from ._accel import jit


@jit
def upper_hull_indices(x, y):
    """Indices of the vertices of the upper concave envelope of (x, y).

    ``x`` must be strictly increasing.  Collinear middle points are dropped.
    """
    n = x.shape[0]
    out = np.empty(n, dtype=np.int64)
    m = 0
    for i in range(n):
        while m >= 2:
            a = out[m - 2]
            b = out[m - 1]
            cross = (x[b] - x[a]) * (y[i] - y[a]) - (y[b] - y[a]) * (x[i] - x[a])
            if cross >= 0.0:
                m -= 1
            else:
                break
        out[m] = i
        m += 1
    return out[:m]


@jit
def envelope_on_grid(x, y):
    """Upper concave envelope evaluated at every grid point."""
    idx = upper_hull_indices(x, y)
    env = np.empty_like(y)
    k = 0
    for i in range(x.shape[0]):
        while k + 1 < idx.shape[0] - 1 and x[idx[k + 1]] <= x[i]:
            k += 1
        a = idx[k]
        b = idx[min(k + 1, idx.shape[0] - 1)]
        if a == b or x[b] == x[a]:
            env[i] = y[a]
        else:
            w = (x[i] - x[a]) / (x[b] - x[a])
            env[i] = (1.0 - w) * y[a] + w * y[b]
    return env


def supporting_chord(x, y, at):
    """Hull vertices (left, right) whose chord supports the envelope at ``at``.

    Returns (i_left, i_right, weight on the right vertex).  When ``at`` is a
    hull vertex both indices coincide and the weight is 0.
    """
    x = np.ascontiguousarray(x, dtype=float)
    y = np.ascontiguousarray(y, dtype=float)
    idx = upper_hull_indices(x, y)
    hx = x[idx]
    k = int(np.searchsorted(hx, at, side="left"))
    if k < len(idx) and hx[k] == at:
        return int(idx[k]), int(idx[k]), 0.0
    k = min(max(k, 1), len(idx) - 1)
    a, b = int(idx[k - 1]), int(idx[k])
    w = (at - x[a]) / (x[b] - x[a])
    return a, b, float(w)
