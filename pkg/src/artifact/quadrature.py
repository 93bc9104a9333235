"""Composite Gauss-Legendre quadrature and separable belief paths.

Every no-news belief ODE used by the solvers has the separable form
``d(clock) = density(mu) dmu`` where the clock is ``delta_A * t`` under
exponential discounting and ``-log D(t)`` in general.  A :class:`BeliefPath`
tabulates the antiderivative of the density once and answers
``clock(mu)`` by quadrature and ``mu(clock)`` by bisection, so no forward
time-stepping is ever needed.
"""

from __future__ import annotations

import math
from functools import lru_cache

import numpy as np
from scipy import optimize

from .errors import SolverError

GL_ORDER = 16


@lru_cache(maxsize=8)
def gauss_legendre(order):
    x, w = np.polynomial.legendre.leggauss(order)
    return x, w


def gl_integrate(f, a, b, order=GL_ORDER):
    """Fixed-order Gauss-Legendre on [a, b]; ``a``/``b`` may be arrays."""
    x, w = gauss_legendre(order)
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    half = 0.5 * (b - a)
    mid = 0.5 * (b + a)
    nodes = mid[..., None] + half[..., None] * x
    return (f(nodes) * w).sum(axis=-1) * half


def _adaptive_panels(f, lo, hi, breaks, tol, max_depth=40):
    """Split [lo, hi] until 16- and 32-point rules agree on every panel."""
    edges = sorted({lo, hi, *[b for b in breaks if lo < b < hi]})
    stack = [(edges[i], edges[i + 1], 0) for i in range(len(edges) - 1)]
    out = []
    while stack:
        a, b, depth = stack.pop()
        coarse = float(gl_integrate(f, a, b, 16))
        fine = float(gl_integrate(f, a, b, 32))
        if abs(coarse - fine) <= tol * max(1.0, abs(fine)) or depth >= max_depth:
            out.append((a, b, fine))
        else:
            m = 0.5 * (a + b)
            stack.append((a, m, depth + 1))
            stack.append((m, b, depth + 1))
    out.sort()
    return out


class Antiderivative:
    """Tabulated ``A(x) = int_lo^x f`` accurate to near machine precision."""

    def __init__(self, f, lo, hi, breaks=(0.5,), tol=1e-14, min_panels=32):
        if not hi > lo:
            raise SolverError(f"empty integration interval [{lo}, {hi}]")
        self.f = f
        self.lo = float(lo)
        self.hi = float(hi)
        grid = np.linspace(lo, hi, min_panels + 1)
        breaks = sorted(set(breaks) | set(grid[1:-1].tolist()))
        panels = _adaptive_panels(f, self.lo, self.hi, breaks, tol)
        self.edges = np.array([p[0] for p in panels] + [panels[-1][1]])
        self.cum = np.concatenate([[0.0], np.cumsum([p[2] for p in panels])])

    @property
    def total(self):
        return float(self.cum[-1])

    def __call__(self, x):
        x = np.clip(np.asarray(x, dtype=float), self.lo, self.hi)
        k = np.clip(np.searchsorted(self.edges, x, side="right") - 1, 0, len(self.edges) - 2)
        left = self.edges[k]
        out = self.cum[k] + gl_integrate(self.f, left, x, 32)
        return float(out) if out.ndim == 0 else out

    def invert(self, value, tol=1e-15):
        """Solve A(x) = value for x (A increasing); vectorised bisection."""
        value = np.asarray(value, dtype=float)
        flat = np.atleast_1d(value).astype(float)
        k = np.clip(np.searchsorted(self.cum, flat, side="right") - 1, 0, len(self.edges) - 2)
        a = self.edges[k].copy()
        b = self.edges[k + 1].copy()
        for _ in range(200):
            m = 0.5 * (a + b)
            below = self(m) < flat
            a = np.where(below, m, a)
            b = np.where(below, b, m)
            if np.all(b - a <= tol):
                break
        out = 0.5 * (a + b)
        return float(out[0]) if value.ndim == 0 else out


class BeliefPath:
    """Monotone no-news belief path ``mu0 -> mu_end`` driven by ``density``.

    The clock elapsed when the belief reaches ``mu`` is
    ``|int_{mu0}^{mu} density|``.
    """

    def __init__(self, density, mu0, mu_end):
        self.density = density
        self.mu0 = float(mu0)
        self.mu_end = float(mu_end)
        self.direction = 1.0 if mu_end >= mu0 else -1.0
        lo, hi = min(mu0, mu_end), max(mu0, mu_end)
        self.lo, self.hi = lo, hi
        self.degenerate = hi - lo <= 0.0
        if not self.degenerate:
            self._A = Antiderivative(density, lo, hi)

    @property
    def length(self):
        """Clock units needed to travel the whole path."""
        return 0.0 if self.degenerate else self._A.total

    def clock_at(self, mu):
        mu = np.asarray(mu, dtype=float)
        if self.degenerate:
            out = np.zeros_like(mu)
        elif self.direction > 0:
            out = self._A(mu)
        else:
            out = self._A.total - self._A(mu)
        return float(out) if np.ndim(out) == 0 else out

    def mu_at_clock(self, s):
        s = np.asarray(s, dtype=float)
        if self.degenerate:
            out = np.full_like(s, self.mu0)
        else:
            s = np.clip(s, 0.0, self.length)
            target = s if self.direction > 0 else self._A.total - s
            out = self._A.invert(target)
        return float(out) if np.ndim(out) == 0 else out

    def dmu_dclock(self, mu):
        mu = np.asarray(mu, dtype=float)
        with np.errstate(divide="ignore"):
            out = self.direction / self.density(mu)
        return float(out) if np.ndim(out) == 0 else out


class LinearClock:
    """clock(t) = rate * (t - t0)."""

    def __init__(self, rate, t0=0.0):
        self.rate = float(rate)
        self.t0 = float(t0)

    def clock(self, t):
        return self.rate * (np.asarray(t, dtype=float) - self.t0)

    def rate_at(self, t):
        return np.full_like(np.asarray(t, dtype=float), self.rate)

    def time(self, s):
        out = self.t0 + np.asarray(s, dtype=float) / self.rate
        return float(out) if np.ndim(out) == 0 else out

    def shifted(self, t0):
        return LinearClock(self.rate, t0)


class DiscountClock:
    """clock(t) = log D(t0) - log D(t) for a decreasing discount factor."""

    def __init__(self, discount, t0=0.0):
        self.discount = discount
        self.t0 = float(t0)
        self._base = discount.log_D(self.t0)

    def clock(self, t):
        return self._base - self.discount.log_D(np.asarray(t, dtype=float))

    def rate_at(self, t):
        return self.discount.hazard(np.asarray(t, dtype=float))

    def time(self, s):
        """Inverse of :meth:`clock`; vectorised bracketing plus bisection."""
        s_arr = np.atleast_1d(np.asarray(s, dtype=float))
        target = np.maximum(s_arr, 0.0)
        lo = np.full_like(target, self.t0)
        hi = np.full_like(target, self.t0 + 1.0)
        for _ in range(80):
            short = self.clock(hi) < target
            if not np.any(short):
                break
            lo = np.where(short, hi, lo)
            hi = np.where(short, self.t0 + 2.0 * (hi - self.t0), hi)
        else:
            raise SolverError("discount clock never reaches the requested level")
        for _ in range(200):
            mid = 0.5 * (lo + hi)
            below = self.clock(mid) < target
            lo = np.where(below, mid, lo)
            hi = np.where(below, hi, mid)
            if np.all(hi - lo <= 1e-13 * np.maximum(1.0, hi)):
                break
        out = np.where(target <= 0.0, self.t0, 0.5 * (lo + hi))
        return float(out[0]) if np.ndim(s) == 0 else out

    def shifted(self, t0):
        return DiscountClock(self.discount, t0)


def expm1_over(x):
    """(1 - e^{-x}) / x with the x -> 0 limit."""
    x = np.asarray(x, dtype=float)
    small = np.abs(x) < 1e-8
    safe = np.where(small, 1.0, x)
    out = np.where(small, 1.0 - 0.5 * x, -np.expm1(-safe) / safe)
    return float(out) if out.ndim == 0 else out


def discounted_exposure(rate, length):
    """int_0^length e^{-rate u} du, finite for rate = 0 and finite length."""
    if math.isinf(length):
        return math.inf if rate <= 0 else 1.0 / rate
    return length * expm1_over(rate * length)
