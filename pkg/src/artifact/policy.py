"""Piecewise disclosure policies and their evaluation.

A policy is an ordered list of segments tiling time.  State-conditional
survival probabilities ``S_w(t)`` (the chance that state ``w`` has not been
revealed by ``t``) are tracked segment by segment; the decumulative
engagement functions are ``G1 = mu_P S_1`` and ``G0 = (1 - mu_P) S_0`` under
the principal's prior.  Inside one-sided Poisson segments the survival is
read off the belief path, because the odds of the belief move one-for-one
with the survival of the revealed state.
"""

from __future__ import annotations

import csv
import io
import json
import math
import warnings
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy import integrate

from .core import Belief, LikelihoodRatio, Scenario
from .errors import DomainError, UndefinedContinuation
from .quadrature import LinearClock, gauss_legendre

SILENCE = "silence"
POISSON_ONE = "poisson_one"
POISSON_BOTH = "poisson_both"
ATOM = "atom"
FULL_REVEAL = "full_reveal"

INSTANTANEOUS = (ATOM, FULL_REVEAL)


class MirroredPath:
    """A belief path seen after relabelling the states (mu -> 1 - mu)."""

    def __init__(self, inner):
        self.inner = inner
        self.mu0 = 1.0 - inner.mu0
        self.mu_end = 1.0 - inner.mu_end
        self.direction = -inner.direction
        self.degenerate = inner.degenerate

    @property
    def length(self):
        return self.inner.length

    def density(self, x):
        return self.inner.density(1.0 - np.asarray(x, dtype=float))

    def clock_at(self, mu):
        return self.inner.clock_at(1.0 - np.asarray(mu, dtype=float))

    def mu_at_clock(self, s):
        return 1.0 - np.asarray(self.inner.mu_at_clock(s))

    def dmu_dclock(self, mu):
        return -np.asarray(self.inner.dmu_dclock(1.0 - np.asarray(mu, dtype=float)))


@dataclass
class PolicySegment:
    kind: str
    t_start: float
    t_end: float
    mu_A_start: float
    mu_A_end: float
    state: Optional[int] = None
    rate: float = 0.0
    reveal_prob: float = 0.0
    path: object = None
    clock: object = None
    binding: bool = False

    def __post_init__(self):
        if self.kind not in (SILENCE, POISSON_ONE, POISSON_BOTH, ATOM, FULL_REVEAL):
            raise DomainError(f"unknown segment kind {self.kind!r}")
        if self.kind in INSTANTANEOUS:
            if self.t_end != self.t_start:
                raise DomainError(f"{self.kind} segments are instantaneous")
        elif not self.t_end > self.t_start:
            raise DomainError(f"{self.kind} segment needs t_start < t_end")
        if self.kind == POISSON_ONE and self.state not in (0, 1):
            raise DomainError("one-sided Poisson segment needs state 0 or 1")
        if self.kind == ATOM and not (0.0 <= self.reveal_prob <= 1.0 and self.state in (0, 1)):
            raise DomainError("atom needs a state and a reveal probability in [0, 1]")
        if self.kind == POISSON_BOTH and self.rate < 0:
            raise DomainError("negative Poisson rate")
        if self.kind in (POISSON_ONE, POISSON_BOTH) and self.clock is None:
            self.clock = LinearClock(1.0, self.t_start)

    @property
    def duration(self):
        return self.t_end - self.t_start

    def mu_A_at(self, t):
        t = np.asarray(t, dtype=float)
        if self.kind == POISSON_ONE:
            return np.asarray(self.path.mu_at_clock(self.clock.clock(t)))
        return np.full_like(t, self.mu_A_start)

    def time_at_belief(self, mu):
        """Inverse of :meth:`mu_A_at` on a one-sided Poisson segment."""
        return self.clock.time(self.path.clock_at(mu))

    def cumulative_hazard_both(self, t):
        return self.rate * np.asarray(self.clock.clock(t))

    def to_dict(self):
        d = {
            "kind": self.kind,
            "t_start": self.t_start,
            "t_end": None if math.isinf(self.t_end) else self.t_end,
            "mu_A_start": self.mu_A_start,
            "mu_A_end": self.mu_A_end,
            "binding": self.binding,
        }
        if self.state is not None:
            d["state"] = self.state
        if self.kind == POISSON_BOTH:
            d["rate"] = self.rate
            d["time_varying"] = not isinstance(self.clock, LinearClock)
        if self.kind == ATOM:
            d["reveal_prob"] = self.reveal_prob
        return d


def _odds(mu):
    mu = np.asarray(mu, dtype=float)
    with np.errstate(divide="ignore"):
        return mu / (1.0 - mu)


@dataclass
class Policy:
    """Ordered disclosure segments plus the likelihood ratio and prior."""

    segments: list
    ell: float
    mu_P0: float
    binding: list = field(default_factory=list)
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.ell = LikelihoodRatio(self.ell)
        self.mu_P0 = Belief(self.mu_P0, "mu_P")
        self._validate_tiling()
        self._survival_at_starts()

    # -- construction helpers ------------------------------------------------

    def _validate_tiling(self):
        if not self.segments:
            raise DomainError("a policy needs at least one segment")
        if self.segments[0].t_start != 0.0:
            raise DomainError("the first segment must start at t = 0")
        for a, b in zip(self.segments, self.segments[1:]):
            if abs(a.t_end - b.t_start) > 1e-12 * max(1.0, abs(a.t_end)):
                raise DomainError(f"segments leave a gap or overlap at t = {a.t_end}")
            if a.kind == FULL_REVEAL:
                raise DomainError("nothing may follow a full revelation")
        last = self.segments[-1]
        if last.kind != FULL_REVEAL and not math.isinf(last.t_end):
            raise DomainError("the final segment must be a full revelation or last forever")

    def _survival_at_starts(self):
        s1, s0 = 1.0, 1.0
        self._starts = []
        for seg in self.segments:
            self._starts.append((s1, s0))
            s1, s0 = self._survival_in(seg, seg.t_end, s1, s0)
        self._end_survival = (s1, s0)

    def _survival_in(self, seg, t, s1, s0):
        """State survivals at time ``t`` inside ``seg`` (right limits)."""
        t = np.asarray(t, dtype=float)
        if seg.kind == SILENCE:
            return np.full_like(t, s1), np.full_like(t, s0)
        if seg.kind == FULL_REVEAL:
            return np.zeros_like(t), np.zeros_like(t)
        if seg.kind == ATOM:
            keep = 1.0 - seg.reveal_prob
            if seg.state == 1:
                return np.full_like(t, s1 * keep), np.full_like(t, s0)
            return np.full_like(t, s1), np.full_like(t, s0 * keep)
        if seg.kind == POISSON_BOTH:
            if math.isinf(seg.t_end):
                t = np.where(np.isinf(t), 1e300, t)
            decay = np.exp(-seg.cumulative_hazard_both(np.minimum(t, 1e300)))
            return s1 * decay, s0 * decay
        mu = seg.mu_A_at(t)
        ratio = _odds(mu) / _odds(seg.mu_A_start)
        if seg.state == 1:
            return s1 * ratio, np.full_like(t, s0)
        with np.errstate(divide="ignore"):
            return np.full_like(t, s1), s0 / ratio

    def _locate(self, t):
        """Index of the segment governing ``t`` (right-continuous)."""
        idx = 0
        for i, seg in enumerate(self.segments):
            if seg.t_start <= t:
                idx = i
            else:
                break
        return idx

    # -- evaluation ---------------------------------------------------------

    def survival(self, t):
        t = np.atleast_1d(np.asarray(t, dtype=float))
        s1 = np.empty_like(t)
        s0 = np.empty_like(t)
        for i, tv in enumerate(t):
            if tv < 0:
                raise DomainError("time must be non-negative")
            k = self._locate(tv)
            seg = self.segments[k]
            a, b = self._starts[k]
            # instantaneous segments apply at their time; step to the last one at tv
            while k + 1 < len(self.segments) and self.segments[k + 1].t_start <= tv:
                k += 1
            seg = self.segments[k]
            a, b = self._starts[k]
            if seg.kind in INSTANTANEOUS or tv >= seg.t_end:
                x, y = self._survival_in(seg, seg.t_end, a, b)
            else:
                x, y = self._survival_in(seg, tv, a, b)
            s1[i], s0[i] = float(x), float(y)
        return s1, s0

    def engagement_probs(self, t):
        """(G_{P,1}(t), G_{P,0}(t)) under the principal's prior."""
        scalar = np.ndim(t) == 0
        s1, s0 = self.survival(t)
        g1 = float(self.mu_P0) * s1
        g0 = (1.0 - float(self.mu_P0)) * s0
        if scalar:
            return float(g1[0]), float(g0[0])
        return g1, g0

    def agent_engagement(self, t):
        g1, g0 = self.engagement_probs(t)
        return float(self.ell) * np.asarray(g1) + np.asarray(g0)

    def mu_A(self, t):
        scalar = np.ndim(t) == 0
        t = np.atleast_1d(np.asarray(t, dtype=float))
        out = np.empty_like(t)
        for i, tv in enumerate(t):
            k = self._locate(tv)
            while k + 1 < len(self.segments) and self.segments[k + 1].t_start <= tv:
                k += 1
            seg = self.segments[k]
            if seg.kind == FULL_REVEAL:
                out[i] = np.nan
            elif seg.kind == ATOM:
                out[i] = seg.mu_A_end
            else:
                out[i] = float(seg.mu_A_at(min(tv, seg.t_end)))
        return float(out[0]) if scalar else out

    def mu_P(self, t):
        mu = np.asarray(self.mu_A(t), dtype=float)
        ell = float(self.ell)
        out = mu / (mu + ell * (1.0 - mu))
        return float(out) if out.ndim == 0 else out

    def hazards(self, t):
        """State-conditional revelation hazards (state 0, state 1) at ``t``."""
        t = np.atleast_1d(np.asarray(t, dtype=float))
        h0 = np.zeros_like(t)
        h1 = np.zeros_like(t)
        for i, tv in enumerate(t):
            k = self._locate(tv)
            seg = self.segments[k]
            if seg.kind == POISSON_BOTH and tv < seg.t_end:
                h = seg.rate * float(seg.clock.rate_at(tv))
                h0[i] = h1[i] = h
            elif seg.kind == POISSON_ONE and tv < seg.t_end:
                mu = float(seg.mu_A_at(tv))
                if 0.0 < mu < 1.0:
                    dmu = float(seg.path.dmu_dclock(mu)) * float(seg.clock.rate_at(tv))
                    h = abs(dmu) / (mu * (1.0 - mu))
                    if seg.state == 1:
                        h1[i] = h
                    else:
                        h0[i] = h
        return h0, h1

    def segment_kind_at(self, t):
        return self.segments[self._locate(t)].kind

    @property
    def end_time(self):
        return self.segments[-1].t_end

    # -- discounted integrals -------------------------------------------------

    def integrate_linear(self, t_from, coef, rate=None, weight=None):
        """int_{t_from}^inf K(tau) [c1(mu) S1 G1-scale + c0(mu) G0-scale] dtau.

        ``coef(mu_A) -> (c1, c0)`` multiplies (G_{P,1}, G_{P,0}); ``weight``
        must accept scalar times.  The kernel is
        ``exp(-rate (tau - t_from))`` or, if ``weight`` is given, ``weight(tau)``.
        Closed forms are used on constant-belief segments with exponential
        kernels, Gauss-Legendre in belief space on one-sided segments, and
        adaptive quadrature in time otherwise.
        """
        m1 = float(self.mu_P0)
        m0 = 1.0 - m1
        total = 0.0
        for seg, (a, b) in zip(self.segments, self._starts):
            if seg.kind in INSTANTANEOUS or seg.t_end <= t_from:
                continue
            lo = max(seg.t_start, t_from)
            s1, s0 = self._survival_in(seg, lo, a, b)
            s1, s0 = float(s1), float(s0)
            if s1 == 0.0 and s0 == 0.0:
                continue
            length = seg.t_end - lo
            if weight is None and seg.kind in (SILENCE, POISSON_BOTH) and isinstance(seg.clock, (LinearClock, type(None))):
                c1, c0 = coef(seg.mu_A_start)
                lam = seg.rate * (seg.clock.rate if seg.kind == POISSON_BOTH else 0.0)
                k = rate + lam
                start = math.exp(-rate * (lo - t_from))
                mass = c1 * m1 * s1 + c0 * m0 * s0
                if mass == 0.0:
                    continue
                if math.isinf(length):
                    if k <= 0:
                        return math.inf
                    total += start * mass / k
                else:
                    total += start * mass * length * float(_expm1_over(k * length))
                continue
            if seg.kind == POISSON_ONE:
                total += self._one_sided_belief_space(seg, lo, a, b, t_from, rate, coef, weight)
                continue
            total += self._time_quadrature(seg, lo, a, b, t_from, rate, weight, coef)
        return total

    def _one_sided_belief_space(self, seg, lo, a, b, t_from, rate, coef, weight=None):
        m1 = float(self.mu_P0)
        mu_lo = float(seg.mu_A_at(lo))
        mu_hi = seg.mu_A_end
        if mu_lo == mu_hi:
            return 0.0
        x_lo, x_hi = min(mu_lo, mu_hi), max(mu_lo, mu_hi)
        breaks = [x_lo] + [p for p in (0.5,) if x_lo < p < x_hi] + [x_hi]
        nodes_all, weights_all = [], []
        gx, gw = gauss_legendre(16)
        for p, q in zip(breaks, breaks[1:]):
            edges = np.linspace(p, q, 33)
            left, right = edges[:-1, None], edges[1:, None]
            half = 0.5 * (right - left)
            nodes_all.append((0.5 * (left + right) + half * gx).ravel())
            weights_all.append((half * gw).ravel())
        x = np.concatenate(nodes_all)
        w = np.concatenate(weights_all)
        t = np.asarray(seg.clock.time(seg.path.clock_at(x)), dtype=float)
        dt_dmu = seg.path.density(x) / np.asarray(seg.clock.rate_at(t), dtype=float)
        ratio = _odds(x) / _odds(seg.mu_A_start)
        if seg.state == 1:
            g1 = m1 * a * ratio
            g0 = np.full_like(x, (1.0 - m1) * b)
        else:
            g1 = np.full_like(x, m1 * a)
            with np.errstate(divide="ignore", invalid="ignore"):
                g0 = np.where(ratio > 0, (1.0 - m1) * b / ratio, 0.0)
        c1, c0 = coef(x)
        kernel = np.array([weight(tv) for tv in t]) if weight is not None else np.exp(-rate * (t - t_from))
        integrand = kernel * (c1 * g1 + c0 * g0) * dt_dmu
        return float(np.sum(integrand * w))

    def _time_quadrature(self, seg, lo, a, b, t_from, rate, weight, coef):
        m1 = float(self.mu_P0)

        def f(tau):
            s1, s0 = self._survival_in(seg, tau, a, b)
            mu = float(seg.mu_A_at(tau))
            c1, c0 = coef(mu)
            k = weight(tau) if weight is not None else math.exp(-rate * (tau - t_from))
            return k * (c1 * m1 * float(s1) + c0 * (1.0 - m1) * float(s0))

        hi = seg.t_end
        if math.isinf(hi):
            val, _ = integrate.quad(f, lo, np.inf, epsabs=1e-13, epsrel=1e-11, limit=400)
            return val
        pts = np.linspace(lo, hi, 9)
        acc = 0.0
        for p, q in zip(pts, pts[1:]):
            val, _ = integrate.quad(f, p, q, epsabs=1e-14, epsrel=1e-12, limit=200)
            acc += val
        return acc


def _expm1_over(x):
    if abs(x) < 1e-8:
        return 1.0 - 0.5 * x
    return -math.expm1(-x) / x


# ---------------------------------------------------------------------------
# Values and incentive constraints


def principal_value(p: Policy, delta_P, rho=0.0):
    """int_0^inf e^{-(delta_P + rho) t} G_P(t) dt."""
    r = float(delta_P) + float(rho)
    val = p.integrate_linear(0.0, lambda mu: (1.0, 1.0), rate=r)
    if math.isinf(val):
        warnings.warn(
            "principal value diverges: an undiscounted segment lasts forever with zero hazard",
            stacklevel=2,
        )
    return val


def agent_value(p: Policy, s: Scenario, t):
    """Agent's continuation value at ``t`` conditional on no news.

    Exogenous exit at rate ``rho`` pays v at the agent's current belief.
    """
    v = s.value_fn
    ell = float(p.ell)
    top = v.top
    t = float(t)
    g1, g0 = p.engagement_probs(t)
    ga = ell * g1 + g0
    if ga <= 0.0:
        raise UndefinedContinuation(f"no engaged mass at t = {t}")
    rho = s.rho
    if s.discount.is_exponential:
        a = s.discount.rate + rho

        def coef(mu):
            c = a * top - rho * np.asarray(v.value(mu))
            return ell * c, c

        integral = p.integrate_linear(t, coef, rate=a)
        return top - integral / ga

    D = s.discount
    Dt = D.D(t)

    def coef(mu):
        return ell * np.asarray(v.value(mu)), np.asarray(v.value(mu))

    def one(mu):
        return ell, 1.0

    def kernel_gain(tau):
        return math.exp(-rho * (tau - t)) * (D.dD(tau) - rho * D.D(tau)) / Dt

    def kernel_exit(tau):
        return math.exp(-rho * (tau - t)) * rho * D.D(tau) / Dt

    gain = p.integrate_linear(t, one, weight=kernel_gain)
    exit_part = p.integrate_linear(t, coef, weight=kernel_exit) if rho > 0 else 0.0
    return top + (top * gain + exit_part) / ga


def ic_residual(p: Policy, s: Scenario, t):
    """Continuation value minus the value of quitting now."""
    mu = p.mu_A(float(t))
    return agent_value(p, s, t) - s.value_fn.value(mu)


def binding_times(p: Policy, per_interval=9):
    """Sample points on the phases a solver declared binding."""
    out = []
    for a, b in p.binding:
        if b <= a:
            out.append(a)
            continue
        hi = b if not math.isinf(b) else a + 20.0
        out.extend(np.linspace(a, hi, per_interval)[:-1].tolist() if hi == b else np.linspace(a, hi, per_interval).tolist())
    return out


# ---------------------------------------------------------------------------
# Exports


def policy_table(p: Policy, step, horizon):
    t = np.arange(0.0, horizon + 0.5 * step, step)
    g1, g0 = p.engagement_probs(t)
    mu_a = p.mu_A(t)
    mu_p = p.mu_P(t)
    h0, h1 = p.hazards(t)
    kinds = [p.segment_kind_at(x) for x in t]
    return {
        "t": t,
        "G1": g1,
        "G0": g0,
        "mu_A": mu_a,
        "mu_P": mu_p,
        "hazard_state0": h0,
        "hazard_state1": h1,
        "segment_kind": kinds,
    }


def _fmt(x):
    if isinstance(x, str):
        return x
    x = float(x)
    if math.isnan(x):
        return "nan"
    return f"{x:.12g}"


def policy_csv(p: Policy, step, horizon):
    table = policy_table(p, step, horizon)
    cols = list(table)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(cols)
    for i in range(len(table["t"])):
        w.writerow([_fmt(table[c][i]) for c in cols])
    return buf.getvalue()


def policy_json(p: Policy):
    return json.dumps(
        {
            "ell": float(p.ell),
            "mu_P0": float(p.mu_P0),
            "segments": [s.to_dict() for s in p.segments],
            "binding": [[a, None if math.isinf(b) else b] for a, b in p.binding],
            "meta": {k: v for k, v in p.meta.items() if isinstance(v, (int, float, str, bool, type(None)))},
        },
        indent=2,
    )


def mirror_policy(p: Policy):
    """Relabel the states: beliefs map to 1 - mu and the ratio inverts."""
    segs = []
    for seg in p.segments:
        segs.append(
            PolicySegment(
                kind=seg.kind,
                t_start=seg.t_start,
                t_end=seg.t_end,
                mu_A_start=1.0 - seg.mu_A_start,
                mu_A_end=1.0 - seg.mu_A_end,
                state=None if seg.state is None else 1 - seg.state,
                rate=seg.rate,
                reveal_prob=seg.reveal_prob,
                path=None if seg.path is None else MirroredPath(seg.path),
                clock=seg.clock,
                binding=seg.binding,
            )
        )
    return Policy(segs, 1.0 / float(p.ell), 1.0 - float(p.mu_P0), list(p.binding), dict(p.meta))
