"""Extensions of the personalized model: exogenous exit and non-exponential
discounting.

Exogenous exit at rate ``rho`` leaves the agent's binding incentive
constraint unchanged in form (exit pays v at the current belief, which is
exactly the binding continuation value), so the one-sided belief paths are
the ones used without exit.  Only the principal's effective rate
``delta_P + rho`` and hence the threshold curve move.

Non-exponential discounting replaces the clock ``delta_A t`` with
``-log D(t)``.  The marginal cost of engagement ``-D'(t) e^{delta_P t}``
decides the shape of the solution:

* increasing: one silent stretch, then full revelation;
* decreasing: one-sided revelation to 1/2, then symmetric revelation forever;
* decreasing then increasing: one-sided, then symmetric revelation until
  ``t2``, then silence until a terminal full revelation at ``t3``;
* increasing then decreasing: not covered, rejected.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import optimize

from .core import Scenario
from .errors import DomainError, SolverError
from .personalized import (
    SteadyState,
    _gradual_policy,
    one_sided_path,
    solve_common_prior,
    steady_rate,
    threshold_curve,
)
from .policy import FULL_REVEAL, POISSON_BOTH, POISSON_ONE, SILENCE, Policy, PolicySegment, principal_value
from .quadrature import DiscountClock

SHAPE_INCREASING = "increasing"
SHAPE_DECREASING = "decreasing"
SHAPE_DEC_INC = "decreasing-then-increasing"
SHAPE_INC_DEC = "increasing-then-decreasing"


# ---------------------------------------------------------------------------
# Random exit


@dataclass(frozen=True)
class ExitSteadyState:
    mu_A_star: float
    mu_P_star: float
    lam: float
    corner: int | None = None


def exit_threshold(mu_A, s: Scenario):
    """Principal belief at which symmetric revelation starts under exit.

    Defined for any ``rho``; it collapses to the diagonal when
    ``delta_A = delta_P + rho``."""
    return threshold_curve(mu_A, s.value_fn, s.patience_gap, s.principal_rate)


def solve_random_exit(s: Scenario):
    """Optimal personalized policy with exogenous exit at rate rho > 0.

    Needs ``delta_A > delta_P + rho`` so that a symmetric steady state can
    be sustained.  Returns (policy, ExitSteadyState)."""
    if not s.rho > 0:
        raise DomainError("random-exit solver needs rho > 0")
    if not s.discount.is_exponential:
        raise DomainError("random-exit solver assumes exponential discounting")
    if not (0.0 < s.mu_A < 1.0 and 0.0 < s.mu_P < 1.0):
        raise DomainError("random-exit solver needs interior priors")
    if not s.patience_gap > 0:
        raise SolverError(
            "exit rate too high: no symmetric steady state when delta_A <= delta_P + rho",
            {"delta_A": s.delta_A, "delta_P": s.delta_P, "rho": s.rho},
        )
    policy, st = _gradual_policy(s, float(s.ell), float(s.mu_A), float(s.mu_P))
    out = ExitSteadyState(st.mu_A_star, st.mu_P_star, st.lambda_star, st.corner)
    policy.meta["boundary_steady_state"] = st.corner is not None
    return policy, out


# ---------------------------------------------------------------------------
# General discounting


def engagement_cost(discount, delta_P, t):
    """-D'(t) e^{delta_P t}: the agent's marginal delay cost per unit of
    the principal's marginal engagement benefit."""
    t = np.asarray(t, dtype=float)
    out = -np.asarray(discount.dD(t)) * np.exp(delta_P * t)
    return float(out) if out.ndim == 0 else out


def _cost_slope(discount, delta_P, t):
    """Sign-carrying derivative of :func:`engagement_cost` (up to e^{delta_P t})."""
    return -(np.asarray(discount.d2D(t)) + delta_P * np.asarray(discount.dD(t)))


def cost_shape(discount, delta_P, horizon=None, n=4001):
    """Classify the marginal cost of engagement and locate its turning point.

    Returns (shape, turning time or None)."""
    if horizon is None:
        base = discount.rate if discount.is_exponential else discount.delta_A
        horizon = 200.0 / base
    t = np.linspace(0.0, horizon, n)
    d = _cost_slope(discount, delta_P, t)
    tol = 1e-13 * max(1.0, float(np.max(np.abs(d))))
    sign = np.where(d > tol, 1, np.where(d < -tol, -1, 0))
    nz = sign[sign != 0]
    if nz.size == 0:
        return SHAPE_INCREASING, None
    changes = np.flatnonzero(np.diff(nz) != 0)
    if changes.size == 0:
        return (SHAPE_INCREASING if nz[0] > 0 else SHAPE_DECREASING), None
    if changes.size > 1:
        return "multiple-turns", None
    idx = np.flatnonzero(sign != 0)
    i = idx[changes[0]]
    j = idx[changes[0] + 1]
    f = lambda x: float(_cost_slope(discount, delta_P, x))
    turn = optimize.brentq(f, t[i], t[j], xtol=1e-12, rtol=1e-15)
    shape = SHAPE_DEC_INC if nz[0] < 0 else SHAPE_INC_DEC
    return shape, turn


def inflection_time(s: Scenario):
    """Turning point of the marginal cost of engagement (None if monotone)."""
    return cost_shape(s.discount, s.delta_P)[1]


def _symmetric_multiple(v):
    """Symmetric revelation rate per unit of impatience at belief 1/2."""
    half = v.value(0.5)
    return half / (v.top - half)


def _silent_end(discount, t_from, mu, v):
    """Time at which a terminal revelation leaves the agent at belief ``mu``
    indifferent at ``t_from``: D(t3) = D(t_from) v(mu) / v(1)."""
    target = discount.log_D(t_from) + math.log(v.value(mu) / v.top)
    clock = DiscountClock(discount, t_from)
    return clock.time(discount.log_D(t_from) - target)


def _three_phase_policy(s: Scenario, t2, path, t1):
    """Policy with the symmetric phase (or the one-sided phase) cut at t2."""
    v, D = s.value_fn, s.discount
    mu0 = float(s.mu_A)
    clock = DiscountClock(D, 0.0)
    segs = []
    if t1 > 0 and t2 > 0:
        end = min(t1, t2)
        mu_end = float(path.mu_at_clock(clock.clock(end))) if end < t1 else path.mu_end
        segs.append(
            PolicySegment(POISSON_ONE, 0.0, end, mu0, mu_end, state=path_state(path), path=path, clock=clock, binding=True)
        )
        mu_cut = mu_end
    else:
        mu_cut = mu0
    k = _symmetric_multiple(v)
    if t2 > t1:
        segs.append(
            PolicySegment(POISSON_BOTH, t1, t2, 0.5, 0.5, rate=k, clock=DiscountClock(D, t1), binding=True)
        )
        mu_cut = 0.5
    t3 = _silent_end(D, t2, mu_cut, v)
    if t3 > t2:
        segs.append(PolicySegment(SILENCE, t2, t3, mu_cut, mu_cut))
    segs.append(PolicySegment(FULL_REVEAL, t3, t3, mu_cut, mu_cut))
    return Policy(segs, 1.0, mu0, [(0.0, t2)], {"t1": min(t1, t2), "t2": t2, "t3": t3})


def path_state(path):
    """Revealed state of a one-sided path: falling beliefs reveal state 1."""
    return 1 if path.direction < 0 else 0


def _phase_one(s: Scenario):
    """One-sided path from the prior to 1/2 in the -log D clock, and its end time."""
    mu0 = float(s.mu_A)
    if abs(mu0 - 0.5) < 1e-15:
        return None, 0.0
    state = 1 if mu0 > 0.5 else 0
    path = one_sided_path(s.value_fn, state, mu0, 0.5)
    t1 = DiscountClock(s.discount, 0.0).time(path.length)
    return path, t1


def solve_general_discounting(s: Scenario, return_search=False):
    """Optimal common-prior policy under a general discount factor D."""
    if abs(float(s.mu_A) - float(s.mu_P)) > 1e-12:
        raise DomainError("general-discounting solver assumes a common prior (mu_A = mu_P)")
    if s.rho != 0.0:
        raise DomainError("general-discounting solver assumes no exogenous exit")
    D, v = s.discount, s.value_fn
    if D.kind == "habit" and not D.lam < D.delta_A:
        raise DomainError("habit discount must be decreasing (lam < delta_A)")
    shape, turn = cost_shape(D, s.delta_P)
    mu0 = float(s.mu_A)
    if D.is_exponential:
        p = solve_common_prior(s)
        p.meta["shape"] = shape
        return p
    if shape in (SHAPE_INC_DEC, "multiple-turns"):
        raise SolverError(
            f"marginal cost of engagement is {shape}; only decreasing-then-increasing, "
            "monotone decreasing or monotone increasing shapes are solved",
            {"shape": shape, "turning_time": turn},
        )
    if not (0.0 < mu0 < 1.0):
        raise DomainError("general-discounting solver needs an interior prior")
    if shape == SHAPE_INCREASING:
        p = _three_phase_policy(s, 0.0, None, 0.0)
        p.meta.update({"shape": shape, "t_inflection": None})
        return p
    path, t1 = _phase_one(s)
    if shape == SHAPE_DECREASING:
        segs = []
        clock = DiscountClock(D, 0.0)
        if path is not None:
            segs.append(PolicySegment(POISSON_ONE, 0.0, t1, mu0, 0.5, state=path_state(path), path=path, clock=clock, binding=True))
        segs.append(
            PolicySegment(POISSON_BOTH, t1, math.inf, 0.5, 0.5, rate=_symmetric_multiple(v), clock=DiscountClock(D, t1), binding=True)
        )
        return Policy(segs, 1.0, mu0, [(0.0, math.inf)], {"t1": t1, "t2": math.inf, "t3": math.inf, "shape": shape})

    # decreasing then increasing: choose the end of revelation t2 in [0, turn]
    def value(t2):
        return principal_value(_three_phase_policy(s, t2, path, t1), s.delta_P)

    grid = np.linspace(0.0, turn, 41)
    vals = np.array([value(t) for t in grid])
    i = int(np.argmax(vals))
    lo, hi = grid[max(i - 1, 0)], grid[min(i + 1, len(grid) - 1)]
    if hi > lo:
        res = optimize.minimize_scalar(lambda t: -value(t), bounds=(lo, hi), method="bounded", options={"xatol": 1e-10})
        t2 = float(res.x) if -res.fun >= vals[i] else float(grid[i])
    else:
        t2 = float(grid[i])
    p = _three_phase_policy(s, t2, path, t1)
    p.meta.update({"shape": shape, "t_inflection": turn, "phase_one_end": t1})
    if return_search:
        return p, (grid, vals)
    return p


def terminal_optimality_gap(p: Policy, s: Scenario):
    """First-order condition for the end of symmetric revelation.

    Postponing t2 by dt extends engagement by D-weighted exposure; optimality
    balances e^{-delta_P t3} D(t3) against k (-D'(t3)) int_{t2}^{t3}
    e^{-delta_P t} dt.  Returns the relative gap (0 at an interior optimum)."""
    D = s.discount
    t2, t3 = p.meta["t2"], p.meta["t3"]
    dP = s.delta_P
    k = _symmetric_multiple(s.value_fn)
    exposure = (math.exp(-dP * t2) - math.exp(-dP * t3)) / dP if dP > 0 else t3 - t2
    lhs = math.exp(-dP * t3) * D.D(t3)
    rhs = -k * D.dD(t3) * exposure
    return (lhs - rhs) / max(abs(lhs), 1e-300)


def phase_two_rate(s: Scenario, t):
    """Symmetric revelation rate k * (-D'/D) at time t."""
    return _symmetric_multiple(s.value_fn) * np.asarray(s.discount.hazard(t))


__all__ = [
    "ExitSteadyState",
    "SteadyState",
    "cost_shape",
    "engagement_cost",
    "exit_threshold",
    "inflection_time",
    "phase_two_rate",
    "solve_general_discounting",
    "solve_random_exit",
    "steady_rate",
    "terminal_optimality_gap",
]
