"""Personalized-communication solvers for a single agent type.

* common priors: abrupt revelation for an impatient principal, gradual
  revelation toward 1/2 followed by symmetric Poisson news otherwise;
* disagreement with a patient principal (optionally with exogenous exit):
  one-sided revelation toward the steady belief pair, then symmetric news;
* disagreement with an impatient principal: silence, an atom that reveals
  the state the agent leans toward, one-sided gradual revelation, and a
  final full revelation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy import integrate, optimize

from .core import Scenario, principal_belief_from_agent
from .errors import DomainError, SolverError
from .policy import (
    ATOM,
    FULL_REVEAL,
    POISSON_BOTH,
    POISSON_ONE,
    SILENCE,
    Policy,
    PolicySegment,
    mirror_policy,
)
from .quadrature import Antiderivative, BeliefPath, LinearClock

ROOT_TOL = 1e-14


@dataclass(frozen=True)
class SteadyState:
    mu_A_star: float
    mu_P_star: float
    lambda_star: float
    corner: int | None = None


@dataclass
class MultiplierTrace:
    grid: np.ndarray
    Lambda: np.ndarray
    lambda_1: float
    lambda_0: float

    def is_non_decreasing(self, tol=1e-12):
        d = np.diff(self.Lambda)
        return bool(np.all(d >= -tol * max(1.0, float(np.max(np.abs(self.Lambda))))))


# ---------------------------------------------------------------------------
# Threshold and steady state


def _threshold_raw(mu_A, v, gap, rate):
    """mu_A + gap mu_A (1 - mu_A) v' / (gap v + rate v(1)), unclamped."""
    mu = np.asarray(mu_A, dtype=float)
    return mu + gap * mu * (1.0 - mu) * v.slope(mu) / (gap * v.value(mu) + rate * v.top)


def threshold_curve(mu_A, v, gap, rate):
    out = np.clip(_threshold_raw(mu_A, v, gap, rate), 0.0, 1.0)
    return float(out) if np.ndim(out) == 0 else out


def mu_P_threshold(mu_A, s: Scenario):
    """Principal belief at which symmetric revelation starts, given the agent
    belief.  ``rate = delta_P + rho`` and ``gap = delta_A - delta_P - rho``;
    with ``rho = 0`` this is the patient-principal threshold."""
    if not s.delta_A > s.delta_P:
        raise DomainError(f"threshold needs delta_A > delta_P, got {s.delta_A} <= {s.delta_P}")
    return threshold_curve(float(mu_A), s.value_fn, s.patience_gap, s.principal_rate)


def steady_rate(mu_A, v, delta_A):
    """Symmetric revelation rate that keeps an agent at belief mu_A indifferent."""
    val = v.value(mu_A)
    return delta_A * val / (v.top - val)


def _gap_fn(ell, v, gap, rate):
    def f(mu_A):
        mu_A = np.asarray(mu_A, dtype=float)
        return principal_belief_from_agent(mu_A, ell) - threshold_curve(mu_A, v, gap, rate)

    return f


@lru_cache(maxsize=4096)
def _roots(ell, v, gap, rate):
    """All sign changes of mu_P(mu_A; ell) - threshold on (0, 1)."""
    f = _gap_fn(ell, v, gap, rate)
    z = np.linspace(-30.0, 30.0, 6001)
    grid = 1.0 / (1.0 + np.exp(-z))
    vals = f(grid)
    roots = []
    for i in range(len(grid) - 1):
        a, b = vals[i], vals[i + 1]
        if a == 0.0:
            roots.append(float(grid[i]))
        elif a * b < 0:
            roots.append(optimize.brentq(f, grid[i], grid[i + 1], xtol=ROOT_TOL, rtol=1e-15))
    return tuple(roots)


def steady_state_for_ratio(ell, s: Scenario):
    """Interior steady state for likelihood ratio ``ell`` (None if absent).

    The patient-principal regime needs ``delta_A > delta_P + rho``.
    """
    gap, rate = s.patience_gap, s.principal_rate
    if not gap > 0:
        raise SolverError(
            "steady state requires delta_A > delta_P + rho",
            {"delta_A": s.delta_A, "delta_P": s.delta_P, "rho": s.rho},
        )
    roots = _roots(float(ell), s.value_fn, gap, rate)
    if not roots:
        return None
    mu = roots[0] if len(roots) == 1 else roots[len(roots) // 2]
    return SteadyState(mu, float(principal_belief_from_agent(mu, ell)), steady_rate(mu, s.value_fn, s.delta_A))


def _phase_one_target(mu_A0, ell, s: Scenario):
    """Direction of phase 1 and where it stops.

    Returns (state revealed or None, terminal agent belief, steady state or None).
    Above the threshold curve state 0 is revealed (beliefs rise); below it,
    state 1 (beliefs fall); each stops at the next crossing of the curve.
    """
    v, gap, rate = s.value_fn, s.patience_gap, s.principal_rate
    roots = _roots(float(ell), v, gap, rate)
    f = _gap_fn(ell, v, gap, rate)
    diff = float(f(mu_A0))
    if abs(diff) <= 1e-12 or any(abs(mu_A0 - r) <= 1e-13 for r in roots):
        return None, mu_A0, SteadyState(mu_A0, float(principal_belief_from_agent(mu_A0, ell)), steady_rate(mu_A0, v, s.delta_A))
    if diff > 0:
        above = [r for r in roots if r > mu_A0]
        if above:
            mu = above[0]
            return 0, mu, SteadyState(mu, float(principal_belief_from_agent(mu, ell)), steady_rate(mu, v, s.delta_A))
        return 0, 1.0, SteadyState(1.0, 1.0, math.inf, corner=1)
    below = [r for r in roots if r < mu_A0]
    if below:
        mu = below[-1]
        return 1, mu, SteadyState(mu, float(principal_belief_from_agent(mu, ell)), steady_rate(mu, v, s.delta_A))
    return 1, 0.0, SteadyState(0.0, 0.0, math.inf, corner=0)


def one_sided_path(v, state, mu_start, mu_end):
    density = v.drift_factor_reveal_one if state == 1 else v.drift_factor_reveal_zero
    return BeliefPath(density, mu_start, mu_end)


def _gradual_policy(s: Scenario, ell, mu_A0, mu_P0):
    """Phase 1 of one-sided revelation, then symmetric revelation forever
    (or a terminal revelation when the path reaches certainty)."""
    state, mu_end, steady = _phase_one_target(mu_A0, ell, s)
    segs = []
    t = 0.0
    if state is not None:
        path = one_sided_path(s.value_fn, state, mu_A0, mu_end)
        t = path.length / s.delta_A
        segs.append(
            PolicySegment(
                POISSON_ONE, 0.0, t, mu_A0, mu_end, state=state, path=path,
                clock=LinearClock(s.delta_A, 0.0), binding=True,
            )
        )
    if steady.corner is None:
        segs.append(PolicySegment(POISSON_BOTH, t, math.inf, mu_end, mu_end, rate=steady.lambda_star, binding=True))
        binding = [(0.0, math.inf)]
    else:
        segs.append(PolicySegment(FULL_REVEAL, t, t, mu_end, mu_end))
        binding = [(0.0, t)]
    meta = {
        "phase1_end": t,
        "revealed_first": state,
        "mu_A_star": steady.mu_A_star,
        "mu_P_star": steady.mu_P_star,
        "lambda_star": steady.lambda_star,
    }
    return Policy(segs, ell, mu_P0, binding, meta), steady


# ---------------------------------------------------------------------------
# Common priors


def abrupt_time(mu_A, v, delta_A):
    """Delay after which full revelation leaves the agent indifferent at t = 0."""
    return math.log(v.top / v.value(mu_A)) / delta_A


def _abrupt_policy(s: Scenario, mu_A, ell, mu_P0):
    t = abrupt_time(mu_A, s.value_fn, s.delta_A)
    segs = []
    if t > 0:
        segs.append(PolicySegment(SILENCE, 0.0, t, mu_A, mu_A))
    segs.append(PolicySegment(FULL_REVEAL, t, t, mu_A, mu_A))
    return Policy(segs, ell, mu_P0, [(0.0, 0.0)], {"t_star": t})


def solve_common_prior(s: Scenario) -> Policy:
    """Optimal policy when principal and agent share the prior."""
    if abs(float(s.mu_A) - float(s.mu_P)) > 1e-12:
        raise DomainError("common-prior solver needs mu_A = mu_P")
    if s.rho != 0.0:
        raise DomainError("common-prior solver assumes no exogenous exit; use solve_random_exit")
    if not s.discount.is_exponential:
        raise DomainError("common-prior solver assumes exponential discounting")
    mu = float(s.mu_A)
    if s.delta_P >= s.delta_A:
        p = _abrupt_policy(s, mu, 1.0, mu)
        p.meta["degenerate"] = s.delta_P == s.delta_A
        return p
    if not (0.0 < mu < 1.0):
        return _abrupt_policy(s, mu, 1.0, mu)
    p, _ = _gradual_policy(s, 1.0, mu, mu)
    p.meta["t_star"] = p.meta["phase1_end"]
    return p


def common_prior_multipliers(s: Scenario, n=400) -> MultiplierTrace:
    """Multiplier function and initial-condition multipliers certifying the
    common-prior solution."""
    v, dA, dP = s.value_fn, s.delta_A, s.delta_P
    mu = float(s.mu_A)
    top = v.top
    if dP > dA:
        t = abrupt_time(mu, v, dA)
        lam_plus = math.exp((dA - dP) * t) / (top * dA)
        base = (1.0 - math.exp(-dP * t)) / dP
        lam1 = base + lam_plus * (top * math.exp(-dA * t) - v.value(mu) - v.slope(mu) * (1.0 - mu))
        lam0 = base + lam_plus * (top * math.exp(-dA * t) - v.value(mu) + v.slope(mu) * mu)
        grid = np.concatenate([[0.0], np.linspace(t / n, 2 * t + 1.0, n)])
        Lam = np.where(grid > 0, lam_plus, 0.0)
        return MultiplierTrace(grid, Lam, lam1, lam0)
    if mu < 0.5:
        tr = common_prior_multipliers(s.mirrored(), n)
        return MultiplierTrace(tr.grid, tr.Lambda, tr.lambda_0, tr.lambda_1)
    # mu >= 1/2: state 1 revealed, belief falls to 1/2
    half = 0.5
    delta_half = top - v.value(half)
    growth = dA * top / delta_half
    if mu > half:
        path = one_sided_path(v, 1, mu, half)
        t_star = path.length / dA
        log_gamma = Antiderivative(lambda x: top / ((1.0 - x) * v.value(x)), half, mu)

        def log_gamma_at(x):  # log Gamma at the time the belief equals x
            return log_gamma.total - log_gamma(x)

        def time_at(x):
            return path.clock_at(x) / dA

        inner = Antiderivative(
            lambda x: np.exp((dA - dP) * time_at(x) - log_gamma_at(x)) / ((1.0 - x) * v.value(x) * dA),
            half,
            mu,
        )
    else:
        t_star = 0.0
    lg_star = 0.0 if mu <= half else log_gamma.total
    tail = math.exp((dA - dP) * t_star - lg_star) / (delta_half * (growth - dA + dP))

    def Lambda_at(t):
        if t >= t_star:
            lg = lg_star + growth * (t - t_star)
            rest = math.exp((dA - dP) * t_star - lg_star) / delta_half
            rest *= math.exp((dA - dP - growth) * (t - t_star)) / (growth - dA + dP)
            return math.exp(lg) * rest
        x = path.mu_at_clock(dA * t)
        return math.exp(log_gamma_at(x)) * (inner(x) + tail)

    grid = np.concatenate([[0.0], np.linspace(max(t_star, 1.0) / n, 2 * t_star + 5.0 / dA, n)])
    Lam = np.array([0.0] + [Lambda_at(t) for t in grid[1:]])
    lam_plus = Lambda_at(0.0)
    delta1_0 = v.bregman_gap(mu, 1.0)
    delta0_0 = v.bregman_gap(mu, 0.0)
    lam1 = lam_plus * delta1_0
    lam0 = lam_plus * delta0_0
    if t_star > 0:
        def integrand(t):
            x = path.mu_at_clock(dA * t)
            L = Lambda_at(t)
            d1 = v.bregman_gap(x, 1.0)
            d0 = v.bregman_gap(x, 0.0)
            dL = (dA * top * L - math.exp((dA - dP) * t)) / d1
            return math.exp(-dP * t) + math.exp(-dA * t) * d0 * dL - dA * math.exp(-dA * t) * top * L

        lam0 += integrate.quad(integrand, 0.0, t_star, epsabs=1e-12, limit=200)[0]
    return MultiplierTrace(grid, Lam, lam1, lam0)


# ---------------------------------------------------------------------------
# Patient principal


def solve_patient_principal(s: Scenario):
    """Disagreement with delta_A > delta_P and no exogenous exit."""
    if not s.delta_A > s.delta_P:
        raise DomainError("patient-principal solver needs delta_A > delta_P")
    if s.rho != 0.0:
        raise DomainError("use solve_random_exit when rho > 0")
    if not (0.0 < s.mu_A < 1.0 and 0.0 < s.mu_P < 1.0):
        raise DomainError("patient-principal solver needs interior priors")
    return _gradual_policy(s, float(s.ell), float(s.mu_A), float(s.mu_P))


def extreme_catering_bound(s: Scenario):
    """Likelihood-ratio bound below which only one state is ever revealed,
    together with the sign condition that makes it meaningful."""
    v = s.value_fn
    dA, gap = s.delta_A, s.patience_gap
    cond = dA * v.value(0.0) + gap * v.slope(0.0) > 0
    return 1.0 + gap * v.slope(0.0) / (dA * v.value(0.0)), cond


# ---------------------------------------------------------------------------
# Impatient principal


class _ImpatientTables:
    """Quadrature tables for the impatient-principal construction (ell < 1)."""

    def __init__(self, v, delta_A, delta_P, lo):
        self.v = v
        self.dA = delta_A
        self.dP = delta_P
        self.g = (delta_A - delta_P) / delta_A
        self.lo = lo
        top = v.top
        self.psi_tab = Antiderivative(v.drift_factor_reveal_zero, lo, 1.0)
        self.gam_tab = Antiderivative(lambda x: top / (x * v.value(x)), lo, 1.0)
        self.j_tab = Antiderivative(
            lambda x: np.exp(-self.g * self.psi(x) + self.gamma(x)) / (x * v.value(x)), lo, 1.0
        )

    def psi(self, x):
        """int_x^1 of the reveal-zero drift density."""
        return self.psi_tab.total - self.psi_tab(x)

    def gamma(self, x):
        return self.gam_tab.total - self.gam_tab(x)

    def M(self, mu1):
        """Normalised terminal multiplier; equals 1/ell at the optimum."""
        tail = self.j_tab.total - self.j_tab(mu1)
        return np.exp(self.gamma(mu1) - self.g * self.psi(mu1)) - self.v.top * tail


@lru_cache(maxsize=256)
def _impatient_tables(v, delta_A, delta_P, lo):
    return _ImpatientTables(v, delta_A, delta_P, lo)


def _table_floor(mu):
    """Lower table edge: a power of two below ``mu`` so tables are reused."""
    return 2.0 ** math.floor(math.log2(max(mu, 1e-9)) - 1)


def impatient_terminal_gap(mu1, ell, s: Scenario):
    """M(mu1) - 1/ell; decreasing in mu1, zero at the optimal atom target."""
    tab = _impatient_tables(s.value_fn, s.delta_A, s.delta_P, _table_floor(mu1))
    return float(tab.M(mu1)) - 1.0 / ell


def _solve_impatient_low(s: Scenario):
    v, dA, dP = s.value_fn, s.delta_A, s.delta_P
    mu_A, mu_P = float(s.mu_A), float(s.mu_P)
    ell = float(s.ell)
    tab = _impatient_tables(v, dA, dP, _table_floor(mu_A))
    target = 1.0 / ell
    m_at_prior = float(tab.M(mu_A))
    if m_at_prior <= target:
        mu1 = mu_A
    else:
        mu1 = optimize.brentq(lambda m: float(tab.M(m)) - target, mu_A, 1.0, xtol=ROOT_TOL, rtol=1e-15)
    top = v.top
    t1 = math.log(((mu1 - mu_A) * top + mu_A * v.value(mu1)) / (mu1 * v.value(mu_A))) / dA
    t1 = max(t1, 0.0)
    psi1 = float(tab.psi(mu1))
    t2 = t1 + psi1 / dA
    segs = []
    if t1 > 0:
        segs.append(PolicySegment(SILENCE, 0.0, t1, mu_A, mu_A))
    if mu1 > mu_A:
        q = (mu1 - mu_A) / (mu1 * (1.0 - mu_A))
        segs.append(PolicySegment(ATOM, t1, t1, mu_A, mu1, state=0, reveal_prob=q))
    path = one_sided_path(v, 0, mu1, 1.0)
    segs.append(
        PolicySegment(POISSON_ONE, t1, t2, mu1, 1.0, state=0, path=path, clock=LinearClock(dA, t1), binding=True)
    )
    segs.append(PolicySegment(FULL_REVEAL, t2, t2, 1.0, 1.0))
    meta = {
        "t1": t1,
        "t2": t2,
        "mu1": mu1,
        "terminal_gap": float(tab.M(mu1)) - target,
        "phase1_zero": mu1 == mu_A,
    }
    policy = Policy(segs, ell, mu_P, [(0.0, 0.0), (t1, t2)], meta)
    trace = _impatient_multipliers(s, tab, mu1, t1, t2, path)
    return policy, trace


def _impatient_multipliers(s, tab, mu1, t1, t2, path, n=400):
    v, dA, dP = s.value_fn, s.delta_A, s.delta_P
    top = v.top
    mu_A = float(s.mu_A)
    ell = float(s.ell)
    lam_plus = math.exp((dA - dP) * t1) / (dA * top)
    psi1 = float(tab.psi(mu1))

    def time_of(x):
        return t1 + (psi1 - float(tab.psi(x))) / dA

    def rhs(x, y):
        return [(dA * top * y[0] - math.exp((dA - dP) * time_of(x))) / (dA * x * v.value(x))]

    mus = np.linspace(mu1, 1.0, n + 1)
    sol = integrate.solve_ivp(rhs, (mu1, 1.0), [lam_plus], t_eval=mus, rtol=1e-11, atol=1e-14, method="DOP853", dense_output=True)
    Lam_path = sol.y[0]
    times_path = np.array([time_of(x) for x in mus])
    grid = np.concatenate([[0.0], np.linspace(t1 / 50, t1, 50) if t1 > 0 else [], times_path[1:]])
    Lam = np.concatenate([[0.0], np.full(50 if t1 > 0 else 0, lam_plus), Lam_path[1:]])
    base1 = (1.0 - math.exp(-dP * t2)) / dP if dP > 0 else t2
    base0 = (1.0 - math.exp(-dP * t1)) / dP if dP > 0 else t1
    lam0 = base0 + lam_plus * (top * math.exp(-dA * t1) - v.value(mu_A) + mu_A * v.slope(mu_A))
    lam1 = base1 + ell * lam_plus * v.bregman_gap(mu_A, 1.0)
    # flat part of the multiplier on (0, t1) contributes only its level term
    if t1 > 0:
        lam1 -= ell * top * lam_plus * (1.0 - math.exp(-dA * t1))

    def integrand(x):
        t = time_of(x)
        L = float(sol.sol(x)[0])
        dL = (dA * top * L - math.exp((dA - dP) * t)) / v.bregman_gap(x, 0.0)
        return math.exp(-dA * t) * (v.bregman_gap(x, 1.0) * dL - dA * top * L) * v.drift_factor_reveal_zero(x) / dA

    lam1 += ell * integrate.quad(integrand, mu1, 1.0 - 1e-12, limit=400, epsabs=1e-11)[0]
    trace = MultiplierTrace(grid, Lam, lam1, lam0)
    trace.terminal_ratio = float(Lam_path[-1] * math.exp(-(dA - dP) * t2) * dA * top)
    return trace


def solve_impatient_principal(s: Scenario):
    """Disagreement with delta_P > delta_A: returns (policy, multiplier trace)."""
    if not s.delta_P > s.delta_A:
        raise DomainError("impatient-principal solver needs delta_P > delta_A")
    if s.rho != 0.0:
        raise DomainError("impatient-principal solver assumes no exogenous exit")
    if not (0.0 < s.mu_A < 1.0 and 0.0 < s.mu_P < 1.0):
        raise DomainError("impatient-principal solver needs interior priors")
    ell = float(s.ell)
    if abs(ell - 1.0) < 1e-14:
        p = solve_common_prior(s.with_priors(mu_A=float(s.mu_P)))
        return p, common_prior_multipliers(s.with_priors(mu_A=float(s.mu_P)))
    if ell < 1.0:
        return _solve_impatient_low(s)
    p, tr = _solve_impatient_low(s.mirrored())
    mp = mirror_policy(p)
    out = MultiplierTrace(tr.grid, tr.Lambda, tr.lambda_0, tr.lambda_1)
    out.terminal_ratio = tr.terminal_ratio
    return mp, out


def corollary1_region(s: Scenario):
    """Agent priors (principal prior fixed) for which the silent first phase
    has positive length.  Returns (mu_lower, mu_upper, flags)."""
    if not s.delta_P > s.delta_A:
        raise DomainError("region defined for delta_P > delta_A")
    mu_P = float(s.mu_P)

    def lower_edge(mu_p, scen):
        def h(mu_a):
            ell = mu_a / (1.0 - mu_a) * (1.0 - mu_p) / mu_p
            return impatient_terminal_gap(mu_a, ell, scen)

        grid = np.geomspace(1e-7, mu_p * (1 - 1e-9), 400)
        vals = np.array([h(x) for x in grid])
        idx = np.where(np.diff(np.sign(vals)) != 0)[0]
        if len(idx) == 0:
            return (0.0, False) if vals[-1] > 0 else (mu_p, False)
        i = idx[-1]
        return optimize.brentq(h, grid[i], grid[i + 1], xtol=1e-15, rtol=1e-15), True

    lo, found_lo = lower_edge(mu_P, s)
    hi_m, found_hi = lower_edge(1.0 - mu_P, s.mirrored())
    return lo, 1.0 - hi_m, {"lower_found": found_lo, "upper_found": found_hi}
