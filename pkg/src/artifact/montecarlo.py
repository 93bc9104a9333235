"""Event-driven Monte Carlo simulation of disclosure policies.

Each path draws the state, the time of its first revealing event (by
inverting the state-conditional survival curve) and, with exogenous exit,
a competing exponential exit time.  Paths use their own counter-based
Philox stream (key = seed, counter offset = path index), so records do not
depend on how paths are batched or ordered.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ._accel import jit
from .errors import DomainError
from .policy import ATOM, FULL_REVEAL, POISSON_BOTH, Policy

CAUSE_REVEAL = "signal-full-reveal"
CAUSE_TRANSITION = "transition-recommend-exit"
CAUSE_EXOGENOUS = "exogenous-exit"
CAUSE_CENSORED = "censored"
CAUSES = (CAUSE_REVEAL, CAUSE_TRANSITION, CAUSE_EXOGENOUS, CAUSE_CENSORED)
UNIFORMS_PER_PATH = 6


@dataclass(frozen=True)
class SimConfig:
    n_paths: int = 10_000
    seed: int = 0
    true_state_dist: float | None = None
    horizon: float | None = None
    dt_max: float = 0.1

    def __post_init__(self):
        if int(self.n_paths) < 1:
            raise DomainError("n_paths must be at least 1")
        if self.true_state_dist is not None and not (0.0 <= self.true_state_dist <= 1.0):
            raise DomainError("true_state_dist must be a probability")
        if self.horizon is not None and not self.horizon > 0:
            raise DomainError("horizon must be positive")


@dataclass(frozen=True)
class PathRecord:
    agent_type: str
    true_state: int
    exit_time: float
    exit_cause: str
    exit_belief: float
    exit_belief_principal: float


@dataclass
class SimulationResult:
    """Column store of path records."""

    agent_type: np.ndarray
    true_state: np.ndarray
    exit_time: np.ndarray
    exit_cause: np.ndarray
    exit_belief: np.ndarray
    exit_belief_principal: np.ndarray
    meta: dict = field(default_factory=dict)

    def __len__(self):
        return len(self.exit_time)

    @property
    def censored(self):
        return self.exit_cause == CAUSE_CENSORED

    @property
    def informed(self):
        return self.exit_cause == CAUSE_REVEAL

    def records(self):
        return [
            PathRecord(str(a), int(s), float(t), str(c), float(b), float(p))
            for a, s, t, c, b, p in zip(
                self.agent_type, self.true_state, self.exit_time, self.exit_cause, self.exit_belief, self.exit_belief_principal
            )
        ]

    def informed_share(self, agent_type=None, state=None):
        mask = np.ones(len(self), dtype=bool)
        if agent_type is not None:
            mask &= self.agent_type == agent_type
        if state is not None:
            mask &= self.true_state == state
        if not np.any(mask):
            return math.nan
        return float(np.mean(self.informed[mask]))

    def censored_share(self):
        return float(np.mean(self.censored))

    def to_rows(self):
        return [
            {
                "path": i,
                "agent_type": str(self.agent_type[i]),
                "true_state": int(self.true_state[i]),
                "exit_time": float(self.exit_time[i]),
                "exit_cause": str(self.exit_cause[i]),
                "exit_belief": float(self.exit_belief[i]),
                "exit_belief_principal": float(self.exit_belief_principal[i]),
            }
            for i in range(len(self))
        ]


# ---------------------------------------------------------------------------
# Random streams


def path_uniforms(seed, n_paths, width=UNIFORMS_PER_PATH, start=0):
    """Uniforms in (0, 1) with one independent Philox stream per path."""
    out = np.empty((n_paths, width))
    for i in range(n_paths):
        bitgen = np.random.Philox(key=int(seed) & (2**64 - 1), counter=[0, start + i, 0, 0])
        out[i] = np.random.Generator(bitgen).random(width)
    # guard against exact zeros for log transforms
    return np.clip(out, 1e-300, 1.0)


# ---------------------------------------------------------------------------
# Survival inversion


@jit
def invert_log_survival(t, log_s, targets):
    """First time the (non-increasing) log survival falls to each target.

    Linear interpolation in log survival between grid points; ``inf`` when
    the target lies below the last grid value."""
    n = t.shape[0]
    out = np.empty(targets.shape[0])
    for p in range(targets.shape[0]):
        y = targets[p]
        if y >= log_s[0]:
            out[p] = t[0]
            continue
        if y < log_s[n - 1] or (log_s[n - 1] == y and n == 1):
            out[p] = np.inf
            continue
        lo = 0
        hi = n - 1
        while hi - lo > 1:
            mid = (lo + hi) // 2
            if log_s[mid] <= y:
                hi = mid
            else:
                lo = mid
        a = log_s[lo]
        b = log_s[hi]
        if not np.isfinite(b) or a == b:
            out[p] = t[hi]
        else:
            w = (a - y) / (a - b)
            out[p] = t[lo] + w * (t[hi] - t[lo])
    return out


class PolicySampler:
    """Tabulated state-conditional survival of a policy plus an exact tail."""

    def __init__(self, policy: Policy, horizon=None, points=800):
        self.policy = policy
        segs = policy.segments
        last = segs[-1]
        self.tail_rate = None
        self.tail_kind = None
        if last.kind == POISSON_BOTH and math.isinf(last.t_end):
            r0 = float(last.rate * last.clock.rate_at(last.t_start)) if last.clock is not None else float(last.rate)
            probe = last.t_start + 10.0
            r1 = float(last.rate * last.clock.rate_at(probe)) if last.clock is not None else float(last.rate)
            if abs(r1 - r0) <= 1e-12 * max(1.0, r0):
                self.tail_kind = "exponential"
                self.tail_rate = r0
                end = last.t_start
            else:
                self.tail_kind = "censor"
                end = horizon if horizon is not None else last.t_start + 50.0 / max(r0, 1e-9)
        else:
            self.tail_kind = "reveal"
            end = last.t_start
        self.end = float(end)
        knots = [s.t_start for s in segs if s.t_start <= end]
        grid = [np.linspace(0.0, end, points)] if end > 0 else [np.zeros(1)]
        eps = [k - 1e-12 * max(1.0, k) for k in knots if k > 0]
        t = np.unique(np.concatenate(grid + [np.array(knots), np.array(eps)]))
        t = t[(t >= 0) & (t <= end)]
        if t.size == 0:
            t = np.zeros(1)
        s1, s0 = policy.survival(t)
        # the first grid point carries any atom at t = 0 on its right; restore the pre-atom value
        with np.errstate(divide="ignore"):
            self.log_s = {1: np.log(np.concatenate([[1.0], s1])), 0: np.log(np.concatenate([[1.0], s0]))}
        self.t = np.concatenate([[0.0], t])
        self.end_survival = {1: float(s1[-1]), 0: float(s0[-1])}

    def reveal_times(self, state, u):
        """Revelation times for uniforms ``u`` (inf when censored)."""
        u = np.asarray(u, dtype=float)
        logu = np.log(u)
        out = invert_log_survival(self.t, self.log_s[state], logu)
        beyond = ~np.isfinite(out)
        if np.any(beyond):
            s_end = self.end_survival[state]
            if self.tail_kind == "reveal":
                out[beyond] = self.end
            elif self.tail_kind == "exponential" and s_end > 0:
                out[beyond] = self.end + np.log(s_end / u[beyond]) / self.tail_rate
            else:
                out[beyond] = np.inf
        return out


# ---------------------------------------------------------------------------
# Single-type policies


def _true_states(u, prob_one):
    return (u < prob_one).astype(np.int64)


def _agent_belief_from_principal(m, ell):
    return ell * m / (ell * m + 1.0 - m)


def simulate_policy(policy: Policy, cfg: SimConfig, rho=0.0, agent_type="A", uniforms=None):
    """Paths of one agent type under a personalized policy."""
    n = int(cfg.n_paths)
    u = path_uniforms(cfg.seed, n) if uniforms is None else uniforms
    q = float(policy.mu_P0) if cfg.true_state_dist is None else float(cfg.true_state_dist)
    states = _true_states(u[:, 0], q)
    sampler = PolicySampler(policy, cfg.horizon)
    reveal = np.empty(n)
    for w in (0, 1):
        m = states == w
        if np.any(m):
            reveal[m] = sampler.reveal_times(w, u[m, 1])
    exit_exo = -np.log(u[:, 2]) / rho if rho > 0 else np.full(n, np.inf)
    time = np.minimum(reveal, exit_exo)
    cause = np.where(reveal <= exit_exo, CAUSE_REVEAL, CAUSE_EXOGENOUS).astype(object)
    censored = ~np.isfinite(time)
    if cfg.horizon is not None:
        censored |= time > cfg.horizon
    horizon = sampler.end if cfg.horizon is None else cfg.horizon
    time = np.where(censored, horizon, time)
    cause[censored] = CAUSE_CENSORED
    belief = states.astype(float)
    uninformed = cause != CAUSE_REVEAL
    if np.any(uninformed):
        belief[uninformed] = np.asarray(policy.mu_A(time[uninformed]), dtype=float)
    ell = float(policy.ell)
    principal = np.where(uninformed, belief / (belief + ell * (1.0 - belief)), belief)
    return SimulationResult(
        agent_type=np.full(n, agent_type, dtype=object),
        true_state=states,
        exit_time=time,
        exit_cause=cause,
        exit_belief=belief,
        exit_belief_principal=principal,
        meta={"kind": "personalized", "tail": sampler.tail_kind, "rho": rho},
    )


def simulate_population(policies, weights, cfg: SimConfig, rho=0.0):
    """Paths over a type mixture, each type following its own policy.

    ``policies`` and ``weights`` are dicts keyed by type label."""
    n = int(cfg.n_paths)
    u = path_uniforms(cfg.seed, n)
    labels = sorted(policies)
    cum = np.cumsum([weights[k] for k in labels])
    which = np.searchsorted(cum / cum[-1], u[:, 3], side="right")
    parts = []
    idx_all = []
    for i, k in enumerate(labels):
        idx = np.flatnonzero(which == i)
        if idx.size == 0:
            continue
        sub = SimConfig(len(idx), cfg.seed, cfg.true_state_dist, cfg.horizon, cfg.dt_max)
        parts.append(simulate_policy(policies[k], sub, rho, k, uniforms=u[idx]))
        idx_all.append(idx)
    return _merge(parts, idx_all, n, {"kind": "population", "rho": rho})


def _merge(parts, idx_all, n, meta):
    cols = {}
    for name in ("agent_type", "true_state", "exit_time", "exit_cause", "exit_belief", "exit_belief_principal"):
        proto = getattr(parts[0], name)
        arr = np.empty(n, dtype=proto.dtype)
        for part, idx in zip(parts, idx_all):
            arr[idx] = getattr(part, name)
        cols[name] = arr
    return SimulationResult(**cols, meta=meta)


# ---------------------------------------------------------------------------
# Two-type public communication


def simulate_two_type(transient, two, cfg: SimConfig, continuation=None):
    """Paths under public communication: the phase-1 transition schedule of
    ``transient`` up to its convergence time, the steady lottery afterwards,
    and the staying type's personalized policy after the transition."""
    from .nonpersonalized import continuation_policy

    n = int(cfg.n_paths)
    u = path_uniforms(cfg.seed, n)
    q = float(two.mu_P) if cfg.true_state_dist is None else float(cfg.true_state_dist)
    states = _true_states(u[:, 0], q)
    cum_h = two.alpha_H
    types = np.where(u[:, 3] < cum_h, "H", "L").astype(object)
    rho = two.rho
    steady = transient.steady
    post = transient.posteriors
    sol = transient.solution
    h = sol.h
    t_cut = transient.convergence_time
    if not math.isfinite(t_cut):
        t_cut = sol.t[len(sol.t) // 2]
    k_cut = int(round(t_cut / h))
    x = sol.moved[:k_cut]
    mu0 = float(sol.G1[0])
    weight = {1: x * post[None, :] / mu0, 0: x * (1.0 - post[None, :]) / (1.0 - mu0)}
    lot = steady.lottery.outcomes
    lot_post = np.array([m for _, m, _ in lot])
    lot_p = np.array([p for p, _, _ in lot])
    mu_s = steady.mu_P_star
    lot_w = {1: lot_p * lot_post / mu_s, 0: lot_p * (1.0 - lot_post) / (1.0 - mu_s)}
    lot_stay = [s for _, _, s in lot]
    tau1 = np.empty(n)
    sigma = np.empty(n)
    stay = np.empty(n, dtype=object)
    for w in (0, 1):
        flat = weight[w].ravel()
        cdf = np.cumsum(flat)
        m = np.flatnonzero(states == w)
        uu = u[m, 1]
        inside = uu < cdf[-1]
        pick = np.searchsorted(cdf, uu[inside], side="right")
        pick = np.minimum(pick, flat.size - 1)
        k, i = np.divmod(pick, post.size)
        mi = m[inside]
        tau1[mi] = sol.t[k] + 0.5 * h
        sigma[mi] = post[i]
        stay[mi] = transient.stay[i]
        mo = m[~inside]
        if mo.size:
            rest = (uu[~inside] - cdf[-1]) / max(1.0 - cdf[-1], 1e-300)
            rest = np.clip(rest, 1e-300, 1.0)
            tau1[mo] = t_cut - np.log(rest) / steady.lambda_star
            lw = np.cumsum(lot_w[w])
            j = np.minimum(np.searchsorted(lw / lw[-1], u[mo, 4], side="right"), len(lot) - 1)
            sigma[mo] = lot_post[j]
            stay[mo] = [lot_stay[jj] for jj in j]
    exit_exo = -np.log(u[:, 2]) / rho if rho > 0 else np.full(n, np.inf)
    time = np.empty(n)
    cause = np.empty(n, dtype=object)
    principal = np.empty(n)
    ells = two.ells
    # phase-1 principal belief path for uninformed exits
    mu_path_t = np.append(sol.t[:k_cut], t_cut)
    mu_path = np.append(transient.mu_P[:k_cut], mu_s)
    before = exit_exo < tau1
    time[before] = exit_exo[before]
    cause[before] = CAUSE_EXOGENOUS
    principal[before] = np.interp(exit_exo[before], mu_path_t, mu_path)
    after = ~before
    leave = after & (stay != types)
    time[leave] = tau1[leave]
    revealed = leave & ((sigma <= 0.0) | (sigma >= 1.0))
    cause[leave] = CAUSE_TRANSITION
    cause[revealed] = CAUSE_REVEAL
    principal[leave] = sigma[leave]
    keep = np.flatnonzero(after & (stay == types))
    cache = {} if continuation is None else continuation
    horizon = cfg.horizon
    for key in {(float(sigma[p]), types[p]) for p in keep}:
        if key not in cache:
            cache[key] = PolicySampler(continuation_policy(two, key[0], key[1]), horizon)
    for p in keep:
        sampler = cache[(float(sigma[p]), types[p])]
        w = int(states[p])
        t2 = float(sampler.reveal_times(w, np.array([u[p, 5]]))[0])
        end = tau1[p] + t2
        if exit_exo[p] < end:
            time[p] = exit_exo[p]
            cause[p] = CAUSE_EXOGENOUS
            mA = float(sampler.policy.mu_A(exit_exo[p] - tau1[p]))
            ell = float(sampler.policy.ell)
            principal[p] = mA / (mA + ell * (1.0 - mA))
        elif math.isfinite(end):
            time[p] = end
            cause[p] = CAUSE_REVEAL
            principal[p] = float(w)
        else:
            time[p] = horizon if horizon is not None else tau1[p] + sampler.end
            cause[p] = CAUSE_CENSORED
            mA = float(sampler.policy.mu_A(time[p] - tau1[p]))
            ell = float(sampler.policy.ell)
            principal[p] = mA / (mA + ell * (1.0 - mA))
    belief = np.array([_agent_belief_from_principal(principal[p], ells[types[p]]) for p in range(n)])
    return SimulationResult(
        agent_type=types,
        true_state=states,
        exit_time=time,
        exit_cause=cause,
        exit_belief=belief,
        exit_belief_principal=principal,
        meta={"kind": "two-type", "rho": rho, "schedule_end": t_cut},
    )


def simulate(obj, cfg: SimConfig, rho=0.0, two=None):
    """Dispatch on a Policy or a two-type transient solution."""
    if isinstance(obj, Policy):
        return simulate_policy(obj, cfg, rho)
    if two is None:
        raise DomainError("two-type simulation needs the TwoTypeScenario")
    return simulate_two_type(obj, two, cfg)


# ---------------------------------------------------------------------------
# Summaries


def empirical_cdf(values, grid):
    values = np.sort(np.asarray(values, dtype=float))
    return np.searchsorted(values, np.asarray(grid, dtype=float), side="right") / max(len(values), 1)


def exit_cdfs(result: SimulationResult, time_grid=None, belief_grid=None):
    """Exit-time CDF and exit-belief CDFs per (agent type, true state)."""
    if len(result) == 0:
        raise DomainError("no records")
    if time_grid is None:
        top = float(np.quantile(result.exit_time, 0.99))
        time_grid = np.linspace(0.0, max(top, 1e-9), 201)
    if belief_grid is None:
        belief_grid = np.linspace(0.0, 1.0, 101)
    beliefs = {}
    for a in sorted(set(result.agent_type.tolist())):
        for w in (0, 1):
            m = (result.agent_type == a) & (result.true_state == w)
            if np.any(m):
                beliefs[(a, w)] = empirical_cdf(result.exit_belief[m], belief_grid)
    return {
        "time_grid": np.asarray(time_grid),
        "time_cdf": empirical_cdf(result.exit_time, time_grid),
        "belief_grid": np.asarray(belief_grid),
        "belief_cdf": beliefs,
        "censored_share": result.censored_share(),
    }


def dominates(cdf_early, cdf_late, tol=0.0):
    """True when ``cdf_early`` >= ``cdf_late`` at every grid point."""
    return bool(np.all(np.asarray(cdf_early) >= np.asarray(cdf_late) - tol))


__all__ = [
    "CAUSES",
    "PathRecord",
    "PolicySampler",
    "SimConfig",
    "SimulationResult",
    "dominates",
    "empirical_cdf",
    "exit_cdfs",
    "invert_log_survival",
    "path_uniforms",
    "simulate",
    "simulate_policy",
    "simulate_population",
    "simulate_two_type",
]
