"""Discrete-time convex program for the principal's problem.

Time is cut into ``N`` steps of length ``h`` on ``[0, T_max]``.  At each step
the principal moves engaged mass to posteriors on a fixed grid; moved mass
leaves the no-news pool at the middle of the step (midpoint timing keeps the
scheme second-order in ``h``) and everything left is moved at ``T_max``.  The
single-type program of the personalized model is the case with posteriors
{0, 1} (state revelation) and no transition payoff.

Per agent type ``j`` the obedience constraint reads

    P_j(G1_k, G0_k) <= U_j[k],

where ``P_j(G1, G0) = (l G1 + G0) v(l G1 / (l G1 + G0))`` is the (convex)
perspective of the exit payoff and ``U_j`` is the discounted value of the
promised payoffs, computed by a linear backward recursion.  ``P_j`` is handled
by Kelley cutting planes (its tangents are exact along rays); exogenous exit
adds ``+rho * P_j`` to the recursion, linearised by a convex-concave loop.
The resulting linear programs are solved with HiGHS.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import optimize, sparse

from .core import Scenario, ValueFunction
from .errors import SolverError
from .policy import Policy, principal_value

CUT_DIRECTIONS = 33
MASS_FLOOR = 1e-4
HIGHS_OPTIONS = {"primal_feasibility_tolerance": 1e-10, "dual_feasibility_tolerance": 1e-10}


def perspective(v: ValueFunction, ell, g1, g0):
    """(l g1 + g0) v(l g1 / (l g1 + g0)), closed by 0 at the origin."""
    g1 = np.asarray(g1, dtype=float)
    g0 = np.asarray(g0, dtype=float)
    mass = ell * g1 + g0
    safe = np.where(mass > 0, mass, 1.0)
    out = np.where(mass > 0, mass * np.asarray(v.value(np.clip(ell * g1 / safe, 0.0, 1.0))), 0.0)
    return float(out) if out.ndim == 0 else out


def perspective_gradient(v: ValueFunction, ell, theta):
    """Gradient of the perspective along the ray with principal belief theta."""
    theta = np.asarray(theta, dtype=float)
    x = ell * theta / (ell * theta + 1.0 - theta)
    val = np.asarray(v.value(x))
    slope = np.asarray(v.slope(x))
    return ell * (val + (1.0 - x) * slope), val - x * slope


def type_payoff(v: ValueFunction, ell, mu):
    """Exit payoff of a type with ratio ``ell`` per unit of principal mass at
    principal belief ``mu``: (l mu + 1 - mu) v(mu_A)."""
    mu = np.asarray(mu, dtype=float)
    scale = ell * mu + 1.0 - mu
    out = scale * np.asarray(v.value(np.clip(ell * mu / scale, 0.0, 1.0)))
    return float(out) if out.ndim == 0 else out


# ---------------------------------------------------------------------------
# Generic engine


@dataclass
class DiscountKernel:
    """Agent discount factor including exit survival, D(t) e^{-rho t}."""

    D: object
    rho: float = 0.0

    def __call__(self, t):
        return np.asarray(self.D(t)) * np.exp(-self.rho * np.asarray(t))


@dataclass
class TransitionProgram:
    """Linear program over transitions to a posterior grid.

    ``posteriors`` (K,), ``payoff`` (K,) principal value per unit mass moved,
    ``ells`` per type, ``kernel`` the agent discount (with exit survival).
    """

    mu_P: float
    posteriors: np.ndarray
    payoff: np.ndarray
    ells: tuple
    value_fn: ValueFunction
    kernel: DiscountKernel
    principal_rate: float
    rho: float
    T_max: float
    N: int

    def __post_init__(self):
        self.posteriors = np.asarray(self.posteriors, dtype=float)
        self.payoff = np.asarray(self.payoff, dtype=float)
        self.K = len(self.posteriors)
        self.h = self.T_max / self.N
        self.t = np.linspace(0.0, self.T_max, self.N + 1)
        h, t, r = self.h, self.t, self.principal_rate
        Dk = self.kernel(t)
        Dmid = self.kernel(t[:-1] + 0.5 * h)
        self.beta = self.kernel(t[1:]) / Dk[:-1]
        self.c_mid = Dmid / Dk[:-1]
        # exit-flow weights on the two half steps (Gauss-Legendre, 8 nodes)
        gx, gw = np.polynomial.legendre.leggauss(8)
        first = 0.25 * h * (gx + 1.0)
        second = 0.5 * h + first
        self.w_first = np.array([0.25 * h * np.sum(gw * self.kernel(tk + first)) for tk in t[:-1]]) / Dk[:-1]
        self.w_second = np.array([0.25 * h * np.sum(gw * self.kernel(tk + second)) for tk in t[:-1]]) / Dk[:-1]
        self.q_first = _exposure(r, 0.0, 0.5 * h)
        self.q_second = _exposure(r, 0.5 * h, h)
        self.disc_P = np.exp(-r * t)
        self.vj = [type_payoff(self.value_fn, ell, self.posteriors) for ell in self.ells]
        n1 = self.N + 1
        self.ix = 0
        self.iG1 = n1 * self.K
        self.iG0 = self.iG1 + n1
        self.iU = [self.iG0 + n1 + j * n1 for j in range(len(self.ells))]
        self.nvar = self.iG0 + n1 + len(self.ells) * n1

    # -- matrices ---------------------------------------------------------

    def _x(self, k, i):
        return k * self.K + i

    def _objective(self):
        c = np.zeros(self.nvar)
        N, K = self.N, self.K
        for k in range(N):
            d = self.disc_P[k]
            for idx in (self.iG1, self.iG0):
                c[idx + k] += d * self.q_first
                c[idx + k + 1] += d * self.q_second
            c[self._x(k, 0) : self._x(k, 0) + K] += d * math.exp(-self.principal_rate * 0.5 * self.h) * self.payoff
        c[self._x(N, 0) : self._x(N, 0) + K] += self.disc_P[N] * self.payoff
        return c

    def _equalities(self, lin_first, lin_second):
        N, K = self.N, self.K
        post = self.posteriors
        rows, cols, vals, rhs = [], [], [], []
        r = 0

        def add(row_cols, row_vals, b):
            nonlocal r
            rows.extend([r] * len(row_cols))
            cols.extend(row_cols)
            vals.extend(row_vals)
            rhs.append(b)
            r += 1

        add([self.iG1], [1.0], float(self.mu_P))
        add([self.iG0], [1.0], 1.0 - float(self.mu_P))
        xcols = np.arange(K)
        for k in range(N + 1):
            xs = (self._x(k, 0) + xcols).tolist()
            for idx, w in ((self.iG1, post), (self.iG0, 1.0 - post)):
                if k < N:
                    add([idx + k + 1, idx + k] + xs, [1.0, -1.0] + w.tolist(), 0.0)
                else:
                    add([idx + k] + xs, [-1.0] + w.tolist(), 0.0)
        for j, ell in enumerate(self.ells):
            base = self.iU[j]
            vj = self.vj[j]
            for k in range(N + 1):
                xs = (self._x(k, 0) + xcols).tolist()
                if k < N:
                    row_c = [base + k] + xs + [base + k + 1]
                    row_v = [1.0] + (-self.c_mid[k] * vj).tolist() + [-self.beta[k]]
                    if self.rho > 0:
                        a1, a0 = perspective_gradient(self.value_fn, ell, lin_first[k])
                        b1, b0 = perspective_gradient(self.value_fn, ell, lin_second[k])
                        wf = self.rho * self.w_first[k]
                        ws = self.rho * self.w_second[k]
                        row_c += [self.iG1 + k, self.iG0 + k, self.iG1 + k + 1, self.iG0 + k + 1]
                        row_v += [-wf * float(a1), -wf * float(a0), -ws * float(b1), -ws * float(b0)]
                    add(row_c, row_v, 0.0)
                else:
                    add([base + k] + xs, [1.0] + (-vj).tolist(), 0.0)
        A = sparse.csr_matrix((vals, (rows, cols)), shape=(r, self.nvar))
        return A, np.array(rhs)

    def _cuts(self, cut_dirs):
        rows, cols, vals = [], [], []
        r = 0
        for j, ell in enumerate(self.ells):
            base = self.iU[j]
            for k, dirs in enumerate(cut_dirs[j]):
                a1, a0 = perspective_gradient(self.value_fn, ell, np.asarray(dirs))
                for p, q in zip(np.atleast_1d(a1), np.atleast_1d(a0)):
                    rows.extend([r, r, r])
                    cols.extend([self.iG1 + k, self.iG0 + k, base + k])
                    vals.extend([float(p), float(q), -1.0])
                    r += 1
        return sparse.csr_matrix((vals, (rows, cols)), shape=(r, self.nvar)), np.zeros(r)

    # -- solve ------------------------------------------------------------

    def unpack(self, z):
        N, K = self.N, self.K
        x = z[: (N + 1) * K].reshape(N + 1, K)
        G1 = z[self.iG1 : self.iG1 + N + 1]
        G0 = z[self.iG0 : self.iG0 + N + 1]
        U = [z[b : b + N + 1] for b in self.iU]
        return x, np.maximum(G1, 0.0), np.maximum(G0, 0.0), U

    def ic_violation(self, G1, G0, U, per_mass=True):
        """Per-type (P_j(G_k) - U_j[k]) over k, divided by the engaged agent
        mass when ``per_mass`` (masses below MASS_FLOOR count as the floor)."""
        out = []
        for j, ell in enumerate(self.ells):
            gap = perspective(self.value_fn, ell, G1, G0) - U[j]
            if per_mass:
                gap = gap / np.maximum(ell * G1 + G0, MASS_FLOOR)
            out.append(gap)
        return out

    def solve(self, tol=1e-8, max_rounds=60, init_dirs=None):
        N = self.N
        base_dirs = np.linspace(0.0, 1.0, CUT_DIRECTIONS)
        start = np.full(N + 1, float(self.mu_P)) if init_dirs is None else np.asarray(init_dirs, dtype=float)
        cut_dirs = [[list(base_dirs) + [start[k]] for k in range(N + 1)] for _ in self.ells]
        lin_first = start[:-1].copy()
        lin_second = start[1:].copy()
        c = -self._objective()
        bounds = [(0.0, None)] * (self.iG0 + N + 1) + [(None, None)] * (len(self.ells) * (N + 1))
        history = []
        z = None
        for it in range(max_rounds):
            A_eq, b_eq = self._equalities(lin_first, lin_second)
            A_ub, b_ub = self._cuts(cut_dirs)
            res = optimize.linprog(c, A_ub=A_ub, b_ub=b_ub, A_eq=A_eq, b_eq=b_eq, bounds=bounds, method="highs", options=HIGHS_OPTIONS)
            if res.status == 4:
                # tight tolerances can stall HiGHS on large programs; retry with its defaults
                res = optimize.linprog(c, A_ub=A_ub, b_ub=b_ub, A_eq=A_eq, b_eq=b_eq, bounds=bounds, method="highs")
            if res.status != 0:
                raise SolverError(f"discrete program failed: {res.message}", {"round": it, "status": res.status})
            z = res.x
            x, G1, G0, U = self.unpack(z)
            viol = self.ic_violation(G1, G0, U, per_mass=False)
            worst = max(float(np.max(v)) for v in viol)
            mass = G1 + G0
            theta = np.where(mass > 1e-300, G1 / np.maximum(mass, 1e-300), float(self.mu_P))
            new_first = theta[:-1]
            new_second = theta[1:]
            drift = 0.0
            if self.rho > 0:
                # direction changes only matter where mass is left to linearise
                drift = float(np.max(np.abs(new_first - lin_first) * mass[:-1]))
                drift += float(np.max(np.abs(new_second - lin_second) * mass[1:]))
            stalled = bool(history) and abs(-res.fun - history[-1][0]) <= 1e-10 * max(1.0, abs(res.fun))
            history.append((-res.fun, worst, drift))
            if worst <= tol and (drift <= 1e-7 or stalled):
                break
            for j, v in enumerate(viol):
                # a cut at each violating step, shared with its neighbours
                for k in np.flatnonzero(v > tol):
                    for kk in range(max(k - 2, 0), min(k + 3, N + 1)):
                        cut_dirs[j][kk].append(float(theta[k]))
            lin_first, lin_second = new_first, new_second
        else:
            return self._package(z, history, converged=False)
        return self._package(z, history, converged=True)

    def _package(self, z, history, converged):
        x, G1, G0, U = self.unpack(z)
        viol = self.ic_violation(G1, G0, U)
        return OracleSolution(
            t=self.t.copy(),
            G1=G1,
            G0=G0,
            moved=x,
            posteriors=self.posteriors.copy(),
            U=U,
            objective=float(history[-1][0]),
            max_violation=max(float(np.max(v)) for v in viol),
            rounds=len(history),
            converged=converged,
            h=self.h,
            T_max=self.T_max,
            N=self.N,
            history=history,
        )


def _exposure(r, a, b):
    """int_a^b e^{-r u} du."""
    if r == 0:
        return b - a
    return (math.exp(-r * a) - math.exp(-r * b)) / r


@dataclass
class OracleSolution:
    t: np.ndarray
    G1: np.ndarray
    G0: np.ndarray
    moved: np.ndarray
    posteriors: np.ndarray
    U: list
    objective: float
    max_violation: float
    rounds: int
    converged: bool
    h: float
    T_max: float
    N: int
    history: list = field(default_factory=list)

    @property
    def G(self):
        return self.G1 + self.G0

    def agent_engagement(self, ell):
        return ell * self.G1 + self.G0

    def to_dict(self):
        return {
            "objective": self.objective,
            "max_violation": self.max_violation,
            "rounds": self.rounds,
            "converged": self.converged,
            "N": self.N,
            "T_max": self.T_max,
            "h": self.h,
        }


# ---------------------------------------------------------------------------
# Single-type program and verification


def _kernel_for(s: Scenario):
    return DiscountKernel(s.discount.D, s.rho)


def solve_discrete(s: Scenario, T_max, N) -> OracleSolution:
    """Discretised optimum of the single-type problem on [0, T_max]."""
    if N < 16:
        raise SolverError("the discrete program needs N >= 16", {"N": N})
    prog = TransitionProgram(
        mu_P=float(s.mu_P),
        posteriors=np.array([0.0, 1.0]),
        payoff=np.zeros(2),
        ells=(float(s.ell),),
        value_fn=s.value_fn,
        kernel=_kernel_for(s),
        principal_rate=s.principal_rate,
        rho=s.rho,
        T_max=float(T_max),
        N=int(N),
    )
    return prog.solve()


def sample_policy(p: Policy, s: Scenario, T_max, N):
    """Project a policy onto the grid: state survivals at grid times, moved
    mass per step, and the implied promised values with the true perspective."""
    t = np.linspace(0.0, T_max, N + 1)
    g1, g0 = p.engagement_probs(t)
    g1 = np.asarray(g1, dtype=float)
    g0 = np.asarray(g0, dtype=float)
    g1[0] = float(p.mu_P0)
    g0[0] = 1.0 - float(p.mu_P0)
    m1 = np.append(g1[:-1] - g1[1:], g1[-1])
    m0 = np.append(g0[:-1] - g0[1:], g0[-1])
    prog = TransitionProgram(
        mu_P=float(p.mu_P0),
        posteriors=np.array([0.0, 1.0]),
        payoff=np.zeros(2),
        ells=(float(p.ell),),
        value_fn=s.value_fn,
        kernel=_kernel_for(s),
        principal_rate=s.principal_rate,
        rho=s.rho,
        T_max=float(T_max),
        N=int(N),
    )
    v, ell = s.value_fn, float(p.ell)
    top = v.top
    promised = ell * m1 * top + m0 * top
    U = np.empty(N + 1)
    U[N] = promised[N]
    for k in range(N - 1, -1, -1):
        U[k] = prog.c_mid[k] * promised[k] + prog.beta[k] * U[k + 1]
        if s.rho > 0:
            U[k] += s.rho * (prog.w_first[k] * perspective(v, ell, g1[k], g0[k]) + prog.w_second[k] * perspective(v, ell, g1[k + 1], g0[k + 1]))
    objective = 0.0
    for k in range(N):
        objective += prog.disc_P[k] * (prog.q_first * (g1[k] + g0[k]) + prog.q_second * (g1[k + 1] + g0[k + 1]))
    viol = prog.ic_violation(g1, g0, [U])[0]
    return {"t": t, "G1": g1, "G0": g0, "U": U, "violation": viol, "objective": objective, "program": prog}


def violation_bound(s: Scenario, h):
    """Grid-truncation allowance for sampled constraints: 5 h times the
    agent's fastest impatience rate (discount hazard plus exit), in payoff
    units per unit of engaged mass."""
    D = s.discount
    grid = np.linspace(0.0, 10.0 / max(D.hazard(0.0), 1e-9), 200)
    rate = float(np.max(D.hazard(grid))) + s.rho
    return 5.0 * h * rate * s.value_fn.top


def verify(policy: Policy, s: Scenario, T_max, N, gap_tol=0.01):
    """Feasibility and optimality report of ``policy`` against the program."""
    sampled = sample_policy(policy, s, T_max, N)
    opt = solve_discrete(s, T_max, N)
    value = principal_value(policy, s.delta_P, s.rho)
    bound = violation_bound(s, T_max / N)
    max_violation = float(np.max(sampled["violation"]))
    gap = (opt.objective - value) / max(abs(opt.objective), 1e-300)
    feasible = max_violation <= bound
    optimal = gap <= gap_tol
    return {
        "policy_value": value,
        "sampled_objective": sampled["objective"],
        "oracle_objective": opt.objective,
        "gap": gap,
        "max_violation": max_violation,
        "violation_bound": bound,
        "feasible": bool(feasible),
        "optimal": bool(optimal),
        "passed": bool(feasible and optimal),
        "N": int(N),
        "T_max": float(T_max),
        "oracle_converged": opt.converged,
        "oracle_max_violation": opt.max_violation,
    }
