"""Public (non-personalized) communication with a low and a high agent type.

After the first informative transition exactly one type keeps engaging and
the principal continues with that type's personalized policy, so each
posterior ``mu`` is worth ``V_hat(mu) = max_j alpha_j V(mu; l_j)``.  Before
that, the principal picks a transition rate and a lottery over posteriors.
In a steady state the lottery is the supporting chord of

    F(mu) = V_hat(mu) + Lambda_L v_L(mu) + Lambda_H v_H(mu),

with ``v_j(mu) = (l_j mu + 1 - mu) v(mu_A^j)`` the type-``j`` exit payoff in
the principal's measure, and the multipliers solve

    1 - r F_cav(mu) = kappa sum_j Lambda_j v_j(mu)        (optimal transition)
    r F_cav'(mu) + kappa sum_j Lambda_j v_j'(mu) = 0      (belief smoothing)
    Lambda_j (lambda - lambda_j) = 0,  lambda = max_j lambda_j

where ``r = delta_P + rho``, ``kappa = delta_A - delta_P - rho`` and
``lambda_j = delta_A v_j(mu) / (sum_s p_s v_j(mu_s) - v_j(mu))`` is the
smallest transition rate that keeps type ``j`` engaged.

The transient path from the prior is computed with the discrete program of
:mod:`artifact.oracle`, with transition payoff ``V_hat`` and one obedience
constraint per type.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import optimize

from .core import Scenario, TwoTypeScenario, ValueFunction, type_value, type_value_slope
from .errors import DomainError, SolverError
from .hull import envelope_on_grid, supporting_chord, upper_hull_indices
from .oracle import DiscountKernel, TransitionProgram
from .personalized import _gap_fn, _roots, solve_patient_principal, steady_rate
from .extensions import solve_random_exit
from .policy import Policy, agent_value, principal_value
from .quadrature import Antiderivative

GRID_POINTS = 2001
REFINE_FACTOR = 10
POSTERIOR_POINTS = 51
STAY_L = "L"
STAY_H = "H"


def _principal_from_agent(x, ell):
    return x / (x + ell * (1.0 - x))


def _agent_from_principal(m, ell):
    return ell * m / (ell * m + 1.0 - m)


# ---------------------------------------------------------------------------
# Personalized continuation values


class _RevealOneBranch:
    """Agent beliefs in (lo, hi) fall toward ``lo`` while state 1 is revealed.

    With E(x) = exp(-r C(x) / delta_A), C(x) = int_lo^x phi_1, the value is
    V = (1 - mu_P0) E(x0) [B(x0) + K], B(y) = int_lo^y phi_1 / (delta_A
    (1 - mu_P(x)) E(x)) dx, and K the steady (or corner) tail."""

    def __init__(self, ell, v, delta_A, rate, lo, hi):
        self.ell, self.v, self.dA, self.r = ell, v, delta_A, rate
        self.lo, self.hi = lo, hi
        phi = v.drift_factor_reveal_one
        self.phi = phi
        self.C = Antiderivative(phi, lo, hi, breaks=())
        dA, r = delta_A, rate

        def g(x):
            x = np.clip(np.asarray(x, dtype=float), lo, min(hi, 1.0 - 1e-16))
            return np.exp(r * self.C(x) / dA) * phi(x) / (dA * (1.0 - _principal_from_agent(x, ell)))

        self.B = Antiderivative(g, lo, hi, breaks=())
        if lo <= 0.0:
            self.K = 0.0
        else:
            lam = steady_rate(lo, v, delta_A)
            self.K = 1.0 / ((1.0 - _principal_from_agent(lo, ell)) * (lam + rate))

    def value_and_slope(self, x):
        ell, dA, r = self.ell, self.dA, self.r
        m0 = _principal_from_agent(x, ell)
        E = np.exp(-r * self.C(x) / dA)
        tail = E * (self.B(x) + self.K)
        phi = self.phi(x)
        dP = ell / (x + ell * (1.0 - x)) ** 2
        value = (1.0 - m0) * tail
        d_agent = -dP * tail - (1.0 - m0) * (r / dA) * phi * tail + phi / dA
        return value, d_agent / dP


class _RevealZeroBranch:
    """Agent beliefs in (lo, hi) rise toward ``hi`` while state 0 is revealed."""

    def __init__(self, ell, v, delta_A, rate, lo, hi):
        self.ell, self.v, self.dA, self.r = ell, v, delta_A, rate
        self.lo, self.hi = lo, hi
        phi = v.drift_factor_reveal_zero
        self.phi = phi
        self.A = Antiderivative(phi, lo, hi, breaks=())
        dA, r = delta_A, rate

        def g(x):
            x = np.clip(np.asarray(x, dtype=float), max(lo, 1e-300), hi)
            return np.exp(r * self.C(x) / dA) * phi(x) / (dA * _principal_from_agent(x, ell))

        self.Bt = Antiderivative(g, lo, hi, breaks=())
        if hi >= 1.0:
            self.K = 0.0
        else:
            lam = steady_rate(hi, v, delta_A)
            self.K = 1.0 / (_principal_from_agent(hi, ell) * (lam + rate))

    def C(self, x):
        return self.A.total - self.A(x)

    def value_and_slope(self, x):
        ell, dA, r = self.ell, self.dA, self.r
        m0 = _principal_from_agent(x, ell)
        E = np.exp(-r * self.C(x) / dA)
        tail = E * (self.Bt.total - self.Bt(x) + self.K)
        phi = self.phi(x)
        dP = ell / (x + ell * (1.0 - x)) ** 2
        value = m0 * tail
        d_agent = dP * tail + m0 * (r / dA) * phi * tail - phi / dA
        return value, d_agent / dP


class PersonalizedValue:
    """Principal's value of the optimal personalized policy for one type, as a
    function of the principal belief, per unit of engaged mass.

    Evaluated in closed form along the one-sided belief paths (tabulated
    antiderivatives), which makes it cheap enough for envelope grids."""

    def __init__(self, ell, value_fn: ValueFunction, delta_A, delta_P=0.0, rho=0.0):
        gap = delta_A - delta_P - rho
        if not gap > 0:
            raise SolverError(
                "personalized values need delta_A > delta_P + rho",
                {"delta_A": delta_A, "delta_P": delta_P, "rho": rho},
            )
        self.ell = float(ell)
        self.value_fn = value_fn
        self.delta_A, self.delta_P, self.rho = float(delta_A), float(delta_P), float(rho)
        rate = delta_P + rho
        roots = _roots(self.ell, value_fn, gap, rate)
        f = _gap_fn(self.ell, value_fn, gap, rate)
        edges = [0.0, *roots, 1.0]
        self.branches = []
        for lo, hi in zip(edges[:-1], edges[1:]):
            rising = float(f(0.5 * (lo + hi))) > 0
            cls = _RevealZeroBranch if rising else _RevealOneBranch
            self.branches.append(cls(self.ell, value_fn, self.delta_A, rate, lo, hi))
        self.edges = np.array(edges)

    def _evaluate(self, mu_P):
        mu = np.atleast_1d(np.asarray(mu_P, dtype=float))
        if np.any((mu < 0.0) | (mu > 1.0)):
            raise DomainError("principal beliefs must lie in [0, 1]")
        x = _agent_from_principal(mu, self.ell)
        val = np.zeros_like(x)
        slope = np.zeros_like(x)
        k = np.clip(np.searchsorted(self.edges, x, side="right") - 1, 0, len(self.branches) - 1)
        for i, br in enumerate(self.branches):
            mask = k == i
            if np.any(mask):
                a, b = br.value_and_slope(x[mask])
                val[mask] = a
                slope[mask] = b
        return val, slope

    def value(self, mu_P):
        out = self._evaluate(mu_P)[0]
        return float(out[0]) if np.ndim(mu_P) == 0 else out

    def slope(self, mu_P):
        out = self._evaluate(mu_P)[1]
        return float(out[0]) if np.ndim(mu_P) == 0 else out


def personalized_value(mu_P, ell, s: Scenario):
    """Principal value of the optimal personalized policy built by the
    single-type solvers at principal belief ``mu_P`` and ratio ``ell``."""
    mu_P = float(mu_P)
    if mu_P <= 0.0 or mu_P >= 1.0:
        return 0.0
    scen = s.with_ratio(mu_P, ell)
    if scen.rho > 0:
        policy, _ = solve_random_exit(scen)
    else:
        policy, _ = solve_patient_principal(scen)
    return principal_value(policy, scen.delta_P, scen.rho)


def continuation_policy(two: TwoTypeScenario, mu_sigma, stay):
    """Personalized policy followed after a transition to ``mu_sigma`` that
    keeps type ``stay`` engaged."""
    ell = two.ells[stay]
    scen = two.type_scenario(stay).with_ratio(float(mu_sigma), ell)
    if scen.rho > 0:
        return solve_random_exit(scen)[0]
    return solve_patient_principal(scen)[0]


# ---------------------------------------------------------------------------
# Envelope and concavification


@dataclass(frozen=True)
class TransitionLottery:
    """Posteriors reached at a transition, with the type that keeps engaging
    (None when the state is revealed and both types leave)."""

    outcomes: tuple
    mu_PE: float

    def __post_init__(self):
        outs = tuple((float(p), float(m), stay) for p, m, stay in self.outcomes)
        object.__setattr__(self, "outcomes", outs)
        object.__setattr__(self, "mu_PE", float(self.mu_PE))
        if not 1 <= len(outs) <= 4:
            raise DomainError(f"a transition lottery has 1 to 4 outcomes, got {len(outs)}")
        total = sum(p for p, _, _ in outs)
        if abs(total - 1.0) > 1e-10:
            raise DomainError(f"lottery probabilities sum to {total}")
        mean = sum(p * m for p, m, _ in outs)
        if abs(mean - self.mu_PE) > 1e-10:
            raise DomainError(f"lottery mean {mean} differs from mu_PE {self.mu_PE}")

    def probability(self, stay):
        return sum(p for p, _, s in self.outcomes if s == stay)

    def mean_posterior(self, stay):
        mass = self.probability(stay)
        if mass <= 0:
            return math.nan
        return sum(p * m for p, m, s in self.outcomes if s == stay) / mass

    def to_dict(self):
        return {
            "mu_PE": self.mu_PE,
            "outcomes": [{"p": p, "mu": m, "stay": s} for p, m, s in self.outcomes],
        }


class TwoTypeValues:
    """Personalized values of both types and the principal's envelope."""

    def __init__(self, two: TwoTypeScenario):
        self.two = two
        v = two.value_fn
        self.V = {
            j: PersonalizedValue(two.ells[j], v, two.delta_A, two.delta_P, two.rho) for j in (STAY_L, STAY_H)
        }
        self.weights = two.weights
        self._switches = None

    def weighted(self, mu, which):
        return self.weights[which] * self.V[which].value(mu)

    def winner(self, mu):
        """Type kept engaged at posterior ``mu`` (ties go to H; None at 0, 1)."""
        mu = np.atleast_1d(np.asarray(mu, dtype=float))
        h = self.weighted(mu, STAY_H)
        l_ = self.weighted(mu, STAY_L)
        out = np.where(h >= l_, STAY_H, STAY_L).astype(object)
        out[(mu <= 0.0) | (mu >= 1.0)] = None
        return out

    def envelope(self, mu):
        h = self.weighted(mu, STAY_H)
        l_ = self.weighted(mu, STAY_L)
        return np.maximum(h, l_)

    def envelope_slope(self, mu):
        mu = np.asarray(mu, dtype=float)
        h = self.weighted(mu, STAY_H)
        l_ = self.weighted(mu, STAY_L)
        sh = self.weights[STAY_H] * self.V[STAY_H].slope(mu)
        sl = self.weights[STAY_L] * self.V[STAY_L].slope(mu)
        return np.where(h >= l_, sh, sl)

    def switch_points(self):
        """Interior beliefs where the winning type changes."""
        if self._switches is None:
            g = np.linspace(0.0, 1.0, 4001)[1:-1]
            d = self.weighted(g, STAY_H) - self.weighted(g, STAY_L)
            f = lambda m: self.weighted(m, STAY_H) - self.weighted(m, STAY_L)
            pts = []
            for i in np.flatnonzero(np.sign(d[:-1]) * np.sign(d[1:]) < 0):
                pts.append(optimize.brentq(f, g[i], g[i + 1], xtol=1e-15, rtol=1e-15))
            self._switches = tuple(pts)
        return self._switches

    def belief_grid(self, n=GRID_POINTS, refine=REFINE_FACTOR):
        """Uniform grid refined around envelope kinks, kinks included."""
        base = np.linspace(0.0, 1.0, n)
        h = 1.0 / (n - 1)
        extra = []
        for sp in self.switch_points():
            extra.append(np.linspace(sp - 2 * h, sp + 2 * h, 4 * refine + 1))
            extra.append([sp])
        grid = np.unique(np.clip(np.concatenate([base, *extra]) if extra else base, 0.0, 1.0))
        return grid

    def type_payoffs(self, mu):
        v = self.two.value_fn
        return {j: type_value(v, mu, self.two.ells[j]) for j in (STAY_L, STAY_H)}

    def type_payoff_slopes(self, mu):
        v = self.two.value_fn
        return {j: type_value_slope(v, mu, self.two.ells[j]) for j in (STAY_L, STAY_H)}

    def objective(self, mu, Lambda_L, Lambda_H):
        vj = self.type_payoffs(mu)
        return self.envelope(mu) + Lambda_L * vj[STAY_L] + Lambda_H * vj[STAY_H]

    def objective_slope(self, mu, Lambda_L, Lambda_H):
        dj = self.type_payoff_slopes(mu)
        return self.envelope_slope(mu) + Lambda_L * dj[STAY_L] + Lambda_H * dj[STAY_H]


def envelope_Vhat(mu, two: TwoTypeScenario, values: TwoTypeValues | None = None):
    """(V_hat(mu), winning type) for the two-type scenario."""
    values = values or TwoTypeValues(two)
    return values.envelope(mu), values.winner(mu)


def concavify(grid, objective, mu_PE, stay_of=None):
    """Supporting chord of the upper concave envelope of ``objective`` (sampled
    on the increasing ``grid``) at ``mu_PE``, as a transition lottery."""
    grid = np.ascontiguousarray(grid, dtype=float)
    objective = np.ascontiguousarray(objective, dtype=float)
    if not (grid[0] <= mu_PE <= grid[-1]):
        raise DomainError(f"mu_PE = {mu_PE} lies outside the grid [{grid[0]}, {grid[-1]}]")
    if not np.all(np.isfinite(objective)):
        raise DomainError("objective must be finite on the grid")
    a, b, w = supporting_chord(grid, objective, float(mu_PE))
    label = stay_of or (lambda m: None)
    if a == b:
        return TransitionLottery(((1.0, float(mu_PE), label(float(mu_PE))),), mu_PE)
    xa, xb = float(grid[a]), float(grid[b])
    return TransitionLottery(((1.0 - w, xa, label(xa)), (w, xb, label(xb))), mu_PE)


def concave_envelope(grid, objective):
    """Upper concave envelope on the grid."""
    return envelope_on_grid(np.ascontiguousarray(grid, dtype=float), np.ascontiguousarray(objective, dtype=float))


# ---------------------------------------------------------------------------
# Steady state


@dataclass
class NonPersonalizedSteadyState:
    mu_P_star: float
    lambda_star: float
    Lambda_L: float
    Lambda_H: float
    lottery: TransitionLottery
    residuals: dict = field(default_factory=dict)
    rates: dict = field(default_factory=dict)
    degenerate: bool = False

    def to_dict(self):
        return {
            "mu_P_star": self.mu_P_star,
            "lambda_star": self.lambda_star,
            "Lambda_L": self.Lambda_L,
            "Lambda_H": self.Lambda_H,
            "lottery": self.lottery.to_dict(),
            "residuals": dict(self.residuals),
            "rates": dict(self.rates),
            "degenerate": self.degenerate,
        }


def _ic_rate(delta_A, v_mu, pooled):
    """Smallest transition rate keeping a type indifferent (inf if none)."""
    gain = pooled - v_mu
    return delta_A * v_mu / gain if gain > 1e-14 else math.inf


def _fischer_burmeister(a, b):
    return math.hypot(a, b) - a - b


class _SteadySystem:
    def __init__(self, two: TwoTypeScenario, values: TwoTypeValues, grid):
        self.two = two
        self.values = values
        self.grid = grid
        self.r = two.principal_rate
        self.kappa = two.patience_gap
        self.dA = two.delta_A
        self.env = values.envelope(grid)
        pays = values.type_payoffs(grid)
        self.vL, self.vH = pays[STAY_L], pays[STAY_H]

    def _common(self, mu, LL, LH, xa, xb, Fa, Fb):
        two, v = self.two, self.two.value_fn
        slope = (Fb - Fa) / (xb - xa)
        cav = Fa + slope * (mu - xa)
        pays = self.values.type_payoffs(mu)
        dpay = self.values.type_payoff_slopes(mu)
        w = (mu - xa) / (xb - xa)
        ot = 1.0 - self.r * cav - self.kappa * (LL * pays[STAY_L] + LH * pays[STAY_H])
        bs = self.r * slope + self.kappa * (LL * dpay[STAY_L] + LH * dpay[STAY_H])
        rates = {}
        for j in (STAY_L, STAY_H):
            ell = two.ells[j]
            pooled = (1.0 - w) * type_value(v, xa, ell) + w * type_value(v, xb, ell)
            rates[j] = _ic_rate(self.dA, pays[j], pooled)
        lam = max(rates.values())
        scale = max(lam, 1e-12) if math.isfinite(lam) else 1.0
        comp = []
        for j, mult in ((STAY_L, LL), (STAY_H, LH)):
            slack = (lam - rates[j]) / scale if math.isfinite(lam) else 1.0
            comp.append(_fischer_burmeister(mult, slack))
        return ot, bs, comp, rates, lam, slope, cav, w

    def grid_residual(self, z):
        mu, LL, LH = z
        F = self.env + LL * self.vL + LH * self.vH
        a, b, _ = supporting_chord(self.grid, F, mu)
        if a == b:
            return np.array([1.0, 1.0, 1.0, 1.0])
        ot, bs, comp, *_ = self._common(mu, LL, LH, self.grid[a], self.grid[b], F[a], F[b])
        return np.array([ot, bs, *comp])


def _single_type_steady(ell, two_like, weights):
    """Identical types: the personalized steady state with full revelation."""
    v, dA, dP, rho = two_like
    gap, rate = dA - dP - rho, dP + rho
    roots = _roots(float(ell), v, gap, rate)
    if not roots:
        raise SolverError("no interior personalized steady state for the common ratio", {"ell": ell})
    xA = roots[0] if len(roots) == 1 else roots[len(roots) // 2]
    mu = float(_principal_from_agent(xA, ell))
    lam = steady_rate(xA, v, dA)
    vj = float(type_value(v, mu, ell))
    chord = (1.0 - mu) * float(type_value(v, 0.0, ell)) + mu * float(type_value(v, 1.0, ell))
    total = 1.0 / (rate * chord + gap * vj)
    slope = float(type_value(v, 1.0, ell)) - float(type_value(v, 0.0, ell))
    bs = rate * total * slope + gap * total * float(type_value_slope(v, mu, ell))
    lot = TransitionLottery(((1.0 - mu, 0.0, None), (mu, 1.0, None)), mu)
    return NonPersonalizedSteadyState(
        mu_P_star=mu,
        lambda_star=lam,
        Lambda_L=weights[STAY_L] * total,
        Lambda_H=weights[STAY_H] * total,
        lottery=lot,
        residuals={"belief_smoothing": bs, "optimal_transition": 0.0},
        rates={STAY_L: lam, STAY_H: lam},
        degenerate=True,
    )


def solve_steady_state_for_ratios(ell_L, ell_H, alpha_H, delta_A, delta_P=0.0, rho=0.0, value_fn=None, mu_P=0.5):
    """Steady state from likelihood ratios; equal ratios reduce to the
    personalized steady state with a full-revelation lottery."""
    value_fn = value_fn or ValueFunction()
    if abs(ell_L - ell_H) <= 1e-12 * max(1.0, ell_H):
        weights = {STAY_L: 1.0 - alpha_H, STAY_H: alpha_H}
        return _single_type_steady(ell_L, (value_fn, delta_A, delta_P, rho), weights)
    two = TwoTypeScenario.from_ratios(ell_L, ell_H, alpha_H, delta_A, delta_P, rho, value_fn, mu_P)
    return solve_steady_state(two)


def _starts():
    for mu in (0.5, 0.3, 0.7, 0.2, 0.8, 0.4, 0.6, 0.1, 0.9):
        for LL in (1.0, 4.0, 0.3):
            for LH in (1.0, 4.0, 0.3):
                yield np.array([mu, LL, LH])


def solve_steady_state(two: TwoTypeScenario, values: TwoTypeValues | None = None, grid_points=GRID_POINTS):
    """Steady state of public communication: grid concavification to find the
    lottery structure, then a continuous bitangent refinement."""
    if not two.patience_gap > 0:
        raise SolverError(
            "steady state needs delta_A > delta_P + rho",
            {"delta_A": two.delta_A, "delta_P": two.delta_P, "rho": two.rho},
        )
    values = values or TwoTypeValues(two)
    grid = values.belief_grid(grid_points)
    system = _SteadySystem(two, values, grid)
    best = None
    tried = []
    for z0 in _starts():
        try:
            res = optimize.least_squares(
                system.grid_residual, z0, bounds=([1e-6, 0.0, 0.0], [1.0 - 1e-6, 1e3, 1e3]),
                xtol=1e-14, ftol=1e-14, gtol=1e-14,
            )
        except (ValueError, FloatingPointError):
            continue
        tried.append((float(res.cost), res.x.tolist()))
        if best is None or res.cost < best.cost:
            best = res
        if best.cost < 1e-12:
            break
    if best is None or best.cost > 1e-6:
        raise SolverError(
            "no steady state found for the two-type system",
            {"best_cost": None if best is None else float(best.cost), "starts": tried[:20]},
        )
    return _refine(system, best.x)


def _end_kind(x, values, h):
    if x <= 0.0:
        return "corner"
    if x >= 1.0:
        return "corner"
    for sp in values.switch_points():
        if abs(x - sp) <= 3 * h:
            return ("kink", sp)
    return "smooth"


def _refine(system: _SteadySystem, z):
    """Continuous solve with the lottery ends as unknowns."""
    values, grid = system.values, system.grid
    mu, LL, LH = (float(c) for c in z)
    F = system.env + LL * system.vL + LH * system.vH
    a, b, _ = supporting_chord(grid, F, mu)
    h = 1.0 / (GRID_POINTS - 1)
    kinds = [_end_kind(float(grid[a]), values, h), _end_kind(float(grid[b]), values, h)]
    ends0 = [float(grid[a]), float(grid[b])]

    def fixed_end(kind, x):
        if kind == "corner":
            return x
        if isinstance(kind, tuple):
            return kind[1]
        return None

    free = [fixed_end(k, x) is None for k, x in zip(kinds, ends0)]

    def unpack(u):
        mu_, LL_, LH_ = u[:3]
        rest = list(u[3:])
        ends = []
        for k, x, f in zip(kinds, ends0, free):
            ends.append(rest.pop(0) if f else fixed_end(k, x))
        return mu_, LL_, LH_, ends

    def resid(u):
        mu_, LL_, LH_, (xa, xb) = unpack(u)
        Fa = float(values.objective(xa, LL_, LH_))
        Fb = float(values.objective(xb, LL_, LH_))
        ot, bs, comp, rates, lam, slope, cav, w = system._common(mu_, LL_, LH_, xa, xb, Fa, Fb)
        out = [ot, bs, *comp]
        for x, f in zip((xa, xb), free):
            if f:
                out.append(float(values.objective_slope(x, LL_, LH_)) - slope)
        return np.array(out)

    u0 = [mu, LL, LH] + [x for x, f in zip(ends0, free) if f]
    sol = optimize.least_squares(resid, u0, xtol=1e-15, ftol=1e-15, gtol=1e-15, method="lm")
    u = sol.x
    mu, LL, LH, (xa, xb) = unpack(u)
    if LL < -1e-8 or LH < -1e-8 or not (0.0 <= xa < mu < xb <= 1.0):
        raise SolverError("steady-state refinement left the admissible region", {"solution": u.tolist()})
    LL, LH = max(LL, 0.0), max(LH, 0.0)
    Fa = float(values.objective(xa, LL, LH))
    Fb = float(values.objective(xb, LL, LH))
    ot, bs, comp, rates, lam, slope, cav, w = system._common(mu, LL, LH, xa, xb, Fa, Fb)
    fine = np.linspace(0.0, 1.0, 20001)
    support = float(np.max(values.objective(fine, LL, LH) - (Fa + slope * (fine - xa))))
    if support > 1e-7:
        raise SolverError(
            "refined chord does not support the objective",
            {"overshoot": support, "solution": [mu, LL, LH, xa, xb]},
        )
    stay = values.winner(np.array([xa, xb]))
    lot = TransitionLottery(((1.0 - w, xa, stay[0]), (w, xb, stay[1])), mu)
    tangency = [float(values.objective_slope(x, LL, LH)) - slope for x, f in zip((xa, xb), free) if f]
    ic = {}
    for j, mult in ((STAY_L, LL), (STAY_H, LH)):
        ell = system.two.ells[j]
        pooled = sum(p * float(type_value(system.two.value_fn, m, ell)) for p, m, _ in lot.outcomes)
        vj = float(type_value(system.two.value_fn, mu, ell))
        ic[j] = lam / (lam + system.dA) * pooled - vj
    residuals = {
        "optimal_transition": float(ot),
        "belief_smoothing": float(bs),
        "complementarity": [float(c) for c in comp],
        "tangency": tangency,
        "ic_L": float(ic[STAY_L]),
        "ic_H": float(ic[STAY_H]),
        "support_overshoot": support,
        "ends": [str(k if not isinstance(k, tuple) else "kink") for k in kinds],
    }
    return NonPersonalizedSteadyState(mu, lam, LL, LH, lot, residuals, dict(rates))


def obedience_report(steady: NonPersonalizedSteadyState, two: TwoTypeScenario):
    """At each interior lottery outcome: the staying type's continuation minus
    its exit payoff, and the leaving type's exit payoff minus what it would
    get by imitating the staying type (both should be >= 0)."""
    out = []
    v = two.value_fn
    for p, mu, stay in steady.lottery.outcomes:
        if stay is None or not (0.0 < mu < 1.0):
            continue
        other = STAY_L if stay == STAY_H else STAY_H
        policy = continuation_policy(two, mu, stay)
        stay_s = two.type_scenario(stay).with_ratio(mu, two.ells[stay])
        own = agent_value(policy, stay_s, 0.0) - v.value(float(stay_s.mu_A))
        imitate = Policy(policy.segments, two.ells[other], mu, policy.binding, dict(policy.meta))
        other_s = two.type_scenario(other).with_ratio(mu, two.ells[other])
        leave = v.value(float(other_s.mu_A)) - agent_value(imitate, other_s, 0.0)
        out.append({"mu": mu, "stay": stay, "stay_slack": float(own), "leave_slack": float(leave)})
    return out


# ---------------------------------------------------------------------------
# Transient path


@dataclass
class TransientPath:
    """Phase-1 path of public communication on a time grid."""

    t: np.ndarray
    mu_P: np.ndarray
    engaged: np.ndarray
    hazard: np.ndarray
    p_l: np.ndarray
    p_h: np.ndarray
    p_none: np.ndarray
    mu_P_l: np.ndarray
    mu_P_h: np.ndarray
    transition_mass: np.ndarray
    posteriors: np.ndarray
    stay: np.ndarray
    steady: NonPersonalizedSteadyState
    convergence_time: float
    objective: float
    program: object = None
    solution: object = None

    def table(self, horizon=None):
        rows = []
        for k in range(len(self.t) - 1):
            if horizon is not None and self.t[k] > horizon:
                break
            rows.append(
                {
                    "t": float(self.t[k]),
                    "mu_P": float(self.mu_P[k]),
                    "p_l": float(self.p_l[k]),
                    "p_h": float(self.p_h[k]),
                    "mu_P_l": float(self.mu_P_l[k]),
                    "mu_P_h": float(self.mu_P_h[k]),
                    "hazard": float(self.hazard[k]),
                }
            )
        return rows


def transition_posteriors(steady: NonPersonalizedSteadyState, count=101):
    """Uniform posterior grid plus the steady-state lottery posteriors."""
    base = np.linspace(0.0, 1.0, count)
    extra = [m for _, m, _ in steady.lottery.outcomes]
    return np.unique(np.concatenate([base, extra]))


def solve_transient(
    two: TwoTypeScenario,
    steady: NonPersonalizedSteadyState | None = None,
    values: TwoTypeValues | None = None,
    T_max=40.0,
    N=160,
    posteriors=None,
    mu_P0=None,
    tol=0.01,
):
    """Optimal phase-1 path from the prior by the discrete program, with the
    continuous steady state as the reference for convergence."""
    values = values or TwoTypeValues(two)
    steady = steady or solve_steady_state(two, values)
    post = transition_posteriors(steady, POSTERIOR_POINTS) if posteriors is None else np.asarray(posteriors, dtype=float)
    payoff = values.envelope(post)
    stay = values.winner(post)
    mu0 = float(two.mu_P if mu_P0 is None else mu_P0)
    prog = TransitionProgram(
        mu_P=mu0,
        posteriors=post,
        payoff=payoff,
        ells=(two.ells[STAY_L], two.ells[STAY_H]),
        value_fn=two.value_fn,
        kernel=DiscountKernel(lambda t: np.exp(-two.delta_A * np.asarray(t)), two.rho),
        principal_rate=two.principal_rate,
        rho=two.rho,
        T_max=float(T_max),
        N=int(N),
    )
    sol = prog.solve()
    if not sol.converged:
        raise SolverError("transient program did not converge", {"history": sol.history[-5:]})
    G = sol.G
    h = sol.h
    n = sol.N
    x = sol.moved[:n]
    mass = x.sum(axis=1)
    engaged = G[:n]
    safe = np.maximum(engaged, 1e-300)
    mu_P = np.where(engaged > 1e-14, sol.G1[:n] / safe, np.nan)
    # per-step transition probability expressed as a continuous-time hazard
    step_prob = np.clip(np.where(engaged > 1e-14, mass / safe, 0.0), 0.0, 1.0 - 1e-16)
    hazard = -np.log1p(-step_prob) / h
    is_l = np.array([s == STAY_L for s in stay])
    is_h = np.array([s == STAY_H for s in stay])
    is_none = ~(is_l | is_h)
    with np.errstate(invalid="ignore", divide="ignore"):
        tot = np.where(mass > 1e-14, mass, np.nan)
        p_l = x[:, is_l].sum(axis=1) / tot
        p_h = x[:, is_h].sum(axis=1) / tot
        p_none = x[:, is_none].sum(axis=1) / tot
        mu_P_l = (x[:, is_l] * post[is_l]).sum(axis=1) / x[:, is_l].sum(axis=1)
        mu_P_h = (x[:, is_h] * post[is_h]).sum(axis=1) / x[:, is_h].sum(axis=1)
    conv = math.inf
    close = np.abs(mu_P - steady.mu_P_star) <= tol
    for k in range(n):
        if np.all(close[k : n // 2]) and k < n // 2:
            conv = float(sol.t[k])
            break
    return TransientPath(
        t=sol.t[:n],
        mu_P=mu_P,
        engaged=engaged,
        hazard=hazard,
        p_l=p_l,
        p_h=p_h,
        p_none=p_none,
        mu_P_l=mu_P_l,
        mu_P_h=mu_P_h,
        transition_mass=x,
        posteriors=post,
        stay=stay,
        steady=steady,
        convergence_time=conv,
        objective=sol.objective,
        program=prog,
        solution=sol,
    )


__all__ = [
    "NonPersonalizedSteadyState",
    "PersonalizedValue",
    "TransientPath",
    "TransitionLottery",
    "TwoTypeValues",
    "concave_envelope",
    "concavify",
    "continuation_policy",
    "envelope_Vhat",
    "obedience_report",
    "personalized_value",
    "solve_steady_state",
    "solve_steady_state_for_ratios",
    "solve_transient",
    "upper_hull_indices",
]
