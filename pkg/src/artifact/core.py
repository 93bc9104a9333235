"""Domain primitives: beliefs, likelihood ratios, exit payoffs, discounting,
and scenario containers.

Beliefs are probabilities of the state ``omega = 1``.  The principal and
the agent may start from different priors but observe the same signals, so
the odds ratio between their beliefs (the likelihood ratio ``ell``) stays
fixed along every no-news path.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import DomainError

BELIEF_EPS = 1e-12


class Belief(float):
    """A probability in [0, 1]."""

    def __new__(cls, value, name="belief"):
        x = float(value)
        if not (0.0 <= x <= 1.0) or math.isnan(x):
            raise DomainError(f"{name} must lie in [0, 1], got {value!r}")
        return super().__new__(cls, x)

    @property
    def value(self):
        return float(self)


class LikelihoodRatio(float):
    """A strictly positive odds ratio between the agent's and principal's beliefs."""

    def __new__(cls, value, name="likelihood ratio"):
        x = float(value)
        if not (x > 0.0) or math.isinf(x):
            raise DomainError(f"{name} must be positive and finite, got {value!r}")
        return super().__new__(cls, x)

    @property
    def value(self):
        return float(self)


def clamp_belief(mu):
    """Keep beliefs away from 0 and 1 inside solvers."""
    return np.clip(mu, BELIEF_EPS, 1.0 - BELIEF_EPS)


def _interior(mu, name):
    x = float(mu)
    if not (0.0 < x < 1.0):
        raise DomainError(f"{name} must be interior to (0, 1), got {mu!r}")
    return x


def likelihood_ratio(mu_A, mu_P):
    """Odds of the agent's belief divided by odds of the principal's belief."""
    a = _interior(mu_A, "mu_A")
    p = _interior(mu_P, "mu_P")
    return LikelihoodRatio(a / (1.0 - a) * (1.0 - p) / p)


def agent_belief_from_principal(mu_P, ell):
    """Map a principal belief to the agent belief with the same signal history.

    Vectorised over ``mu_P``; a scalar input returns a ``Belief``.
    """
    ell = float(ell)
    if not ell > 0.0:
        raise DomainError(f"likelihood ratio must be positive, got {ell!r}")
    mu = np.asarray(mu_P, dtype=float)
    out = ell * mu / (ell * mu + 1.0 - mu)
    if out.ndim == 0:
        return Belief(float(out))
    return out


def principal_belief_from_agent(mu_A, ell):
    """Inverse of :func:`agent_belief_from_principal`."""
    ell = float(ell)
    if not ell > 0.0:
        raise DomainError(f"likelihood ratio must be positive, got {ell!r}")
    mu = np.asarray(mu_A, dtype=float)
    out = mu / (mu + ell * (1.0 - mu))
    if out.ndim == 0:
        return Belief(float(out))
    return out


# ---------------------------------------------------------------------------
# Exit payoffs


@dataclass(frozen=True)
class ValueFunction:
    """Symmetric, strictly convex exit payoff normalised to ``v(0) = v(1) = 1``.

    ``quadratic``: ``v = 1 - 4 c mu (1 - mu)`` with ``0 < c <= 1/2``.
    ``power``: ``v = 1 - depth + depth |2 mu - 1|**exponent`` with
    ``exponent > 1`` and ``0 < depth < 1``; exponent 2 is the quadratic with
    ``c = depth``.
    """

    family: str = "quadratic"
    curvature: float = 0.5
    exponent: float = 2.0
    depth: float = 0.5

    def __post_init__(self):
        if self.family == "quadratic":
            if not (0.0 < self.curvature <= 0.5):
                raise DomainError(f"quadratic curvature must be in (0, 1/2], got {self.curvature}")
        elif self.family == "power":
            if not self.exponent > 1.0:
                raise DomainError(f"power exponent must exceed 1, got {self.exponent}")
            if not (0.0 < self.depth < 1.0):
                raise DomainError(f"power depth must be in (0, 1), got {self.depth}")
        else:
            raise DomainError(f"unknown value-function family {self.family!r}")

    @classmethod
    def quadratic(cls, curvature=0.5):
        return cls("quadratic", curvature=float(curvature))

    @classmethod
    def power(cls, exponent, depth=0.5):
        return cls("power", exponent=float(exponent), depth=float(depth))

    def to_dict(self):
        if self.family == "quadratic":
            return {"family": "quadratic", "curvature": self.curvature}
        return {"family": "power", "exponent": self.exponent, "depth": self.depth}

    @property
    def top(self):
        """v(1), the payoff of a fully informed agent."""
        return 1.0

    def value(self, mu):
        mu = np.asarray(mu, dtype=float)
        if self.family == "quadratic":
            out = 1.0 - 4.0 * self.curvature * mu * (1.0 - mu)
        else:
            out = 1.0 - self.depth + self.depth * np.abs(2.0 * mu - 1.0) ** self.exponent
        return float(out) if out.ndim == 0 else out

    def slope(self, mu):
        mu = np.asarray(mu, dtype=float)
        if self.family == "quadratic":
            out = -4.0 * self.curvature * (1.0 - 2.0 * mu)
        else:
            z = 2.0 * mu - 1.0
            out = 2.0 * self.depth * self.exponent * np.sign(z) * np.abs(z) ** (self.exponent - 1.0)
        return float(out) if out.ndim == 0 else out

    def curvature_at(self, mu):
        mu = np.asarray(mu, dtype=float)
        if self.family == "quadratic":
            out = np.full_like(mu, 8.0 * self.curvature)
        else:
            z = np.abs(2.0 * mu - 1.0)
            p = self.exponent
            with np.errstate(divide="ignore"):
                out = 4.0 * self.depth * p * (p - 1.0) * z ** (p - 2.0)
        return float(out) if np.ndim(out) == 0 else out

    def bregman_gap(self, x, y):
        """v(y) - v(x) - v'(x) (y - x), computed without cancellation for the
        quadratic family."""
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        if self.family == "quadratic":
            out = 4.0 * self.curvature * (y - x) ** 2
        else:
            out = self.value(y) - self.value(x) - self.slope(x) * (y - x)
        return float(out) if np.ndim(out) == 0 else out

    def drift_factor_reveal_one(self, x):
        """Belief-to-clock density when state 1 is revealed and, absent news,
        the belief drifts down: [v(1) - v - v'(1 - x)] / [(1 - x) v]."""
        x = np.asarray(x, dtype=float)
        if self.family == "quadratic":
            out = 4.0 * self.curvature * (1.0 - x) / self.value(x)
        else:
            with np.errstate(invalid="ignore", divide="ignore"):
                out = self.bregman_gap(x, 1.0) / ((1.0 - x) * self.value(x))
            out = np.where(x >= 1.0, 0.0, out)
        return float(out) if np.ndim(out) == 0 else out

    def drift_factor_reveal_zero(self, x):
        """Belief-to-clock density when state 0 is revealed and, absent news,
        the belief drifts up: [v(1) - v + v' x] / [x v]."""
        x = np.asarray(x, dtype=float)
        if self.family == "quadratic":
            out = 4.0 * self.curvature * x / self.value(x)
        else:
            with np.errstate(invalid="ignore", divide="ignore"):
                out = self.bregman_gap(x, 0.0) / (x * self.value(x))
            out = np.where(x <= 0.0, 0.0, out)
        return float(out) if np.ndim(out) == 0 else out


def value_at(v: ValueFunction, mu):
    return v.value(Belief(mu))


def value_slope(v: ValueFunction, mu):
    return v.slope(Belief(mu))


def type_value(v: ValueFunction, mu_P, ell):
    """Agent payoff re-weighted to the principal's measure:
    (ell mu + 1 - mu) v(ell mu / (ell mu + 1 - mu))."""
    mu = np.asarray(mu_P, dtype=float)
    weight = ell * mu + 1.0 - mu
    out = weight * v.value(ell * mu / weight)
    return float(out) if np.ndim(out) == 0 else out


def type_value_slope(v: ValueFunction, mu_P, ell):
    """Derivative of :func:`type_value` in the principal belief."""
    mu = np.asarray(mu_P, dtype=float)
    weight = ell * mu + 1.0 - mu
    x = ell * mu / weight
    out = (ell - 1.0) * v.value(x) + ell * v.slope(x) / weight
    return float(out) if np.ndim(out) == 0 else out


# ---------------------------------------------------------------------------
# Discounting


@dataclass(frozen=True)
class DiscountSpec:
    """Agent's discount factor D(T) with D(0) = 1.

    kinds: ``exponential`` (rate), ``habit`` (delta_A, lam, H0, h) and
    ``boredom`` (delta_A, gamma).
    """

    kind: str = "exponential"
    rate: float = 0.0
    delta_A: float = 0.0
    lam: float = 0.0
    H0: float = 0.0
    h: float = 0.0
    gamma: float = 0.0

    def __post_init__(self):
        if self.kind == "exponential":
            if not self.rate > 0.0:
                raise DomainError(f"exponential rate must be positive, got {self.rate}")
        elif self.kind == "habit":
            if not (self.delta_A > 0 and self.lam > 0 and self.H0 >= 0 and self.h >= 0):
                raise DomainError("habit discount needs delta_A > 0, lam > 0, H0 >= 0, h >= 0")
            if self.H0 + self.h / self.lam <= 0:
                raise DomainError("habit discount needs a positive initial stock H0 + h/lam")
            if self.lam >= self.delta_A:
                warnings.warn(
                    "habit discount with lam >= delta_A is not decreasing; "
                    "solvers that need a decreasing D will reject it",
                    stacklevel=3,
                )
        elif self.kind == "boredom":
            if not (self.delta_A > 0 and self.gamma >= 0):
                raise DomainError("boredom discount needs delta_A > 0 and gamma >= 0")
        else:
            raise DomainError(f"unknown discount kind {self.kind!r}")

    @classmethod
    def exponential(cls, rate):
        return cls("exponential", rate=float(rate))

    @classmethod
    def habit(cls, delta_A, lam, H0, h):
        return cls("habit", delta_A=float(delta_A), lam=float(lam), H0=float(H0), h=float(h))

    @classmethod
    def boredom(cls, delta_A, gamma):
        return cls("boredom", delta_A=float(delta_A), gamma=float(gamma))

    def to_dict(self):
        if self.kind == "exponential":
            return {"kind": "exponential", "rate": self.rate}
        if self.kind == "habit":
            return {"kind": "habit", "delta_A": self.delta_A, "lam": self.lam, "H0": self.H0, "h": self.h}
        return {"kind": "boredom", "delta_A": self.delta_A, "gamma": self.gamma}

    @property
    def is_exponential(self):
        return self.kind == "exponential"

    @property
    def habit_weights(self):
        """(alpha, beta) with D proportional to alpha e^{(lam - delta_A)T} + beta e^{-delta_A T}."""
        return self.H0, self.h / self.lam

    def D(self, T):
        T = np.asarray(T, dtype=float)
        if self.kind == "exponential":
            out = np.exp(-self.rate * T)
        elif self.kind == "habit":
            a, b = self.habit_weights
            out = (a * np.exp((self.lam - self.delta_A) * T) + b * np.exp(-self.delta_A * T)) / (a + b)
        else:
            out = np.exp(-self.delta_A * T - self.gamma * T * T)
        return float(out) if out.ndim == 0 else out

    def dD(self, T):
        T = np.asarray(T, dtype=float)
        if self.kind == "exponential":
            out = -self.rate * np.exp(-self.rate * T)
        elif self.kind == "habit":
            a, b = self.habit_weights
            out = (
                a * (self.lam - self.delta_A) * np.exp((self.lam - self.delta_A) * T)
                - b * self.delta_A * np.exp(-self.delta_A * T)
            ) / (a + b)
        else:
            out = -(self.delta_A + 2.0 * self.gamma * T) * self.D(T)
        return float(out) if np.ndim(out) == 0 else out

    def d2D(self, T):
        T = np.asarray(T, dtype=float)
        if self.kind == "exponential":
            out = self.rate ** 2 * np.exp(-self.rate * T)
        elif self.kind == "habit":
            a, b = self.habit_weights
            g = self.lam - self.delta_A
            out = (a * g * g * np.exp(g * T) + b * self.delta_A ** 2 * np.exp(-self.delta_A * T)) / (a + b)
        else:
            s = self.delta_A + 2.0 * self.gamma * T
            out = (s * s - 2.0 * self.gamma) * self.D(T)
        return float(out) if np.ndim(out) == 0 else out

    def hazard(self, T):
        """-D'(T)/D(T), the instantaneous impatience."""
        T = np.asarray(T, dtype=float)
        if self.kind == "exponential":
            out = np.full_like(T, self.rate)
        elif self.kind == "habit":
            a, b = self.habit_weights
            out = self.delta_A - self.lam * a / (a + b * np.exp(-self.lam * T))
        else:
            out = self.delta_A + 2.0 * self.gamma * T
        return float(out) if np.ndim(out) == 0 else out

    def log_D(self, T):
        T = np.asarray(T, dtype=float)
        if self.kind == "exponential":
            out = -self.rate * T
        elif self.kind == "habit":
            a, b = self.habit_weights
            out = -self.delta_A * T + np.log((a * np.exp(self.lam * T) + b) / (a + b))
        else:
            out = -self.delta_A * T - self.gamma * T * T
        return float(out) if np.ndim(out) == 0 else out


# ---------------------------------------------------------------------------
# Scenarios


@dataclass(frozen=True)
class Scenario:
    """One single-type instance: priors, rates, exit payoff and discounting."""

    mu_P: float
    mu_A: float
    delta_A: float
    delta_P: float = 0.0
    rho: float = 0.0
    value_fn: ValueFunction = field(default_factory=ValueFunction)
    discount: DiscountSpec | None = None

    def __post_init__(self):
        object.__setattr__(self, "mu_P", Belief(self.mu_P, "mu_P"))
        object.__setattr__(self, "mu_A", Belief(self.mu_A, "mu_A"))
        if not self.delta_A > 0:
            raise DomainError(f"delta_A must be positive, got {self.delta_A}")
        if not self.delta_P >= 0:
            raise DomainError(f"delta_P must be non-negative, got {self.delta_P}")
        if not self.rho >= 0:
            raise DomainError(f"rho must be non-negative, got {self.rho}")
        object.__setattr__(self, "delta_A", float(self.delta_A))
        object.__setattr__(self, "delta_P", float(self.delta_P))
        object.__setattr__(self, "rho", float(self.rho))
        if self.discount is None:
            object.__setattr__(self, "discount", DiscountSpec.exponential(self.delta_A))

    @property
    def ell(self):
        return likelihood_ratio(self.mu_A, self.mu_P)

    @property
    def principal_rate(self):
        """Effective discount rate of the principal, delta_P + rho."""
        return self.delta_P + self.rho

    @property
    def patience_gap(self):
        """delta_A - delta_P - rho, the margin by which the agent is more impatient."""
        return self.delta_A - self.delta_P - self.rho

    def with_priors(self, mu_P=None, mu_A=None):
        return replace(
            self,
            mu_P=self.mu_P if mu_P is None else mu_P,
            mu_A=self.mu_A if mu_A is None else mu_A,
        )

    def with_ratio(self, mu_P, ell):
        """Scenario with principal prior ``mu_P`` and agent prior implied by ``ell``."""
        return replace(self, mu_P=mu_P, mu_A=float(agent_belief_from_principal(mu_P, ell)))

    def mirrored(self):
        """Relabel the states: beliefs become 1 - mu."""
        return replace(self, mu_P=1.0 - self.mu_P, mu_A=1.0 - self.mu_A)

    def to_dict(self):
        return {
            "mu_P": float(self.mu_P),
            "mu_A": float(self.mu_A),
            "delta_A": self.delta_A,
            "delta_P": self.delta_P,
            "rho": self.rho,
            "value_fn": self.value_fn.to_dict(),
            "discount": self.discount.to_dict(),
        }


@dataclass(frozen=True)
class TwoTypeScenario:
    """Public-communication instance with a low and a high agent type."""

    mu_P: float
    mu_A_L: float
    mu_A_H: float
    alpha_H: float
    delta_A: float
    delta_P: float = 0.0
    rho: float = 0.0
    value_fn: ValueFunction = field(default_factory=ValueFunction)

    def __post_init__(self):
        for name in ("mu_P", "mu_A_L", "mu_A_H"):
            b = Belief(getattr(self, name), name)
            if not (0.0 < b < 1.0):
                raise DomainError(f"{name} must be interior, got {float(b)}")
            object.__setattr__(self, name, b)
        if not self.mu_A_L < self.mu_A_H:
            raise DomainError(f"need mu_A_L < mu_A_H, got {float(self.mu_A_L)} >= {float(self.mu_A_H)}")
        if not (0.0 < self.alpha_H < 1.0):
            raise DomainError(f"alpha_H must be in (0, 1), got {self.alpha_H}")
        if not self.delta_A > 0:
            raise DomainError(f"delta_A must be positive, got {self.delta_A}")
        if not (self.delta_P >= 0 and self.rho >= 0):
            raise DomainError("delta_P and rho must be non-negative")
        for name in ("alpha_H", "delta_A", "delta_P", "rho"):
            object.__setattr__(self, name, float(getattr(self, name)))

    @classmethod
    def from_ratios(cls, ell_L, ell_H, alpha_H, delta_A, delta_P=0.0, rho=0.0, value_fn=None, mu_P=0.5):
        """Build from likelihood ratios directly, at a reference principal prior."""
        if not ell_L < ell_H:
            raise DomainError(f"need ell_L < ell_H, got {ell_L} >= {ell_H}")
        return cls(
            mu_P=mu_P,
            mu_A_L=float(agent_belief_from_principal(mu_P, ell_L)),
            mu_A_H=float(agent_belief_from_principal(mu_P, ell_H)),
            alpha_H=alpha_H,
            delta_A=delta_A,
            delta_P=delta_P,
            rho=rho,
            value_fn=value_fn or ValueFunction(),
        )

    @property
    def alpha_L(self):
        return 1.0 - self.alpha_H

    @property
    def ell_L(self):
        return likelihood_ratio(self.mu_A_L, self.mu_P)

    @property
    def ell_H(self):
        return likelihood_ratio(self.mu_A_H, self.mu_P)

    @property
    def ells(self):
        return {"L": float(self.ell_L), "H": float(self.ell_H)}

    @property
    def weights(self):
        return {"L": self.alpha_L, "H": self.alpha_H}

    @property
    def principal_rate(self):
        return self.delta_P + self.rho

    @property
    def patience_gap(self):
        return self.delta_A - self.delta_P - self.rho

    def type_scenario(self, which):
        mu_A = self.mu_A_H if which == "H" else self.mu_A_L
        return Scenario(
            mu_P=self.mu_P,
            mu_A=mu_A,
            delta_A=self.delta_A,
            delta_P=self.delta_P,
            rho=self.rho,
            value_fn=self.value_fn,
        )

    def to_dict(self):
        return {
            "mu_P": float(self.mu_P),
            "mu_A_L": float(self.mu_A_L),
            "mu_A_H": float(self.mu_A_H),
            "alpha_H": self.alpha_H,
            "delta_A": self.delta_A,
            "delta_P": self.delta_P,
            "rho": self.rho,
            "value_fn": self.value_fn.to_dict(),
        }


def marginal_cost_of_engagement(s: Scenario, T):
    """Agent's marginal delay cost over the principal's marginal engagement
    benefit, -D'(T) e^{delta_P T}; equals delta_A e^{-(delta_A - delta_P) T}
    under exponential discounting."""
    T = np.asarray(T, dtype=float)
    if np.any(T < 0):
        raise DomainError("time must be non-negative")
    if s.discount.is_exponential:
        d = s.discount.rate
        out = d * np.exp(-(d - s.delta_P) * T)
    else:
        out = -s.discount.dD(T) * np.exp(s.delta_P * T)
    return float(out) if out.ndim == 0 else out
