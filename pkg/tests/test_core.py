import math

import numpy as np
import pytest

from artifact.core import (
    Belief,
    DiscountSpec,
    LikelihoodRatio,
    Scenario,
    TwoTypeScenario,
    ValueFunction,
    agent_belief_from_principal,
    likelihood_ratio,
    marginal_cost_of_engagement,
    principal_belief_from_agent,
    type_value,
    type_value_slope,
)
from artifact.errors import DomainError


def test_belief_rejects_values_outside_unit_interval():
    assert Belief(0.3) == 0.3
    for bad in (-0.1, 1.1, float("nan")):
        with pytest.raises(DomainError):
            Belief(bad)


def test_likelihood_ratio_must_be_positive_and_finite():
    for bad in (0.0, -1.0, float("inf")):
        with pytest.raises(DomainError):
            LikelihoodRatio(bad)


def test_ratio_maps_invert_each_other():
    mu_P = np.linspace(0.01, 0.99, 99)
    for ell in (0.2, 1.0, 3.5):
        mu_A = agent_belief_from_principal(mu_P, ell)
        assert np.allclose(principal_belief_from_agent(mu_A, ell), mu_P, atol=1e-14)
        assert np.allclose(mu_A / (1 - mu_A) * (1 - mu_P) / mu_P, ell, rtol=1e-12)


def test_likelihood_ratio_of_priors():
    assert likelihood_ratio(0.5, 0.5) == pytest.approx(1.0)
    assert likelihood_ratio(0.75, 0.5) == pytest.approx(3.0)
    with pytest.raises(DomainError):
        likelihood_ratio(1.0, 0.5)


@pytest.mark.parametrize("v", [ValueFunction.quadratic(0.5), ValueFunction.quadratic(0.2), ValueFunction.power(3.0, 0.6)])
def test_value_function_normalized_symmetric_and_convex(v):
    x = np.linspace(0.0, 1.0, 101)
    assert v.value(0.0) == pytest.approx(1.0) and v.value(1.0) == pytest.approx(1.0)
    assert np.allclose(v.value(x), v.value(1 - x), atol=1e-14)
    assert np.all(np.diff(v.value(x), 2) > 0)
    h = 1e-6
    inner = x[1:-1]
    fd = (v.value(inner + h) - v.value(inner - h)) / (2 * h)
    assert np.allclose(v.slope(inner), fd, atol=1e-7)


def test_value_function_rejects_bad_parameters():
    with pytest.raises(DomainError):
        ValueFunction.quadratic(0.7)
    with pytest.raises(DomainError):
        ValueFunction.power(1.0)
    with pytest.raises(DomainError):
        ValueFunction("cubic")


def test_type_value_slope_matches_finite_difference():
    v = ValueFunction.quadratic(0.5)
    mu = np.linspace(0.05, 0.95, 19)
    h = 1e-6
    for ell in (0.3, 2.0):
        fd = (type_value(v, mu + h, ell) - type_value(v, mu - h, ell)) / (2 * h)
        assert np.allclose(type_value_slope(v, mu, ell), fd, atol=1e-6)


def test_discount_kinds_and_hazard():
    exp = DiscountSpec.exponential(0.2)
    assert exp.is_exponential
    assert exp.to_dict() == {"kind": "exponential", "rate": 0.2}
    habit = DiscountSpec.habit(0.2, 0.15, 1.0, 0.1)
    assert not habit.is_exponential
    assert habit.hazard(0.0) > 0
    with pytest.raises(DomainError):
        DiscountSpec.exponential(0.0)
    with pytest.raises(DomainError):
        DiscountSpec("weird")


def test_scenario_derived_rates():
    s = Scenario(0.5, 0.75, 0.3, 0.1, 0.05)
    assert s.ell == pytest.approx(3.0)
    assert s.principal_rate == pytest.approx(0.15)
    assert s.patience_gap == pytest.approx(0.15)
    assert s.discount.rate == pytest.approx(0.3)
    m = s.mirrored()
    assert (float(m.mu_P), float(m.mu_A)) == pytest.approx((0.5, 0.25))
    r = s.with_ratio(0.4, 2.0)
    assert r.ell == pytest.approx(2.0)
    with pytest.raises(DomainError):
        Scenario(0.5, 0.5, 0.0)


def test_two_type_scenario_validation_and_ratios():
    two = TwoTypeScenario(0.55, 0.196, 0.647, 0.6, 0.25, 0.0, 0.05)
    assert two.ells["L"] < 1 < two.ells["H"]
    assert two.weights == {"L": pytest.approx(0.4), "H": pytest.approx(0.6)}
    rebuilt = TwoTypeScenario.from_ratios(two.ells["L"], two.ells["H"], 0.6, 0.25, 0.0, 0.05, mu_P=0.55)
    assert float(rebuilt.mu_A_L) == pytest.approx(0.196)
    with pytest.raises(DomainError):
        TwoTypeScenario(0.55, 0.7, 0.3, 0.6, 0.25)


def test_marginal_cost_of_engagement_exponential_is_monotone():
    s = Scenario(0.5, 0.5, 0.2, 0.1)
    t = np.linspace(0, 20, 50)
    mce = np.array([marginal_cost_of_engagement(s, x) for x in t])
    assert np.all(np.isfinite(mce))
    assert np.all(np.diff(mce) <= 0) or np.all(np.diff(mce) >= 0)
    assert math.isfinite(float(mce[0]))
