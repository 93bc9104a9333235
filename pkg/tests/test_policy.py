import json
import math

import numpy as np
import pytest

from artifact.core import Scenario, ValueFunction
from artifact.errors import DomainError, UndefinedContinuation
from artifact.policy import (
    ATOM,
    FULL_REVEAL,
    POISSON_BOTH,
    SILENCE,
    Policy,
    PolicySegment,
    agent_value,
    ic_residual,
    mirror_policy,
    policy_csv,
    policy_json,
    principal_value,
)


def abrupt(T, mu=0.5):
    return Policy([PolicySegment(SILENCE, 0.0, T, mu, mu), PolicySegment(FULL_REVEAL, T, T, mu, mu)], 1.0, mu)


def poisson(rate, mu=0.5):
    return Policy([PolicySegment(POISSON_BOTH, 0.0, math.inf, mu, mu, rate=rate)], 1.0, mu)


def test_tiling_is_validated():
    with pytest.raises(DomainError):
        Policy([PolicySegment(SILENCE, 1.0, 2.0, 0.5, 0.5), PolicySegment(FULL_REVEAL, 2.0, 2.0, 0.5, 0.5)], 1.0, 0.5)
    with pytest.raises(DomainError):
        Policy([PolicySegment(SILENCE, 0.0, 2.0, 0.5, 0.5)], 1.0, 0.5)
    with pytest.raises(DomainError):
        PolicySegment(ATOM, 0.0, 0.0, 0.5, 0.5, state=None, reveal_prob=0.5)


def test_abrupt_policy_survival_and_value():
    p = abrupt(3.0, 0.6)
    g1, g0 = p.engagement_probs(np.array([0.0, 2.9, 3.0]))
    assert g1[:2] == pytest.approx([0.6, 0.6]) and g0[:2] == pytest.approx([0.4, 0.4])
    assert g1[2] == 0.0 and g0[2] == 0.0
    assert principal_value(p, 0.1) == pytest.approx((1 - math.exp(-0.3)) / 0.1, rel=1e-10)
    assert principal_value(p, 0.0) == pytest.approx(3.0, rel=1e-10)


def test_constant_poisson_survival_and_value():
    p = poisson(0.4)
    t = np.linspace(0, 10, 11)
    g1, g0 = p.engagement_probs(t)
    assert np.allclose(g1 + g0, np.exp(-0.4 * t), rtol=1e-12)
    assert principal_value(p, 0.1) == pytest.approx(1 / 0.5, rel=1e-10)
    assert principal_value(p, 0.1, rho=0.05) == pytest.approx(1 / 0.55, rel=1e-10)


def test_symmetric_rate_keeps_agent_indifferent():
    v = ValueFunction.quadratic(0.5)
    s = Scenario(0.5, 0.5, 0.2, 0.0, 0.0, v)
    p = poisson(0.2)
    for t in (0.0, 1.0, 7.5):
        assert ic_residual(p, s, t) == pytest.approx(0.0, abs=1e-12)
    assert agent_value(poisson(0.4), s, 0.0) > v.value(0.5)


def test_agent_value_undefined_after_full_reveal():
    s = Scenario(0.5, 0.5, 0.2)
    with pytest.raises(UndefinedContinuation):
        agent_value(abrupt(2.0), s, 2.0)


def test_atom_reveals_with_given_probability():
    segs = [
        PolicySegment(ATOM, 0.0, 0.0, 0.5, 2 / 3, state=0, reveal_prob=0.5),
        PolicySegment(SILENCE, 0.0, 1.0, 2 / 3, 2 / 3),
        PolicySegment(FULL_REVEAL, 1.0, 1.0, 2 / 3, 2 / 3),
    ]
    p = Policy(segs, 1.0, 0.5)
    g1, g0 = p.engagement_probs(np.array([0.5]))
    assert g1[0] == pytest.approx(0.5) and g0[0] == pytest.approx(0.25)
    assert p.mu_A(np.array([0.5]))[0] == pytest.approx(2 / 3)


def test_mirror_swaps_states():
    p = Policy([PolicySegment(SILENCE, 0.0, 1.0, 0.3, 0.3), PolicySegment(FULL_REVEAL, 1.0, 1.0, 0.3, 0.3)], 1.0, 0.3)
    m = mirror_policy(p)
    assert float(m.mu_P0) == pytest.approx(0.7)
    g1, g0 = p.engagement_probs(np.array([0.5]))
    h1, h0 = m.engagement_probs(np.array([0.5]))
    assert (g1[0], g0[0]) == pytest.approx((h0[0], h1[0]))


def test_csv_and_json_exports():
    p = abrupt(2.0)
    text = policy_csv(p, 0.5, 3.0)
    lines = text.strip().splitlines()
    assert lines[0] == "t,G1,G0,mu_A,mu_P,hazard_state0,hazard_state1,segment_kind"
    assert len(lines) == 1 + 7
    assert lines[1].startswith("0,0.5,0.5,0.5,0.5")
    assert policy_csv(p, 0.5, 3.0) == text
    doc = json.loads(policy_json(p))
    assert [s["kind"] for s in doc["segments"]] == [SILENCE, FULL_REVEAL]
    assert doc["mu_P0"] == 0.5
