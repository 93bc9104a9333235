import math

import numpy as np
import pytest

from artifact.core import Scenario, ValueFunction
from artifact.extensions import solve_random_exit
from artifact.montecarlo import (
    CAUSE_CENSORED,
    CAUSE_EXOGENOUS,
    CAUSE_REVEAL,
    SimConfig,
    dominates,
    empirical_cdf,
    exit_cdfs,
    invert_log_survival,
    path_uniforms,
    simulate_policy,
)
from artifact.policy import FULL_REVEAL, POISSON_BOTH, SILENCE, Policy, PolicySegment

V = ValueFunction.quadratic(0.5)


def test_path_streams_do_not_depend_on_batching():
    a = path_uniforms(7, 10)
    b = path_uniforms(7, 4, start=6)
    assert np.array_equal(a[6:], b)
    assert not np.array_equal(path_uniforms(8, 10), a)
    assert np.all((a > 0) & (a < 1))


def test_survival_inversion_matches_numpy_fallback():
    t = np.linspace(0, 10, 101)
    log_s = -0.3 * t
    targets = np.log(np.linspace(0.06, 0.99, 50))
    out = invert_log_survival(t, log_s, targets)
    assert np.allclose(out, -targets / 0.3, atol=1e-12)
    assert np.array_equal(out, invert_log_survival.py_func(t, log_s, targets))
    assert math.isinf(invert_log_survival(t, log_s, np.array([-5.0]))[0])


def test_constant_rate_exits_are_exponential():
    p = Policy([PolicySegment(POISSON_BOTH, 0.0, math.inf, 0.5, 0.5, rate=0.3)], 1.0, 0.5)
    res = simulate_policy(p, SimConfig(20000, 3))
    mean, se = res.exit_time.mean(), res.exit_time.std() / math.sqrt(len(res))
    assert abs(mean - 1 / 0.3) <= 3 * se
    grid = np.linspace(0, 15, 31)
    assert np.max(np.abs(empirical_cdf(res.exit_time, grid) - (1 - np.exp(-0.3 * grid)))) < 0.015
    assert set(res.exit_cause) == {CAUSE_REVEAL}
    assert np.array_equal(res.exit_belief, res.true_state.astype(float))


def test_abrupt_policy_exits_at_reveal_time():
    p = Policy([PolicySegment(SILENCE, 0.0, 2.0, 0.5, 0.5), PolicySegment(FULL_REVEAL, 2.0, 2.0, 0.5, 0.5)], 1.0, 0.5)
    res = simulate_policy(p, SimConfig(500, 1))
    assert np.allclose(res.exit_time, 2.0)
    assert res.informed_share() == 1.0


def test_simulation_is_reproducible():
    s = Scenario(0.55, 0.647, 0.25, 0.0, 0.05, V)
    p, _ = solve_random_exit(s)
    a = simulate_policy(p, SimConfig(2000, 99), rho=0.05)
    b = simulate_policy(p, SimConfig(2000, 99), rho=0.05)
    assert a.to_rows() == b.to_rows()
    first = simulate_policy(p, SimConfig(500, 99), rho=0.05)
    assert np.array_equal(first.exit_time, a.exit_time[:500])


def test_informed_share_matches_survival_integral():
    s = Scenario(0.55, 0.647, 0.25, 0.0, 0.05, V)
    p, _ = solve_random_exit(s)
    res = simulate_policy(p, SimConfig(10000, 5), rho=0.05)
    mu = float(p.mu_P0)
    for state, coef in ((1, lambda m: (1.0, 0.0)), (0, lambda m: (0.0, 1.0))):
        mass = mu if state == 1 else 1 - mu
        analytic = 1.0 - 0.05 * p.integrate_linear(0.0, coef, rate=0.05) / mass
        share = res.informed_share(state=state)
        n = int(np.sum(res.true_state == state))
        assert abs(share - analytic) <= 4 * math.sqrt(analytic * (1 - analytic) / n)
    assert set(res.exit_cause) <= {CAUSE_REVEAL, CAUSE_EXOGENOUS}


def test_horizon_censors_paths():
    p = Policy([PolicySegment(POISSON_BOTH, 0.0, math.inf, 0.5, 0.5, rate=0.1)], 1.0, 0.5)
    res = simulate_policy(p, SimConfig(2000, 2, horizon=5.0))
    assert np.all(res.exit_time <= 5.0 + 1e-12)
    share = res.censored_share()
    assert share == pytest.approx(math.exp(-0.5), abs=0.04)
    assert np.all(res.exit_cause[res.exit_time == 5.0] == CAUSE_CENSORED)


def test_cdf_helpers():
    p = Policy([PolicySegment(POISSON_BOTH, 0.0, math.inf, 0.5, 0.5, rate=0.3)], 1.0, 0.5)
    res = simulate_policy(p, SimConfig(1000, 4))
    cdfs = exit_cdfs(res, time_grid=np.linspace(0, 10, 11))
    assert np.all(np.diff(cdfs["time_cdf"]) >= 0)
    assert set(cdfs["belief_cdf"]) == {("A", 0), ("A", 1)}
    assert dominates(np.array([0.2, 0.6]), np.array([0.1, 0.6]))
    assert not dominates(np.array([0.2, 0.5]), np.array([0.1, 0.6]))
