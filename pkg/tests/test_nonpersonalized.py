import numpy as np
import pytest

from artifact.core import Scenario, ValueFunction
from artifact.errors import DomainError, SolverError
from artifact.nonpersonalized import (
    STAY_L,
    PersonalizedValue,
    TransitionLottery,
    concave_envelope,
    concavify,
    obedience_report,
    personalized_value,
    solve_steady_state_for_ratios,
)

V = ValueFunction.quadratic(0.5)


@pytest.mark.parametrize("ell,dP,rho", [(0.4, 0.05, 0.0), (2.5, 0.0, 0.05), (1.0, 0.05, 0.0)])
def test_closed_form_value_matches_policy_route(ell, dP, rho):
    s = Scenario(0.5, 0.5, 0.25, dP, rho, V)
    pv = PersonalizedValue(ell, V, 0.25, dP, rho)
    for mu in (0.1, 0.35, 0.6, 0.9):
        assert pv.value(mu) == pytest.approx(personalized_value(mu, ell, s), rel=1e-9)


def test_closed_form_slope_matches_finite_difference():
    pv = PersonalizedValue(0.4, V, 0.25, 0.0, 0.05)
    mu = np.linspace(0.05, 0.95, 13)
    h = 1e-6
    fd = (pv.value(mu + h) - pv.value(mu - h)) / (2 * h)
    assert np.allclose(pv.slope(mu), fd, rtol=1e-5, atol=1e-6)


def test_closed_form_value_is_finite_without_principal_discounting():
    pv = PersonalizedValue(1.0, V, 0.2, 0.0, 0.0)
    assert pv.value(0.5) == pytest.approx(5.0, rel=1e-10)


def test_personalized_value_needs_patient_principal():
    with pytest.raises(SolverError):
        PersonalizedValue(0.5, V, 0.1, 0.1, 0.05)


def test_lottery_validation():
    lot = TransitionLottery(((0.25, 0.0, None), (0.75, 0.8, STAY_L)), 0.6)
    assert lot.probability(None) == pytest.approx(0.25)
    assert lot.mean_posterior(STAY_L) == pytest.approx(0.8)
    with pytest.raises(DomainError):
        TransitionLottery(((0.5, 0.0, None), (0.6, 1.0, None)), 0.6)
    with pytest.raises(DomainError):
        TransitionLottery(((0.5, 0.0, None), (0.5, 1.0, None)), 0.6)
    with pytest.raises(DomainError):
        TransitionLottery(tuple((0.2, 0.5, None) for _ in range(5)), 0.5)


def test_concave_envelope_and_chord():
    grid = np.linspace(0.0, 1.0, 1001)
    obj = np.sin(6 * grid) + grid
    env = concave_envelope(grid, obj)
    assert np.all(env >= obj - 1e-12)
    assert np.all(np.diff(env, 2) <= 1e-12)
    lot = concavify(grid, obj, 0.5)
    assert sum(p * m for p, m, _ in lot.outcomes) == pytest.approx(0.5)
    assert sum(p * np.interp(m, grid, obj) for p, m, _ in lot.outcomes) == pytest.approx(np.interp(0.5, grid, env), abs=1e-9)
    with pytest.raises(DomainError):
        concavify(grid, obj, 1.5)


def test_steady_state_residuals_and_lottery(two_type, two_type_steady):
    st = two_type_steady
    assert 0.0 < st.mu_P_star < 1.0
    assert abs(st.residuals["belief_smoothing"]) < 1e-10
    assert abs(st.residuals["optimal_transition"]) < 1e-10
    assert st.Lambda_L >= 0 and st.Lambda_H >= 0
    mean = sum(p * m for p, m, _ in st.lottery.outcomes)
    assert mean == pytest.approx(st.mu_P_star, abs=1e-10)
    for row in obedience_report(st, two_type):
        assert row["stay_slack"] >= -1e-9
        assert row["leave_slack"] >= -1e-9


def test_equal_ratios_reduce_to_personalized_steady_state():
    st = solve_steady_state_for_ratios(0.3, 0.3, 0.6, 0.2, 0.0, 0.0, V)
    assert st.degenerate
    assert st.lottery.probability(None) == pytest.approx(1.0)
    near = solve_steady_state_for_ratios(0.3, 0.3 + 1e-4, 0.6, 0.2, 0.0, 0.0, V)
    assert near.mu_P_star == pytest.approx(st.mu_P_star, abs=1e-3)


def test_transient_converges_to_steady_state(two_type_steady, two_type_transient):
    tr, st = two_type_transient, two_type_steady
    k = int(np.searchsorted(tr.t, 10.0))
    assert tr.mu_P[0] == pytest.approx(0.55)
    assert tr.mu_P[k] == pytest.approx(st.mu_P_star, abs=2e-3)
    assert np.isfinite(tr.convergence_time) and tr.convergence_time < 10.0
    assert tr.p_l[k] == pytest.approx(st.lottery.probability(STAY_L), abs=5e-3)
    assert tr.mu_P_l[k] == pytest.approx(st.lottery.mean_posterior(STAY_L), abs=5e-3)
    assert tr.solution.converged
    rows = tr.table(horizon=5.0)
    assert set(rows[0]) == {"t", "mu_P", "p_l", "p_h", "mu_P_l", "mu_P_h", "hazard"}
    assert all(r["t"] <= 5.0 for r in rows)
