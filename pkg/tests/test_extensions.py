import numpy as np
import pytest

from artifact.core import DiscountSpec, Scenario, ValueFunction
from artifact.errors import DomainError, SolverError
from artifact.extensions import (
    SHAPE_DEC_INC,
    SHAPE_DECREASING,
    SHAPE_INCREASING,
    cost_shape,
    exit_threshold,
    phase_two_rate,
    solve_general_discounting,
    solve_random_exit,
    terminal_optimality_gap,
)
from artifact.policy import FULL_REVEAL, POISSON_BOTH, POISSON_ONE, SILENCE, ic_residual

V = ValueFunction.quadratic(0.5)
HABIT = Scenario(0.7, 0.7, 0.2, 0.1, 0.0, V, DiscountSpec.habit(0.2, 0.15, 1.0, 0.1))


def test_exit_threshold_collapses_to_diagonal():
    s = Scenario(0.5, 0.5, 0.25, 0.0, 0.25, V)
    for mu in (0.2, 0.5, 0.8):
        assert exit_threshold(mu, s) == pytest.approx(mu, abs=1e-14)


def test_random_exit_steady_state_values():
    s = Scenario(0.55, 0.196, 0.25, 0.0, 0.05, V)
    p, st = solve_random_exit(s)
    assert st.mu_A_star == pytest.approx(0.7184, abs=1e-4)
    assert p.segments[-1].kind == POISSON_BOTH
    assert ic_residual(p, s, 1.0) == pytest.approx(0.0, abs=1e-10)


def test_random_exit_rejects_high_exit_rate():
    with pytest.raises(SolverError):
        solve_random_exit(Scenario(0.5, 0.3, 0.2, 0.1, 0.2, V))
    with pytest.raises(DomainError):
        solve_random_exit(Scenario(0.5, 0.3, 0.2, 0.1, 0.0, V))


def test_cost_shapes():
    assert cost_shape(DiscountSpec.exponential(0.2), 0.1)[0] == SHAPE_DECREASING
    assert cost_shape(DiscountSpec.exponential(0.2), 0.3)[0] == SHAPE_INCREASING
    shape, turn = cost_shape(HABIT.discount, HABIT.delta_P)
    assert shape == SHAPE_DEC_INC and turn > 0


def test_habit_policy_three_phases_and_optimal_end():
    p = solve_general_discounting(HABIT)
    assert [seg.kind for seg in p.segments] == [POISSON_ONE, POISSON_BOTH, SILENCE, FULL_REVEAL]
    m = p.meta
    assert m["t1"] < m["t2"] <= m["t_inflection"] < m["t3"]
    assert abs(terminal_optimality_gap(p, HABIT)) < 1e-6
    for t in np.linspace(0.0, m["t3"], 40)[:-1]:
        assert ic_residual(p, HABIT, t) >= -1e-9


def test_phase_two_rate_is_discount_hazard_for_symmetric_quadratic():
    t = np.linspace(0, 10, 11)
    assert np.allclose(phase_two_rate(HABIT, t), HABIT.discount.hazard(t))


def test_boredom_shape_is_rejected():
    s = Scenario(0.5, 0.5, 0.1, 0.0, 0.0, V, DiscountSpec.boredom(0.1, 0.01))
    with pytest.raises(SolverError):
        solve_general_discounting(s)


def test_general_discounting_needs_common_prior():
    s = Scenario(0.7, 0.5, 0.2, 0.1, 0.0, V, DiscountSpec.habit(0.2, 0.15, 1.0, 0.1))
    with pytest.raises(DomainError):
        solve_general_discounting(s)
