"""Shared fixtures.  The two-type transient program is the slowest object in
the suite, so it is built once per session."""

from pathlib import Path

import pytest

from artifact.core import TwoTypeScenario, ValueFunction
from artifact.montecarlo import SimConfig
from artifact.nonpersonalized import TwoTypeValues, solve_steady_state, solve_transient

ROOT = Path(__file__).resolve().parents[1]
SCENARIOS = ROOT / "scenarios"
ACCEPTANCE_LINES = {}


@pytest.fixture(scope="session")
def quad():
    return ValueFunction.quadratic(0.5)


@pytest.fixture(scope="session")
def two_type(quad):
    return TwoTypeScenario(
        mu_P=0.55, mu_A_L=0.196, mu_A_H=0.647, alpha_H=0.6, delta_A=0.25, delta_P=0.0, rho=0.05, value_fn=quad
    )


@pytest.fixture(scope="session")
def two_type_values(two_type):
    return TwoTypeValues(two_type)


@pytest.fixture(scope="session")
def two_type_steady(two_type, two_type_values):
    return solve_steady_state(two_type, two_type_values)


@pytest.fixture(scope="session")
def two_type_transient(two_type, two_type_steady, two_type_values):
    return solve_transient(two_type, two_type_steady, two_type_values, T_max=40.0, N=160)


@pytest.fixture(scope="session")
def two_type_simulations(two_type, two_type_transient):
    from artifact.montecarlo import simulate_population, simulate_two_type
    from artifact.pipeline import personalized_type_policies

    cfg = SimConfig(n_paths=10000, seed=12345)
    pols = {j: r.policy for j, r in personalized_type_policies(two_type).items()}
    personalized = simulate_population(pols, two_type.weights, cfg, rho=two_type.rho)
    nonpersonalized = simulate_two_type(two_type_transient, two_type, cfg)
    return personalized, nonpersonalized


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[key])
