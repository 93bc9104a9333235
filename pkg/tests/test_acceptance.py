"""Acceptance criteria 1 to 8.

Each test prints one line ``criterion N: PASS|FAIL`` followed by the checked
quantities, and the same lines are repeated in the terminal summary.
"""

import math

import numpy as np
import pytest

from conftest import ACCEPTANCE_LINES, SCENARIOS
from artifact.core import Scenario
from artifact.montecarlo import SimConfig, dominates, empirical_cdf, simulate_policy
from artifact.nonpersonalized import STAY_H, STAY_L
from artifact.oracle import solve_discrete, verify
from artifact.personalized import (
    abrupt_time,
    corollary1_region,
    extreme_catering_bound,
    solve_common_prior,
    solve_impatient_principal,
    solve_patient_principal,
    steady_rate,
)
from artifact.pipeline import personalized_type_policies, run_sweep, solve_personalized
from artifact.policy import binding_times, ic_residual
from artifact.scenario_io import load_scenario

CANONICAL = (
    "common_prior_patient",
    "common_prior_impatient",
    "disagreement_patient",
    "disagreement_impatient",
    "exogenous_exit",
    "habit_formation",
)


def _report(number, checks):
    """Record and print the criterion line, then assert every sub-check."""
    ok = all(c[1] for c in checks)
    detail = "; ".join(f"{name} {'ok' if good else 'FAILED'} ({info})" for name, good, info in checks)
    line = f"criterion {number}: {'PASS' if ok else 'FAIL'} | {detail}"
    ACCEPTANCE_LINES[number] = line
    print(line)
    failed = [c for c in checks if not c[1]]
    assert not failed, "; ".join(f"{n}: {i}" for n, _, i in failed)


def _canonical(name):
    return load_scenario(SCENARIOS / f"{name}.yaml").payload


def test_criterion_1_oracle_recovers_exponential_revelation(quad):
    checks = []
    delta_A = 0.2
    s = Scenario(0.5, 0.5, delta_A, 0.0, 0.0, quad)
    sol = solve_discrete(s, 40.0 / delta_A, 200)
    cdf = 1.0 - (sol.G1 + sol.G0)
    exact = 1.0 - np.exp(-delta_A * sol.t)
    rel = np.abs(cdf[1:] - exact[1:]) / exact[1:]
    checks.append(("exponential CDF within 2% at every t > 0", bool(rel.max() <= 0.02), f"max rel {rel.max():.4f}"))
    s_abrupt = Scenario(0.5, 0.5, 0.1, 0.2, 0.0, quad)
    policy = solve_common_prior(s_abrupt)
    rep = verify(policy, s_abrupt, 40.0 / s_abrupt.delta_A, 200)
    rel_gap = abs(rep["policy_value"] - rep["oracle_objective"]) / abs(rep["oracle_objective"])
    checks.append(("abrupt objective within 1%", bool(rel_gap <= 0.01), f"rel gap {rel_gap:.5f}"))
    _report(1, checks)


def test_criterion_2_closed_forms(quad):
    from artifact.core import ValueFunction

    checks = []
    worst_t = 0.0
    for v in (quad, ValueFunction.quadratic(0.3), ValueFunction.power(3.0, 0.6)):
        for mu in (0.2, 0.5, 0.75):
            for dA in (0.1, 0.25):
                p = solve_common_prior(Scenario(mu, mu, dA, 2 * dA, 0.0, v))
                expected = math.log(v.value(1.0) / v.value(mu)) / dA
                worst_t = max(worst_t, abs(p.meta["t_star"] - expected), abs(abrupt_time(mu, v, dA) - expected))
    checks.append(("t* closed form to 1e-10", worst_t <= 1e-10, f"max err {worst_t:.2e}"))
    worst_l = 0.0
    for v in (quad, ValueFunction.quadratic(0.3)):
        for dA in (0.1, 0.25):
            p = solve_common_prior(Scenario(0.3, 0.3, dA, 0.0, 0.0, v))
            expected = dA * v.value(0.5) / (v.value(1.0) - v.value(0.5))
            worst_l = max(worst_l, abs(p.meta["lambda_star"] - expected), abs(steady_rate(0.5, v, dA) - expected))
    checks.append(("lambda* closed form to 1e-10", worst_l <= 1e-10, f"max err {worst_l:.2e}"))
    sym = max(abs(solve_common_prior(Scenario(0.3, 0.3, dA, 0.0, 0.0, quad)).meta["lambda_star"] - dA) for dA in (0.1, 0.2, 0.25))
    checks.append(("lambda* = delta_A for normalized quadratic", sym <= 1e-10, f"max err {sym:.2e}"))
    _report(2, checks)


def test_criterion_3_personalized_steady_states(two_type):
    res = personalized_type_policies(two_type)
    low = res[STAY_L].report["steady_mu_A"]
    high = res[STAY_H].report["steady_mu_A"]
    _report(
        3,
        [
            ("low type 0.71 +- 0.01", abs(low - 0.71) <= 0.01, f"{low:.4f}"),
            ("high type 0.43 +- 0.01", abs(high - 0.43) <= 0.01, f"{high:.4f}"),
        ],
    )


def test_criterion_4_nonpersonalized_steady_and_transient(two_type_steady, two_type_transient):
    st, tr = two_type_steady, two_type_transient
    k_end = int(np.searchsorted(tr.t, 10.0))
    checks = [("steady principal belief 0.63 +- 0.02", abs(st.mu_P_star - 0.63) <= 0.02, f"{st.mu_P_star:.4f}")]
    targets = {"p_l": (0.25, 0.56), "p_h": (0.75, 0.44), "mu_P_l": (0.85, 0.96), "mu_P_h": (0.42, 0.21)}
    for name, (start, end) in targets.items():
        series = getattr(tr, name)
        a, b = float(series[0]), float(series[k_end])
        good = bool(abs(a - start) <= 0.03 and abs(b - end) <= 0.03)
        checks.append((f"{name} {start}->{end} +- 0.03", good, f"{a:.3f}->{b:.3f}"))
    both_exit = float(np.nanmax(tr.p_none[: k_end + 1]))
    steady_exit = st.lottery.probability(None)
    checks.append(
        ("both-exit probability 0", both_exit <= 1e-6 and steady_exit <= 1e-6, f"transient max {both_exit:.3f}, steady {steady_exit:.3f}")
    )
    _report(4, checks)


def test_criterion_5_monte_carlo_exits(two_type_simulations):
    personalized, nonpersonalized = two_type_simulations
    targets = {(STAY_H, 1): 0.70, (STAY_L, 1): 0.30, (STAY_L, 0): 0.80, (STAY_H, 0): 0.50}
    checks = []
    for (agent, state), target in targets.items():
        share = personalized.informed_share(agent, state)
        checks.append((f"{agent} informed share state {state} = {target:.2f} +- 0.05", abs(share - target) <= 0.05, f"{share:.3f}"))
    grid = np.linspace(0.0, 30.0, 121)
    cdf_p = empirical_cdf(personalized.exit_time, grid)
    cdf_np = empirical_cdf(nonpersonalized.exit_time, grid)
    diff = cdf_np - cdf_p
    checks.append(
        (
            "non-personalized exit CDF dominates",
            dominates(cdf_np, cdf_p),
            f"min diff {diff.min():.4f} at t={grid[int(np.argmin(diff))]:.2f}",
        )
    )
    _report(5, checks)


def test_criterion_6_ratio_sweep():
    sweep_cfg = load_scenario(SCENARIOS / "ratio_sweep.yaml").payload
    assert (sweep_cfg.ell_L, sweep_cfg.alpha_H, sweep_cfg.delta_A, sweep_cfg.delta_P, sweep_cfg.points) == (0.3, 0.6, 0.2, 0.0, 15)
    rows = run_sweep(sweep_cfg)
    bad_q = [r["ell_H"] for r in rows if not r["quality_ordered"]]
    bad_s = [r["ell_H"] for r in rows if not r["speed_ordered"]]
    margin_q = min(r["np_mu_P"] - r["pers_mu_P_H"] for r in rows)
    margin_s = min(r["np_lambda"] - r["pers_lambda_H"] for r in rows)
    _report(
        6,
        [
            ("steady belief ordered at all 15 points", not bad_q, f"min margin {margin_q:.2e}"),
            ("arrival rate ordered at all 15 points", not bad_s, f"min margin {margin_s:.2e}"),
        ],
    )


def _solved_canonical():
    out = []
    for name in CANONICAL:
        s = _canonical(name)
        out.append((name, s, solve_personalized(s)))
    return out


def _grid_before_end(policy, n=301, cap=60.0):
    end = policy.end_time if math.isfinite(policy.end_time) else cap
    return np.linspace(0.0, end, n)[:-1]


def test_criterion_7_property_suite(quad, two_type, two_type_simulations):
    checks = []
    solved = _solved_canonical()
    solved += [(f"two-type {j}", two_type.type_scenario(j), r) for j, r in personalized_type_policies(two_type).items()]

    # (a) likelihood-ratio constancy
    worst = 0.0
    for _, s, r in solved:
        t = _grid_before_end(r.policy)
        mA, mP = r.policy.mu_A(t), r.policy.mu_P(t)
        inside = (mA > 0) & (mA < 1) & (mP > 0) & (mP < 1)
        ratio = mA[inside] / (1 - mA[inside]) * (1 - mP[inside]) / mP[inside]
        worst = max(worst, float(np.max(np.abs(ratio / float(r.policy.ell) - 1.0))))
    personalized, _ = two_type_simulations
    uninformed = personalized.exit_cause != "signal-full-reveal"
    for agent in (STAY_L, STAY_H):
        m = uninformed & (personalized.agent_type == agent)
        a, p = personalized.exit_belief[m], personalized.exit_belief_principal[m]
        ratio = a / (1 - a) * (1 - p) / p
        worst = max(worst, float(np.max(np.abs(ratio / two_type.ells[agent] - 1.0))))
    checks.append(("(a) ratio constant to 1e-9", worst <= 1e-9, f"max dev {worst:.1e}"))

    # (b) obedience residuals
    low, bind = math.inf, 0.0
    for _, s, r in solved:
        t = _grid_before_end(r.policy)
        low = min(low, min(ic_residual(r.policy, s, x) for x in t))
        bt = binding_times(r.policy)
        if bt:
            bind = max(bind, max(abs(ic_residual(r.policy, s, x)) for x in bt))
    checks.append(("(b) IC residual >= -1e-7, binding |.| <= 1e-6", low >= -1e-7 and bind <= 1e-6, f"min {low:.1e}, binding max {bind:.1e}"))

    # (c) multiplier traces
    traces = [r.multipliers for _, _, r in solved if r.multipliers is not None]
    traces.append(solve_impatient_principal(Scenario(0.5, 0.7, 0.1, 0.2, 0.0, quad))[1])
    checks.append(("(c) Lambda non-decreasing", all(tr.is_non_decreasing() for tr in traces), f"{len(traces)} traces"))

    # (d) belief martingale
    s_exit = _canonical("exogenous_exit")
    sim = simulate_policy(solve_personalized(s_exit).policy, SimConfig(10000, 2024), rho=s_exit.rho)
    z_vals = []
    for res, prior in ((sim, s_exit.mu_P), (two_type_simulations[1], two_type.mu_P), (personalized, two_type.mu_P)):
        x = res.exit_belief_principal
        z_vals.append(abs(x.mean() - prior) / (x.std(ddof=1) / math.sqrt(len(x))))
    checks.append(("(d) principal belief martingale within 3 SE", max(z_vals) <= 3.0, "z " + ", ".join(f"{z:.2f}" for z in z_vals)))

    # (e) impatient ordering and region edges
    s_imp = Scenario(0.5, 0.3, 0.1, 0.2, 0.0, quad)
    lo, hi, _ = corollary1_region(s_imp)
    order_ok = True
    for mA in (0.1, 0.3, 0.7, 0.9):
        meta = solve_impatient_principal(s_imp.with_priors(mu_A=mA))[0].meta
        order_ok &= meta["t1"] < meta["t2"]
    edge = []
    for mA, inside in ((lo + 1e-3, True), (lo - 1e-3, False), (hi - 1e-3, True), (hi + 1e-3, False)):
        t1 = solve_impatient_principal(s_imp.with_priors(mu_A=mA))[0].meta["t1"]
        edge.append((t1 > 0) == inside)
    checks.append(("(e) t1 < t2 and region edges match", bool(order_ok and all(edge)), f"region ({lo:.5f}, {hi:.5f})"))

    # (f) extreme catering below the analytic bound
    s_cat = Scenario(0.5, 0.5, 0.2, 0.15, 0.0, quad)
    bound, cond = extreme_catering_bound(s_cat)
    agree = cond
    for ell in (0.1, 0.3, 0.4, 0.9 * bound, 1.05 * bound, 0.8):
        p, _ = solve_patient_principal(s_cat.with_ratio(0.5, ell))
        h0, h1 = p.hazards(np.linspace(0.0, 200.0, 4001))
        one_sided = bool((h0 > 0).any()) != bool((h1 > 0).any())
        agree &= one_sided == (ell < bound)
    checks.append(("(f) one-sided revelation iff ell below bound", bool(agree), f"bound {bound:.4f}"))
    _report(7, checks)


@pytest.mark.parametrize("N", [200])
def test_criterion_8_oracle_cross_validation(N):
    checks = []
    for name in CANONICAL:
        s = _canonical(name)
        r = solve_personalized(s)
        rep = verify(r.policy, s, 40.0, N)
        rel = abs(rep["policy_value"] - rep["oracle_objective"]) / abs(rep["oracle_objective"])
        good = rel <= 0.01 and rep["max_violation"] <= rep["violation_bound"] and rep["oracle_converged"]
        checks.append((name, bool(good), f"gap {rel:.4f}, violation {rep['max_violation']:.1e} <= {rep['violation_bound']:.2f}"))
    _report(8, checks)
