"""End-to-end workflows behind the command-line subcommands.

``solve_personalized`` picks the closed-form solver that matches a scenario.
``run_compare`` builds the two-type comparison (personalized per type,
non-personalized steady state and transient, both simulations, exit CDFs).
``run_sweep`` tabulates steady states over a grid of high-type ratios.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .core import Scenario, TwoTypeScenario
from .errors import DomainError
from .extensions import solve_general_discounting, solve_random_exit
from .montecarlo import SimConfig, dominates, empirical_cdf, simulate_population, simulate_two_type
from .nonpersonalized import (
    STAY_H,
    STAY_L,
    TwoTypeValues,
    obedience_report,
    solve_steady_state,
    solve_steady_state_for_ratios,
    solve_transient,
)
from .personalized import (
    common_prior_multipliers,
    solve_common_prior,
    solve_impatient_principal,
    solve_patient_principal,
    steady_state_for_ratio,
)
from .policy import Policy, principal_value

log = logging.getLogger(__name__)

REGIME_GENERAL = "general-discounting"
REGIME_EXIT = "random-exit"
REGIME_COMMON = "common-prior"
REGIME_PATIENT = "patient-principal"
REGIME_IMPATIENT = "impatient-principal"


@dataclass
class SolveResult:
    policy: Policy
    regime: str
    report: dict
    multipliers: object = None


def _finite(x):
    if x is None:
        return None
    x = float(x)
    return x if math.isfinite(x) else None


def regime_of(s: Scenario) -> str:
    if not s.discount.is_exponential:
        return REGIME_GENERAL
    if s.rho > 0:
        return REGIME_EXIT
    if abs(float(s.mu_A) - float(s.mu_P)) <= 1e-12:
        return REGIME_COMMON
    if s.delta_A > s.delta_P:
        return REGIME_PATIENT
    if s.delta_P > s.delta_A:
        return REGIME_IMPATIENT
    raise DomainError("disagreement with delta_A = delta_P has no solver; perturb either rate")


def solve_personalized(s: Scenario) -> SolveResult:
    """Dispatch to the closed-form solver for the scenario's regime."""
    regime = regime_of(s)
    log.info("solving personalized scenario in regime %s", regime)
    mult = None
    steady = None
    if regime == REGIME_GENERAL:
        policy = solve_general_discounting(s)
    elif regime == REGIME_EXIT:
        policy, steady = solve_random_exit(s)
    elif regime == REGIME_COMMON:
        policy = solve_common_prior(s)
        mult = common_prior_multipliers(s)
    elif regime == REGIME_PATIENT:
        policy, steady = solve_patient_principal(s)
    else:
        policy, mult = solve_impatient_principal(s)
    meta = policy.meta
    t1 = meta.get("t1", meta.get("phase1_end", meta.get("t_star")))
    t2 = meta.get("t2", meta.get("t_star"))
    lam = meta.get("lambda_star")
    if lam is None and steady is not None:
        lam = getattr(steady, "lambda_star", getattr(steady, "lam", None))
    report = {
        "regime": regime,
        "t1": _finite(t1),
        "t2": _finite(t2),
        "mu1": _finite(meta.get("mu1")),
        "lambda_star": _finite(lam),
        "steady_mu_A": _finite(meta.get("mu_A_star")),
        "steady_mu_P": _finite(meta.get("mu_P_star")),
        "principal_value": float(principal_value(policy, s.delta_P, s.rho)),
        "segments": [seg.kind for seg in policy.segments],
    }
    return SolveResult(policy, regime, report, mult)


def report_text(report: dict, title="personalized policy") -> str:
    lines = [title]
    for key, value in report.items():
        if isinstance(value, float):
            value = f"{value:.12g}"
        elif isinstance(value, list):
            value = ", ".join(str(v) for v in value)
        lines.append(f"  {key}: {value}")
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# Two-type comparison


def personalized_type_policies(two: TwoTypeScenario):
    return {j: solve_personalized(two.type_scenario(j)) for j in (STAY_L, STAY_H)}


@dataclass
class CompareResult:
    two: TwoTypeScenario
    personalized: dict
    steady: object
    transient: object
    sim_personalized: object
    sim_nonpersonalized: object
    time_grid: np.ndarray
    cdf_personalized: np.ndarray
    cdf_nonpersonalized: np.ndarray
    summary: dict = field(default_factory=dict)


def _shares(res):
    return {
        f"{a}_state{w}": float(res.informed_share(a, w))
        for a in (STAY_L, STAY_H)
        for w in (1, 0)
    }


def run_compare(two: TwoTypeScenario, cfg: SimConfig, T_max=40.0, N=160, horizon=30.0, grid=121) -> CompareResult:
    pers = personalized_type_policies(two)
    values = TwoTypeValues(two)
    steady = solve_steady_state(two, values)
    log.info("steady principal belief %.6f; solving transient program", steady.mu_P_star)
    transient = solve_transient(two, steady, values, T_max=T_max, N=N)
    policies = {j: r.policy for j, r in pers.items()}
    sim_p = simulate_population(policies, two.weights, cfg, rho=two.rho)
    sim_np = simulate_two_type(transient, two, cfg)
    tg = np.linspace(0.0, float(horizon), int(grid))
    cdf_p = empirical_cdf(sim_p.exit_time, tg)
    cdf_np = empirical_cdf(sim_np.exit_time, tg)
    ob = obedience_report(steady, two)
    summary = {
        "personalized": {
            j: {"steady_mu_A": r.report["steady_mu_A"], "steady_mu_P": r.report["steady_mu_P"], "lambda_star": r.report["lambda_star"]}
            for j, r in pers.items()
        },
        "nonpersonalized": steady.to_dict(),
        "obedience": ob,
        "transient": {
            "convergence_time": _finite(transient.convergence_time),
            "objective": float(transient.objective),
            "final_mu_P": float(transient.mu_P[min(len(transient.mu_P) - 1, int(np.searchsorted(transient.t, 10.0)))]),
        },
        "simulation": {
            "paths": cfg.n_paths,
            "seed": cfg.seed,
            "informed_share_personalized": _shares(sim_p),
            "informed_share_nonpersonalized": _shares(sim_np),
            "mean_exit_time_personalized": float(np.mean(sim_p.exit_time)),
            "mean_exit_time_nonpersonalized": float(np.mean(sim_np.exit_time)),
            "mean_exit_principal_belief_nonpersonalized": float(np.mean(sim_np.exit_belief_principal)),
            "cdf_dominates": dominates(cdf_np, cdf_p),
            "cdf_min_difference": float(np.min(cdf_np - cdf_p)),
            "cdf_min_difference_at": float(tg[int(np.argmin(cdf_np - cdf_p))]),
        },
    }
    return CompareResult(two, pers, steady, transient, sim_p, sim_np, tg, cdf_p, cdf_np, summary)


# ---------------------------------------------------------------------------
# Ratio sweep


SWEEP_COLUMNS = (
    "ell_H",
    "np_mu_P",
    "np_lambda",
    "np_exit_probability",
    "pers_mu_P_L",
    "pers_lambda_L",
    "pers_mu_P_H",
    "pers_lambda_H",
    "quality_ordered",
    "speed_ordered",
)


def run_sweep(sweep_cfg) -> list[dict]:
    """Non-personalized versus personalized steady states across ``ell_H``."""
    rows = []
    ref = Scenario(0.5, 0.5, sweep_cfg.delta_A, sweep_cfg.delta_P, sweep_cfg.rho, sweep_cfg.value_fn)
    pl = steady_state_for_ratio(sweep_cfg.ell_L, ref)
    for ell_H in sweep_cfg.ell_H:
        ell_H = float(ell_H)
        st = solve_steady_state_for_ratios(
            sweep_cfg.ell_L, ell_H, sweep_cfg.alpha_H, sweep_cfg.delta_A, sweep_cfg.delta_P, sweep_cfg.rho, sweep_cfg.value_fn
        )
        ph = steady_state_for_ratio(ell_H, ref)
        # ordering is against the varied (high) type; the low type is fixed
        quality = ph is not None and st.mu_P_star >= ph.mu_P_star - 1e-9
        speed = ph is not None and st.lambda_star >= ph.lambda_star - 1e-9
        rows.append(
            {
                "ell_H": ell_H,
                "np_mu_P": float(st.mu_P_star),
                "np_lambda": float(st.lambda_star),
                "np_exit_probability": float(st.lottery.probability(None)),
                "pers_mu_P_L": math.nan if pl is None else pl.mu_P_star,
                "pers_lambda_L": math.nan if pl is None else pl.lambda_star,
                "pers_mu_P_H": math.nan if ph is None else ph.mu_P_star,
                "pers_lambda_H": math.nan if ph is None else ph.lambda_star,
                "quality_ordered": bool(quality),
                "speed_ordered": bool(speed),
            }
        )
    return rows


__all__ = [
    "CompareResult",
    "SWEEP_COLUMNS",
    "SolveResult",
    "personalized_type_policies",
    "regime_of",
    "report_text",
    "run_compare",
    "run_sweep",
    "solve_personalized",
]
