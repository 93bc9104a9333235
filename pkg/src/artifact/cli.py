"""Command-line front end.

Subcommands: solve, simulate, verify, compare, sweep.  Every subcommand
reads a YAML scenario (parsed before any solver runs) and writes CSV, JSON,
text and optional SVG files into ``--out``.  Exit codes: 2 for scenario
errors, 3 for solver or domain errors, 4 for failed verification.  Set
``ARTIFACT_LOG_LEVEL`` (DEBUG, INFO, WARNING) for progress logging.
"""

from __future__ import annotations

import csv
import io
import json
import logging
import math
import os
import sys
from dataclasses import dataclass, field
from pathlib import Path

import click
import numpy as np

from .core import Scenario
from .errors import ArtifactError, VerificationFailure
from .montecarlo import SimConfig, exit_cdfs, simulate_policy, simulate_population, simulate_two_type
from .nonpersonalized import TwoTypeValues, solve_steady_state, solve_transient
from .oracle import verify as oracle_verify
from .pipeline import SWEEP_COLUMNS, personalized_type_policies, report_text, run_compare, run_sweep, solve_personalized
from .policy import policy_csv, policy_json
from .scenario_io import ScenarioFile, load_scenario
from .svg import Series, line_chart

LOG_ENV = "ARTIFACT_LOG_LEVEL"
SUBCOMMANDS = ("solve", "simulate", "verify", "compare", "sweep")
log = logging.getLogger("artifact")


@dataclass
class RunManifest:
    subcommand: str
    scenario_path: Path
    output_dir: Path
    seed: int = 0
    paths: int = 10000
    grid: int | None = None
    horizon: float | None = None
    svg: bool = False
    options: dict = field(default_factory=dict)


# ---------------------------------------------------------------------------
# Output helpers


def fmt(x):
    if isinstance(x, (bool, np.bool_)):
        return str(bool(x)).lower()
    if isinstance(x, str) or x is None:
        return "" if x is None else x
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    x = float(x)
    if math.isnan(x):
        return "nan"
    return f"{x:.12g}"


def write_csv(path: Path, columns, rows):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for row in rows:
        w.writerow([fmt(row[c]) for c in columns])
    path.write_text(buf.getvalue(), encoding="utf-8")


def _clean(obj):
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return x if math.isfinite(x) else None
    return obj


def write_json(path: Path, obj):
    path.write_text(json.dumps(_clean(obj), indent=2, sort_keys=True) + "\n", encoding="utf-8")


def write_cdfs(out: Path, prefix, result, time_grid):
    cdfs = exit_cdfs(result, time_grid=time_grid)
    write_csv(
        out / f"{prefix}exit_time_cdf.csv",
        ("t", "cdf"),
        [{"t": t, "cdf": c} for t, c in zip(cdfs["time_grid"], cdfs["time_cdf"])],
    )
    keys = sorted(cdfs["belief_cdf"])
    cols = ("belief",) + tuple(f"{a}_state{w}" for a, w in keys)
    rows = []
    for i, b in enumerate(cdfs["belief_grid"]):
        row = {"belief": b}
        row.update({f"{a}_state{w}": cdfs["belief_cdf"][(a, w)][i] for a, w in keys})
        rows.append(row)
    write_csv(out / f"{prefix}exit_belief_cdf.csv", cols, rows)
    return cdfs


PATH_COLUMNS = ("path", "agent_type", "true_state", "exit_time", "exit_cause", "exit_belief", "exit_belief_principal")


# ---------------------------------------------------------------------------
# Subcommand bodies


def _require(sf: ScenarioFile, *models):
    if sf.model not in models:
        raise click.UsageError(f"this subcommand needs a {' or '.join(models)} scenario, got {sf.model}")


def _policy_horizon(s: Scenario, horizon):
    return float(horizon) if horizon is not None else 10.0 / s.delta_A


def run_solve(m: RunManifest, sf: ScenarioFile):
    out = m.output_dir
    if sf.model == "personalized":
        res = solve_personalized(sf.payload)
        horizon = _policy_horizon(sf.payload, m.horizon)
        step = horizon / (m.grid or 200)
        (out / "policy.csv").write_text(policy_csv(res.policy, step, horizon), encoding="utf-8")
        (out / "policy.json").write_text(policy_json(res.policy) + "\n", encoding="utf-8")
        write_json(out / "report.json", res.report)
        text = report_text(res.report)
        (out / "report.txt").write_text(text, encoding="utf-8")
        if m.svg:
            t = np.linspace(0.0, horizon, 401)
            g1, g0 = res.policy.engagement_probs(t)
            svg = line_chart(
                [Series("G1", t, g1), Series("G0", t, g0), Series("mu_A", t, res.policy.mu_A(t))],
                "engagement and belief", "time", "probability",
            )
            (out / "policy.svg").write_text(svg, encoding="utf-8")
        click.echo(text, nl=False)
        return 0
    _require(sf, "two-type")
    two = sf.payload
    pers = personalized_type_policies(two)
    steady = solve_steady_state(two, TwoTypeValues(two))
    report = {"personalized": {j: r.report for j, r in pers.items()}, "nonpersonalized": steady.to_dict()}
    for j, r in pers.items():
        horizon = _policy_horizon(two.type_scenario(j), m.horizon)
        (out / f"policy_{j}.csv").write_text(policy_csv(r.policy, horizon / (m.grid or 200), horizon), encoding="utf-8")
    write_json(out / "report.json", report)
    text = "".join(report_text(r.report, f"personalized policy, type {j}") for j, r in pers.items())
    text += f"non-personalized steady state\n  mu_P_star: {steady.mu_P_star:.12g}\n  lambda_star: {steady.lambda_star:.12g}\n"
    (out / "report.txt").write_text(text, encoding="utf-8")
    click.echo(text, nl=False)
    return 0


def run_simulate(m: RunManifest, sf: ScenarioFile):
    out = m.output_dir
    cfg = SimConfig(n_paths=m.paths, seed=m.seed, horizon=m.horizon)
    mechanism = m.options.get("mechanism", "personalized")
    if sf.model == "personalized":
        res = simulate_policy(solve_personalized(sf.payload).policy, cfg, rho=sf.payload.rho)
    else:
        _require(sf, "two-type")
        two = sf.payload
        if mechanism == "personalized":
            pols = {j: r.policy for j, r in personalized_type_policies(two).items()}
            res = simulate_population(pols, two.weights, cfg, rho=two.rho)
        else:
            transient = solve_transient(two, N=m.options.get("program_steps", 160))
            res = simulate_two_type(transient, two, cfg)
    write_csv(out / "paths.csv", PATH_COLUMNS, res.to_rows())
    top = m.horizon if m.horizon is not None else float(np.quantile(res.exit_time[np.isfinite(res.exit_time)], 0.99))
    tg = np.linspace(0.0, top, (m.grid or 200) + 1)
    cdfs = write_cdfs(out, "", res, tg)
    summary = {
        "paths": len(res),
        "seed": m.seed,
        "mean_exit_time": float(np.mean(res.exit_time)),
        "censored_share": res.censored_share(),
        "mean_exit_principal_belief": float(np.mean(res.exit_belief_principal)),
    }
    write_json(out / "summary.json", summary)
    if m.svg:
        (out / "exit_time_cdf.svg").write_text(
            line_chart([Series("exit time CDF", cdfs["time_grid"], cdfs["time_cdf"], step=True)], "exit time", "time", "CDF"),
            encoding="utf-8",
        )
    click.echo(f"simulated {len(res)} paths; mean exit time {summary['mean_exit_time']:.6g}")
    return 0


def run_verify(m: RunManifest, sf: ScenarioFile):
    _require(sf, "personalized")
    s = sf.payload
    res = solve_personalized(s)
    T_max = float(m.horizon) if m.horizon is not None else 40.0
    N = m.grid or 100
    rep = oracle_verify(res.policy, s, T_max, N)
    rep["regime"] = res.regime
    write_json(m.output_dir / "verify.json", rep)
    lines = ["oracle verification"] + [f"  {k}: {fmt(v)}" for k, v in rep.items()]
    text = "\n".join(lines) + "\n"
    (m.output_dir / "verify.txt").write_text(text, encoding="utf-8")
    click.echo(text, nl=False)
    if not rep["passed"]:
        raise VerificationFailure(f"policy failed verification: gap {rep['gap']:.4g}, violation {rep['max_violation']:.4g}")
    return 0


TRANSIENT_COLUMNS = ("t", "mu_P", "p_l", "p_h", "mu_P_l", "mu_P_h", "hazard")


def run_compare_cmd(m: RunManifest, sf: ScenarioFile):
    _require(sf, "two-type")
    out = m.output_dir
    cfg = SimConfig(n_paths=m.paths, seed=m.seed)
    horizon = float(m.horizon) if m.horizon is not None else 30.0
    grid = (m.grid or 120) + 1
    res = run_compare(sf.payload, cfg, N=m.options.get("program_steps", 160), horizon=horizon, grid=grid)
    write_csv(out / "transient.csv", TRANSIENT_COLUMNS, res.transient.table())
    write_csv(
        out / "exit_time_cdf.csv",
        ("t", "personalized", "nonpersonalized"),
        [{"t": t, "personalized": a, "nonpersonalized": b} for t, a, b in zip(res.time_grid, res.cdf_personalized, res.cdf_nonpersonalized)],
    )
    write_cdfs(out, "personalized_", res.sim_personalized, res.time_grid)
    write_cdfs(out, "nonpersonalized_", res.sim_nonpersonalized, res.time_grid)
    write_json(out / "summary.json", res.summary)
    if m.svg:
        rows = res.transient.table(horizon=10.0)
        t = np.array([r["t"] for r in rows])
        col = {c: np.array([r[c] for r in rows]) for c in TRANSIENT_COLUMNS}
        (out / "transient_probabilities.svg").write_text(
            line_chart([Series("p_l", t, col["p_l"]), Series("p_h", t, col["p_h"])], "transition probabilities", "time", "probability"),
            encoding="utf-8",
        )
        (out / "transient_beliefs.svg").write_text(
            line_chart(
                [Series("mu_P", t, col["mu_P"]), Series("mu_P_l", t, col["mu_P_l"]), Series("mu_P_h", t, col["mu_P_h"])],
                "principal beliefs", "time", "belief",
            ),
            encoding="utf-8",
        )
        (out / "exit_time_cdf.svg").write_text(
            line_chart(
                [
                    Series("personalized", res.time_grid, res.cdf_personalized, step=True),
                    Series("non-personalized", res.time_grid, res.cdf_nonpersonalized, step=True),
                ],
                "exit time CDF", "time", "CDF",
            ),
            encoding="utf-8",
        )
    np_s = res.summary["nonpersonalized"]
    pers = res.summary["personalized"]
    click.echo(
        f"steady agent beliefs L {fmt(pers['L']['steady_mu_A'])} H {fmt(pers['H']['steady_mu_A'])}; "
        f"non-personalized steady principal belief {fmt(np_s['mu_P_star'])}"
    )
    return 0


def run_sweep_cmd(m: RunManifest, sf: ScenarioFile):
    _require(sf, "sweep")
    out = m.output_dir
    rows = run_sweep(sf.payload)
    write_csv(out / "sweep.csv", SWEEP_COLUMNS, rows)
    summary = {
        "points": len(rows),
        "quality_ordered_everywhere": all(r["quality_ordered"] for r in rows),
        "speed_ordered_everywhere": all(r["speed_ordered"] for r in rows),
    }
    write_json(out / "summary.json", summary)
    if m.svg:
        x = np.array([r["ell_H"] for r in rows])
        for name, a, b, title in (
            ("quality", "np_mu_P", "pers_mu_P_H", "steady principal belief"),
            ("speed", "np_lambda", "pers_lambda_H", "steady arrival rate"),
        ):
            chart = line_chart(
                [Series("non-personalized", x, np.array([r[a] for r in rows])), Series("personalized (H)", x, np.array([r[b] for r in rows]))],
                title, "ell_H", title,
            )
            (out / f"sweep_{name}.svg").write_text(chart, encoding="utf-8")
    click.echo(f"swept {len(rows)} ratios; quality ordered {summary['quality_ordered_everywhere']}, speed ordered {summary['speed_ordered_everywhere']}")
    return 0


RUNNERS = {
    "solve": run_solve,
    "simulate": run_simulate,
    "verify": run_verify,
    "compare": run_compare_cmd,
    "sweep": run_sweep_cmd,
}


def run(manifest: RunManifest) -> int:
    """Parse the scenario, run the subcommand and return its exit status."""
    if manifest.subcommand not in RUNNERS:
        raise click.UsageError(f"unknown subcommand {manifest.subcommand}")
    sf = load_scenario(manifest.scenario_path)
    manifest.output_dir.mkdir(parents=True, exist_ok=True)
    if not os.access(manifest.output_dir, os.W_OK):
        raise click.UsageError(f"output directory {manifest.output_dir} is not writable")
    return RUNNERS[manifest.subcommand](manifest, sf)


# ---------------------------------------------------------------------------
# click wiring


def _configure_logging():
    level = os.environ.get(LOG_ENV, "WARNING").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING), format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)


def _common(f):
    opts = [
        click.option("--scenario", "scenario", required=True, type=click.Path(dir_okay=False, path_type=Path), help="YAML scenario file."),
        click.option("--out", "out", default="out", show_default=True, type=click.Path(file_okay=False, path_type=Path), help="Output directory."),
        click.option("--seed", default=0, show_default=True, type=click.IntRange(0, 2**64 - 1), help="Random seed."),
        click.option("--paths", default=10000, show_default=True, type=click.IntRange(1), help="Monte Carlo paths."),
        click.option("--grid", default=None, type=click.IntRange(1), help="Grid size (time steps or CDF points)."),
        click.option("--horizon", default=None, type=click.FloatRange(min=0.0, min_open=True), help="Time horizon."),
        click.option("--svg", is_flag=True, help="Also write SVG charts."),
    ]
    for o in reversed(opts):
        f = o(f)
    return f


def _invoke(name, scenario, out, seed, paths, grid, horizon, svg, **options):
    m = RunManifest(name, scenario, out, seed, paths, grid, horizon, svg, options)
    try:
        code = run(m)
    except ArtifactError as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(exc.exit_code)
    sys.exit(code)


@click.group()
def main():
    """Optimal engagement-maximising disclosure: solve, simulate and verify."""
    _configure_logging()


@main.command()
@_common
def solve(**kw):
    """Solve a scenario and write the policy and a report."""
    _invoke("solve", **kw)


@main.command()
@_common
@click.option("--mechanism", type=click.Choice(["personalized", "non-personalized"]), default="personalized", show_default=True)
@click.option("--program-steps", "program_steps", default=160, show_default=True, type=click.IntRange(16))
def simulate(**kw):
    """Simulate exits under the solved policy."""
    _invoke("simulate", **kw)


@main.command()
@_common
def verify(**kw):
    """Check a solved policy against the discretized program."""
    _invoke("verify", **kw)


@main.command()
@_common
@click.option("--program-steps", "program_steps", default=160, show_default=True, type=click.IntRange(16))
def compare(**kw):
    """Personalized versus non-personalized two-type comparison."""
    _invoke("compare", **kw)


@main.command()
@_common
def sweep(**kw):
    """Steady states across a grid of high-type likelihood ratios."""
    _invoke("sweep", **kw)


if __name__ == "__main__":  # pragma: no cover
    main()
