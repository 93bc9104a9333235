"""YAML scenario files.

Three models are understood:

``personalized``
    mu_P, mu_A, delta_A, delta_P, rho, value_fn, optional discount.
``two-type``
    mu_P, mu_A_L, mu_A_H, alpha_H, delta_A, delta_P, rho, value_fn.
``sweep``
    ell_L, alpha_H, ell_H: {start, stop, points}, delta_A, delta_P, rho,
    value_fn.

Errors name the offending key and its line in the file.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import yaml

from .core import DiscountSpec, Scenario, TwoTypeScenario, ValueFunction
from .errors import ArtifactError, ScenarioParseError

MODELS = ("personalized", "two-type", "sweep")
_COMMON = {"model", "name", "description", "value_fn", "delta_A", "delta_P", "rho"}
_KEYS = {
    "personalized": _COMMON | {"mu_P", "mu_A", "discount"},
    "two-type": _COMMON | {"mu_P", "mu_A_L", "mu_A_H", "alpha_H"},
    "sweep": _COMMON | {"ell_L", "ell_H", "alpha_H"},
}
_REQUIRED = {
    "personalized": {"mu_P", "mu_A", "delta_A"},
    "two-type": {"mu_P", "mu_A_L", "mu_A_H", "alpha_H", "delta_A"},
    "sweep": {"ell_L", "ell_H", "alpha_H", "delta_A"},
}


@dataclass(frozen=True)
class SweepSpec:
    """Grid of high-type likelihood ratios at fixed low type and weights."""

    ell_L: float
    ell_H_start: float
    ell_H_stop: float
    points: int
    alpha_H: float
    delta_A: float
    delta_P: float = 0.0
    rho: float = 0.0
    value_fn: ValueFunction = ValueFunction()

    @property
    def ell_H(self):
        return np.linspace(self.ell_H_start, self.ell_H_stop, self.points)

    def to_dict(self):
        return {
            "ell_L": self.ell_L,
            "ell_H": {"start": self.ell_H_start, "stop": self.ell_H_stop, "points": self.points},
            "alpha_H": self.alpha_H,
            "delta_A": self.delta_A,
            "delta_P": self.delta_P,
            "rho": self.rho,
            "value_fn": self.value_fn.to_dict(),
        }


@dataclass(frozen=True)
class ScenarioFile:
    model: str
    payload: object
    name: str = ""
    description: str = ""


def _line_map(text):
    """Map dotted key paths to 1-based line numbers."""
    lines = {}

    def walk(node, prefix):
        if isinstance(node, yaml.MappingNode):
            for k, v in node.value:
                key = f"{prefix}{k.value}"
                lines[key] = k.start_mark.line + 1
                walk(v, key + ".")

    try:
        root = yaml.compose(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        raise ScenarioParseError(f"invalid YAML: {exc}", line=None if mark is None else mark.line + 1) from exc
    if root is not None:
        walk(root, "")
    return lines


def _number(data, key, lines, prefix=""):
    value = data[key]
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ScenarioParseError(f"expected a number, got {value!r}", key=prefix + key, line=lines.get(prefix + key))
    return float(value)


def _value_fn(data, lines):
    entry = data.get("value_fn", {"family": "quadratic", "curvature": 0.5})
    if not isinstance(entry, dict):
        raise ScenarioParseError("value_fn must be a mapping", key="value_fn", line=lines.get("value_fn"))
    family = entry.get("family", "quadratic")
    try:
        if family == "quadratic":
            return ValueFunction.quadratic(_number(entry, "curvature", lines, "value_fn.") if "curvature" in entry else 0.5)
        if family == "power":
            for k in ("exponent",):
                if k not in entry:
                    raise ScenarioParseError("missing key", key=f"value_fn.{k}", line=lines.get("value_fn"))
            depth = _number(entry, "depth", lines, "value_fn.") if "depth" in entry else 0.5
            return ValueFunction.power(_number(entry, "exponent", lines, "value_fn."), depth)
    except ScenarioParseError:
        raise
    except ArtifactError as exc:
        raise ScenarioParseError(str(exc), key="value_fn", line=lines.get("value_fn")) from exc
    raise ScenarioParseError(f"unknown family {family!r}", key="value_fn.family", line=lines.get("value_fn.family"))


def _discount(data, lines, delta_A):
    entry = data.get("discount")
    if entry is None:
        return None
    if not isinstance(entry, dict):
        raise ScenarioParseError("discount must be a mapping", key="discount", line=lines.get("discount"))
    kind = entry.get("kind", "exponential")
    p = "discount."
    try:
        if kind == "exponential":
            return DiscountSpec.exponential(_number(entry, "rate", lines, p) if "rate" in entry else delta_A)
        if kind == "habit":
            for k in ("lam", "H0", "h"):
                if k not in entry:
                    raise ScenarioParseError("missing key", key=p + k, line=lines.get("discount"))
            return DiscountSpec.habit(delta_A, _number(entry, "lam", lines, p), _number(entry, "H0", lines, p), _number(entry, "h", lines, p))
        if kind == "boredom":
            if "gamma" not in entry:
                raise ScenarioParseError("missing key", key=p + "gamma", line=lines.get("discount"))
            return DiscountSpec.boredom(delta_A, _number(entry, "gamma", lines, p))
    except ScenarioParseError:
        raise
    except ArtifactError as exc:
        raise ScenarioParseError(str(exc), key="discount", line=lines.get("discount")) from exc
    raise ScenarioParseError(f"unknown discount kind {kind!r}", key="discount.kind", line=lines.get("discount.kind"))


def parse_scenario(text: str) -> ScenarioFile:
    """Parse scenario YAML text."""
    lines = _line_map(text)
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:  # pragma: no cover - compose already caught it
        raise ScenarioParseError(f"invalid YAML: {exc}") from exc
    if not isinstance(data, dict):
        raise ScenarioParseError("a scenario file must be a mapping")
    model = data.get("model", "personalized")
    if model not in MODELS:
        raise ScenarioParseError(f"unknown model {model!r}; expected one of {MODELS}", key="model", line=lines.get("model"))
    for key in data:
        if key not in _KEYS[model]:
            raise ScenarioParseError(f"unknown key for model {model!r}", key=str(key), line=lines.get(str(key)))
    for key in sorted(_REQUIRED[model]):
        if key not in data:
            raise ScenarioParseError("missing required key", key=key)
    num = {k: _number(data, k, lines) for k in ("delta_A", "delta_P", "rho", "mu_P", "mu_A", "mu_A_L", "mu_A_H", "alpha_H", "ell_L") if k in data}
    num.setdefault("delta_P", 0.0)
    num.setdefault("rho", 0.0)
    v = _value_fn(data, lines)
    name = str(data.get("name", ""))
    desc = str(data.get("description", ""))
    try:
        if model == "personalized":
            payload = Scenario(
                mu_P=num["mu_P"], mu_A=num["mu_A"], delta_A=num["delta_A"], delta_P=num["delta_P"], rho=num["rho"],
                value_fn=v, discount=_discount(data, lines, num["delta_A"]),
            )
        elif model == "two-type":
            payload = TwoTypeScenario(
                mu_P=num["mu_P"], mu_A_L=num["mu_A_L"], mu_A_H=num["mu_A_H"], alpha_H=num["alpha_H"],
                delta_A=num["delta_A"], delta_P=num["delta_P"], rho=num["rho"], value_fn=v,
            )
        else:
            grid = data["ell_H"]
            if not isinstance(grid, dict) or not {"start", "stop", "points"} <= set(grid):
                raise ScenarioParseError("ell_H must be a mapping with start, stop, points", key="ell_H", line=lines.get("ell_H"))
            points = grid["points"]
            if isinstance(points, bool) or not isinstance(points, int) or points < 1:
                raise ScenarioParseError("points must be a positive integer", key="ell_H.points", line=lines.get("ell_H.points"))
            payload = SweepSpec(
                ell_L=num["ell_L"], ell_H_start=_number(grid, "start", lines, "ell_H."), ell_H_stop=_number(grid, "stop", lines, "ell_H."),
                points=points, alpha_H=num["alpha_H"], delta_A=num["delta_A"], delta_P=num["delta_P"], rho=num["rho"], value_fn=v,
            )
    except ScenarioParseError:
        raise
    except ArtifactError as exc:
        raise ScenarioParseError(str(exc)) from exc
    return ScenarioFile(model, payload, name, desc)


def load_scenario(path) -> ScenarioFile:
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ScenarioParseError(f"cannot read scenario file: {exc}") from exc
    return parse_scenario(text)


def scenario_to_dict(sf: ScenarioFile) -> dict:
    out = {"model": sf.model}
    if sf.name:
        out["name"] = sf.name
    if sf.description:
        out["description"] = sf.description
    p = sf.payload
    if sf.model == "personalized":
        d = p.to_dict()
        disc = d.pop("discount")
        out.update(d)
        if disc["kind"] != "exponential" or disc["rate"] != p.delta_A:
            disc.pop("delta_A", None)
            out["discount"] = disc
    else:
        out.update(p.to_dict())
    return out


def dump_scenario(sf: ScenarioFile) -> str:
    return yaml.safe_dump(scenario_to_dict(sf), sort_keys=False)


__all__ = ["ScenarioFile", "SweepSpec", "dump_scenario", "load_scenario", "parse_scenario", "scenario_to_dict"]
