"""JSON run configuration: schema, defaults and conversion to ``RunConfig``."""

from __future__ import annotations

import copy
import json
import math

import jsonschema

from .environment import ActionSetSpec
from .exceptions import ConfigError
from .harness import AttackConfig, PolicyConfig, RunConfig
from .link import LinkSpec
from .policy import DEFAULT_BONUS_SCALE, POLICY_KINDS

_NUMBER_OR_INF = {"anyOf": [{"type": "number"}, {"enum": ["inf", "Infinity"]}]}

SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "properties": {
        "d": {"type": "integer", "minimum": 1},
        "t": {"type": "integer", "minimum": 1},
        "b": {"type": "number", "exclusiveMinimum": 0},
        "link": {
            "type": "object",
            "additionalProperties": False,
            "required": ["kind"],
            "properties": {
                "kind": {"enum": ["sigmoid", "piecewise_linear", "scaled"]},
                "scale": {"type": "number", "exclusiveMinimum": 0},
                "inner": {"enum": ["sigmoid", "piecewise_linear"]},
            },
        },
        "action_set": {
            "type": "object",
            "additionalProperties": False,
            "required": ["kind"],
            "properties": {
                "kind": {"enum": ["hypercube", "basis", "explicit"]},
                "actions": {"type": "array", "minItems": 2,
                            "items": {"type": "array", "items": {"type": "number"}}},
            },
        },
        "theta": {
            "type": "object",
            "additionalProperties": False,
            "required": ["mode"],
            "properties": {
                "mode": {"enum": ["random_norm2", "explicit"]},
                "values": {"type": "array", "items": {"type": "number"}},
                "redraw_per_run": {"type": "boolean"},
            },
        },
        "runs": {"type": "integer", "minimum": 1},
        "base_seed": {"type": "integer", "minimum": 0},
        "delta": {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 1},
        "policies": {
            "type": "array",
            "minItems": 1,
            "items": {
                "type": "object",
                "additionalProperties": False,
                "required": ["kind"],
                "properties": {
                    "kind": {"enum": list(POLICY_KINDS)},
                    "name": {"type": "string", "pattern": "^[A-Za-z0-9_.-]+$"},
                    "c_bar": {"type": "integer", "minimum": 0},
                    "bonus_scale": {"type": "number", "minimum": 0},
                    "overrides": {
                        "type": "object",
                        "additionalProperties": False,
                        "properties": {"lambda": {"type": "number", "exclusiveMinimum": 0},
                                       "alpha": _NUMBER_OR_INF,
                                       "beta": {"type": "number", "minimum": 0},
                                       "kappa": {"type": "number", "exclusiveMinimum": 0}},
                    },
                },
            },
        },
        "attack": {
            "type": "object",
            "additionalProperties": False,
            "required": ["kind"],
            "properties": {
                "kind": {"enum": ["none", "greedy", "random", "adversarial", "misleading"]},
                "budget": {"type": "integer", "minimum": 0},
                "p": {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 1},
                "target": {"type": "integer", "minimum": 0},
            },
        },
    },
}


def _default_config(t: int) -> dict:
    return {
        "d": 5,
        "t": t,
        "b": 2.0,
        "link": {"kind": "sigmoid"},
        "action_set": {"kind": "hypercube"},
        "theta": {"mode": "random_norm2", "redraw_per_run": True},
        "runs": 10,
        "base_seed": 0,
        "delta": 0.05,
        "policies": [{"kind": "rcdb"}],
        "attack": {"kind": "greedy", "budget": math.ceil(math.sqrt(t)), "p": 0.5},
    }


def _schema_message(err: jsonschema.ValidationError) -> str:
    where = "/".join(str(p) for p in err.absolute_path) or "<root>"
    return f"{where}: {err.message}"


def resolve(raw: dict) -> dict:
    """Validate ``raw`` and fill in defaults. The result validates again unchanged."""
    validator = jsonschema.Draft202012Validator(SCHEMA)
    errors = sorted(validator.iter_errors(raw), key=lambda e: list(e.absolute_path))
    if errors:
        raise ConfigError("; ".join(_schema_message(e) for e in errors))
    cfg = _default_config(raw.get("t", 2000))
    for key, value in raw.items():
        value = copy.deepcopy(value)
        if key == "attack":
            # a bare {"kind": ...} keeps the default budget and p
            cfg[key].update(value)
        else:
            cfg[key] = value
    cfg["theta"].setdefault("redraw_per_run", True)
    if cfg["attack"]["kind"] == "random":
        cfg["attack"].setdefault("p", 0.5)
    cfg["attack"].setdefault("budget", math.ceil(math.sqrt(cfg["t"])))

    names = []
    for pol in cfg["policies"]:
        pol.setdefault("name", pol["kind"])
        pol.setdefault("bonus_scale", DEFAULT_BONUS_SCALE)
        names.append(pol["name"])
    if len(set(names)) != len(names):
        raise ConfigError(f"policies: duplicate names {names}")
    if cfg["attack"]["budget"] > cfg["t"]:
        raise ConfigError(f"attack/budget: {cfg['attack']['budget']} exceeds t = {cfg['t']}")
    if cfg["theta"]["mode"] == "explicit" and "values" not in cfg["theta"]:
        raise ConfigError("theta: explicit mode needs 'values'")
    if cfg["action_set"]["kind"] == "explicit" and "actions" not in cfg["action_set"]:
        raise ConfigError("action_set: explicit kind needs 'actions'")
    if cfg["link"]["kind"] == "scaled" and "scale" not in cfg["link"]:
        raise ConfigError("link: scaled kind needs 'scale'")
    to_run_config(cfg)
    return cfg


_OVERRIDE_NAMES = {"lambda": "lam", "alpha": "alpha", "beta": "beta", "kappa": "kappa"}


def _policy_config(pol: dict) -> PolicyConfig:
    overrides = {}
    for key, value in pol.get("overrides", {}).items():
        overrides[_OVERRIDE_NAMES[key]] = math.inf if value in ("inf", "Infinity") else value
    return PolicyConfig(pol["kind"], pol["name"], pol.get("c_bar"), pol["bonus_scale"],
                        overrides)


def to_run_config(cfg: dict) -> RunConfig:
    theta = cfg["theta"]
    actions = cfg["action_set"].get("actions")
    attack = cfg["attack"]
    try:
        return RunConfig(
            d=cfg["d"], T=cfg["t"], B=cfg["b"],
            link=LinkSpec.from_config(cfg["link"]),
            action_set=ActionSetSpec(cfg["action_set"]["kind"],
                                     None if actions is None else tuple(map(tuple, actions))),
            theta_mode=theta["mode"],
            theta_values=None if "values" not in theta else tuple(theta["values"]),
            redraw_theta=theta["redraw_per_run"],
            policies=tuple(_policy_config(p) for p in cfg["policies"]),
            attack=AttackConfig(attack["kind"], attack["budget"], attack.get("p", 0.5),
                                attack.get("target")),
            runs=cfg["runs"], base_seed=cfg["base_seed"], delta=cfg["delta"],
        )
    except ConfigError:
        raise
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from None


def load(path) -> dict:
    """Read and resolve a config file; JSON syntax errors carry line and column."""
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"{path}: {exc.strerror}") from None
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}") from None
    if not isinstance(raw, dict):
        raise ConfigError(f"{path}: top level must be a JSON object")
    return resolve(raw)
