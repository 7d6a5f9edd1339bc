"""Experiment configuration: JSON schema, defaults and loading."""
from __future__ import annotations

import copy
import json
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import jsonschema

from .report import OPS, ExperimentError


class ConfigError(ExperimentError, ValueError):
    pass


_VERDICT = {
    "type": "object",
    "required": ["name", "quantity", "op"],
    "additionalProperties": False,
    "properties": {
        "name": {"type": "string", "minLength": 1},
        "quantity": {"type": "string", "minLength": 1},
        "op": {"enum": list(OPS)},
        "value": {"type": ["number", "string"]},
        "target": {"type": ["number", "string"]},
        "tol": {"type": "number", "minimum": 0},
        "range": {"type": "array", "items": {"type": ["number", "string"]},
                  "minItems": 2, "maxItems": 2},
        "note": {"type": "string"},
    },
    "allOf": [
        {"if": {"properties": {"op": {"enum": ["<=", "<", ">=", ">", "abs<="]}}},
         "then": {"required": ["value"]}},
        {"if": {"properties": {"op": {"const": "within"}}},
         "then": {"required": ["target", "tol"]}},
        {"if": {"properties": {"op": {"const": "in"}}}, "then": {"required": ["range"]}},
    ],
}

SCHEMA = {
    "$schema": "http://json-schema.org/draft-07/schema#",
    "title": "mlab experiment config",
    "type": "object",
    "required": ["scenario"],
    "additionalProperties": False,
    "properties": {
        "name": {"type": "string", "pattern": "^[A-Za-z0-9_.-]+$"},
        "scenario": {"type": "string"},
        "seed": {"type": "integer", "minimum": 0},
        "params": {"type": "object"},
        "verdicts": {"type": "array", "items": _VERDICT},
        "output": {"type": "object", "additionalProperties": False,
                   "properties": {"dir": {"type": "string"}}},
        "budget": {"type": "object", "additionalProperties": False,
                   "properties": {"max_seconds": {"type": "number", "exclusiveMinimum": 0}}},
        "description": {"type": "string"},
    },
}


def _json_type(v):
    if isinstance(v, bool):
        return "boolean"
    if isinstance(v, int):
        return "integer"
    if isinstance(v, float):
        return "number"
    if isinstance(v, str):
        return "string"
    if isinstance(v, list):
        return "array"
    if isinstance(v, dict):
        return "object"
    return None


def params_schema(defaults: dict) -> dict:
    """Schema for a scenario's ``params``: known keys only, typed after the defaults.

    A default of ``None`` means "derived when omitted" and accepts any type.
    """
    props = {}
    for k, v in defaults.items():
        t = _json_type(v)
        props[k] = {} if t is None else {"type": [t, "null"]}
    return {"type": "object", "additionalProperties": False, "properties": props}


def full_schema(registry) -> dict:
    """The published schema: the top level plus one ``params`` branch per scenario."""
    s = copy.deepcopy(SCHEMA)
    s["properties"]["scenario"] = {"enum": sorted(registry)}
    s["allOf"] = [
        {"if": {"properties": {"scenario": {"const": name}}},
         "then": {"properties": {"params": params_schema(sc.defaults)}}}
        for name, sc in sorted(registry.items())
    ]
    return s


@dataclass
class ExperimentConfig:
    scenario: str
    name: str
    seed: int = 0
    params: dict = field(default_factory=dict)
    verdicts: list = field(default_factory=list)
    output_dir: str = "."
    max_seconds: float | None = None
    description: str = ""

    def echo(self) -> dict:
        """Fully resolved config; the report embeds this and nothing path-dependent."""
        d = {"scenario": self.scenario, "name": self.name, "seed": self.seed,
             "params": copy.deepcopy(self.params), "verdicts": copy.deepcopy(self.verdicts)}
        if self.max_seconds is not None:
            d["budget"] = {"max_seconds": self.max_seconds}
        if self.description:
            d["description"] = self.description
        return d


def validate(raw: dict, registry) -> ExperimentConfig:
    try:
        jsonschema.validate(raw, full_schema(registry))
    except jsonschema.ValidationError as exc:
        where = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise ConfigError(f"config invalid at {where}: {exc.message}") from None
    sc = registry[raw["scenario"]]
    params = copy.deepcopy(sc.defaults)
    params.update({k: v for k, v in raw.get("params", {}).items() if v is not None})
    return ExperimentConfig(
        scenario=raw["scenario"],
        name=raw.get("name", raw["scenario"]),
        seed=int(raw.get("seed", 0)),
        params=params,
        verdicts=list(raw.get("verdicts", [])),
        output_dir=raw.get("output", {}).get("dir", "."),
        max_seconds=raw.get("budget", {}).get("max_seconds"),
        description=raw.get("description", ""),
    )


def bundled_configs() -> list[str]:
    root = resources.files("mlab").joinpath("data", "configs")
    return sorted(p.name[:-5] for p in root.iterdir() if p.name.endswith(".json"))


def read_config(source, registry) -> ExperimentConfig:
    """Load from a dict, a path, or the name of a bundled config."""
    if isinstance(source, dict):
        return validate(source, registry)
    path = Path(source)
    if path.is_file():
        text = path.read_text(encoding="utf-8")
    else:
        ref = resources.files("mlab").joinpath("data", "configs", f"{source}.json")
        if not ref.is_file():
            raise ConfigError(f"no config file {source!r} and no bundled config of that name "
                              f"(bundled: {', '.join(bundled_configs())})")
        text = ref.read_text(encoding="utf-8")
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{source}: not valid JSON ({exc})") from None
    return validate(raw, registry)
