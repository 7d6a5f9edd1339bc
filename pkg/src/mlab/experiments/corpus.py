"""The fixed function corpus shipped with the package."""
from __future__ import annotations

import json
from importlib import resources

from ..funcspec import REAL, FuncExpr, builtin, parse
from .report import ExperimentError


def _param(v):
    # complex parameters are stored as [re, im]
    return complex(v[0], v[1]) if isinstance(v, list) else v


def make_function(entry: dict) -> FuncExpr:
    domain = entry.get("domain")
    if "builtin" in entry:
        return builtin(entry["builtin"], *(_param(v) for v in entry.get("params", [])), domain=domain)
    if "expr" in entry:
        return parse(entry["expr"], domain=domain or REAL)
    raise ExperimentError(f"corpus entry {entry.get('name')!r} has neither 'builtin' nor 'expr'")


def load_corpus(names=None, text: str | None = None) -> list[tuple[str, FuncExpr]]:
    """``[(name, f)]`` in file order, optionally restricted to ``names`` (kept in that order)."""
    if text is None:
        text = resources.files("mlab").joinpath("data", "corpus.json").read_text(encoding="utf-8")
    entries = json.loads(text)["functions"]
    table = {e["name"]: e for e in entries}
    if names is None:
        return [(e["name"], make_function(e)) for e in entries]
    missing = [n for n in names if n not in table]
    if missing:
        raise ExperimentError(f"unknown corpus functions: {', '.join(missing)}")
    return [(n, make_function(table[n])) for n in names]
