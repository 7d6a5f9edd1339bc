"""Tables, fits, verdicts and the on-disk report format."""
from __future__ import annotations

import csv
import io
import json
import math
import os
import tempfile
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy import stats


class ExperimentError(RuntimeError):
    pass


class FitError(ExperimentError, ValueError):
    pass


def _clean(v):
    """JSON-safe scalar: numpy scalars unwrapped, non-finite floats mapped to None."""
    if isinstance(v, (np.bool_, bool)):
        return bool(v)
    if isinstance(v, (np.integer, int)):
        return int(v)
    if isinstance(v, (np.floating, float)):
        v = float(v)
        return v if math.isfinite(v) else None
    if isinstance(v, complex):
        raise ExperimentError("complex values must be split before entering a table")
    return v


@dataclass
class Table:
    columns: list[str]
    rows: list[list] = field(default_factory=list)

    def add(self, *values):
        if len(values) != len(self.columns):
            raise ExperimentError(f"row of {len(values)} values for {len(self.columns)} columns")
        self.rows.append([_clean(v) for v in values])

    def column(self, name: str) -> list:
        i = self.columns.index(name)
        return [r[i] for r in self.rows]

    def where(self, **match) -> "Table":
        idx = [self.columns.index(k) for k in match]
        keep = [r for r in self.rows if all(r[i] == v for i, v in zip(idx, match.values()))]
        return Table(list(self.columns), keep)

    def to_dict(self) -> dict:
        return {"columns": list(self.columns), "rows": [list(r) for r in self.rows]}

    @classmethod
    def from_dict(cls, d: dict) -> "Table":
        return cls(list(d["columns"]), [list(r) for r in d["rows"]])


@dataclass(frozen=True)
class GrowthFit:
    slope: float
    band: float
    intercept: float
    r2: float
    n: int

    def __iter__(self):
        return iter((self.slope, self.band))

    def to_dict(self) -> dict:
        return {k: _clean(v) for k, v in
                (("slope", self.slope), ("band", self.band), ("intercept", self.intercept),
                 ("r2", self.r2), ("n", self.n))}


def loglog_fit(x, y, level: float = 0.95) -> GrowthFit:
    """OLS of ``log y`` on ``log x``; ``band`` is the two-sided confidence half-width."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.size != y.size or x.size < 4:
        raise FitError(f"need at least 4 points, got {x.size}")
    if not (np.isfinite(y).all() and (y > 0).all()):
        raise FitError("values must be finite and positive")
    if not (np.isfinite(x).all() and (x > 0).all()):
        raise FitError("abscissae must be finite and positive")
    lx, ly = np.log(x), np.log(y)
    if np.ptp(lx) == 0:
        raise FitError("degenerate abscissae")
    res = stats.linregress(lx, ly)
    q = stats.t.ppf(0.5 + level / 2, x.size - 2)
    r2 = float(res.rvalue ** 2) if np.ptp(ly) > 0 else 1.0
    return GrowthFit(float(res.slope), float(q * res.stderr), float(res.intercept), r2, int(x.size))


def fit_growth_exponent(pairs) -> GrowthFit:
    """Slope of ``log value`` against ``log <t>`` with ``<t> = 1 + |t|``.

    ``pairs`` is a sequence of ``(t, value)``.  Unpacks as ``(slope, band)``.
    """
    pairs = list(pairs)
    t = np.array([p[0] for p in pairs], dtype=float)
    v = np.array([p[1] for p in pairs], dtype=float)
    return loglog_fit(1.0 + np.abs(t), v)


def fit_theta_exponent(thetas, values) -> GrowthFit:
    """Slope of ``log value`` against ``log(pi/2 - |theta|)``."""
    kappa = math.pi / 2 - np.abs(np.asarray(thetas, dtype=float))
    return loglog_fit(kappa, values)


def spread(values) -> float:
    v = np.asarray([x for x in values if x is not None], dtype=float)
    if v.size == 0 or not (v > 0).all():
        return math.nan
    return float(v.max() / v.min())


# ---------------------------------------------------------------------------
# Verdicts
# ---------------------------------------------------------------------------

OPS = ("<=", "<", ">=", ">", "within", "abs<=", "in")


def _resolve(ref, summary: dict, what: str):
    if isinstance(ref, str):
        if ref not in summary:
            raise ExperimentError(f"verdict {what} refers to unknown quantity {ref!r}")
        return summary[ref]
    return ref


def evaluate_verdicts(specs: list[dict], summary: dict) -> list[dict]:
    """Check each declared verdict against the summary quantities.

    A verdict whose quantity is missing from the summary is a configuration
    error; one whose quantity is not a finite number fails.
    """
    out = []
    for spec in specs:
        name, qty, op = spec["name"], spec["quantity"], spec["op"]
        if qty not in summary:
            raise ExperimentError(f"verdict {name!r}: no quantity {qty!r} in the summary "
                                  f"(available: {', '.join(sorted(summary))})")
        value = summary[qty]
        row = {"name": name, "quantity": qty, "op": op, "value": value}
        ok = isinstance(value, (int, float)) and not isinstance(value, bool) and math.isfinite(value)
        if op in ("<=", "<", ">=", ">", "abs<="):
            thr = _resolve(spec["value"], summary, name)
            row["threshold"] = thr
            if ok and thr is not None:
                ok = {"<=": value <= thr, "<": value < thr, ">=": value >= thr,
                      ">": value > thr, "abs<=": abs(value) <= thr}[op]
            else:
                ok = False
        elif op == "within":
            target = _resolve(spec["target"], summary, name)
            row.update(target=target, tol=spec["tol"])
            ok = ok and target is not None and abs(value - target) <= spec["tol"]
        elif op == "in":
            lo, hi = (_resolve(r, summary, name) for r in spec["range"])
            row["range"] = [lo, hi]
            ok = ok and lo <= value <= hi
        else:
            raise ExperimentError(f"unknown verdict operator {op!r}")
        row["passed"] = bool(ok)
        out.append(row)
    return out


# ---------------------------------------------------------------------------
# Report
# ---------------------------------------------------------------------------


@dataclass
class ExperimentReport:
    name: str
    scenario: str
    config: dict
    tables: dict[str, Table]
    fits: dict[str, GrowthFit]
    summary: dict
    verdicts: list[dict]
    notes: list[str] = field(default_factory=list)
    stamps: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(v["passed"] for v in self.verdicts)

    def body(self) -> dict:
        """Everything but the wall-clock and version stamps."""
        return {
            "name": self.name,
            "scenario": self.scenario,
            "config": self.config,
            "tables": {k: t.to_dict() for k, t in self.tables.items()},
            "fits": {k: f.to_dict() for k, f in self.fits.items()},
            "summary": {k: _clean(v) for k, v in self.summary.items()},
            "verdicts": self.verdicts,
            "passed": self.passed,
            "notes": list(self.notes),
        }

    def to_dict(self) -> dict:
        d = self.body()
        d["stamps"] = dict(self.stamps)
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True, allow_nan=False)

    def tables_csv(self) -> str:
        """All tables in long form: ``table,row,column,value``."""
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["table", "row", "column", "value"])
        for tname in sorted(self.tables):
            t = self.tables[tname]
            for i, r in enumerate(t.rows):
                for c, v in zip(t.columns, r):
                    w.writerow([tname, i, c, "" if v is None else repr(v) if isinstance(v, float) else v])
        return buf.getvalue()

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentReport":
        fits = {k: GrowthFit(*(math.nan if v[f] is None else v[f]
                               for f in ("slope", "band", "intercept", "r2", "n")))
                for k, v in d.get("fits", {}).items()}
        return cls(d["name"], d["scenario"], d["config"],
                   {k: Table.from_dict(t) for k, t in d["tables"].items()},
                   fits, d["summary"], d["verdicts"], d.get("notes", []), d.get("stamps", {}))


def atomic_write(path: Path, text: str):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", dir=path.parent)
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            fh.write(text)
            fh.flush()
            os.fsync(fh.fileno())
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_report(report: ExperimentReport, out_dir) -> tuple[Path, Path]:
    out = Path(out_dir)
    rpath = out / f"{report.name}.report.json"
    cpath = out / f"{report.name}.tables.csv"
    atomic_write(cpath, report.tables_csv())
    atomic_write(rpath, report.to_json())
    return rpath, cpath
