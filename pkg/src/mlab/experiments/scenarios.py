"""Named scenarios: each computes raw tables, then a pure summary of them.

``compute(params, ctx)`` does the numerical work and returns the tables
(plus free-text notes).  ``summarize(tables, params)`` derives every
quantity a verdict can reference from those tables alone, so a saved
report can be re-judged offline.  Pass/fail thresholds never live here.
"""
from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .. import poisson as ps
from ..funcspec import builtin, builtin_f_alpha, parse
from ..norms import (LogGrid, besov_norm, classical_mihlin_seminorm,
                     e_infty_norm, e_unif_norm, embedding_ratios, mihlin_norm)
from ..operators import (Budget, GridField, OperatorFamily, TorusGrid,
                         gamma_bound_estimate, laplacian_halfpower_symbol, mean_zero,
                         multiplier_operator, opnorm_estimate, paley_littlewood_ratio,
                         resolvent_check, semigroup_operator, wave_family)
from ..partitions import dyadic_partition
from ..transforms import sample
from .corpus import load_corpus
from .report import (ExperimentError, FitError, GrowthFit, Table, fit_growth_exponent,
                     fit_theta_exponent, spread)


class BudgetExceeded(ExperimentError):
    pass


@dataclass
class Context:
    seed: int = 0
    max_seconds: float | None = None
    started: float = field(default_factory=time.monotonic)

    def check(self):
        if self.max_seconds is not None and time.monotonic() - self.started > self.max_seconds:
            raise BudgetExceeded(f"time budget of {self.max_seconds:g} s exceeded")

    def rng(self, stream: int = 0) -> np.random.Generator:
        return np.random.default_rng([self.seed, stream])


@dataclass(frozen=True)
class Scenario:
    name: str
    compute: Callable
    summarize: Callable
    defaults: dict
    doc: str = ""


REGISTRY: dict[str, Scenario] = {}


def scenario(name: str, defaults: dict, summarize: Callable):
    def deco(fn):
        REGISTRY[name] = Scenario(name, fn, summarize, defaults, (fn.__doc__ or "").strip())
        return fn
    return deco


# ---------------------------------------------------------------------------
# shared helpers
# ---------------------------------------------------------------------------

_TORUS = {"d": 1, "n": 1024, "period": 256.0, "symbol": "continuum"}
_THETA = {"j_min": 2, "j_max": 10, "thetas": None}


def _torus(p):
    grid = TorusGrid(int(p["d"]), int(p["n"]), float(p["period"]))
    return grid, laplacian_halfpower_symbol(grid, p["symbol"])


def _thetas(p) -> list[float]:
    if p.get("thetas"):
        return [float(t) for t in p["thetas"]]
    return ps.theta_grid(int(p["j_min"]), int(p["j_max"])).tolist()


def _fit(fn, *args) -> GrowthFit | None:
    try:
        return fn(*args)
    except FitError:
        return None


def _slope(fit: GrowthFit | None) -> float:
    return fit.slope if fit is not None else math.nan


def _put_fit(summary, fits, key, fit):
    summary[f"slope_{key}"] = _slope(fit)
    summary[f"band_{key}"] = fit.band if fit is not None else math.nan
    if fit is not None:
        fits[key] = fit


def _plabel(p) -> str:
    return f"{float(p):g}"


def _kappa(theta: float) -> float:
    return math.pi / 2 - abs(theta)


def _max_over_median(values) -> float:
    v = np.asarray([x for x in values if x is not None], dtype=float)
    if v.size == 0:
        return math.nan
    med = float(np.median(v))
    return float(v.max() / med) if med > 0 else math.nan


def _member_family(fns, dilations, A, mean_zero_modes=True) -> OperatorFamily:
    ops, params = [], []
    for name, f in fns:
        for j in dilations:
            ops.append(multiplier_operator(f.dilate(2.0 ** j), A, mean_zero=mean_zero_modes))
            params.append({"name": name, "j": int(j)})
    return OperatorFamily(tuple(ops), tuple(params))


def _gamma_table(family, p, ctx, trials_list, selection_size, ascent_iters) -> Table:
    tab = Table(["trials", "value", "single_operator_bound"])
    for trials in trials_list:
        ctx.check()
        est = gamma_bound_estimate(family, float(p), trials=int(trials), seed=ctx.seed,
                                   selection_size=int(selection_size),
                                   ascent_iters=int(ascent_iters))
        tab.add(int(trials), est.value, est.single_operator_bound)
    return tab


def _summarize_gamma(tab: Table, summary: dict):
    vals = tab.column("value")
    summary["gamma_first"] = vals[0] if vals else math.nan
    summary["gamma_last"] = vals[-1] if vals else math.nan
    summary["gamma_max"] = max(vals) if vals else math.nan
    summary["gamma_growth_ratio"] = (vals[-1] / vals[0]) if vals and vals[0] else math.nan


# ---------------------------------------------------------------------------
# noop
# ---------------------------------------------------------------------------


def _sum_noop(tables, p):
    return {}, {}


@scenario("noop", {}, _sum_noop)
def _noop(p, ctx):
    """Does nothing; exercises the runner and the report format."""
    return {}, []


# ---------------------------------------------------------------------------
# operator-side scenarios
# ---------------------------------------------------------------------------


def _sum_wave(tables, p):
    summary, fits = {}, {}
    sweep = tables["sweep"]
    for pp in p["ps"]:
        sub = sweep.where(p=float(pp))
        fit = _fit(fit_growth_exponent, list(zip(sub.column("t"), sub.column("lower_bound"))))
        _put_fit(summary, fits, f"p{_plabel(pp)}", fit)
        if fit is not None:
            summary[f"excess_over_alpha_p{_plabel(pp)}"] = fit.slope - p["alpha"]
    mt = tables["mihlin"]
    fit = _fit(fit_growth_exponent, list(zip(mt.column("t"), mt.column("mihlin_norm"))))
    _put_fit(summary, fits, "mihlin", fit)
    summary["alpha"] = p["alpha"]
    summary["mihlin_order"] = _mihlin_order(p)
    return summary, fits


def _mihlin_order(p):
    return p["mihlin_order"] if p["mihlin_order"] is not None else p["d"] / 2 + 0.1


@scenario("wave-growth", {**_TORUS, "n": 8192, "period": 2048.0, "alpha": 0.6, "beta": 0.6,
                          "ps": [2.0, 4.0], "ts": [1.0, 2.0, 4.0, 8.0, 16.0, 32.0, 64.0, 128.0, 256.0],
                          "max_iter": 200, "starts": 3, "mihlin_order": None},
          _sum_wave)
def _wave_growth(p, ctx):
    """Lower bounds of ||(1+A)^-beta e^{itA}||_{p->p} over t, and the Mihlin norms of the same symbols."""
    grid, A = _torus(p)
    if max(p["ts"]) > grid.period / 4:
        raise ExperimentError("t must stay below period/4, otherwise the torus wraps the wave front")
    budget = Budget(max_iter=int(p["max_iter"]), starts=int(p["starts"]))
    sweep = Table(["p", "t", "lower_bound", "sup_symbol", "source", "converged", "iterations"])
    for pp in p["ps"]:
        for t in p["ts"]:
            ctx.check()
            T = multiplier_operator(builtin_f_alpha(p["beta"], t), A)
            est = opnorm_estimate(T, float(pp), budget)
            sweep.add(float(pp), float(t), est.lower_bound, T.sup, est.source, est.converged,
                      est.iterations)
    order = _mihlin_order(p)
    mt = Table(["t", "mihlin_norm", "order"])
    for t in p["ts"]:
        ctx.check()
        rep = mihlin_norm(builtin_f_alpha(p["beta"], t), order, accept_tail=True)
        mt.add(float(t), rep.value, order)
    return {"sweep": sweep, "mihlin": mt}, []


def _sum_s2w(tables, p):
    summary, fits = {}, {}
    sg = tables["semigroup"]
    fit = _fit(fit_theta_exponent, sg.column("theta"), sg.column("gamma"))
    _put_fit(summary, fits, "semigroup_theta", fit)
    summary["semigroup_exponent"] = -_slope(fit)
    wv = tables["wave"]
    fit = _fit(fit_growth_exponent, list(zip(wv.column("t"), wv.column("gamma"))))
    _put_fit(summary, fits, "wave_t", fit)
    summary["alpha"] = p["alpha"]
    summary["semigroup_exponent_minus_alpha"] = summary["semigroup_exponent"] - p["alpha"]
    summary["wave_slope_minus_alpha"] = summary["slope_wave_t"] - p["alpha"]
    return summary, fits


@scenario("semigroup-to-wave", {**_TORUS, **_THETA, "j_max": 6, "alpha": 0.6, "beta": 0.6, "p": 4.0,
                                "t0": 1.0, "ts": [1.0, 2.0, 4.0, 8.0, 16.0], "k_range": [-4, 4],
                                "trials": 10, "selection_size": 4, "ascent_iters": 10},
          _sum_s2w)
def _semigroup_to_wave(p, ctx):
    """gamma-estimates of the rotated semigroup family over theta and of the wave family over t."""
    grid, A = _torus(p)
    ks = range(int(p["k_range"][0]), int(p["k_range"][1]) + 1)
    common = dict(trials=int(p["trials"]), seed=ctx.seed, selection_size=int(p["selection_size"]),
                  ascent_iters=int(p["ascent_iters"]))
    sg = Table(["theta", "kappa", "gamma", "single_operator_bound"])
    for theta in _thetas(p):
        ctx.check()
        ops = tuple(semigroup_operator(A, p["t0"] * 2.0 ** k, theta) for k in ks)
        est = gamma_bound_estimate(OperatorFamily(ops), float(p["p"]), **common)
        sg.add(theta, _kappa(theta), est.value, est.single_operator_bound)
    wv = Table(["t", "gamma", "single_operator_bound"])
    for t in p["ts"]:
        ctx.check()
        fam = wave_family(A, p["alpha"], p["beta"], float(t), p["k_range"])
        est = gamma_bound_estimate(fam, float(p["p"]), **common)
        wv.add(float(t), est.value, est.single_operator_bound)
    return {"semigroup": sg, "wave": wv}, []


def _sum_smoothed(tables, p):
    summary, fits = {}, {}
    tab = tables["ratios"]
    ratios = tab.column("ratio")
    summary["max_ratio"] = max(ratios)
    summary["min_ratio"] = min(ratios)
    summary["ratio_spread"] = spread(ratios)
    worst = -math.inf
    for c in p["centers"]:
        sub = tab.where(center=float(c))
        fit = _fit(fit_growth_exponent, list(zip(sub.column("nu"), sub.column("ratio"))))
        _put_fit(summary, fits, f"ratio_c{c:g}", fit)
        worst = max(worst, _slope(fit))
        fit = _fit(fit_growth_exponent, list(zip(sub.column("nu"), sub.column("e_infty"))))
        _put_fit(summary, fits, f"e_infty_c{c:g}", fit)
    summary["max_ratio_slope"] = worst
    summary["alpha"] = p["alpha"]
    return summary, fits


@scenario("smoothed-calculus", {**_TORUS, "alpha": 0.5, "beta": None, "p": 4.0,
                                "centers": [2.0, 6.0], "width": 1.0,
                                "nus": [0.0, 1.0, 2.0, 4.0, 8.0, 16.0, 32.0],
                                "sample_period": 64.0, "sample_n": 4096,
                                "max_iter": 100, "starts": 3},
          _sum_smoothed)
def _smoothed_calculus(p, ctx):
    """||(1+A)^-beta f(A)|| / ||f||_{E^alpha_inf} for modulated bumps with compact support in (0, inf)."""
    grid, A = _torus(p)
    beta = p["beta"] if p["beta"] is not None else 3 * p["alpha"]
    smooth = builtin("shifted_power", 1.0, -float(beta))
    budget = Budget(max_iter=int(p["max_iter"]), starts=int(p["starts"]))
    P, N = float(p["sample_period"]), int(p["sample_n"])
    w = float(p["width"])
    tab = Table(["center", "nu", "e_infty", "lower_bound", "ratio"])
    for c in p["centers"]:
        if c - w <= 0:
            raise ExperimentError(f"bump at {c} with half-width {w} leaves (0, inf)")
        for nu in p["nus"]:
            ctx.check()
            f = parse(f"bump((x - {float(c)!r}) / {w!r}) * exp(1i * {float(nu)!r} * x)")
            e = e_infty_norm(sample(f, -P / 2, P / N, N), p["alpha"]).value
            est = opnorm_estimate(multiplier_operator(f * smooth, A), float(p["p"]), budget)
            tab.add(float(c), float(nu), e, est.lower_bound, est.lower_bound / e)
    return {"ratios": tab}, [f"beta = {beta:g}"]


def _sum_eunif_calc(tables, p):
    tab = tables["ratios"]
    r = tab.column("ratio")
    summary = {"max_ratio": max(r), "min_ratio": min(r), "median_ratio": float(np.median(r)),
               "ratio_max_over_median": _max_over_median(r), "ratio_spread": spread(r),
               "unresolved_total": sum(tab.column("unresolved_k"))}
    return summary, {}


@scenario("eunif-calculus", {**_TORUS, "alpha": 0.5, "p": 4.0, "k_range": [-8, 8], "functions": None,
                             "max_iter": 100, "starts": 3},
          _sum_eunif_calc)
def _eunif_calculus(p, ctx):
    """||f(A)||_{p->p} lower bound against ||f||_{E^alpha_unif} over the corpus (mean-zero modes)."""
    grid, A = _torus(p)
    budget = Budget(max_iter=int(p["max_iter"]), starts=int(p["starts"]))
    tab = Table(["name", "e_unif", "unresolved_k", "lower_bound", "ratio"])
    for name, f in load_corpus(p["functions"]):
        ctx.check()
        rep = e_unif_norm(f, p["alpha"], tuple(p["k_range"]))
        est = opnorm_estimate(multiplier_operator(f, A, mean_zero=True), float(p["p"]), budget)
        tab.add(name, rep.value, len(rep.diagnostics["unresolved_k"]), est.lower_bound,
                est.lower_bound / rep.value)
    return {"ratios": tab}, ["operators act on the mean-zero subspace, where the spectrum is in (0, inf)"]


_GAMMA_FNS = ["f_alpha(1,0)", "x/(1+x)^2", "exp(-x)", "bump(log x)", "1/(1+x^2)"]


def _sum_gamma_family(tables, p):
    summary = {"summability": float(sum(tables["summability"].column("max_term")))}
    _summarize_gamma(tables["gamma"], summary)
    summary["gamma_over_summability"] = summary["gamma_last"] / summary["summability"]
    return summary, {}


@scenario("gamma-family", {**_TORUS, "alpha": 0.5, "p": 4.0, "functions": _GAMMA_FNS,
                           "dilations": [-2, -1, 0, 1, 2], "k_range": [-8, 8],
                           "trials": [10, 20, 40], "selection_size": 4, "ascent_iters": 10},
          _sum_gamma_family)
def _gamma_family(p, ctx):
    """gamma-estimate of {f(2^j A)} for a corpus subset, with the band summability sum of the set."""
    grid, A = _torus(p)
    fns = load_corpus(p["functions"])
    best: dict[int, float] = {}
    members = Table(["name", "e_unif"])
    for name, f in fns:
        ctx.check()
        rep = e_unif_norm(f, p["alpha"], tuple(p["k_range"]))
        members.add(name, rep.value)
        for n, v in rep.per_band_terms.items():
            best[int(n)] = max(best.get(int(n), 0.0), v)
    summ = Table(["band", "max_term"])
    floor = 1e-16 * sum(best.values())
    for n in sorted(best):
        if best[n] > floor:
            summ.add(n, best[n])
    fam = _member_family(fns, p["dilations"], A)
    gam = _gamma_table(fam, p["p"], ctx, p["trials"], p["selection_size"], p["ascent_iters"])
    return {"members": members, "summability": summ, "gamma": gam}, []


def _sum_pl(tables, p):
    summary = {}
    tab = tables["ratios"]
    for pp in p["ps"]:
        r = tab.where(p=float(pp)).column("ratio")
        lab = _plabel(pp)
        summary[f"min_ratio_p{lab}"] = min(r)
        summary[f"max_ratio_p{lab}"] = max(r)
        summary[f"spread_p{lab}"] = spread(r)
    summary["lower_limit_p2"] = 2 ** -0.5
    return summary, {}


def _random_field(rng, grid, kind):
    shape = grid.shape
    if kind == "white":
        v = rng.standard_normal(shape)
    elif kind == "colored":
        s = rng.uniform(0.0, 1.5)
        mesh = grid.frequency_mesh()
        mag = np.sqrt(sum(m ** 2 for m in mesh))
        filt = np.zeros(shape)
        filt[mag > 0] = mag[mag > 0] ** (-s)
        v = np.fft.ifftn(np.fft.fftn(rng.standard_normal(shape)) * filt).real
    elif kind == "sparse":
        v = np.zeros(shape)
        idx = tuple(rng.integers(0, grid.n, (grid.d, 8)))
        np.add.at(v, idx, rng.standard_normal(8))
    else:
        raise ExperimentError(f"unknown field kind {kind!r}")
    return mean_zero(GridField(grid, v.astype(complex)))


@scenario("paley-littlewood", {**_TORUS, "ps": [2.0, 4.0], "samples": 100,
                               "kinds": ["white", "colored", "sparse"]},
          _sum_pl)
def _paley_littlewood(p, ctx):
    """Square-function ratios of dyadic pieces over random mean-zero fields."""
    grid, A = _torus(p)
    s = A.symbol.real
    nz = s[s > 0]
    fam = dyadic_partition(int(math.floor(math.log2(nz.min()))) - 1,
                           int(math.ceil(math.log2(nz.max()))) + 1)
    rng = ctx.rng(1)
    tab = Table(["sample", "kind", "p", "ratio"])
    for i in range(int(p["samples"])):
        ctx.check()
        kind = p["kinds"][i % len(p["kinds"])]
        x = _random_field(rng, grid, kind)
        for pp in p["ps"]:
            tab.add(i, kind, float(pp), paley_littlewood_ratio(A, fam, x, float(pp)))
    return {"ratios": tab}, [f"dyadic family indices [{fam.n_min}, {fam.n_max}]"]


def _sum_mgamma(tables, p):
    summary = {}
    _summarize_gamma(tables["gamma"], summary)
    return summary, {}


@scenario("mihlin-gamma", {**_TORUS, "p": 4.0, "mihlin_order": 1.0, "functions": _GAMMA_FNS,
                           "dilations": [-2, -1, 0, 1, 2], "trials": [10, 20, 40],
                           "selection_size": 4, "ascent_iters": 10},
          _sum_mgamma)
def _mihlin_gamma(p, ctx):
    """gamma-estimate of {f(2^j A)} with every f scaled to the unit sphere of M^order."""
    grid, A = _torus(p)
    members = Table(["name", "mihlin_norm"])
    unit = []
    for name, f in load_corpus(p["functions"]):
        ctx.check()
        rep = mihlin_norm(f, p["mihlin_order"], accept_tail=True)
        if "divergent" in rep.flags or rep.value == 0:
            continue
        members.add(name, rep.value)
        # dilation is a translation of f(e^x), so dilates stay on the unit sphere
        unit.append((name, f / rep.value))
    fam = _member_family(unit, p["dilations"], A)
    gam = _gamma_table(fam, p["p"], ctx, p["trials"], p["selection_size"], p["ascent_iters"])
    return {"members": members, "gamma": gam}, []


def _sum_single(tables, p):
    tab = tables["estimate"]
    return {"lower_bound": tab.column("lower_bound")[0], "sup_symbol": tab.column("sup_symbol")[0]}, {}


@scenario("opnorm", {**_TORUS, "expr": "exp(-x)", "domain": "real", "p": 4.0, "mean_zero": False,
                     "max_iter": 200, "starts": 3},
          _sum_single)
def _opnorm(p, ctx):
    """Lower bound on ||f(A)||_{p->p} for one symbol."""
    grid, A = _torus(p)
    f = parse(p["expr"], domain=p["domain"])
    T = multiplier_operator(f, A, mean_zero=bool(p["mean_zero"]))
    est = opnorm_estimate(T, float(p["p"]), Budget(max_iter=int(p["max_iter"]), starts=int(p["starts"])))
    tab = Table(["p", "lower_bound", "sup_symbol", "source", "converged", "iterations"])
    tab.add(float(p["p"]), est.lower_bound, T.sup, est.source, est.converged, est.iterations)
    return {"estimate": tab}, []


def _sum_gamma_est(tables, p):
    tab = tables["estimate"]
    return {"gamma": tab.column("value")[0], "stderr": tab.column("stderr")[0],
            "single_operator_bound": tab.column("single_operator_bound")[0]}, {}


@scenario("gamma-estimate", {**_TORUS, "family": "wave", "alpha": 0.6, "beta": 0.6, "t": 1.0,
                             "theta": 0.0, "k_range": [-8, 8], "p": 4.0, "trials": 20,
                             "selection_size": 4, "ascent_iters": 20, "gaussian": False,
                             "samples": 200},
          _sum_gamma_est)
def _gamma_estimate(p, ctx):
    """One gamma-estimate of the wave family or the rotated semigroup family over k."""
    grid, A = _torus(p)
    if p["family"] == "wave":
        fam = wave_family(A, p["alpha"], p["beta"], float(p["t"]), p["k_range"])
    elif p["family"] == "semigroup":
        ks = range(int(p["k_range"][0]), int(p["k_range"][1]) + 1)
        fam = OperatorFamily(tuple(semigroup_operator(A, p["t"] * 2.0 ** k, p["theta"]) for k in ks))
    else:
        raise ExperimentError(f"unknown family {p['family']!r}")
    est = gamma_bound_estimate(fam, float(p["p"]), trials=int(p["trials"]), seed=ctx.seed,
                               selection_size=int(p["selection_size"]),
                               ascent_iters=int(p["ascent_iters"]), gaussian=bool(p["gaussian"]),
                               samples=int(p["samples"]))
    tab = Table(["value", "stderr", "single_operator_bound", "trials"])
    tab.add(est.value, est.stderr, est.single_operator_bound, est.trials)
    return {"estimate": tab}, []


def _sum_resolvent(tables, p):
    v = tables["values"].column("value")
    return {"max_value": max(v)}, {}


@scenario("resolvent", {**_TORUS, "theta": 0.5, "p": 2.0, "angles": [0.75, 1.5, 3.0],
                        "radii": [0.01, 1.0, 100.0]},
          _sum_resolvent)
def _resolvent(p, ctx):
    """||lambda (lambda - A)^-1|| at sample points outside the sector of angle theta."""
    grid, A = _torus(p)
    tab = Table(["angle", "radius", "value"])
    for phi in p["angles"]:
        for r in p["radii"]:
            ctx.check()
            lam = r * complex(math.cos(phi), math.sin(phi))
            tab.add(float(phi), float(r), resolvent_check(A, p["theta"], [lam], float(p["p"])))
    return {"values": tab}, []


# ---------------------------------------------------------------------------
# norm-side scenarios
# ---------------------------------------------------------------------------


def _sum_embed(tables, p):
    rows = tables["rows"]
    r1, r2 = rows.column("r1"), rows.column("r2")
    summary = {"max_r1": max(r1), "max_r2": max(r2), "median_r2": float(np.median(r2)),
               "r2_max_over_median": _max_over_median(r2),
               "r1_max_over_median": _max_over_median(r1),
               "n_rows": len(rows.rows), "n_excluded": len(tables["excluded"].rows)}
    return summary, {}


_LOG = {"x_min": -30.0, "x_max": 12.0, "blend": 2.0, "log_n": 131072}


def _log_grid(p) -> LogGrid:
    return LogGrid(x_min=p["x_min"], x_max=p["x_max"], blend=p["blend"], n=int(p["log_n"]))


@scenario("embeddings", {"alpha": 0.5, "eps": 0.1, "k_range": [-8, 8], "functions": None, **_LOG},
          _sum_embed)
def _embeddings(p, ctx):
    """r1 = E_unif / M^{a+1+eps} and r2 = M^{a-eps} / E_unif over the corpus."""
    rows = Table(["name", "m_hi", "e_unif", "m_lo", "r1", "r2"])
    excluded = Table(["name", "reason"])
    for name, f in load_corpus(p["functions"]):
        ctx.check()
        rep = embedding_ratios([(name, f)], p["alpha"], p["eps"], _log_grid(p), None,
                               tuple(p["k_range"]))
        for r in rep.rows:
            rows.add(r["name"], r["m_hi"], r["e_unif"], r["m_lo"], r["r1"], r["r2"])
        for r in rep.excluded:
            excluded.add(r["name"], r["reason"])
    return {"rows": rows, "excluded": excluded}, []


def _sum_algebra(tables, p):
    d = tables["pairs"].column("defect")
    return {"max_defect": max(d), "min_defect": min(d), "median_defect": float(np.median(d)),
            "defect_max_over_median": _max_over_median(d)}, {}


@scenario("algebra", {"alpha": 0.5, "k_range": [-8, 8], "pairs": 50, "functions": None}, _sum_algebra)
def _algebra(p, ctx):
    """||fg|| / (||f|| ||g||) in E^alpha_unif over random corpus pairs."""
    fns = load_corpus(p["functions"])
    all_pairs = [(i, j) for i in range(len(fns)) for j in range(i + 1, len(fns))]
    count = min(int(p["pairs"]), len(all_pairs))
    pick = ctx.rng(2).choice(len(all_pairs), size=count, replace=False)
    cache: dict[int, float] = {}

    def norm(i):
        if i not in cache:
            cache[i] = e_unif_norm(fns[i][1], p["alpha"], tuple(p["k_range"])).value
        return cache[i]

    tab = Table(["f", "g", "norm_f", "norm_g", "norm_fg", "defect"])
    for idx in sorted(pick.tolist()):
        ctx.check()
        i, j = all_pairs[idx]
        nfg = e_unif_norm(fns[i][1] * fns[j][1], p["alpha"], tuple(p["k_range"])).value
        tab.add(fns[i][0], fns[j][0], norm(i), norm(j), nfg, nfg / (norm(i) * norm(j)))
    return {"pairs": tab}, []


def _sum_falpha(tables, p):
    summary, fits = {}, {}
    tab = tables["sweep"]
    t, v = tab.column("t"), tab.column("value")
    _put_fit(summary, fits, "t", _fit(fit_growth_exponent, list(zip(t, v))))
    power = p["growth_power"] if p["growth_power"] is not None else p["alpha0"]
    summary["normalized_spread"] = spread([x / (1 + abs(s)) ** power for s, x in zip(t, v)])
    summary["alpha"] = p["alpha"]
    return summary, fits


@scenario("falpha-growth", {"alpha0": 1.0, "alpha": 0.8, "growth_power": None,
                            "ts": [1.0, 2.0, 4.0, 8.0, 16.0, 32.0, 64.0, 128.0, 256.0], **_LOG},
          _sum_falpha)
def _falpha_growth(p, ctx):
    """Mihlin norm of f_alpha0(t) over t."""
    tab = Table(["t", "value", "x_max_used", "tail", "divergent"])
    for t in p["ts"]:
        ctx.check()
        rep = mihlin_norm(builtin_f_alpha(p["alpha0"], t), p["alpha"], _log_grid(p), accept_tail=True)
        tab.add(float(t), rep.value, rep.grid["x_max_used"], "tail" in rep.flags,
                "divergent" in rep.flags)
    return {"sweep": tab}, []


def _sum_norm(tables, p):
    tab = tables["norm"]
    return {"value": tab.column("value")[0], "truncation_bound": tab.column("truncation_bound")[0]}, {}


@scenario("norm", {"kind": "mihlin", "expr": "1 / (1 + x)", "domain": "real", "alpha": 0.5, "q": None,
                   "origin": -32.0, "step": 0.015625, "n": 4096, "k_range": [-8, 8], "order": 2,
                   "allow_fd": False, **_LOG},
          _sum_norm)
def _norm(p, ctx):
    """One norm of one function; sampled kinds use the (origin, step, n) grid."""
    f = parse(p["expr"], domain=p["domain"])
    kind = p["kind"]
    tab = Table(["kind", "alpha", "value", "truncation_bound", "flags"])
    terms = Table(["band", "term"])
    if kind == "classical":
        val = classical_mihlin_seminorm(f, int(p["order"]), allow_fd=bool(p["allow_fd"]))
        tab.add(kind, None, val, None, "")
        return {"norm": tab, "terms": terms}, []
    if kind in ("besov", "einf"):
        s = sample(f, p["origin"], p["step"], int(p["n"]))
        if kind == "besov":
            rep = besov_norm(s, p["alpha"], p["q"] if p["q"] is not None else 1)
        else:
            rep = e_infty_norm(s, p["alpha"])
    elif kind == "mihlin":
        rep = mihlin_norm(f, p["alpha"], _log_grid(p), accept_tail=True)
    elif kind == "eunif":
        rep = e_unif_norm(f, p["alpha"], tuple(p["k_range"]))
    else:
        raise ExperimentError(f"unknown norm kind {kind!r}")
    tab.add(kind, p["alpha"], rep.value, rep.truncation_bound, ",".join(rep.flags))
    for n, v in sorted(rep.per_band_terms.items(), key=lambda kv: int(kv[0])):
        terms.add(int(n), v)
    return {"norm": tab, "terms": terms}, []


# ---------------------------------------------------------------------------
# Poisson kernel sweeps
# ---------------------------------------------------------------------------


def _theta_sweep_summary(tab, dims, column, prefix, summary, fits):
    for d in dims:
        sub = tab.where(d=int(d))
        fit = _fit(fit_theta_exponent, sub.column("theta"), sub.column(column))
        _put_fit(summary, fits, f"{prefix}d{d}", fit)


def _sum_c4(tables, p):
    summary, fits = {}, {}
    _theta_sweep_summary(tables["sweep"], p["dims"], "c4", "", summary, fits)
    for d in p["dims"]:
        summary[f"target_d{d}"] = -(d - 1) / 2
    if "anchors" in tables and tables["anchors"].rows:
        summary["anchor_error_max"] = max(tables["anchors"].column("error"))
    return summary, fits


@scenario("c4-sweep", {"dims": [1, 2, 3], "delta": 0.5, **_THETA, "anchors": True}, _sum_c4)
def _c4_sweep(p, ctx):
    """C_4 = int |P|^{-a} (1+|x|)^delta over the theta grid, plus closed-form anchors."""
    sweep = Table(["d", "theta", "kappa", "c4", "quad_error"])
    for d in p["dims"]:
        for theta in _thetas(p):
            ctx.check()
            r = ps.c4_integral(theta, int(d), p["delta"])
            sweep.add(int(d), theta, _kappa(theta), r.value, r.error)
    tables = {"sweep": sweep}
    if p["anchors"]:
        anchors = Table(["d", "value", "exact", "error"])
        for d, exact in ((1, math.pi), (3, math.pi ** 2)):
            v = ps.c4_integral(0.0, d, 0.0).value
            anchors.add(d, v, exact, abs(v - exact))
        tables["anchors"] = anchors
    return tables, []


def _c_param(p, d):
    return p["c"] if p["c"] is not None else d + 0.5


def _sum_c2(tables, p):
    summary, fits = {}, {}
    tab = tables["sweep"]
    _theta_sweep_summary(tab, p["dims"], "c2", "", summary, fits)
    _theta_sweep_summary(tab, p["dims"], "c2_1", "c2_1_", summary, fits)
    _theta_sweep_summary(tab, p["dims"], "gradient", "gradient_", summary, fits)
    for d in p["dims"]:
        summary[f"target_d{d}"] = -1.0
    return summary, fits


@scenario("c2-sweep", {"dims": [2], "s": [1.0, 1.0], "c": None, **_THETA}, _sum_c2)
def _c2_sweep(p, ctx):
    """C_2(s) on Re s = 1 over the theta grid, with its two pieces and the exact gradient integral."""
    s = complex(p["s"][0], p["s"][1])
    tab = Table(["d", "theta", "kappa", "c2", "c2_1", "c2_2", "gradient"])
    for d in p["dims"]:
        for theta in _thetas(p):
            ctx.check()
            r = ps.c2_integral(s, theta, int(d), _c_param(p, d))
            tab.add(int(d), theta, _kappa(theta), r.value, r.pieces["c2_1"], r.pieces["c2_2"],
                    r.pieces["gradient"])
    return {"sweep": tab}, []


def _sum_c3(tables, p):
    summary, fits = {}, {}
    tab = tables["sweep"]
    _theta_sweep_summary(tab, p["dims"], "c3", "", summary, fits)
    _theta_sweep_summary(tab, p["dims"], "inner", "inner_", summary, fits)
    for d in p["dims"]:
        summary[f"target_d{d}"] = -(d + 1) / 2 * (1 + p["epsilon"]) + 1
    return summary, fits


@scenario("c3-sweep", {"dims": [2], "epsilon": 0.1, "c": None, **_THETA}, _sum_c3)
def _c3_sweep(p, ctx):
    """C_3(-eps) over the theta grid, split at |x| = 2."""
    tab = Table(["d", "theta", "kappa", "c3", "inner", "outer"])
    for d in p["dims"]:
        for theta in _thetas(p):
            ctx.check()
            r = ps.c3_integral(p["epsilon"], theta, int(d), _c_param(p, d))
            tab.add(int(d), theta, _kappa(theta), r.value, r.pieces["inner"], r.pieces["outer"])
    return {"sweep": tab}, []


def _sum_hormander(tables, p):
    summary, fits = {}, {}
    tab = tables["values"]
    for d in p["dims"]:
        sub = tab.where(d=int(d))
        sups: dict[float, float] = {}
        for th, v in zip(sub.column("theta"), sub.column("value")):
            sups[th] = max(sups.get(th, 0.0), v)
        ths = sorted(sups)
        fit = _fit(fit_theta_exponent, ths, [sups[t] for t in ths])
        _put_fit(summary, fits, f"d{d}", fit)
        summary[f"exponent_d{d}"] = -_slope(fit)
        summary[f"sup_max_d{d}"] = max(sups.values()) if sups else math.nan
    return summary, fits


@scenario("hormander-sweep", {"dims": [1, 2], "y": 1.0, "t": 1.0, "k_range": [-8, 8], "tol": 1e-8,
                              **_THETA},
          _sum_hormander)
def _hormander_sweep(p, ctx):
    """int_{|x|>=2|y|} |p(x-y) - p(x)| dx at scale 2^k t over k and theta."""
    tab = Table(["d", "theta", "kappa", "k", "value", "tail_bound"])
    for d in p["dims"]:
        for theta in _thetas(p):
            kp = ps.KernelParams(p["t"], theta, int(d))
            for k in range(int(p["k_range"][0]), int(p["k_range"][1]) + 1):
                ctx.check()
                r = ps.hormander_integral(p["y"], kp, k, p["tol"])
                tab.add(int(d), theta, _kappa(theta), k, r.value, r.tail_bound)
    return {"values": tab}, []


def _sum_dini(tables, p):
    summary, fits = {}, {}
    tab = tables["sweep"]
    fit = _fit(fit_theta_exponent, tab.column("theta"), tab.column("bound"))
    _put_fit(summary, fits, "bound", fit)
    d, eps = p["d"], p["epsilon"]
    a = (d + 1) / 2
    et = ps.eps_tilde(eps)
    summary["eps_tilde"] = et
    summary["target_bookkeeping"] = -eps / (1 + eps) - a + 1 / (1 + eps)
    summary["target_plus_eps_tilde"] = -(d - 1) / 2 + et
    summary["target_minus_eps_tilde"] = -(d - 1) / 2 - et
    summary["bookkeeping_gap"] = summary["target_bookkeeping"] - summary["target_minus_eps_tilde"]
    return summary, fits


@scenario("dini", {"d": 2, "epsilon": 0.1, "delta": 0.5, "c": None, "s": [1.0, 0.0], **_THETA}, _sum_dini)
def _dini(p, ctx):
    """beta^-1 (C_4 + C_3^{1-v} C_2^v) over the theta grid."""
    d = int(p["d"])
    c = _c_param(p, d)
    s = complex(p["s"][0], p["s"][1])
    tab = Table(["theta", "kappa", "c4", "c3", "c2", "bound"])
    for theta in _thetas(p):
        ctx.check()
        c4 = ps.c4_integral(theta, d, p["delta"]).value
        c3 = ps.c3_integral(p["epsilon"], theta, d, c).value
        c2 = ps.c2_integral(s, theta, d, c).value
        tab.add(theta, _kappa(theta), c4, c3, c2, ps.dini_bound(c4, c3, c2, p["epsilon"], p["delta"]))
    return {"sweep": tab}, []


__all__ = ["REGISTRY", "Scenario", "Context", "BudgetExceeded"]
