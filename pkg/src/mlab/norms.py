"""Function-space norms on sampled data: Besov, Mihlin, E^a_inf, E^a_unif.

Every norm is a weighted sum (or sup) of band sup-norms.  Sup-norms are
grid maxima refined on the trigonometric interpolant, so reported values
are lower approximations; ``truncation_bound`` collects what is known to
be missing (aliasing mass, skipped bands, cut-off tails).
"""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .funcspec import (FuncExpr, FuncSpecError, bracket, derivative, evaluate,
                       exp_substitute)
from .partitions import (DYADIC_FOURIER, EQUIDISTANT, PartitionFamily,
                         dyadic_partition, nyquist_bands)
from .transforms import (SampledFunction, aliasing_indicator, band_sup,
                         coefficients, equidistant_band_sups, is_power_of_two)

__all__ = [
    "NormError", "NormReport", "LogGrid", "UnifGrid", "besov_norm", "exp_substitute",
    "mihlin_norm", "e_infty_norm", "e_unif_norm", "classical_mihlin_seminorm",
    "algebra_defect", "embedding_ratios", "EmbeddingReport", "sample_log",
]


class NormError(ValueError):
    pass


@dataclass
class NormReport:
    norm_kind: str
    alpha: float
    value: float
    per_band_terms: dict[int, float]
    truncation_bound: float
    grid: dict
    flags: list[str] = field(default_factory=list)
    diagnostics: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["per_band_terms"] = {str(k): v for k, v in sorted(self.per_band_terms.items())}
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_dict(cls, d: dict) -> "NormReport":
        d = dict(d)
        d["per_band_terms"] = {int(k): float(v) for k, v in d["per_band_terms"].items()}
        return cls(**d)


def _aggregate(terms: dict[int, float], q) -> float:
    if not terms:
        return 0.0
    vals = np.array(list(terms.values()))
    return float(vals.max() if q == math.inf else vals.sum())


def _parse_q(q):
    if q in (1, "1"):
        return 1
    if q in (math.inf, "inf", "infty"):
        return math.inf
    raise NormError(f"q must be 1 or inf, got {q!r}")


# ---------------------------------------------------------------------------
# Besov and E^a_inf on a sampled function
# ---------------------------------------------------------------------------


def besov_norm(f: SampledFunction, alpha: float, q=1, family: PartitionFamily | None = None,
               width: float = 1.0) -> NormReport:
    """``sum_n 2^{|n| alpha} ||f * psi_n^vee||_inf`` (``q=1``) or the sup (``q=inf``).

    The dyadic-Fourier family defaults to the smallest one covering the
    grid's Nyquist band; the outermost windows are clipped at Nyquist.
    """
    q = _parse_q(q)
    if not alpha > 0:
        raise NormError("alpha must be positive")
    if family is None:
        family = nyquist_bands(DYADIC_FOURIER, f.nyquist, width)
    elif family.kind != DYADIC_FOURIER:
        raise NormError(f"besov_norm needs a dyadic-Fourier family, got {family.kind}")
    lo, hi = family.covered_range()
    if lo > -f.nyquist or hi < f.nyquist:
        raise NormError(f"family covers [{lo:g}, {hi:g}], short of Nyquist {f.nyquist:g}")
    c = coefficients(f)
    terms = {}
    for n in family.index_range:
        s, _ = band_sup(f, family.window(n), c)
        terms[n] = 2.0 ** (abs(n) * alpha) * s
    # unresolved content near Nyquist could land in any of the top bands
    top = max(abs(family.n_min), family.n_max)
    bound = aliasing_indicator(f) * 2.0 ** (top * alpha)
    grid = {"origin": f.origin, "step": f.step, "n": f.n, "family": json.loads(family.to_json())}
    return NormReport(f"besov_q{'inf' if q == math.inf else 1}", float(alpha),
                      _aggregate(terms, q), terms, float(bound), grid)


class _BandMass:
    """Prefix sums of ``|c_m|`` over the signed frequency index ``m``."""

    def __init__(self, f: SampledFunction, c: np.ndarray):
        self.n = f.n
        self.scale = f.periodic_extent / (2 * np.pi)
        mags = np.abs(np.fft.fftshift(c))  # index j <-> m = j - n/2
        self.prefix = np.concatenate([[0.0], np.cumsum(mags)])

    def l1(self, lo, hi) -> np.ndarray:
        """l1 mass of the bins with frequency in ``[lo, hi]`` (vectorized)."""
        half = self.n // 2
        a = np.maximum(np.ceil(np.asarray(lo) * self.scale).astype(int), -half) + half
        b = np.minimum(np.floor(np.asarray(hi) * self.scale).astype(int), half - 1) + half
        out = self.prefix[np.clip(b + 1, 0, self.n)] - self.prefix[np.clip(a, 0, self.n)]
        return np.where(b >= a, out, 0.0)


def _equidistant_terms(f: SampledFunction, alpha: float, width: float, skip_tol: float):
    """Unweighted band sups over equidistant bands, skipping negligible ones.

    A band is skipped when its weighted l1 mass (an upper bound for the
    weighted term) is below ``skip_tol`` times the total weighted mass.
    Returns ``(bands, sups, skipped_mass, family)``.
    """
    fam = nyquist_bands(EQUIDISTANT, f.nyquist, width)
    c = coefficients(f)
    mass = _BandMass(f, c)
    idx = np.arange(fam.n_min, fam.n_max + 1)
    weighted = bracket(idx) ** alpha * mass.l1(idx - 1.0, idx + 1.0)
    keep = weighted > skip_tol * weighted.sum()
    sups, _, _ = equidistant_band_sups(f, idx[keep], width, c)
    return idx[keep], sups, float(weighted[~keep].sum()), fam


def e_infty_norm(f: SampledFunction, alpha: float, width: float = 1.0,
                 skip_tol: float = 1e-13) -> NormReport:
    """``sum_n <n>^alpha ||f * phi_n^vee||_inf`` over equidistant bands."""
    if not alpha > 0:
        raise NormError("alpha must be positive")
    bands, sups, skipped, fam = _equidistant_terms(f, alpha, width, skip_tol)
    terms = {int(n): float(bracket(n) ** alpha * v) for n, v in zip(bands, sups)}
    bound = skipped + aliasing_indicator(f) * bracket(f.nyquist) ** alpha
    grid = {"origin": f.origin, "step": f.step, "n": f.n, "family": json.loads(fam.to_json())}
    return NormReport("einf", float(alpha), _aggregate(terms, 1), terms, float(bound), grid)


# ---------------------------------------------------------------------------
# Mihlin norm: Besov norm of f(e^x) on a truncated, periodically closed grid
# ---------------------------------------------------------------------------


def _smooth_step(u):
    """C-infinity step: 0 for u <= 0, 1 for u >= 1."""
    u = np.clip(np.asarray(u, dtype=float), 0.0, 1.0)
    out = np.zeros(u.shape)
    inner = (u > 0) & (u < 1)
    a = np.exp(-1.0 / u[inner])
    b = np.exp(-1.0 / (1.0 - u[inner]))
    out[inner] = a / (a + b)
    out[u >= 1] = 1.0
    return out


@dataclass(frozen=True)
class LogGrid:
    """Grid for ``f_e(x) = f(e^x)`` on ``[x_min, x_max + blend)``.

    On ``[x_max, x_max + blend]`` the function is blended into its own left
    end so the sampled data is periodic.  ``auto_shrink`` lowers ``x_max``
    (one unit at a time) until the aliasing indicator drops below
    ``alias_tol`` times the sup of the data.
    """

    x_min: float = -30.0
    x_max: float = 12.0
    blend: float = 2.0
    n: int = 2 ** 17
    auto_shrink: bool = True
    alias_tol: float = 1e-10
    tail_tol: float = 1e-6
    probe_length: float = 40.0

    def __post_init__(self):
        if not is_power_of_two(self.n):
            raise NormError(f"grid size must be a power of two, got {self.n}")
        if not self.x_min < self.x_max or not self.blend > 0:
            raise NormError("need x_min < x_max and blend > 0")

    def descriptor(self) -> dict:
        return asdict(self)


def sample_log(f: FuncExpr, x_min: float, x_max: float, blend: float, n: int) -> SampledFunction:
    """Sample the periodic closure of ``f(e^x)`` on ``n`` points."""
    fe = exp_substitute(f)
    period = x_max + blend - x_min
    step = period / n
    x = x_min + step * np.arange(n)
    sig = _smooth_step((x - x_max) / blend)
    vals = np.zeros(n, dtype=complex)
    left = sig < 1
    vals[left] = (1 - sig[left]) * evaluate(fe, x[left])
    right = sig > 0
    vals[right] += sig[right] * evaluate(fe, x[right] - period)
    return SampledFunction(x_min, step, vals)


def _tail_profile(f: FuncExpr, start: float, direction: int, alpha: float, length: float):
    """Weighted variation of ``f_e`` beyond ``start``.

    At each probe point the variation ``d = |f_e(x) - f_e(far end)|`` is
    weighted by ``max(1, nu)^alpha`` with the local frequency
    ``nu = |f_e'(x)| / d``; this approximates the Besov contribution of the
    cut-off piece.  Returns the profile and ``|f_e|`` along the probe.
    """
    x = start + direction * np.linspace(0.0, length, 401)
    lam = np.exp(x)
    vals = evaluate(f, lam, strict=False)
    try:
        dvals = lam * evaluate(derivative(f, 1, allow_fd=True), lam, strict=False)
    except FuncSpecError:
        dvals = np.full(x.shape, np.nan)
    d = np.abs(vals - vals[-1])
    with np.errstate(all="ignore"):
        nu = np.where(d > 0, np.abs(dvals) / d, 0.0)
    prof = d * np.maximum(1.0, nu) ** alpha
    return np.nan_to_num(prof, nan=np.inf), np.nan_to_num(np.abs(vals), nan=np.inf)


def mihlin_norm(f: FuncExpr, alpha: float, grid: LogGrid | None = None,
                accept_tail: bool = False, width: float = 1.0) -> NormReport:
    """``||f||_{M^alpha} = ||f_e||_{B^alpha_{inf,1}}`` with ``f_e(x) = f(e^x)``.

    Raises :class:`NormError` when the cut-off tails are not negligible
    unless ``accept_tail`` is set, in which case the report is flagged.
    """
    grid = grid or LogGrid()
    x_max = grid.x_max
    while True:
        s = sample_log(f, grid.x_min, x_max, grid.blend, grid.n)
        peak = float(np.abs(s.values).max())
        alias = aliasing_indicator(s)
        if not grid.auto_shrink or alias <= grid.alias_tol * max(peak, 1e-300):
            break
        if x_max - 1.0 <= grid.x_min + grid.blend:
            break
        x_max -= 1.0
    rep = besov_norm(s, alpha, 1, width=width)
    right, right_mag = _tail_profile(f, x_max, +1, alpha, grid.probe_length)
    left, left_mag = _tail_profile(f, grid.x_min, -1, alpha, grid.probe_length)
    tail = float(max(right.max(), left.max()))
    flags = []
    if alias > grid.alias_tol * max(peak, 1e-300):
        flags.append("aliasing")
    if tail > grid.tail_tol * max(rep.value, 1e-300):
        flags.append("tail")
        if not accept_tail:
            raise NormError(f"tail estimate {tail:.3g} is not negligible against the norm "
                            f"{rep.value:.3g}; pass accept_tail=True to accept it")
    # |f_e| growing along either probe: the norm is infinite, not just truncated
    if any(m[-1] > 2 * m[0] + grid.tail_tol for m in (right_mag, left_mag)):
        flags.append("divergent")
    desc = grid.descriptor()
    desc.update(x_max_used=x_max, step=s.step, family=rep.grid["family"])
    return NormReport("mihlin", float(alpha), rep.value, rep.per_band_terms,
                      rep.truncation_bound + tail, desc, flags,
                      {"tail_estimate": tail, "aliasing": alias})


# ---------------------------------------------------------------------------
# E^a_unif
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class UnifGrid:
    """Per-``k`` sampling of ``f(2^k .) phi_0`` on a ``period``-periodic grid.

    The point count starts at ``n_start`` and doubles until the aliasing
    indicator is below ``alias_tol`` times the sup, capped at ``n_cap``.
    """

    period: float = 64.0
    n_start: int = 2 ** 11
    n_cap: int = 2 ** 18
    alias_tol: float = 1e-10
    skip_tol: float = 1e-10

    def descriptor(self) -> dict:
        return asdict(self)


def _sample_piece(f: FuncExpr, k: int, base, grid: UnifGrid):
    n = grid.n_start
    origin = 1.25 - grid.period / 2
    while True:
        step = grid.period / n
        x = origin + step * np.arange(n)
        w = base(x)
        vals = np.zeros(n, dtype=complex)
        inside = w > 0
        vals[inside] = w[inside] * evaluate(f, 2.0 ** k * x[inside])
        s = SampledFunction(origin, step, vals)
        alias = aliasing_indicator(s)
        peak = float(np.abs(vals).max())
        if alias <= grid.alias_tol * max(peak, 1e-300) or n >= grid.n_cap:
            return s, alias, peak
        n *= 2


def e_unif_norm(f: FuncExpr, alpha: float, k_range=(-16, 16), grid: UnifGrid | None = None,
                dyadic_width: float = 1.0, width: float = 1.0) -> NormReport:
    """``sum_n <n>^alpha sup_k ||[f(2^k .) phi_0] * phi_n^vee||_inf``.

    ``phi_0`` is the base window of the dyadic family with mother width
    ``dyadic_width``; ``phi_n`` are equidistant windows of width ``width``.
    The sup over ``k`` runs over the finite ``k_range``; pieces that stay
    aliased at the grid cap are left out of the sup and listed in
    ``diagnostics["unresolved_k"]``.
    """
    if not alpha > 0:
        raise NormError("alpha must be positive")
    grid = grid or UnifGrid()
    base = dyadic_partition(0, 0, dyadic_width).window(0)
    k_lo, k_hi = int(k_range[0]), int(k_range[1])
    if k_lo > k_hi:
        raise NormError(f"empty k range {k_range}")
    best: dict[int, float] = {}
    argk: dict[int, int] = {}
    bound = 0.0
    unresolved = []
    for k in range(k_lo, k_hi + 1):
        s, alias, peak = _sample_piece(f, k, base, grid)
        bound = max(bound, alias * bracket(s.nyquist) ** alpha)
        if alias > grid.alias_tol * max(peak, 1e-300):
            # aliased content would land in the wrong bands; keep it out of the sup
            unresolved.append(k)
            continue
        bands, sups, skipped, _ = _equidistant_terms(s, alpha, width, grid.skip_tol)
        bound = max(bound, skipped)
        for n, v in zip(bands.tolist(), sups.tolist()):
            if v > best.get(n, -1.0):
                best[n], argk[n] = v, k
    terms = {n: float(bracket(n) ** alpha * v) for n, v in sorted(best.items())}
    flags = ["aliasing"] if unresolved else []
    desc = grid.descriptor()
    desc.update(k_range=[k_lo, k_hi], dyadic_width=dyadic_width, width=width)
    return NormReport("eunif", float(alpha), _aggregate(terms, 1), terms, float(bound), desc,
                      flags, {"argmax_k": {str(n): k for n, k in sorted(argk.items())},
                              "unresolved_k": unresolved})


# ---------------------------------------------------------------------------
# Classical seminorm, algebra and embedding checks
# ---------------------------------------------------------------------------


def classical_mihlin_seminorm(f: FuncExpr, order: int, probe=None, allow_fd: bool = False) -> float:
    """``max_{k <= order} sup_t t^k |f^{(k)}(t)|`` over a probe grid in (0, inf)."""
    probe = np.geomspace(1e-6, 1e6, 2401) if probe is None else np.asarray(probe, dtype=float)
    if (probe <= 0).any():
        raise NormError("probe points must be positive")
    best = 0.0
    for k in range(order + 1):
        dk = derivative(f, k, allow_fd=allow_fd)
        best = max(best, float(np.max(probe ** k * np.abs(evaluate(dk, probe)))))
    return best


def algebra_defect(f: FuncExpr, g: FuncExpr, alpha: float, k_range=(-16, 16),
                   grid: UnifGrid | None = None, norms: tuple[float, float] | None = None) -> float:
    """``||fg||_{E_unif} / (||f||_{E_unif} ||g||_{E_unif})``.

    ``norms`` may carry precomputed values of the two factors.
    """
    nf, ng = norms if norms is not None else (
        e_unif_norm(f, alpha, k_range, grid).value, e_unif_norm(g, alpha, k_range, grid).value)
    if nf * ng == 0:
        raise NormError("zero denominator in algebra defect")
    return e_unif_norm(f * g, alpha, k_range, grid).value / (nf * ng)


@dataclass
class EmbeddingReport:
    alpha: float
    eps: float
    rows: list[dict]
    excluded: list[dict]

    @property
    def max_r1(self) -> float:
        return max((r["r1"] for r in self.rows), default=math.nan)

    @property
    def max_r2(self) -> float:
        return max((r["r2"] for r in self.rows), default=math.nan)

    def to_dict(self) -> dict:
        return {"alpha": self.alpha, "eps": self.eps, "rows": self.rows,
                "excluded": self.excluded, "max_r1": self.max_r1, "max_r2": self.max_r2}


def embedding_ratios(corpus, alpha: float, eps: float, log_grid: LogGrid | None = None,
                     unif_grid: UnifGrid | None = None, k_range=(-16, 16)) -> EmbeddingReport:
    """``r1 = ||f||_{E^a_unif} / ||f||_{M^{a+1+eps}}`` and ``r2 = ||f||_{M^{a-eps}} / ||f||_{E^a_unif}``.

    ``corpus`` is a list of ``(name, FuncExpr)``.  Functions whose Mihlin
    norm is flagged divergent are excluded with a notice.
    """
    if not 0 < eps < alpha:
        raise NormError("need 0 < eps < alpha")
    rows, excluded = [], []
    for name, f in corpus:
        hi = mihlin_norm(f, alpha + 1 + eps, log_grid, accept_tail=True)
        lo = mihlin_norm(f, alpha - eps, log_grid, accept_tail=True)
        mid = e_unif_norm(f, alpha, k_range, unif_grid)
        bad = [lab for lab, r in (("M_hi", hi), ("M_lo", lo)) if "divergent" in r.flags]
        if bad or mid.value == 0:
            excluded.append({"name": name, "reason": ", ".join(bad) or "zero norm"})
            continue
        rows.append({"name": name, "m_hi": hi.value, "e_unif": mid.value, "m_lo": lo.value,
                     "r1": mid.value / hi.value, "r2": lo.value / mid.value})
    return EmbeddingReport(float(alpha), float(eps), rows, excluded)
