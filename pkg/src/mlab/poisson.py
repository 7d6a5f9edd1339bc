"""The rotated Poisson kernel and the integrals controlling its Dini modulus.

Notation: ``kappa = pi/2 - |theta|``, ``a = (d+1)/2``,
``P(r) = e^{2 i theta} + r^2``.  Radial integrals over R^d are reduced to
one-dimensional ones times the sphere area ``2 pi^{d/2} / Gamma(d/2)`` and
split where ``|P|`` changes regime: ``r^2 = 1 - kappa, 1, 1 + kappa`` and
``r = 2``.
"""
from __future__ import annotations

import cmath
import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy import integrate, stats

EPSREL = 1e-8


class PoissonError(ValueError):
    pass


@dataclass(frozen=True)
class KernelParams:
    t: float
    theta: float
    d: int
    normalized: bool = False

    def __post_init__(self):
        if not self.t > 0:
            raise PoissonError("t must be positive")
        if not abs(self.theta) < math.pi / 2:
            raise PoissonError(f"|theta| must be below pi/2, got {self.theta}")
        if self.d < 1:
            raise PoissonError("dimension must be at least 1")

    @property
    def kappa(self) -> float:
        return math.pi / 2 - abs(self.theta)

    def scaled(self, k: int) -> "KernelParams":
        return KernelParams(self.t * 2.0 ** k, self.theta, self.d, self.normalized)


@dataclass(frozen=True)
class AnalyticFamilyParams:
    """Parameters of ``Phi^{(s)}(x) = |P(x)|^{-a(1-s)} (1 + |x|)^{-c s}``."""

    d: int
    epsilon: float = 0.1
    c: float | None = None
    delta: float = 0.5
    s: complex = 1 + 1j

    def __post_init__(self):
        if self.c is None:
            object.__setattr__(self, "c", self.d + 0.5)
        if not 0 < self.delta < 1:
            raise PoissonError("delta must lie in (0, 1)")
        if not self.epsilon > 0:
            raise PoissonError("epsilon must be positive")
        if not self.c > self.d - 1:
            raise PoissonError(f"c must exceed d - 1 = {self.d - 1}")

    @property
    def a(self) -> float:
        return (self.d + 1) / 2

    @property
    def vartheta(self) -> float:
        return self.epsilon / (1 + self.epsilon)


def sphere_area(d: int) -> float:
    """Surface area of the unit sphere in R^d (2 for d = 1)."""
    return 2 * math.pi ** (d / 2) / math.gamma(d / 2)


def normalization(d: int) -> float:
    return math.gamma((d + 1) / 2) / math.pi ** ((d + 1) / 2)


def poisson_kernel(x, params: KernelParams) -> np.ndarray:
    """``e^{i theta} t / ((e^{i theta} t)^2 + |x|^2)^{(d+1)/2}`` (principal branch).

    ``x`` has shape ``(..., d)``; for ``d = 1`` a plain array of scalars is
    accepted as well.
    """
    x = np.asarray(x, dtype=float)
    if params.d == 1 and (x.ndim == 0 or x.shape[-1] != 1):
        r2 = x ** 2
    else:
        if x.shape[-1] != params.d:
            raise PoissonError(f"points must have trailing dimension {params.d}")
        r2 = (x ** 2).sum(-1)
    return _kernel_r2(r2, params)


def _kernel_r2(r2, params: KernelParams):
    w = np.exp(1j * params.theta) * params.t
    val = w / (w ** 2 + r2) ** ((params.d + 1) / 2)
    return val * normalization(params.d) if params.normalized else val


def _abs_p(r, theta):
    return np.hypot(math.cos(2 * theta) + r ** 2, math.sin(2 * theta))


def _breakpoints(theta: float, extra=()) -> list[float]:
    kappa = math.pi / 2 - abs(theta)
    pts = {1.0, 2.0, math.sqrt(1 + kappa)}
    if kappa < 1:
        pts.add(math.sqrt(1 - kappa))
    # exact minimum of |P|
    pts.add(math.sqrt(max(0.0, -math.cos(2 * theta))))
    pts.update(extra)
    return sorted(p for p in pts if p > 0)


@dataclass
class QuadResult:
    value: float
    error: float
    pieces: dict


def _radial(fn, pts, upper=math.inf) -> tuple[float, float]:
    """``int_0^upper fn(r) dr`` piecewise between breakpoints."""
    edges = [0.0] + [p for p in pts if p < upper] + [upper]
    total, err = 0.0, 0.0
    with warnings.catch_warnings():
        warnings.simplefilter("error", integrate.IntegrationWarning)
        for lo, hi in zip(edges[:-1], edges[1:]):
            if hi <= lo:
                continue
            try:
                v, e = integrate.quad(fn, lo, hi, epsabs=0.0, epsrel=EPSREL, limit=1000)
            except integrate.IntegrationWarning as exc:
                raise PoissonError(f"quadrature on [{lo:g}, {hi:g}] did not converge: {exc}") from exc
            total += v
            err += e
    return total, err


def c4_integral(theta: float, d: int, delta: float) -> QuadResult:
    """``C_4 = int |P(x)|^{-a} (1 + |x|)^delta dx``."""
    if not 0 <= delta < 1:
        raise PoissonError("delta must lie in [0, 1)")
    if not abs(theta) < math.pi / 2:
        raise PoissonError("|theta| must be below pi/2")
    a = (d + 1) / 2
    area = sphere_area(d)
    v, e = _radial(lambda r: _abs_p(r, theta) ** (-a) * (1 + r) ** delta * r ** (d - 1),
                   _breakpoints(theta))
    return QuadResult(area * v, area * e, {"radial": v})


def c2_integral(s: complex, theta: float, d: int, c: float) -> QuadResult:
    """``C_2(s) <= C_2^(1) + C_2^(2)`` for ``Re s = 1`` from the gradient of ``Phi^{(s)}``.

    ``C_2^(1) = |Im s| int |x| (1+|x|)^{-c} |P|^{-1} dx`` and
    ``C_2^(2) = |s| int (1+|x|)^{-c-1} dx``.  The full ``int |grad Phi^{(s)}|``
    is returned as ``pieces["gradient"]`` for comparison.
    """
    s = complex(s)
    if abs(s.real - 1) > 1e-12:
        raise PoissonError("C_2 is taken on the line Re s = 1")
    if not c > d - 1:
        raise PoissonError(f"c must exceed d - 1 = {d - 1}")
    if not abs(theta) < math.pi / 2:
        raise PoissonError("|theta| must be below pi/2")
    area = sphere_area(d)
    a = (d + 1) / 2
    pts = _breakpoints(theta)
    if s.imag != 0:
        v1, e1 = _radial(lambda r: r * (1 + r) ** (-c) / _abs_p(r, theta) * r ** (d - 1), pts)
        v1, e1 = abs(s.imag) * v1, abs(s.imag) * e1
    else:
        v1, e1 = 0.0, 0.0
    v2, e2 = _radial(lambda r: (1 + r) ** (-c - 1) * r ** (d - 1), [1.0, 2.0])
    v2, e2 = abs(s) * v2, abs(s) * e2
    c2theta, s2theta = math.cos(2 * theta), math.sin(2 * theta)

    def grad(r):
        re_p = c2theta + r * r
        mod = math.hypot(re_p, s2theta)
        first = -a * (1 - s) * (re_p / mod) * 2 * r * (1 + r)
        return abs(first - c * s * mod) / mod * (1 + r) ** (-c - 1) * r ** (d - 1)

    vg, _ = _radial(grad, pts)
    return QuadResult(area * (v1 + v2), area * (e1 + e2),
                      {"c2_1": area * v1, "c2_2": area * v2, "gradient": area * vg})


def c3_integral(epsilon: float, theta: float, d: int, c: float) -> QuadResult:
    """``C_3(-eps) = int |P(x)|^{-a(1+eps)} (1+|x|)^{c eps} dx``, split at ``r = 2``."""
    if not epsilon > 0:
        raise PoissonError("epsilon must be positive")
    if not epsilon * (c - d - 1) < 1:
        raise PoissonError("need epsilon (c - d - 1) < 1 for the outer integral to converge")
    if not abs(theta) < math.pi / 2:
        raise PoissonError("|theta| must be below pi/2")
    area = sphere_area(d)
    a = (d + 1) / 2

    def fn(r):
        return _abs_p(r, theta) ** (-a * (1 + epsilon)) * (1 + r) ** (c * epsilon) * r ** (d - 1)

    inner, ei = _radial(fn, _breakpoints(theta), upper=2.0)
    outer, eo = integrate.quad(fn, 2.0, math.inf, epsabs=0.0, epsrel=EPSREL, limit=1000)
    return QuadResult(area * (inner + outer), area * (ei + eo),
                      {"inner": area * inner, "outer": area * outer})


# ---------------------------------------------------------------------------
# Hormander-type difference integral
# ---------------------------------------------------------------------------


def _tail_bound(d: int, T: float, y: float, R: float) -> float:
    """Bound for the integral over ``|x| >= R`` (valid for ``R >= max(4T, 2|y|)``).

    On the segment from ``x`` to ``x - y`` the kernel gradient is at most
    ``T (d+1) (4/3)^{a+1} 2^{d+2} |x|^{-d-2}``; integrating over ``|x| >= R``
    gives the factor ``area / (2 R^2)``.
    """
    a = (d + 1) / 2
    return y * T * (d + 1) * (4 / 3) ** (a + 1) * 2 ** (d + 2) * sphere_area(d) / (2 * R * R)


@dataclass
class HormanderResult:
    value: float
    tail_bound: float
    r_max: float


def hormander_integral(y, params: KernelParams, k: int = 0, tol: float = 1e-8,
                       r_max: float | None = None) -> HormanderResult:
    """``int_{|x| >= 2|y|} |p_{2^k t}(x - y) - p_{2^k t}(x)| dx``.

    The kernel is radial, so only ``|y|`` matters: ``d = 1`` is a direct
    quadrature, ``d >= 2`` a nested polar one with ``y`` on the first axis
    (measure ``area(S^{d-2}) r^{d-1} sin^{d-2} phi``).  The domain is cut at
    a radius that is doubled until the analytic tail bound is below ``tol``
    times the value.  With an explicit ``r_max`` the cut is fixed and a tail
    bound above ``tol`` relative raises :class:`PoissonError`.
    """
    yn = float(np.linalg.norm(np.atleast_1d(np.asarray(y, dtype=float))))
    p = params.scaled(k)
    d, T = p.d, p.t
    if yn == 0:
        return HormanderResult(0.0, 0.0, 0.0)
    r0 = 2 * yn
    kappa = p.kappa
    radii = [T * math.sqrt(1 + kappa), T, T * math.sqrt(max(0.0, math.cos(2 * kappa)))]
    if kappa < 1:
        radii.append(T * math.sqrt(1 - kappa))
    # radii where |x| or |x - y| crosses the near-singular shell
    shell = {q for rho in radii for q in (rho, rho + yn, abs(rho - yn))}

    # plain complex arithmetic: this runs inside nested scalar quadrature
    w = cmath.exp(1j * p.theta) * T
    w2 = w * w
    a = -(d + 1) / 2

    def kern(r2):
        return w * (w2 + r2) ** a

    if d == 1:
        def radial(x):
            k0 = kern(x * x)
            return abs(kern((x - yn) ** 2) - k0) + abs(kern((x + yn) ** 2) - k0)
    else:
        omega = sphere_area(d - 1)

        def radial(r):
            k0 = kern(r * r)
            c0 = r * r + yn * yn
            c1 = 2 * r * yn

            def g(phi):
                return abs(kern(c0 - c1 * math.cos(phi)) - k0) * math.sin(phi) ** (d - 2)
            cuts = []
            for rho in radii:
                cphi = (r * r + yn * yn - rho * rho) / (2 * r * yn)
                if -1 < cphi < 1:
                    cuts.append(math.acos(cphi))
            return omega * _piecewise(g, [0.0] + sorted(cuts) + [math.pi]) * r ** (d - 1)

    def segment(lo, hi):
        pts = sorted(q for q in shell | _geometric(lo, hi) if lo < q < hi)
        return _piecewise(radial, [lo] + pts + [hi])

    fixed = r_max is not None
    R = r_max if fixed else max(4 * T, r0, 1.0) * 4
    val = segment(r0, R)
    tail = _tail_bound(d, T, yn, R) if R >= max(4 * T, r0) else math.inf
    while not fixed and tail > tol * max(val, 1e-300) and R < 1e12:
        val += segment(R, 4 * R)
        R *= 4
        tail = _tail_bound(d, T, yn, R)
    if tail > tol * max(val, 1e-300):
        raise PoissonError(f"tail bound {tail:.3g} exceeds tolerance for value {val:.3g}")
    return HormanderResult(float(val), float(tail), float(R))


def _geometric(lo: float, hi: float) -> set:
    out, x = set(), lo * 2
    while x < hi:
        out.add(x)
        x *= 2
    return out


def _piecewise(fn, edges) -> float:
    total = 0.0
    for lo, hi in zip(edges[:-1], edges[1:]):
        if hi > lo:
            v, _ = integrate.quad(fn, lo, hi, epsabs=0.0, epsrel=EPSREL, limit=400)
            total += v
    return total


# ---------------------------------------------------------------------------
# Dini bound and theta fits
# ---------------------------------------------------------------------------


def dini_bound(c4: float, c3: float, c2: float, epsilon: float, delta: float) -> float:
    """``beta^{-1} (C_4 + C_3^{1-v} C_2^v)`` with ``v = eps/(1+eps)``, ``beta = min(v, delta)``."""
    if min(c4, c3, c2) <= 0:
        raise PoissonError("the constants must be positive")
    if not epsilon > 0 or not 0 < delta <= 1:
        raise PoissonError("need epsilon > 0 and delta in (0, 1]")
    v = epsilon / (1 + epsilon)
    beta = min(v, delta)
    return (c4 + c3 ** (1 - v) * c2 ** v) / beta


def theta_grid(j_min: int = 2, j_max: int = 10) -> np.ndarray:
    """``theta_j = pi/2 - 2^{-j}``."""
    return np.array([math.pi / 2 - 2.0 ** (-j) for j in range(j_min, j_max + 1)])


@dataclass(frozen=True)
class ScalingFit:
    slope: float
    intercept: float
    r2: float

    def __iter__(self):
        return iter((self.slope, self.intercept, self.r2))


def theta_scaling_fit(values) -> ScalingFit:
    """OLS of ``log q`` against ``log(pi/2 - |theta|)``; ``values`` is a list of (theta, q)."""
    values = list(values)
    if len(values) < 4:
        raise PoissonError("need at least 4 points")
    th = np.array([v[0] for v in values], dtype=float)
    q = np.array([v[1] for v in values], dtype=float)
    if (q <= 0).any():
        raise PoissonError("quantities must be positive")
    x = np.log(math.pi / 2 - np.abs(th))
    if np.ptp(x) == 0:
        raise PoissonError("degenerate abscissae")
    res = stats.linregress(x, np.log(q))
    return ScalingFit(float(res.slope), float(res.intercept), float(res.rvalue ** 2))


def eps_tilde(epsilon: float) -> float:
    """``eps~`` from ``(1 - eps)/(1 + eps) = 1 - eps~``."""
    return 2 * epsilon / (1 + epsilon)
