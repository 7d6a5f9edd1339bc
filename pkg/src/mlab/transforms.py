"""Uniform-grid sampling, FFT band decomposition and sup-norms.

Conventions: the Fourier transform is ``f^(xi) = int f(x) exp(-i x xi) dx``
with angular frequency ``xi``, so a modulation ``exp(i s x)`` sits at
``xi = s``.  A grid of ``N`` points with spacing ``h`` is treated as one
period of a periodic function; its representable band is
``[-pi/h, pi/h]``.
"""
from __future__ import annotations

import csv
import io
import struct
from dataclasses import dataclass

import numpy as np
from scipy import optimize

from .funcspec import FuncExpr, evaluate
from .partitions import Window, mother_window


class TransformError(ValueError):
    pass


class NyquistError(TransformError):
    pass


def is_power_of_two(n: int) -> bool:
    return n >= 2 and (n & (n - 1)) == 0


@dataclass(frozen=True, eq=False)
class SampledFunction:
    origin: float
    step: float
    values: np.ndarray

    def __post_init__(self):
        values = np.array(self.values, dtype=complex)
        if values.ndim != 1 or not is_power_of_two(values.size):
            raise TransformError(f"need a power-of-two number of samples, got {values.shape}")
        if not self.step > 0:
            raise TransformError("step must be positive")
        if not np.isfinite(values).all():
            raise TransformError("samples must be finite")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    @property
    def n(self) -> int:
        return self.values.size

    @property
    def periodic_extent(self) -> float:
        return self.n * self.step

    @property
    def nyquist(self) -> float:
        return np.pi / self.step

    @property
    def x(self) -> np.ndarray:
        return self.origin + self.step * np.arange(self.n)

    def with_values(self, values) -> "SampledFunction":
        return SampledFunction(self.origin, self.step, values)

    def __add__(self, other):
        if isinstance(other, SampledFunction):
            _same_grid(self, other)
            other = other.values
        return self.with_values(self.values + other)

    def __mul__(self, c):
        return self.with_values(self.values * c)

    __rmul__ = __mul__

    # -- serialization -----------------------------------------------------

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["x", "re", "im"])
        for x, v in zip(self.x, self.values):
            w.writerow([repr(float(x)), repr(float(v.real)), repr(float(v.imag))])
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str) -> "SampledFunction":
        rows = list(csv.reader(io.StringIO(text)))
        if rows[0] != ["x", "re", "im"]:
            raise TransformError("CSV header must be x,re,im")
        data = np.array([[float(c) for c in r] for r in rows[1:]])
        step = data[1, 0] - data[0, 0]
        return cls(float(data[0, 0]), float(step), data[:, 1] + 1j * data[:, 2])

    _HEADER = struct.Struct("<ddQ")

    def to_bytes(self) -> bytes:
        return self._HEADER.pack(self.origin, self.step, self.n) + self.values.astype("<c16").tobytes()

    @classmethod
    def from_bytes(cls, blob: bytes) -> "SampledFunction":
        origin, step, n = cls._HEADER.unpack_from(blob)
        values = np.frombuffer(blob, dtype="<c16", count=n, offset=cls._HEADER.size)
        return cls(origin, step, values)


@dataclass(frozen=True)
class BandComponent:
    band_index: int | None
    component: SampledFunction
    truncation_error_bound: float


def _same_grid(a: SampledFunction, b: SampledFunction):
    if a.n != b.n or a.step != b.step or a.origin != b.origin:
        raise TransformError("functions live on different grids")


def sample(f: FuncExpr, origin: float, step: float, n: int) -> SampledFunction:
    """``values[j] = f(origin + j*step)``."""
    if not is_power_of_two(n):
        raise TransformError(f"N must be a power of two, got {n}")
    x = origin + step * np.arange(n)
    return SampledFunction(origin, step, evaluate(f, x))


def frequencies(n: int, step: float) -> np.ndarray:
    """Angular frequencies of the DFT bins in numpy's FFT order."""
    return 2 * np.pi * np.fft.fftfreq(n, d=step)


def coefficients(f: SampledFunction) -> np.ndarray:
    """Normalized DFT coefficients ``c_k`` with ``f(x_j) = sum_k c_k e^{i xi_k (x_j - origin)}``."""
    return np.fft.fft(f.values) / f.n


def aliasing_indicator(f: SampledFunction) -> float:
    """l1 mass of the coefficients in the top octave below Nyquist.

    Small values mean the grid resolves ``f``; the quantity bounds the sup
    of what an unresolved tail could contribute to any band.
    """
    xi = frequencies(f.n, f.step)
    c = coefficients(f)
    return float(np.abs(c[np.abs(xi) >= f.nyquist / 2]).sum())


def _check_window(f: SampledFunction, window: Window, clip: bool) -> bool:
    lo, hi = window.support
    inside = lo >= -f.nyquist and hi <= f.nyquist
    if not inside and not clip:
        raise NyquistError(
            f"window {window.label} with support [{lo:g}, {hi:g}] exceeds the band "
            f"[-{f.nyquist:g}, {f.nyquist:g}]"
        )
    return not inside


def band_component(f: SampledFunction, window: Window, index: int | None = None,
                   clip: bool = False) -> BandComponent:
    """Discrete realization of ``F^{-1}[f^ * window]`` on the periodized grid.

    With ``clip=True`` windows reaching past Nyquist are allowed and simply
    see no content there.
    """
    clipped = _check_window(f, window, clip)
    xi = frequencies(f.n, f.step)
    comp = np.fft.ifft(np.fft.fft(f.values) * window(xi))
    bound = aliasing_indicator(f)
    if clipped:
        bound *= 2.0
    return BandComponent(index, f.with_values(comp), bound)


def trig_interpolate(f: SampledFunction, x, coeffs: np.ndarray | None = None) -> np.ndarray:
    """Evaluate the band-limited (trigonometric) interpolant of ``f`` at ``x``."""
    c = coefficients(f) if coeffs is None else coeffs
    xi = frequencies(f.n, f.step)
    x = np.atleast_1d(np.asarray(x, dtype=float)) - f.origin
    nyq = f.n // 2
    phase = np.exp(1j * np.outer(x, xi))
    # split the Nyquist bin symmetrically so real data interpolates to real values
    phase[:, nyq] = np.cos(f.nyquist * x)
    return phase @ c


def _refine_max(fn, center: float, radius: float, start: float) -> float:
    res = optimize.minimize_scalar(lambda s: -fn(s), bounds=(center - radius, center + radius),
                                   method="bounded", options={"xatol": radius * 1e-6})
    return max(start, -float(res.fun))


def sup_norm(f: SampledFunction, refine: bool = True) -> float:
    """Grid maximum of ``|f|`` refined on the band-limited interpolant.

    The refinement pass evaluates a 4x finer grid around the sampled argmax
    and then maximizes locally, so the result can exceed the grid max.
    """
    mag = np.abs(f.values)
    j = int(np.argmax(mag))
    best = float(mag[j])
    if not refine or best == 0.0:
        return best
    c = coefficients(f)
    x0 = f.origin + j * f.step
    fine = x0 + f.step * np.arange(-4, 5) / 4.0
    vals = np.abs(trig_interpolate(f, fine, c))
    k = int(np.argmax(vals))
    best = max(best, float(vals[k]))
    return _refine_max(lambda s: abs(trig_interpolate(f, [s], c)[0]), float(fine[k]), f.step / 4, best)


def _active_bins(f: SampledFunction, window: Window):
    """Integer frequency indices inside ``window.support`` and their weights."""
    lo, hi = window.support
    scale = f.periodic_extent / (2 * np.pi)
    m_lo = max(int(np.ceil(lo * scale)), -(f.n // 2))
    m_hi = min(int(np.floor(hi * scale)), f.n // 2 - 1)
    if m_lo > m_hi:
        return np.zeros(0, dtype=int), np.zeros(0)
    m = np.arange(m_lo, m_hi + 1)
    w = window(m / scale)
    keep = w != 0
    return m[keep], w[keep]


@dataclass
class NarrowBand:
    """A band component held as a short list of Fourier modes.

    After demodulating to the lowest active bin the component is a
    trigonometric polynomial of degree ``D``; it is sampled on ``size``
    points covering one period.  ``coarse`` is the sampled maximum and
    ``upper()`` a bound on the true maximum from Bernstein's inequality
    applied to ``|p|^2``.
    """

    amplitudes: np.ndarray
    offsets: np.ndarray
    size: int
    coarse: float
    argmax: int
    l1: float

    @property
    def degree(self) -> int:
        return int(self.offsets.max()) if self.offsets.size else 0

    def upper(self) -> float:
        slack = 0.5 * (np.pi * self.degree / self.size) ** 2
        return min(self.l1, self.coarse / np.sqrt(1.0 - slack))

    def refine(self) -> float:
        if self.l1 == 0.0:
            return 0.0
        shift = self.offsets.astype(float)

        def mag(s):
            return abs(np.exp(2j * np.pi * shift * s / self.size) @ self.amplitudes)

        return _refine_max(mag, float(self.argmax), 1.0, self.coarse)


def narrow_band(f: SampledFunction, window: Window, coeffs: np.ndarray | None = None,
                oversample: int = 8) -> NarrowBand:
    c = coefficients(f) if coeffs is None else coeffs
    m, w = _active_bins(f, window)
    if m.size == 0:
        return NarrowBand(np.zeros(0, complex), np.zeros(0, int), 16, 0.0, 0, 0.0)
    a = c[m % f.n] * w
    lo = int(m[0])
    offsets = m - lo
    size = 16
    while size < oversample * (int(offsets[-1]) + 1):
        size *= 2
    buf = np.zeros(size, dtype=complex)
    buf[offsets] = a
    vals = np.abs(np.fft.ifft(buf) * size)
    q = int(np.argmax(vals))
    return NarrowBand(a, offsets, size, float(vals[q]), q, float(np.abs(a).sum()))


def equidistant_band_sups(f: SampledFunction, bands, width: float = 1.0,
                          coeffs: np.ndarray | None = None, oversample: int = 16):
    """Sup-norms of many equidistant band components at once.

    Each band ``n`` (window ``mother(xi - n)``) is a short trigonometric
    polynomial; all of them are evaluated in one batched FFT on an
    ``oversample``-times finer grid, then each is evaluated exactly at the
    vertex of the parabola through its three samples around the maximum.
    Returns ``(sup, l1, upper)`` arrays: the refined sup (a value actually
    attained, hence a lower bound), the l1 mass of the active coefficients,
    and a Bernstein upper bound.
    """
    c = coefficients(f) if coeffs is None else coeffs
    bands = np.asarray(bands, dtype=int)
    if bands.size == 0:
        z = np.zeros(0)
        return z, z, z
    scale = f.periodic_extent / (2 * np.pi)
    m_lo = np.ceil((bands - 1.0) * scale).astype(int)
    span = int(np.floor(2.0 * scale)) + 2
    m = m_lo[:, None] + np.arange(span)[None, :]
    xi = m / scale
    inside = (m >= -(f.n // 2)) & (m <= f.n // 2 - 1) & (xi < bands[:, None] + 1.0)
    w = np.where(inside, mother_window(xi - bands[:, None], width), 0.0)
    amp = np.where(w != 0, c[m % f.n] * w, 0.0)
    size = 16
    while size < oversample * span:
        size *= 2
    buf = np.zeros((bands.size, size), dtype=complex)
    buf[:, :span] = amp
    vals = np.abs(np.fft.ifft(buf, axis=1) * size)
    q = np.argmax(vals, axis=1)
    rows = np.arange(bands.size)
    coarse = vals[rows, q]
    y0 = vals[rows, (q - 1) % size] ** 2
    y1 = coarse ** 2
    y2 = vals[rows, (q + 1) % size] ** 2
    den = y0 - 2 * y1 + y2
    with np.errstate(all="ignore"):
        shift = np.where(den < 0, 0.5 * (y0 - y2) / den, 0.0)
    s = q + np.clip(np.nan_to_num(shift), -0.5, 0.5)
    phase = np.exp(2j * np.pi * np.arange(span)[None, :] * s[:, None] / size)
    vertex = np.abs((amp * phase).sum(axis=1))
    l1 = np.abs(amp).sum(axis=1)
    slack = 0.5 * (np.pi * (span - 1) / size) ** 2
    upper = np.minimum(l1, np.maximum(coarse, vertex) / np.sqrt(1 - slack))
    return np.maximum(coarse, vertex), l1, upper


def band_sup(f: SampledFunction, window: Window, coeffs: np.ndarray | None = None,
             oversample: int = 8) -> tuple[float, float]:
    """``sup |F^{-1}[f^ window]|`` without a full-length inverse FFT.

    Narrow bands are evaluated as short trigonometric polynomials on an
    ``oversample``-times finer grid and refined locally; bands too wide for
    that go through the full inverse FFT.  Returns ``(sup, l1_bound)`` where
    ``l1_bound`` is the sum of the active coefficient magnitudes (an exact
    upper bound for the sup).
    """
    c = coefficients(f) if coeffs is None else coeffs
    m, w = _active_bins(f, window)
    if m.size == 0:
        return 0.0, 0.0
    l1 = float(np.abs(c[m % f.n] * w).sum())
    if l1 == 0.0:
        return 0.0, 0.0
    if oversample * (int(m[-1] - m[0]) + 1) >= f.n:
        spec = np.zeros(f.n, dtype=complex)
        spec[m % f.n] = c[m % f.n] * w * f.n
        return sup_norm(f.with_values(np.fft.ifft(spec))), l1
    return narrow_band(f, window, c, oversample).refine(), l1


# ---------------------------------------------------------------------------
# Direct quadrature oracle (no FFT on any code path)
# ---------------------------------------------------------------------------


def _gauss_nodes(lo: float, hi: float, panels: int, order: int = 20):
    g, gw = np.polynomial.legendre.leggauss(order)
    edges = np.linspace(lo, hi, panels + 1)
    a, b = edges[:-1, None], edges[1:, None]
    return ((b - a) / 2 * g + (a + b) / 2).ravel(), ((b - a) / 2 * gw).ravel()


def _window_rule(window: Window, ymax: float, tol: float):
    """Gauss-Legendre nodes and window-weighted weights resolving ``exp(i y xi)`` for ``|y| <= ymax``.

    The panel count starts at a few nodes per oscillation and doubles until
    two successive rules agree to ``tol`` (relative to the window mass) on
    a probe grid of ``y`` values.
    """
    lo, hi = window.support
    probe = np.linspace(-ymax, ymax, 513)
    panels = max(8, int(np.ceil(ymax * (hi - lo) / (2 * np.pi) / 4)))
    prev = None
    for _ in range(8):
        s, wts = _gauss_nodes(lo, hi, panels)
        weights = window(s) * wts
        scale = float(np.abs(weights).sum()) or 1.0
        cur = np.exp(1j * np.outer(probe, s)) @ weights
        if prev is not None and np.abs(cur - prev).max() <= tol * scale:
            return s, weights
        prev = cur
        panels *= 2
    raise TransformError("inverse window quadrature did not converge")


def _apply_rule(y: np.ndarray, s: np.ndarray, weights: np.ndarray) -> np.ndarray:
    """``exp(i y s) @ weights`` in row chunks; ``weights`` may have several columns."""
    out = np.empty((y.size,) + weights.shape[1:], dtype=complex)
    for i in range(0, y.size, 512):
        out[i:i + 512] = np.exp(1j * np.outer(y[i:i + 512], s)) @ weights
    return out


def inverse_window(window: Window, y, tol: float = 1e-13) -> np.ndarray:
    """``(1/2pi) int window(xi) exp(i y xi) dxi`` for every ``y`` at once (composite Gauss-Legendre)."""
    lo, hi = window.support
    y = np.atleast_1d(np.asarray(y, dtype=float))
    if y.size == 0 or hi <= lo:
        return np.zeros(y.size, dtype=complex)
    s, weights = _window_rule(window, float(np.abs(y).max()), tol)
    return _apply_rule(y, s, weights) / (2 * np.pi)


def _periodized_kernel(window: Window, n: int, step: float, tol: float) -> np.ndarray:
    """``sum_p window^vee(y + p L)`` on the grid offsets ``y``, ``L = n step``.

    The shifted copies share the factor ``exp(i y xi)``: the pair ``+-p``
    contributes ``2 cos(p L xi)`` to the weights, so all wraps cost one pass.
    The number of wraps doubles until the outermost two fall below ``tol``
    relative to the kernel peak.
    """
    period = n * step
    y = step * np.arange(n)
    y = np.where(y > period / 2, y - period, y)
    lo, hi = window.support
    if hi <= lo:
        return np.zeros(n, dtype=complex)
    wraps = 4
    while True:
        s, weights = _window_rule(window, (wraps + 0.5) * period, 1e-13)
        ps = np.arange(1, wraps + 1)
        cos = 2 * np.cos(np.outer(s, ps * period))
        total = weights * (1 + cos.sum(1))
        cols = np.stack([total, weights * cos[:, -1], weights * cos[:, -2]], axis=1)
        out = _apply_rule(y, s, cols) / (2 * np.pi)
        peak = float(np.abs(out[:, 0]).max()) or 1.0
        if np.abs(out[:, 1:]).max() < tol * peak:
            return out[:, 0]
        if wraps >= 4096:
            raise TransformError("periodized kernel did not settle")
        wraps *= 2


def direct_convolution_oracle(f: SampledFunction, window: Window, tol: float = 1e-12) -> SampledFunction:
    """``f * window^vee`` by quadrature of the convolution integral.

    The inverse transform of ``window`` is computed by Gauss-Legendre
    quadrature and periodized by summing shifted copies until they fall
    below ``tol``; the convolution integral over one period is then a plain
    trapezoid sum, which is exact for band-limited input because the
    integrand's frequencies stay below twice the Nyquist frequency.
    Quadratic cost: limited to ``N <= 4096``.
    """
    if f.n > 4096:
        raise TransformError(f"oracle is quadratic; N={f.n} exceeds 4096")
    _check_window(f, window, clip=False)
    kern = _periodized_kernel(window, f.n, f.step, tol)
    v = f.values
    out = np.zeros(f.n, dtype=complex)
    for m in range(f.n):
        if kern[m] != 0:
            out += kern[m] * np.roll(v, m)
    return f.with_values(out * f.step)
