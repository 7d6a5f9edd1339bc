"""Fourier multipliers on discrete tori and norm estimates for them.

The model operator is ``A = (-Delta)^{1/2}`` on the torus ``[0, L)^d``
sampled with ``N`` points per axis; every operator here is diagonal in
Fourier space.  L^p operator norms for p != 2 are only ever bounded from
below: the certificate input attaining the bound is returned with it.
"""
from __future__ import annotations

import struct
from dataclasses import dataclass, field

import numpy as np

from .funcspec import FuncExpr, evaluate
from .partitions import DYADIC, PartitionFamily
from .transforms import is_power_of_two

DEFAULT_CAP = 2 ** 18


class OperatorError(ValueError):
    pass


@dataclass(frozen=True)
class TorusGrid:
    d: int
    n: int
    period: float
    cap: int = DEFAULT_CAP

    def __post_init__(self):
        if self.d not in (1, 2, 3):
            raise OperatorError(f"dimension must be 1, 2 or 3, got {self.d}")
        if not is_power_of_two(self.n):
            raise OperatorError(f"points per axis must be a power of two, got {self.n}")
        if not self.period > 0:
            raise OperatorError("period must be positive")
        if self.n ** self.d > self.cap:
            raise OperatorError(f"grid of {self.n}^{self.d} points exceeds the cap {self.cap}")

    @property
    def step(self) -> float:
        return self.period / self.n

    @property
    def shape(self) -> tuple[int, ...]:
        return (self.n,) * self.d

    @property
    def cell_volume(self) -> float:
        return self.step ** self.d

    def axis_frequencies(self) -> np.ndarray:
        """``(2 pi / L) * {-N/2, ..., N/2 - 1}`` in FFT order."""
        return 2 * np.pi * np.fft.fftfreq(self.n, d=self.step)

    def frequency_mesh(self) -> list[np.ndarray]:
        ax = self.axis_frequencies()
        return np.meshgrid(*([ax] * self.d), indexing="ij")

    def coordinates(self) -> list[np.ndarray]:
        """Signed coordinates in ``[-L/2, L/2)`` (FFT order) per axis."""
        ax = self.step * np.fft.fftfreq(self.n, d=1.0 / self.n)
        return np.meshgrid(*([ax] * self.d), indexing="ij")


@dataclass(frozen=True, eq=False)
class GridField:
    grid: TorusGrid
    values: np.ndarray

    def __post_init__(self):
        v = np.array(self.values, dtype=complex)
        if v.shape != self.grid.shape:
            raise OperatorError(f"field shape {v.shape} does not match grid {self.grid.shape}")
        if not np.isfinite(v).all():
            raise OperatorError("field entries must be finite")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    def with_values(self, values) -> "GridField":
        return GridField(self.grid, values)

    _HEADER = struct.Struct("<I")
    _AXIS = struct.Struct("<ddQ")

    def to_bytes(self) -> bytes:
        """Dimension header, then the 1-D sample header (origin, step, N), then c16 data."""
        g = self.grid
        return (self._HEADER.pack(g.d) + self._AXIS.pack(0.0, g.step, g.n)
                + self.values.astype("<c16").tobytes())

    @classmethod
    def from_bytes(cls, blob: bytes, cap: int = DEFAULT_CAP) -> "GridField":
        (d,) = cls._HEADER.unpack_from(blob)
        _, step, n = cls._AXIS.unpack_from(blob, cls._HEADER.size)
        grid = TorusGrid(d, n, step * n, cap)
        off = cls._HEADER.size + cls._AXIS.size
        vals = np.frombuffer(blob, dtype="<c16", count=n ** d, offset=off).reshape(grid.shape)
        return cls(grid, vals)


def mean_zero(g: GridField) -> GridField:
    """Project onto the mean-zero subspace (zero-frequency coefficient set to 0)."""
    return g.with_values(g.values - g.values.mean())


@dataclass(frozen=True, eq=False)
class SymbolOperator:
    grid: TorusGrid
    symbol: np.ndarray
    label: str = ""

    def __post_init__(self):
        s = np.array(self.symbol, dtype=complex)
        if s.shape != self.grid.shape:
            raise OperatorError(f"symbol shape {s.shape} does not match grid {self.grid.shape}")
        s.setflags(write=False)
        object.__setattr__(self, "symbol", s)

    def __call__(self, g: GridField) -> GridField:
        if g.grid != self.grid:
            raise OperatorError("operator and field live on different grids")
        return g.with_values(np.fft.ifftn(np.fft.fftn(g.values) * self.symbol))

    def __matmul__(self, other: "SymbolOperator") -> "SymbolOperator":
        if other.grid != self.grid:
            raise OperatorError("cannot compose operators on different grids")
        return SymbolOperator(self.grid, self.symbol * other.symbol, f"{self.label}.{other.label}")

    def adjoint(self) -> "SymbolOperator":
        return SymbolOperator(self.grid, np.conj(self.symbol), f"{self.label}*")

    def scaled(self, c: complex) -> "SymbolOperator":
        return SymbolOperator(self.grid, c * self.symbol, f"{c}*{self.label}")

    def on_mean_zero(self) -> "SymbolOperator":
        """The operator composed with the mean-zero projection."""
        s = self.symbol.copy()
        s[(0,) * self.grid.d] = 0.0
        return SymbolOperator(self.grid, s, f"{self.label}|0")

    @property
    def sup(self) -> float:
        return float(np.abs(self.symbol).max())

    def kernel(self) -> np.ndarray:
        """Convolution kernel ``K`` with ``T g = (K * g) h^d`` (FFT order)."""
        return np.fft.ifftn(self.symbol) / self.grid.cell_volume


def identity_operator(grid: TorusGrid) -> SymbolOperator:
    return SymbolOperator(grid, np.ones(grid.shape), "I")


@dataclass(frozen=True)
class OperatorFamily:
    operators: tuple[SymbolOperator, ...]
    params: tuple[dict, ...] = ()

    def __post_init__(self):
        if not self.operators:
            raise OperatorError("operator family must be nonempty")
        g = self.operators[0].grid
        if any(op.grid != g for op in self.operators):
            raise OperatorError("family members must share one grid")
        if self.params and len(self.params) != len(self.operators):
            raise OperatorError("params must match the operators one to one")

    @property
    def grid(self) -> TorusGrid:
        return self.operators[0].grid

    def __len__(self):
        return len(self.operators)


# ---------------------------------------------------------------------------
# Symbols
# ---------------------------------------------------------------------------


def laplacian_halfpower_symbol(grid: TorusGrid, variant: str = "continuum") -> SymbolOperator:
    """``|xi|`` or the finite-difference analogue ``(sum_j (2/h)^2 sin^2(xi_j h / 2))^{1/2}``."""
    mesh = grid.frequency_mesh()
    if variant == "continuum":
        sq = sum(x ** 2 for x in mesh)
    elif variant == "discrete":
        h = grid.step
        sq = sum((2.0 / h) ** 2 * np.sin(x * h / 2) ** 2 for x in mesh)
    else:
        raise OperatorError(f"unknown symbol variant {variant!r}")
    return SymbolOperator(grid, np.sqrt(sq), f"A[{variant}]")


def _real_symbol(A: SymbolOperator) -> np.ndarray:
    s = A.symbol
    if np.abs(s.imag).max() > 0 or s.real.min() < 0:
        raise OperatorError(f"operator {A.label} does not have a nonnegative real symbol")
    return s.real


def multiplier_operator(f: FuncExpr, A: SymbolOperator, mean_zero: bool = False) -> SymbolOperator:
    """``f(A)``; with ``mean_zero`` the zero mode is dropped instead of evaluating ``f`` there."""
    s = _real_symbol(A)
    sym = np.zeros(s.shape, dtype=complex)
    mask = np.ones(s.shape, dtype=bool)
    if mean_zero:
        mask[(0,) * A.grid.d] = False
    sym[mask] = evaluate(f, s[mask])
    return SymbolOperator(A.grid, sym, f"f({A.label})")


def apply_multiplier(f: FuncExpr, A: SymbolOperator, g: GridField, mean_zero: bool = False) -> GridField:
    """``F^{-1}[g^ f(symbol)]``.  Raises DomainError where ``f`` is undefined."""
    return multiplier_operator(f, A, mean_zero)(g)


def semigroup_operator(A: SymbolOperator, t: float, theta: float = 0.0) -> SymbolOperator:
    """``exp(-e^{i theta} t A)`` for ``|theta| < pi/2``."""
    if not abs(theta) < np.pi / 2:
        raise OperatorError(f"|theta| must be below pi/2, got {theta}")
    if not t > 0:
        raise OperatorError("t must be positive")
    s = _real_symbol(A)
    return SymbolOperator(A.grid, np.exp(-np.exp(1j * theta) * t * s), f"exp(-e^(i{theta:g}){t:g}A)")


def wave_operator(A: SymbolOperator, beta: float, t: float, scale: float = 1.0) -> SymbolOperator:
    """``(1 + scale A)^{-beta} exp(i t scale A)``."""
    s = scale * _real_symbol(A)
    return SymbolOperator(A.grid, (1 + s) ** (-beta) * np.exp(1j * t * s),
                          f"(1+{scale:g}A)^-{beta:g} e^(i{t:g}{scale:g}A)")


def wave_family(A: SymbolOperator, alpha: float, beta: float, t: float, k_range) -> OperatorFamily:
    """``{(1 + 2^k A)^{-beta} exp(i t 2^k A) : k in k_range}``."""
    if not alpha > 0 or beta < alpha:
        raise OperatorError("need beta >= alpha > 0")
    ks = range(int(k_range[0]), int(k_range[1]) + 1)
    ops = tuple(wave_operator(A, beta, t, 2.0 ** k) for k in ks)
    return OperatorFamily(ops, tuple({"k": k, "t": t, "alpha": alpha, "beta": beta} for k in ks))


# ---------------------------------------------------------------------------
# Norms of fields
# ---------------------------------------------------------------------------


def _lp(values: np.ndarray, p: float, cell: float) -> float:
    a = np.abs(values)
    if p == np.inf:
        return float(a.max())
    if p < 1:
        raise OperatorError(f"p must be at least 1, got {p}")
    top = a.max()
    if top == 0:
        return 0.0
    # scale first so large p cannot overflow
    return float(top * (np.sum((a / top) ** p) * cell) ** (1.0 / p))


def lp_norm(g: GridField, p: float) -> float:
    """``(sum |g|^p h^d)^{1/p}``, or the max for ``p = inf``."""
    return _lp(g.values, p, g.grid.cell_volume)


def _check_fields(fields) -> TorusGrid:
    fields = list(fields)
    if not fields:
        raise OperatorError("need at least one field")
    g = fields[0].grid
    if any(f.grid != g for f in fields):
        raise OperatorError("fields live on different grids")
    return g


def square_function_norm(fields, p: float) -> float:
    """``|| (sum_k |x_k|^2)^{1/2} ||_p``."""
    grid = _check_fields(fields)
    agg = np.sqrt(sum(np.abs(f.values) ** 2 for f in fields))
    return _lp(agg, p, grid.cell_volume)


def gaussian_sum_norm(fields, p: float, samples: int = 400, seed: int = 0,
                      chunk: int = 64) -> tuple[float, float]:
    """Monte Carlo ``(E ||sum_k gamma_k x_k||_p^2)^{1/2}`` with real standard normals.

    Returns ``(estimate, stderr)``; the standard error of the mean of the
    squared norms is carried to the square root by the delta method.
    """
    grid = _check_fields(fields)
    if samples < 100:
        raise OperatorError("need at least 100 samples")
    fields = list(fields)
    rng = np.random.default_rng(seed)
    gam = rng.standard_normal((samples, len(fields)))
    stack = np.stack([f.values.ravel() for f in fields])
    sq = np.empty(samples)
    for i in range(0, samples, chunk):
        sums = gam[i:i + chunk] @ stack
        sq[i:i + chunk] = [_lp(row, p, grid.cell_volume) ** 2 for row in sums]
    mean = float(sq.mean())
    est = np.sqrt(mean)
    se_mean = float(sq.std(ddof=1) / np.sqrt(samples))
    return float(est), (se_mean / (2 * est) if est > 0 else 0.0)


# ---------------------------------------------------------------------------
# Lower bounds for operator p-norms
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Budget:
    max_iter: int = 200
    tol: float = 1e-12
    starts: int = 3


@dataclass
class OpNormEstimate:
    lower_bound: float
    certificate: GridField
    converged: bool
    source: str
    iterations: int = 0
    flags: list[str] = field(default_factory=list)


def _dual(y: np.ndarray, p: float) -> np.ndarray:
    """``|y|^{p-1} y/|y|``: the L^p duality map up to normalization."""
    a = np.abs(y)
    out = np.zeros_like(y)
    nz = a > 0
    out[nz] = a[nz] ** (p - 1) * (y[nz] / a[nz])
    return out


def _ratio(T: SymbolOperator, x: np.ndarray, p: float) -> float:
    den = _lp(x, p, 1.0)
    if den == 0:
        return 0.0
    return _lp(np.fft.ifftn(np.fft.fftn(x) * T.symbol), p, 1.0) / den


def _test_inputs(T: SymbolOperator, p: float) -> list[tuple[str, np.ndarray]]:
    grid = T.grid
    shape = grid.shape
    coords = grid.coordinates()
    r2 = sum(c ** 2 for c in coords)
    peak = np.unravel_index(int(np.argmax(np.abs(T.symbol))), shape)
    mesh = grid.frequency_mesh()
    xi_star = [m[peak] for m in mesh]
    phase_star = np.exp(1j * sum(x * c for x, c in zip(xi_star, coords)))
    out = [("plane_wave", phase_star)]
    delta = np.zeros(shape, dtype=complex)
    delta[(0,) * grid.d] = 1.0
    out.append(("point_mass", delta))
    for w in (2 * grid.step, 8 * grid.step, grid.period / 16):
        gauss = np.exp(-r2 / (2 * w ** 2))
        out.append((f"gauss[{w:g}]", gauss.astype(complex)))
        out.append((f"modgauss[{w:g}]", gauss * phase_star))
    # input maximizing |(T x)(0)| for a given l^p mass
    kern = np.fft.ifftn(T.symbol)
    rev = np.conj(kern[tuple(np.negative(np.indices(shape)) % grid.n)])
    out.append(("kernel_adapted", _dual(rev, p / (p - 1))))
    return out


def _ascent(T: SymbolOperator, x0: np.ndarray, p: float, budget: Budget):
    q = p / (p - 1)
    Tstar = np.conj(T.symbol)
    x = x0 / _lp(x0, p, 1.0)
    best, best_x = _ratio(T, x, p), x
    prev = best
    for it in range(1, budget.max_iter + 1):
        y = np.fft.ifftn(np.fft.fftn(x) * T.symbol)
        w = np.fft.ifftn(np.fft.fftn(_dual(y, p)) * Tstar)
        nxt = _dual(w, q)
        nrm = _lp(nxt, p, 1.0)
        if nrm == 0:
            return best, best_x, True, it
        x = nxt / nrm
        val = _ratio(T, x, p)
        if val > best:
            best, best_x = val, x
        if abs(val - prev) <= budget.tol * max(val, 1e-300):
            return best, best_x, True, it
        prev = val
    return best, best_x, False, budget.max_iter


def opnorm_estimate(T: SymbolOperator, p: float, budget: Budget | None = None) -> OpNormEstimate:
    """Certified lower bound on ``||T||_{p -> p}``.

    The best of a structured test family (plane wave at the symbol's peak,
    point mass, plain and modulated Gaussians, the kernel-adapted input) is
    followed by the dual-exponent power iteration from the ``starts`` best
    remaining test inputs.  The plane wave alone already gives ``sup |symbol|``.
    """
    if not 1 < p < np.inf:
        raise OperatorError(f"p must lie in (1, inf), got {p}")
    budget = budget or Budget()
    scored = sorted(((_ratio(T, x, p), name, x) for name, x in _test_inputs(T, p)),
                    key=lambda s: -s[0])
    best, source, best_x = scored[0]
    converged, iters = True, 0
    # the plane wave is an eigenvector and a fixed point of the ascent
    for val0, name, x0 in [sc for sc in scored if sc[1] != "plane_wave"][:budget.starts]:
        val, x, ok, it = _ascent(T, x0, p, budget)
        iters += it
        converged &= ok
        if val > best:
            best, source, best_x = val, f"ascent<{name}>", x
    flags = [] if converged else ["not_converged"]
    return OpNormEstimate(float(best), GridField(T.grid, best_x), converged, source, iters, flags)


# ---------------------------------------------------------------------------
# gamma-bounds and Paley-Littlewood
# ---------------------------------------------------------------------------


@dataclass
class GammaEstimate:
    value: float
    stderr: float
    single_operator_bound: float
    best_selection: list[int]
    trials: int


def _sqf_ratio(symbols: np.ndarray, xs: np.ndarray, p: float) -> float:
    ys = np.fft.ifftn(np.fft.fftn(xs, axes=tuple(range(1, xs.ndim))) * symbols,
                      axes=tuple(range(1, xs.ndim)))
    den = _lp(np.sqrt((np.abs(xs) ** 2).sum(0)), p, 1.0)
    return _lp(np.sqrt((np.abs(ys) ** 2).sum(0)), p, 1.0) / den if den > 0 else 0.0


def _sqf_ascent(symbols: np.ndarray, xs: np.ndarray, p: float, iters: int) -> float:
    """Power iteration for ``diag(T_i)`` on ``L^p(l^2)``."""
    q = p / (p - 1)
    axes = tuple(range(1, xs.ndim))

    def apply(sym, v):
        return np.fft.ifftn(np.fft.fftn(v, axes=axes) * sym, axes=axes)

    def dual(v, r):
        mag = np.sqrt((np.abs(v) ** 2).sum(0))
        scale = np.zeros_like(mag)
        nz = mag > 0
        scale[nz] = mag[nz] ** (r - 2)
        return v * scale

    best = _sqf_ratio(symbols, xs, p)
    for _ in range(iters):
        w = apply(np.conj(symbols), dual(apply(symbols, xs), p))
        xs = dual(w, q)
        if not np.abs(xs).max() > 0:
            break
        xs = xs / np.abs(xs).max()
        best = max(best, _sqf_ratio(symbols, xs, p))
    return best


def gamma_bound_estimate(family: OperatorFamily, p: float, trials: int = 20, seed: int = 0,
                         selection_size: int = 4, ascent_iters: int = 20,
                         gaussian: bool = False, samples: int = 200) -> GammaEstimate:
    """Lower estimate of the gamma-bound of ``family`` on ``L^p``.

    Each trial draws ``selection_size`` members (with replacement) and
    random inputs; the ratio of square-function norms of ``(T_i x_i)`` and
    ``(x_i)`` is pushed up by the ``L^p(l^2)`` power iteration.  With
    ``gaussian=True`` the final ratio of each trial is recomputed with
    Monte Carlo Gaussian sums and its standard error reported.  Single
    members (their own operator-norm lower bounds) are always included,
    since ``gamma(family) >= sup ||T||``.  Odd trials start from the
    members' own certificate inputs with random phases instead of noise,
    so the ascent can build on what single members already attain.
    """
    if trials < 10:
        raise OperatorError("need at least 10 trials")
    rng = np.random.default_rng(seed)
    grid = family.grid
    if p == 2:
        certs = [None] * len(family)
        single = max(T.sup for T in family.operators)
    else:
        ests = [opnorm_estimate(T, p, Budget(max_iter=50)) for T in family.operators]
        certs = [e.certificate.values for e in ests]
        single = max(e.lower_bound for e in ests)
    best, best_sel, best_se = single, [], 0.0
    for trial in range(trials):
        sel = rng.integers(0, len(family), selection_size)
        symbols = np.stack([family.operators[i].symbol for i in sel])
        xs = (rng.standard_normal((selection_size,) + grid.shape)
              + 1j * rng.standard_normal((selection_size,) + grid.shape))
        if trial % 2 and certs[0] is not None:
            phase = np.exp(2j * np.pi * rng.random(selection_size))
            xs = np.stack([ph * certs[i] / np.abs(certs[i]).max() for ph, i in zip(phase, sel)])
        if gaussian:
            ys = [GridField(grid, v) for v in
                  np.fft.ifftn(np.fft.fftn(xs, axes=tuple(range(1, xs.ndim))) * symbols,
                               axes=tuple(range(1, xs.ndim)))]
            xf = [GridField(grid, v) for v in xs]
            num, se_n = gaussian_sum_norm(ys, p, samples, seed + trial)
            den, se_d = gaussian_sum_norm(xf, p, samples, seed + trial)
            val = num / den
            se = val * np.hypot(se_n / num if num else 0.0, se_d / den)
        else:
            val, se = _sqf_ascent(symbols, xs, p, ascent_iters), 0.0
        if val > best:
            best, best_sel, best_se = val, sel.tolist(), se
    return GammaEstimate(float(best), float(best_se), float(single), best_sel, trials)


def paley_littlewood_ratio(A: SymbolOperator, family: PartitionFamily, x: GridField, p: float,
                           mean_tol: float = 1e-12) -> float:
    """``|| (sum_k |phi_k(A) x|^2)^{1/2} ||_p / ||x||_p`` on mean-zero ``x``."""
    if family.kind != DYADIC:
        raise OperatorError("Paley-Littlewood needs a dyadic family")
    s = _real_symbol(A)
    nz = s[s > 0]
    lo, hi = family.covered_range()
    if nz.size and (nz.min() < lo or nz.max() > hi):
        raise OperatorError(f"dyadic family covers [{lo:g}, {hi:g}] but the symbol ranges over "
                            f"[{nz.min():g}, {nz.max():g}]")
    nx = lp_norm(x, p)
    if nx == 0:
        raise OperatorError("x = 0")
    if abs(x.values.mean()) > mean_tol * np.abs(x.values).max():
        raise OperatorError("x must be mean-zero (use mean_zero())")
    xhat = np.fft.fftn(x.values)
    parts = [x.with_values(np.fft.ifftn(xhat * family.evaluate(k, s))) for k in family.index_range]
    return square_function_norm(parts, p) / nx


def resolvent_check(A: SymbolOperator, theta: float, lambdas, p: float = 2.0,
                    budget: Budget | None = None) -> float:
    """``max_lambda ||lambda (lambda - A)^{-1}||_{p -> p}`` over samples outside the sector.

    Exact at ``p = 2``; a lower estimate otherwise.
    """
    s = _real_symbol(A)
    out = 0.0
    for lam in np.atleast_1d(np.asarray(lambdas, dtype=complex)):
        if lam == 0 or abs(np.angle(lam)) <= theta:
            raise OperatorError(f"lambda={lam} lies in the closed sector of angle {theta}")
        sym = lam / (lam - s)
        if p == 2:
            val = float(np.abs(sym).max())
        else:
            val = opnorm_estimate(SymbolOperator(A.grid, sym, "resolvent"), p, budget).lower_bound
        out = max(out, val)
    return out
