"""Smooth partitions of unity: equidistant, dyadic and dyadic-Fourier.

All families derive from one mother window: the standard bump divided by
its integer-shift sum, so that translates sum to one exactly (up to
rounding).  The dyadic family is the equidistant one seen through
``t -> log2 t``; the dyadic-Fourier family reuses the dyadic window as its
generator on each half line and fills the core with the complement.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .funcspec import bump

EQUIDISTANT = "equidistant"
DYADIC = "dyadic"
DYADIC_FOURIER = "dyadic_fourier"
KINDS = (EQUIDISTANT, DYADIC, DYADIC_FOURIER)


class PartitionError(ValueError):
    pass


def mother_window(x, width: float = 1.0) -> np.ndarray:
    """Equidistant mother window ``bump(x/w) / sum_m bump((x-m)/w)``.

    Supported in ``[-width, width]``; ``width`` must lie in (1/2, 1] so that
    the integer-shift sum never vanishes.
    """
    x = np.asarray(x, dtype=float)
    base = np.floor(x)
    denom = np.zeros(x.shape)
    for off in (-1.0, 0.0, 1.0, 2.0):
        denom += bump((x - (base + off)) / width)
    num = bump(x / width)
    out = np.zeros(x.shape)
    nz = num > 0
    out[nz] = num[nz] / denom[nz]
    return out


@dataclass(frozen=True)
class Window:
    """One window of a family: a callable with a declared support."""

    fn: Callable[[np.ndarray], np.ndarray]
    support: tuple[float, float]
    label: str

    def __call__(self, x):
        return self.fn(np.asarray(x, dtype=float))

    def __mul__(self, other: "Window") -> "Window":
        lo = max(self.support[0], other.support[0])
        hi = min(self.support[1], other.support[1])
        if lo > hi:
            lo = hi = 0.0
        return Window(lambda x: self.fn(x) * other.fn(x), (lo, hi), f"{self.label}*{other.label}")


@dataclass(frozen=True)
class PartitionFamily:
    kind: str
    n_min: int
    n_max: int
    width: float = 1.0

    def __post_init__(self):
        if self.kind not in KINDS:
            raise PartitionError(f"unknown family kind {self.kind!r}")
        if self.n_min > self.n_max:
            raise PartitionError(f"empty index range [{self.n_min}, {self.n_max}]")
        if not 0.5 < self.width <= 1.0:
            raise PartitionError(f"mother window width must lie in (1/2, 1], got {self.width}")

    @property
    def index_range(self) -> range:
        return range(self.n_min, self.n_max + 1)

    def _check(self, n: int):
        if not self.n_min <= n <= self.n_max:
            raise PartitionError(f"index {n} outside [{self.n_min}, {self.n_max}]")

    def evaluate(self, n: int, x) -> np.ndarray:
        self._check(n)
        x = np.asarray(x, dtype=float)
        if self.kind == EQUIDISTANT:
            return mother_window(x - n, self.width)
        if self.kind == DYADIC:
            return _dyadic(x, n, self.width)
        return _dyadic_fourier(x, n, self.width)

    def support(self, n: int) -> tuple[float, float]:
        """Declared support interval of window ``n`` (a closed superset)."""
        self._check(n)
        if self.kind == EQUIDISTANT:
            return (n - 1.0, n + 1.0)
        if self.kind == DYADIC:
            return (2.0 ** (n - 1), 2.0 ** (n + 1))
        if n == 0:
            return (-1.0, 1.0)
        lo, hi = 2.0 ** (abs(n) - 2), 2.0 ** abs(n)
        return (lo, hi) if n > 0 else (-hi, -lo)

    def window(self, n: int) -> Window:
        self._check(n)
        return Window(lambda x, n=n: self.evaluate(n, x), self.support(n), f"{self.kind}[{n}]")

    def covered_range(self) -> tuple[float, float]:
        """Interval on which the windows of this finite family sum to one."""
        if self.kind == EQUIDISTANT:
            return (float(self.n_min), float(self.n_max))
        if self.kind == DYADIC:
            return (2.0 ** self.n_min, 2.0 ** self.n_max)
        m = min(-self.n_min, self.n_max)
        return (-(2.0 ** (m - 1)), 2.0 ** (m - 1))

    def partition_sum(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        return sum(self.evaluate(n, x) for n in self.index_range)

    def to_json(self) -> str:
        return json.dumps({"kind": self.kind, "n_min": self.n_min, "n_max": self.n_max,
                           "mother": {"id": "bump", "width": self.width}}, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "PartitionFamily":
        d = json.loads(text)
        mother = d.get("mother", {"id": "bump", "width": 1.0})
        if mother.get("id") != "bump":
            raise PartitionError(f"unknown mother window {mother.get('id')!r}")
        return cls(d["kind"], int(d["n_min"]), int(d["n_max"]), float(mother["width"]))


def _dyadic(t, n, width):
    out = np.zeros(t.shape)
    pos = t > 0
    out[pos] = mother_window(np.log2(t[pos]) - n, width)
    return out


def _dyadic_fourier(t, n, width):
    if n > 0:
        return _dyadic(t, n - 1, width)
    if n < 0:
        return _dyadic(-t, -n - 1, width)
    # core: 1 on |t| <= 1/2, the dyadic window of index -1 on (1/2, 1), 0 beyond
    a = np.abs(t)
    out = np.where(a <= 0.5, 1.0, 0.0)
    mid = (a > 0.5) & (a < 1.0)
    out[mid] = mother_window(np.log2(a[mid]) + 1.0, width)
    return out


def equidistant_partition(n_min: int, n_max: int, width: float = 1.0) -> PartitionFamily:
    return PartitionFamily(EQUIDISTANT, n_min, n_max, width)


def dyadic_partition(n_min: int, n_max: int, width: float = 1.0) -> PartitionFamily:
    return PartitionFamily(DYADIC, n_min, n_max, width)


def dyadic_fourier_partition(n_abs_max: int, width: float = 1.0) -> PartitionFamily:
    if n_abs_max < 2:
        raise PartitionError("n_abs_max must be at least 2 to cover the [-1, 1] core")
    return PartitionFamily(DYADIC_FOURIER, -n_abs_max, n_abs_max, width)


def widen(family: PartitionFamily, n: int) -> Window:
    """``phi_{n-1} + phi_n + phi_{n+1}``, which equals one on ``supp phi_n``."""
    for m in (n - 1, n + 1):
        if not family.n_min <= m <= family.n_max:
            raise PartitionError(f"widen({n}) needs index {m} inside [{family.n_min}, {family.n_max}]")
    parts = [family.window(m) for m in (n - 1, n, n + 1)]
    lo = min(w.support[0] for w in parts)
    hi = max(w.support[1] for w in parts)
    return Window(lambda x: parts[0](x) + parts[1](x) + parts[2](x), (lo, hi), f"widen({family.kind}[{n}])")


def nyquist_bands(kind: str, omega: float, width: float = 1.0) -> PartitionFamily:
    """Smallest family of the given kind whose covered range contains ``[-omega, omega]``."""
    if kind == EQUIDISTANT:
        m = int(math.ceil(omega)) + 1
        return equidistant_partition(-m, m, width)
    if kind == DYADIC_FOURIER:
        m = max(2, int(math.ceil(math.log2(max(omega, 1.0)))) + 1)
        return dyadic_fourier_partition(m, width)
    raise PartitionError(f"no Nyquist cover for kind {kind!r}")
