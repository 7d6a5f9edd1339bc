"""Scalar multiplier functions: built-ins with closed-form derivatives and a
small LL(1) expression parser.

A :class:`FuncExpr` wraps an immutable expression tree.  Leaves are either
the free variable, constants, or built-in functions (``f_alpha``, ``power``,
...) that know every derivative in closed form.  Sums and products of such
trees keep closed-form derivatives via linearity and the Leibniz rule; any
other node falls back to nested central differences when explicitly allowed.

Example
-------
>>> f = parse("x^2 * exp(-x)")
>>> evaluate(f, [2.0])
array([0.54134113+0.j])
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

INF = math.inf

REAL = "real"
POSITIVE = "positive"


class FuncSpecError(ValueError):
    """Base class for expression errors."""


class ParseError(FuncSpecError):
    def __init__(self, message: str, position: int):
        super().__init__(f"{message} (at position {position})")
        self.position = position


class UnknownIdentifierError(ParseError):
    pass


class ArityError(ParseError):
    pass


class DomainError(FuncSpecError):
    """Raised when evaluation leaves the declared domain or is not finite.

    ``indices`` lists the offending positions of the input sequence.
    """

    def __init__(self, message: str, indices: Sequence[int] = ()):
        super().__init__(message)
        self.indices = list(indices)


class DerivativeUnavailableError(FuncSpecError):
    pass


def bracket(t):
    """Japanese-bracket style weight ``<t> = 1 + |t|``."""
    return 1.0 + np.abs(t)


def bump(x):
    """Standard C^inf_c bump ``exp(-1/(1-x^2))`` on (-1, 1), zero outside.

    Only the real part of ``x`` is used.
    """
    x = np.real(np.asarray(x, dtype=complex))
    out = np.zeros(x.shape)
    inside = np.abs(x) < 1.0
    xi = x[inside]
    out[inside] = np.exp(-1.0 / (1.0 - xi * xi))
    return out


def _falling(z, k: int):
    """Falling factorial z (z-1) ... (z-k+1)."""
    out = 1.0 + 0j
    for j in range(k):
        out *= z - j
    return out


def _fmt(v) -> str:
    v = complex(v)
    if v.imag == 0.0:
        return repr(float(v.real))
    if v.real == 0.0:
        return f"{float(v.imag)!r}i"
    return f"({float(v.real)!r} + {float(v.imag)!r}i)"


# ---------------------------------------------------------------------------
# Expression tree
# ---------------------------------------------------------------------------


class Node:
    """Immutable expression node.  Subclasses are frozen dataclasses."""

    order: float = 0  # closed-form derivative orders available

    def __call__(self, x: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def derivative(self, k: int) -> "Node":
        raise DerivativeUnavailableError(f"no closed-form derivative for {self.prefix()}")

    def infix(self) -> str:
        raise NotImplementedError(f"{type(self).__name__} has no infix form")

    def prefix(self) -> str:
        raise NotImplementedError


@dataclass(frozen=True)
class Const(Node):
    value: complex
    order: float = field(default=INF, init=False, repr=False)

    def __call__(self, x):
        return np.full(np.shape(x), complex(self.value))

    def derivative(self, k):
        return self if k == 0 else Const(0j)

    def infix(self):
        return _fmt(self.value)

    def prefix(self):
        return _fmt(self.value).replace(" ", "")


@dataclass(frozen=True)
class Var(Node):
    name: str = "x"
    order: float = field(default=INF, init=False, repr=False)

    def __call__(self, x):
        return np.asarray(x, dtype=complex)

    def derivative(self, k):
        if k == 0:
            return self
        return Const(1 + 0j) if k == 1 else Const(0j)

    def infix(self):
        return self.name

    def prefix(self):
        return self.name


@dataclass(frozen=True)
class Neg(Node):
    arg: Node

    @property
    def order(self):
        return self.arg.order

    def __call__(self, x):
        return -self.arg(x)

    def derivative(self, k):
        return Neg(self.arg.derivative(k))

    def infix(self):
        return f"(-{self.arg.infix()})"

    def prefix(self):
        return f"(neg {self.arg.prefix()})"


_BINOPS: dict[str, Callable] = {
    "+": np.add,
    "-": np.subtract,
    "*": np.multiply,
    "/": np.divide,
    "^": np.power,
}


@dataclass(frozen=True)
class BinOp(Node):
    op: str
    left: Node
    right: Node

    @property
    def order(self):
        if self.op in "+-*":
            return min(self.left.order, self.right.order)
        return 0

    def __call__(self, x):
        return _BINOPS[self.op](self.left(x), self.right(x))

    def derivative(self, k):
        if k == 0:
            return self
        if self.op in "+-":
            return BinOp(self.op, self.left.derivative(k), self.right.derivative(k))
        if self.op == "*" and self.order >= k:
            terms = [
                BinOp("*", Const(complex(math.comb(k, j))),
                      BinOp("*", self.left.derivative(j), self.right.derivative(k - j)))
                for j in range(k + 1)
            ]
            out = terms[0]
            for term in terms[1:]:
                out = BinOp("+", out, term)
            return out
        return super().derivative(k)

    def infix(self):
        return f"({self.left.infix()} {self.op} {self.right.infix()})"

    def prefix(self):
        return f"({self.op} {self.left.prefix()} {self.right.prefix()})"


def _safe_pow(a, b):
    return np.power(a, b)


_CALLS: dict[str, tuple[int, Callable]] = {
    "exp": (1, np.exp),
    "sin": (1, np.sin),
    "cos": (1, np.cos),
    "log": (1, np.log),
    "abs": (1, lambda v: np.abs(v).astype(complex)),
    "pow": (2, _safe_pow),
    "bump": (1, lambda v: bump(v).astype(complex)),
}


@dataclass(frozen=True)
class Call(Node):
    name: str
    args: tuple

    def __call__(self, x):
        _, fn = _CALLS[self.name]
        return fn(*(a(x) for a in self.args))

    def infix(self):
        return f"{self.name}({', '.join(a.infix() for a in self.args)})"

    def prefix(self):
        return f"({self.name} {' '.join(a.prefix() for a in self.args)})"


@dataclass(frozen=True)
class Dilate(Node):
    """``x -> inner(scale * x)``."""

    inner: Node
    scale: float

    @property
    def order(self):
        return self.inner.order

    def __call__(self, x):
        return self.inner(self.scale * np.asarray(x, dtype=complex))

    def derivative(self, k):
        if k == 0:
            return self
        return BinOp("*", Const(complex(self.scale**k)), Dilate(self.inner.derivative(k), self.scale))

    def prefix(self):
        return f"(dilate {_fmt(self.scale)} {self.inner.prefix()})"


@dataclass(frozen=True)
class ExpSub(Node):
    """``x -> inner(exp(x))``; maps a function on (0, inf) to one on R."""

    inner: Node

    def __call__(self, x):
        return self.inner(np.exp(np.asarray(x, dtype=complex)))

    def infix(self):
        # the free variable is rendered inside ``inner``; substitute textually
        return _substitute_var(self.inner, "exp(x)")

    def prefix(self):
        return f"(expsub {self.inner.prefix()})"


def _substitute_var(node: Node, replacement: str) -> str:
    if isinstance(node, Var):
        return replacement
    if isinstance(node, Const):
        return node.infix()
    if isinstance(node, Neg):
        return f"(-{_substitute_var(node.arg, replacement)})"
    if isinstance(node, BinOp):
        return (f"({_substitute_var(node.left, replacement)} {node.op} "
                f"{_substitute_var(node.right, replacement)})")
    if isinstance(node, Call):
        return f"{node.name}({', '.join(_substitute_var(a, replacement) for a in node.args)})"
    if isinstance(node, Builtin):
        return _substitute_var(parse(node.infix()).node, replacement)
    raise NotImplementedError(f"cannot substitute into {type(node).__name__}")


@dataclass(frozen=True)
class FiniteDiff(Node):
    """k-th derivative of ``inner`` by a central difference stencil."""

    inner: Node
    k: int

    def __call__(self, x):
        x = np.asarray(x, dtype=complex)
        h = fd_step(x, self.k)
        out = np.zeros(x.shape, dtype=complex)
        for j in range(self.k + 1):
            out += (-1) ** j * math.comb(self.k, j) * self.inner(x + (self.k / 2 - j) * h)
        return out / h**self.k

    def prefix(self):
        return f"(fd {self.k} {self.inner.prefix()})"


def fd_step(x, k: int):
    """Central-difference step for a k-th derivative at ``x``.

    First derivatives use ``max(1e-5, 1e-5 |x|)``; higher orders scale the
    base step to ``eps**(1/(k+2))`` to keep rounding error bounded.
    """
    base = 1e-5 if k <= 1 else np.finfo(float).eps ** (1.0 / (k + 2))
    return base * np.maximum(1.0, np.abs(x))


# ---------------------------------------------------------------------------
# Built-ins
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Builtin(Node):
    """Leaf with closed-form derivatives of every order.

    ``deriv`` is the derivative order this leaf represents (0 for the
    function itself).
    """

    name: str
    params: tuple
    deriv: int = 0

    @property
    def order(self):
        return _BUILTINS[self.name].order

    def __call__(self, x):
        return _BUILTINS[self.name].evaluate(np.asarray(x, dtype=complex), self.deriv, *self.params)

    def derivative(self, k):
        if k > self.order:
            raise DerivativeUnavailableError(f"builtin {self.name} has no closed-form derivatives")
        return Builtin(self.name, self.params, self.deriv + k)

    def infix(self):
        if self.deriv:
            raise NotImplementedError("derivative built-ins have no infix form")
        return _BUILTINS[self.name].infix(*self.params)

    def prefix(self):
        args = " ".join(_fmt(p).replace(" ", "") for p in self.params)
        head = self.name if not self.deriv else f"d{self.deriv}:{self.name}"
        return f"({head}{' ' + args if args else ''})"


@dataclass(frozen=True)
class _BuiltinDef:
    evaluate: Callable
    infix: Callable
    order: float = INF
    domain: str = REAL


def _falpha_eval(x, k, alpha, t):
    # Leibniz: d^j (1+x)^(-alpha) = falling(-alpha, j) (1+x)^(-alpha-j)
    base = 1.0 + x
    osc = np.exp(1j * t * x)
    out = np.zeros(x.shape, dtype=complex)
    for j in range(k + 1):
        out += math.comb(k, j) * _falling(-alpha, j) * base ** (-alpha - j) * (1j * t) ** (k - j)
    return out * osc


def _power_eval(x, k, z):
    return _falling(z, k) * x ** (z - k)


def _shifted_power_eval(x, k, shift, z):
    return _falling(z, k) * (x + shift) ** (z - k)


def _modulation_eval(x, k, xi):
    return (1j * xi) ** k * np.exp(1j * xi * x)


def _decay_eval(x, k, c):
    return (-c) ** k * np.exp(-c * x)


def _gaussian_eval(x, k):
    # d^k exp(-x^2) = (-1)^k H_k(x) exp(-x^2), physicists' Hermite polynomials
    h_prev, h = np.ones_like(x), 2 * x
    if k == 0:
        h = h_prev
    else:
        for n in range(1, k):
            h_prev, h = h, 2 * x * h - 2 * n * h_prev
    return (-1) ** k * h * np.exp(-x * x)


def _const_eval(x, k, c):
    return np.full(x.shape, complex(c) if k == 0 else 0j)


def _bump_eval(x, k):
    if k:
        raise DerivativeUnavailableError("bump has no closed-form derivatives")
    return bump(x).astype(complex)


_BUILTINS: dict[str, _BuiltinDef] = {
    "const": _BuiltinDef(_const_eval, lambda c: _fmt(c)),
    "identity": _BuiltinDef(lambda x, k: Var().derivative(k)(x), lambda: "x"),
    "f_alpha": _BuiltinDef(
        _falpha_eval,
        lambda a, t: f"(pow(1 + x, {_fmt(-a)}) * exp({_fmt(1j * t)} * x))",
    ),
    "power": _BuiltinDef(_power_eval, lambda z: f"pow(x, {_fmt(z)})", domain=POSITIVE),
    "shifted_power": _BuiltinDef(
        _shifted_power_eval, lambda s, z: f"pow(x + {_fmt(s)}, {_fmt(z)})"
    ),
    "modulation": _BuiltinDef(_modulation_eval, lambda xi: f"exp({_fmt(1j * xi)} * x)"),
    "decay": _BuiltinDef(_decay_eval, lambda c: f"exp({_fmt(-c)} * x)"),
    "gaussian": _BuiltinDef(_gaussian_eval, lambda: "exp(-(x^2))"),
    "bump": _BuiltinDef(_bump_eval, lambda: "bump(x)", order=0),
}


# ---------------------------------------------------------------------------
# FuncExpr
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class FuncExpr:
    """An immutable scalar function of one variable.

    ``domain`` is ``"real"`` or ``"positive"``; the caller decides how (or
    whether) to extend a function beyond it.
    """

    node: Node
    domain: str = REAL

    @property
    def kind(self) -> str:
        return "builtin" if isinstance(self.node, Builtin) else "parsed"

    @property
    def derivative_order_available(self) -> float:
        return self.node.order

    def __call__(self, points):
        return evaluate(self, points)

    def _combine(self, op, other, swap=False):
        if not isinstance(other, FuncExpr):
            other = FuncExpr(Const(complex(other)), REAL)
        domain = POSITIVE if POSITIVE in (self.domain, other.domain) else REAL
        left, right = (other.node, self.node) if swap else (self.node, other.node)
        return FuncExpr(BinOp(op, left, right), domain)

    def __add__(self, other):
        return self._combine("+", other)

    def __radd__(self, other):
        return self._combine("+", other, swap=True)

    def __sub__(self, other):
        return self._combine("-", other)

    def __rsub__(self, other):
        return self._combine("-", other, swap=True)

    def __mul__(self, other):
        return self._combine("*", other)

    def __rmul__(self, other):
        return self._combine("*", other, swap=True)

    def __truediv__(self, other):
        return self._combine("/", other)

    def __neg__(self):
        return FuncExpr(Neg(self.node), self.domain)

    def dilate(self, scale: float) -> "FuncExpr":
        """Return ``x -> f(scale * x)``."""
        return FuncExpr(Dilate(self.node, float(scale)), self.domain)

    def to_infix(self) -> str:
        return self.node.infix()

    def to_prefix(self) -> str:
        """Canonical prefix text form used when embedding in reports."""
        return f"[{self.domain}] {self.node.prefix()}"

    def __str__(self):
        return self.to_prefix()


def builtin(name: str, *params, domain: str | None = None) -> FuncExpr:
    if name not in _BUILTINS:
        raise FuncSpecError(f"unknown builtin {name!r}")
    spec = _BUILTINS[name]
    return FuncExpr(Builtin(name, tuple(params)), domain or spec.domain)


def builtin_f_alpha(alpha: float, t: float) -> FuncExpr:
    """``lambda -> (1 + lambda)^(-alpha) exp(i t lambda)`` on ``lambda >= 0``."""
    if not alpha > 0:
        raise FuncSpecError(f"alpha must be positive, got {alpha}")
    return builtin("f_alpha", float(alpha), float(t), domain=REAL)


def constant(c=1.0) -> FuncExpr:
    return builtin("const", complex(c))


def identity() -> FuncExpr:
    return builtin("identity")


def evaluate(f: FuncExpr, points, strict: bool = True) -> np.ndarray:
    """Evaluate ``f`` pointwise.

    Points outside the declared domain, and points where the value is not
    finite, raise :class:`DomainError` carrying their indices.  With
    ``strict=False`` those entries come back as NaN instead.
    """
    x = np.asarray(points, dtype=complex)
    bad = ~np.isfinite(x)
    if f.domain == POSITIVE:
        bad |= (x.real <= 0) | (x.imag != 0)
    with np.errstate(all="ignore"):
        values = np.asarray(f.node(np.where(bad, 1.0, x)), dtype=complex)
    values = np.broadcast_to(values, x.shape).copy()
    bad |= ~np.isfinite(values)
    if bad.any():
        if strict:
            idx = np.flatnonzero(bad.ravel())
            raise DomainError(
                f"{idx.size} point(s) outside the domain of {f.to_prefix()}", idx.tolist()
            )
        values[bad] = np.nan
    return values


def derivative(f: FuncExpr, k: int, allow_fd: bool = False) -> FuncExpr:
    """k-th derivative: closed form when available, else central differences.

    Finite differencing has to be requested with ``allow_fd``.
    """
    if k < 0:
        raise ValueError("derivative order must be non-negative")
    if k == 0:
        return f
    if k <= f.derivative_order_available:
        return FuncExpr(f.node.derivative(k), f.domain)
    if not allow_fd:
        raise DerivativeUnavailableError(
            f"order {k} exceeds closed-form order {f.derivative_order_available}; pass allow_fd=True"
        )
    return FuncExpr(FiniteDiff(f.node, k), f.domain)


# ---------------------------------------------------------------------------
# Parser
#
# expr   := term (('+' | '-') term)*
# term   := unary (('*' | '/') unary)*
# unary  := ('+' | '-') unary | power
# power  := atom ('^' unary)?
# atom   := NUMBER | IDENT | IDENT '(' expr (',' expr)* ')' | '(' expr ')'
# ---------------------------------------------------------------------------

_CONSTANTS = {"i": 1j, "pi": math.pi}


@dataclass(frozen=True)
class _Token:
    kind: str  # num, ident, op, end
    text: str
    pos: int
    value: complex = 0j


def _tokenize(text: str) -> list[_Token]:
    tokens = []
    i, n = 0, len(text)
    while i < n:
        ch = text[i]
        if ch.isspace():
            i += 1
            continue
        if ch.isdigit() or (ch == "." and i + 1 < n and text[i + 1].isdigit()):
            j = i
            while j < n and (text[j].isdigit() or text[j] == "."):
                j += 1
            if j < n and text[j] in "eE":
                k = j + 1
                if k < n and text[k] in "+-":
                    k += 1
                if k < n and text[k].isdigit():
                    j = k
                    while j < n and text[j].isdigit():
                        j += 1
            try:
                value = complex(float(text[i:j]))
            except ValueError:
                raise ParseError(f"malformed number {text[i:j]!r}", i) from None
            if j < n and text[j] in "ij" and not (j + 1 < n and (text[j + 1].isalnum() or text[j + 1] == "_")):
                value *= 1j
                j += 1
            tokens.append(_Token("num", text[i:j], i, value))
            i = j
        elif ch.isalpha() or ch == "_":
            j = i
            while j < n and (text[j].isalnum() or text[j] == "_"):
                j += 1
            tokens.append(_Token("ident", text[i:j], i))
            i = j
        elif ch in "+-*/^(),":
            tokens.append(_Token("op", ch, i))
            i += 1
        else:
            raise ParseError(f"unexpected character {ch!r}", i)
    tokens.append(_Token("end", "", n))
    return tokens


class _Parser:
    def __init__(self, text: str, var: str):
        self.tokens = _tokenize(text)
        self.i = 0
        self.var = var

    @property
    def tok(self) -> _Token:
        return self.tokens[self.i]

    def advance(self) -> _Token:
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def expect(self, text: str) -> _Token:
        if self.tok.text != text or self.tok.kind != "op":
            found = self.tok.text or "end of input"
            raise ParseError(f"expected {text!r}, found {found!r}", self.tok.pos)
        return self.advance()

    def parse(self) -> Node:
        node = self.expr()
        if self.tok.kind != "end":
            raise ParseError(f"unexpected {self.tok.text!r}", self.tok.pos)
        return node

    def expr(self) -> Node:
        node = self.term()
        while self.tok.kind == "op" and self.tok.text in "+-":
            op = self.advance().text
            node = BinOp(op, node, self.term())
        return node

    def term(self) -> Node:
        node = self.unary()
        while self.tok.kind == "op" and self.tok.text in "*/":
            op = self.advance().text
            node = BinOp(op, node, self.unary())
        return node

    def unary(self) -> Node:
        if self.tok.kind == "op" and self.tok.text in "+-":
            op = self.advance().text
            arg = self.unary()
            return Neg(arg) if op == "-" else arg
        return self.power()

    def power(self) -> Node:
        base = self.atom()
        if self.tok.kind == "op" and self.tok.text == "^":
            self.advance()
            return BinOp("^", base, self.unary())
        return base

    def atom(self) -> Node:
        tok = self.tok
        if tok.kind == "num":
            self.advance()
            return Const(tok.value)
        if tok.kind == "op" and tok.text == "(":
            self.advance()
            node = self.expr()
            self.expect(")")
            return node
        if tok.kind == "ident":
            self.advance()
            name = tok.text
            if self.tok.kind == "op" and self.tok.text == "(":
                if name not in _CALLS:
                    raise UnknownIdentifierError(f"unknown function {name!r}", tok.pos)
                self.advance()
                args = [self.expr()]
                while self.tok.kind == "op" and self.tok.text == ",":
                    self.advance()
                    args.append(self.expr())
                self.expect(")")
                arity = _CALLS[name][0]
                if len(args) != arity:
                    raise ArityError(f"{name} takes {arity} argument(s), got {len(args)}", tok.pos)
                return Call(name, tuple(args))
            if name == self.var:
                return Var(name)
            if name in _CONSTANTS:
                return Const(complex(_CONSTANTS[name]))
            if name in _CALLS:
                raise ArityError(f"function {name!r} used without arguments", tok.pos)
            raise UnknownIdentifierError(f"unknown identifier {name!r}", tok.pos)
        found = tok.text or "end of input"
        raise ParseError(f"unexpected {found!r}", tok.pos)


def parse(text: str, var: str = "x", domain: str = REAL) -> FuncExpr:
    """Parse an expression in one free variable (``x`` by default)."""
    if var in _CONSTANTS or var in _CALLS:
        raise FuncSpecError(f"variable name {var!r} is reserved")
    return FuncExpr(_Parser(text, var).parse(), domain)


def exp_substitute(f: FuncExpr) -> FuncExpr:
    """``x -> f(e^x)``: carries a function on (0, inf) to the real line."""
    if f.domain not in (POSITIVE, REAL):
        raise FuncSpecError(f"unsupported domain {f.domain!r}")
    return FuncExpr(ExpSub(f.node), REAL)
