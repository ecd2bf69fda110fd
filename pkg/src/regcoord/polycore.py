"""Exact sparse complex polynomials, recentering, and order of contact.

Coefficients are Gaussian rationals (:class:`GaussRat`), so parsing, printing,
normalization and curve substitution are exact.  Evaluation at floating point
points and recentering at floating point base points fall back to Python
``complex``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from math import comb
from typing import Iterable, Mapping, NamedTuple, Sequence

import numpy as np

Exponent = tuple[int, ...]


class InvalidInputError(ValueError):
    """Malformed or inconsistent input (dimension mismatch, bad point...)."""


class NotRegularError(ValueError):
    """Some f_s has no pure power of z_s, so the domain is not regular."""

    def __init__(self, s: int, message: str | None = None):
        self.s = s
        super().__init__(message or f"f_{s} has no pure power of z_{s}")


class ParseError(ValueError):
    def __init__(self, message: str, line: int, column: int):
        self.line = line
        self.column = column
        super().__init__(f"line {line}, column {column}: {message}")


@dataclass(frozen=True, slots=True)
class GaussRat:
    """Exact complex number re + im*i with rational parts."""

    re: Fraction
    im: Fraction = Fraction(0)

    @staticmethod
    def of(x) -> GaussRat:
        if isinstance(x, GaussRat):
            return x
        if isinstance(x, (int, Fraction)):
            return GaussRat(Fraction(x))
        if isinstance(x, float):
            return GaussRat(Fraction(x))
        if isinstance(x, complex):
            return GaussRat(Fraction(x.real), Fraction(x.imag))
        raise TypeError(f"cannot convert {type(x).__name__} to GaussRat")

    def __add__(self, other):
        o = GaussRat.of(other)
        return GaussRat(self.re + o.re, self.im + o.im)

    __radd__ = __add__

    def __sub__(self, other):
        o = GaussRat.of(other)
        return GaussRat(self.re - o.re, self.im - o.im)

    def __rsub__(self, other):
        return GaussRat.of(other) - self

    def __mul__(self, other):
        o = GaussRat.of(other)
        return GaussRat(self.re * o.re - self.im * o.im, self.re * o.im + self.im * o.re)

    __rmul__ = __mul__

    def __truediv__(self, other):
        o = GaussRat.of(other)
        den = o.abs2()
        if den == 0:
            raise ZeroDivisionError("division by zero")
        num = self * o.conjugate()
        return GaussRat(num.re / den, num.im / den)

    def __neg__(self):
        return GaussRat(-self.re, -self.im)

    def __pow__(self, k: int):
        if k < 0:
            raise ValueError("negative powers are not supported")
        out, base = GaussRat(Fraction(1)), self
        while k:
            if k & 1:
                out = out * base
            base = base * base
            k >>= 1
        return out

    def __bool__(self):
        return bool(self.re) or bool(self.im)

    def __eq__(self, other):
        try:
            o = GaussRat.of(other)
        except TypeError:
            return NotImplemented
        return self.re == o.re and self.im == o.im

    def __hash__(self):
        return hash((self.re, self.im))

    def conjugate(self) -> GaussRat:
        return GaussRat(self.re, -self.im)

    def abs2(self) -> Fraction:
        return self.re * self.re + self.im * self.im

    def __abs__(self) -> float:
        return math.hypot(float(self.re), float(self.im))

    def __complex__(self) -> complex:
        return complex(float(self.re), float(self.im))

    def __repr__(self):
        return f"GaussRat({format_scalar(self)})"


ZERO = GaussRat(Fraction(0))
ONE = GaussRat(Fraction(1))


def _is_exact(x) -> bool:
    return isinstance(x, (int, Fraction, GaussRat))


def _frac_str(q: Fraction) -> str:
    return str(q.numerator) if q.denominator == 1 else f"{q.numerator}/{q.denominator}"


def format_scalar(c: GaussRat) -> str:
    """Exact text form: ``3/2``, ``-2i``, ``(1/2-3i)``."""
    if c.im == 0:
        return _frac_str(c.re)
    if c.re == 0:
        if c.im == 1:
            return "i"
        if c.im == -1:
            return "-i"
        return f"{_frac_str(c.im)}i"
    sign = "+" if c.im > 0 else "-"
    mag = abs(c.im)
    imag = "i" if mag == 1 else f"{_frac_str(mag)}i"
    return f"({_frac_str(c.re)}{sign}{imag})"


@dataclass(frozen=True)
class ComplexPoly:
    """Sparse polynomial: exponent vector -> nonzero Gaussian rational."""

    nvars: int
    terms: Mapping[Exponent, GaussRat] = field(default_factory=dict)

    def __post_init__(self):
        if self.nvars < 1:
            raise InvalidInputError("nvars must be positive")
        clean: dict[Exponent, GaussRat] = {}
        for e, c in self.terms.items():
            e = tuple(int(k) for k in e)
            if len(e) != self.nvars or any(k < 0 for k in e):
                raise InvalidInputError(f"bad exponent vector {e} for {self.nvars} variables")
            c = GaussRat.of(c)
            if c:
                clean[e] = clean.get(e, ZERO) + c
        object.__setattr__(self, "terms", {e: c for e, c in sorted(clean.items()) if c})

    @classmethod
    def monomial(cls, nvars: int, exponent: Sequence[int], coeff=1) -> ComplexPoly:
        return cls(nvars, {tuple(exponent): GaussRat.of(coeff)})

    @classmethod
    def variable(cls, nvars: int, index: int) -> ComplexPoly:
        """The coordinate z_index (1-based)."""
        e = [0] * nvars
        e[index - 1] = 1
        return cls.monomial(nvars, e)

    @classmethod
    def constant(cls, nvars: int, value) -> ComplexPoly:
        return cls.monomial(nvars, (0,) * nvars, value)

    def __bool__(self):
        return bool(self.terms)

    def __add__(self, other: ComplexPoly) -> ComplexPoly:
        self._check(other)
        out = dict(self.terms)
        for e, c in other.terms.items():
            out[e] = out.get(e, ZERO) + c
        return ComplexPoly(self.nvars, out)

    def __neg__(self) -> ComplexPoly:
        return ComplexPoly(self.nvars, {e: -c for e, c in self.terms.items()})

    def __sub__(self, other: ComplexPoly) -> ComplexPoly:
        return self + (-other)

    def __mul__(self, other) -> ComplexPoly:
        if not isinstance(other, ComplexPoly):
            return self.scale(other)
        self._check(other)
        out: dict[Exponent, GaussRat] = {}
        for e1, c1 in self.terms.items():
            for e2, c2 in other.terms.items():
                e = tuple(a + b for a, b in zip(e1, e2))
                out[e] = out.get(e, ZERO) + c1 * c2
        return ComplexPoly(self.nvars, out)

    __rmul__ = __mul__

    def __pow__(self, k: int) -> ComplexPoly:
        out = ComplexPoly.constant(self.nvars, 1)
        for _ in range(k):
            out = out * self
        return out

    def scale(self, factor) -> ComplexPoly:
        f = GaussRat.of(factor)
        return ComplexPoly(self.nvars, {e: c * f for e, c in self.terms.items()})

    def _check(self, other: ComplexPoly):
        if self.nvars != other.nvars:
            raise InvalidInputError(f"variable count mismatch: {self.nvars} vs {other.nvars}")

    def coefficient(self, exponent: Sequence[int]) -> GaussRat:
        return self.terms.get(tuple(exponent), ZERO)

    def degree(self) -> int:
        return max((sum(e) for e in self.terms), default=0)

    def evaluate(self, point: Sequence, order: Iterable[Exponent] | None = None):
        """Value at ``point``; exact when every coordinate is exact."""
        if len(point) != self.nvars:
            raise InvalidInputError(f"point has {len(point)} coordinates, expected {self.nvars}")
        exact = all(_is_exact(x) for x in point)
        pt = [GaussRat.of(x) for x in point] if exact else [complex(x) for x in point]
        total = ZERO if exact else 0j
        for e in (self.terms if order is None else order):
            c = self.terms[e]
            term = c if exact else complex(c)
            for x, k in zip(pt, e):
                if k:
                    term = term * x**k
            total = total + term
        return total

    def substitute(self, polys: Sequence[ComplexPoly]) -> ComplexPoly:
        """Compose: replace z_i by ``polys[i]`` (all in a common ring)."""
        if len(polys) != self.nvars:
            raise InvalidInputError("substitution needs one polynomial per variable")
        target = polys[0].nvars
        out = ComplexPoly(target, {})
        cache: dict[tuple[int, int], ComplexPoly] = {}
        for e, c in self.terms.items():
            term = ComplexPoly.constant(target, c)
            for i, k in enumerate(e):
                if k:
                    if (i, k) not in cache:
                        cache[(i, k)] = polys[i] ** k
                    term = term * cache[(i, k)]
            out = out + term
        return out

    def numeric(self) -> NumericPoly:
        return NumericPoly.from_poly(self)

    def __str__(self):
        return format_polynomial(self)


class NumericPoly:
    """Vectorized float evaluator for a polynomial and its holomorphic gradient."""

    def __init__(self, nvars: int, exps: np.ndarray, coefs: np.ndarray):
        self.nvars = nvars
        self.exps = exps
        self.coefs = coefs
        self._grad = []
        for i in range(nvars):
            mask = exps[:, i] > 0
            e = exps[mask].copy()
            c = coefs[mask] * exps[mask, i]
            e[:, i] -= 1
            self._grad.append((e, c))

    @classmethod
    def from_poly(cls, f: ComplexPoly) -> NumericPoly:
        if f.terms:
            exps = np.array(list(f.terms), dtype=int).reshape(len(f.terms), f.nvars)
            coefs = np.array([complex(c) for c in f.terms.values()])
        else:
            exps = np.zeros((0, f.nvars), dtype=int)
            coefs = np.zeros(0, dtype=complex)
        return cls(f.nvars, exps, coefs)

    @staticmethod
    def _eval(exps: np.ndarray, coefs: np.ndarray, z: np.ndarray) -> np.ndarray:
        if len(coefs) == 0:
            return np.zeros(z.shape[:-1], dtype=complex)
        mons = np.prod(z[..., None, :] ** exps, axis=-1)
        return mons @ coefs

    def value(self, z) -> np.ndarray:
        return self._eval(self.exps, self.coefs, np.asarray(z, dtype=complex))

    def gradient(self, z) -> np.ndarray:
        """Holomorphic partials d f / d z_i, stacked on the last axis."""
        z = np.asarray(z, dtype=complex)
        return np.stack([self._eval(e, c, z) for e, c in self._grad], axis=-1)


@dataclass(frozen=True)
class TriangularSystem:
    fs: tuple[ComplexPoly, ...]
    ms: tuple[int, ...]
    normalization_scale: Fraction = Fraction(1)
    U_radius: float = 1.0

    @property
    def n(self) -> int:
        return len(self.fs)


def make_system(fs: Sequence[ComplexPoly], U_radius: float = 1.0,
                normalization_scale: Fraction = Fraction(1)) -> TriangularSystem:
    """Validate triangularity, vanishing at 0 and regularity; fill in m_s."""
    fs = tuple(fs)
    n = len(fs)
    if n == 0:
        raise InvalidInputError("empty system")
    if U_radius <= 0:
        raise InvalidInputError("U_radius must be positive")
    for s, f in enumerate(fs, start=1):
        if f.nvars != n:
            raise InvalidInputError(f"f_{s} has {f.nvars} variables, expected {n}")
        for e in f.terms:
            if any(e[s:]):
                raise InvalidInputError(f"f_{s} depends on a variable beyond z_{s}")
        if f.coefficient((0,) * n):
            raise InvalidInputError(f"f_{s} does not vanish at the origin")
    ms = tuple(_least_pure_power(f, s) for s, f in enumerate(fs, start=1))
    return TriangularSystem(fs, ms, Fraction(normalization_scale), float(U_radius))


def _least_pure_power(f: ComplexPoly, s: int) -> int:
    pure = [e[s - 1] for e in f.terms if e[s - 1] > 0 and sum(e) == e[s - 1]]
    if not pure:
        raise NotRegularError(s)
    return min(pure)


def multiplicities(sys: TriangularSystem) -> tuple[int, ...]:
    return tuple(_least_pure_power(f, s) for s, f in enumerate(sys.fs, start=1))


class EpsilonPrediction(NamedTuple):
    epsilon: Fraction
    multiplicity: int


def epsilon_prediction(sys: TriangularSystem) -> EpsilonPrediction:
    m_I = math.prod(multiplicities(sys))
    return EpsilonPrediction(Fraction(1, 2 * m_I), m_I)


def _pure_leading(sys: TriangularSystem, s: int) -> GaussRat:
    e = [0] * sys.n
    e[s - 1] = sys.ms[s - 1]
    return sys.fs[s - 1].coefficient(e)


def _exact_sqrt(q: Fraction) -> Fraction | None:
    a, b = math.isqrt(q.numerator), math.isqrt(q.denominator)
    if a * a == q.numerator and b * b == q.denominator:
        return Fraction(a, b)
    return None


def _scale_needed(abs2: Fraction) -> Fraction:
    """Least convenient rational k >= 1 with k^2 * abs2 >= 4."""
    if abs2 >= 4:
        return Fraction(1)
    root = _exact_sqrt(abs2)
    if root is not None:
        return Fraction(2) / root
    k = Fraction(2 / math.sqrt(float(abs2))).limit_denominator(10**12)
    while k * k * abs2 < 4:
        k *= Fraction(1000001, 1000000)
    return k


def normalize(sys_raw: TriangularSystem) -> TriangularSystem:
    """Multiply every f_s by one positive rational so |coef of z_s^{m_s}| >= 2."""
    k = max(_scale_needed(_pure_leading(sys_raw, s).abs2()) for s in range(1, sys_raw.n + 1))
    fs = tuple(f.scale(k) for f in sys_raw.fs)
    return TriangularSystem(fs, sys_raw.ms, sys_raw.normalization_scale * k, sys_raw.U_radius)


@dataclass(frozen=True)
class LocalExpansion:
    """Coefficients of f_s(u + p) - f_s(p), split into pure and mixed parts.

    Row ``s - 1`` holds f_s.  ``pure[s-1][j]`` is the coefficient of u_s^j and
    ``mixed[s-1][alpha]`` the coefficient of u^alpha for alpha with
    alpha_1 + ... + alpha_{s-1} >= 1.
    """

    base_point: tuple
    pure: tuple[dict[int, object], ...]
    mixed: tuple[dict[Exponent, object], ...]
    constant: tuple
    index: tuple[int, ...]

    def row(self, s: int) -> int:
        try:
            return self.index.index(s)
        except ValueError:
            raise InvalidInputError(f"expansion has no row for s={s}") from None

    def b(self, s: int) -> dict[int, object]:
        return self.pure[self.row(s)]

    def c(self, s: int) -> dict[Exponent, object]:
        return self.mixed[self.row(s)]

    def reconstruct(self, s: int) -> dict[Exponent, object]:
        """Term map of f_s(u + p) - f_s(p) rebuilt from the split."""
        n = len(self.base_point)
        out: dict[Exponent, object] = {}
        for j, v in self.b(s).items():
            e = [0] * n
            e[s - 1] = j
            out[tuple(e)] = v
        out.update(self.c(s))
        return out


def _shift_terms(f: ComplexPoly, p: Sequence) -> tuple[dict[Exponent, object], object]:
    exact = all(_is_exact(x) for x in p)
    pt = [GaussRat.of(x) for x in p] if exact else [complex(x) for x in p]
    zero = ZERO if exact else 0j
    out: dict[Exponent, object] = {}
    for beta, c in f.terms.items():
        coef = c if exact else complex(c)
        partial: dict[Exponent, object] = {(): coef}
        for i, bi in enumerate(beta):
            nxt: dict[Exponent, object] = {}
            for k in range(bi + 1):
                factor = comb(bi, k) * pt[i] ** (bi - k)
                if not factor:
                    continue
                for e, v in partial.items():
                    nxt[e + (k,)] = v * factor
            partial = nxt
        for e, v in partial.items():
            out[e] = out.get(e, zero) + v
    const = out.pop((0,) * f.nvars, zero)
    return {e: v for e, v in out.items() if v != 0}, const


def taylor_shift(f: ComplexPoly, p: Sequence, s: int | None = None) -> LocalExpansion:
    """Recenter f at p and split f(u+p) - f(p) into pure u_s powers and mixed terms.

    ``s`` is the position of f in its triangular system (default: ``nvars``).
    Exact arithmetic is used when every coordinate of p is exact.
    """
    if len(p) != f.nvars:
        raise InvalidInputError(f"point has {len(p)} coordinates, expected {f.nvars}")
    s = f.nvars if s is None else s
    terms, const = _shift_terms(f, p)
    pure: dict[int, object] = {}
    mixed: dict[Exponent, object] = {}
    for e, v in terms.items():
        if any(e[s:]):
            raise InvalidInputError(f"term {e} depends on variables beyond z_{s}")
        if sum(e[: s - 1]) == 0:
            pure[e[s - 1]] = v
        else:
            mixed[e] = v
    return LocalExpansion(tuple(p), (dict(sorted(pure.items())),), (dict(sorted(mixed.items())),),
                          (const,), (s,))


def expand_system(sys: TriangularSystem, p: Sequence) -> LocalExpansion:
    """Local expansion of every f_s of the system at p."""
    if len(p) != sys.n:
        raise InvalidInputError(f"point has {len(p)} coordinates, expected {sys.n}")
    rows = [taylor_shift(f, p, s) for s, f in enumerate(sys.fs, start=1)]
    return LocalExpansion(tuple(p), tuple(r.pure[0] for r in rows), tuple(r.mixed[0] for r in rows),
                          tuple(r.constant[0] for r in rows), tuple(range(1, sys.n + 1)))


@dataclass(frozen=True)
class Curve:
    """Holomorphic curve through the origin of C^{n+1}, one polynomial in w per coordinate."""

    components: tuple[ComplexPoly, ...]

    def __post_init__(self):
        for i, g in enumerate(self.components, start=1):
            if g.nvars != 1:
                raise InvalidInputError(f"curve component {i} must be univariate")
            if g.coefficient((0,)):
                raise InvalidInputError(f"curve component {i} does not pass through the origin")


def contact_order(sys: TriangularSystem, curve: Curve) -> int | float:
    """Lowest total degree in (w, conj w) of r(curve(w)); ``math.inf`` if r vanishes on the curve.

    r = Re z_{n+1} + sum |f_s|^2.  The value is even whenever the last
    component is identically zero.
    """
    n = sys.n
    if len(curve.components) != n + 1:
        raise InvalidInputError(f"curve needs {n + 1} components, got {len(curve.components)}")
    pulled: dict[tuple[int, int], GaussRat] = {}

    def add(key, val):
        pulled[key] = pulled.get(key, ZERO) + val

    for e, c in curve.components[n].terms.items():
        half = c * Fraction(1, 2)
        add((e[0], 0), half)
        add((0, e[0]), half.conjugate())
    for f in sys.fs:
        h = f.substitute(curve.components[:n])
        for (a,), ca in h.terms.items():
            for (b,), cb in h.terms.items():
                add((a, b), ca * cb.conjugate())
    degrees = [a + b for (a, b), v in pulled.items() if v]
    return min(degrees) if degrees else math.inf


def rotate_curve(curve: Curve, theta: float) -> Curve:
    """Reparametrize w -> e^{i theta} w.

    cos and sin are taken as the exact binary rationals of their float values,
    so the rotation factor has modulus 1 only to double precision.  Any nonzero
    factor leaves the contact order unchanged.
    """
    rot = GaussRat(Fraction(math.cos(theta)), Fraction(math.sin(theta)))
    return Curve(tuple(ComplexPoly(1, {e: c * rot ** e[0] for e, c in g.terms.items()})
                       for g in curve.components))


# ---------------------------------------------------------------------------
# text format

def format_polynomial(f: ComplexPoly, var: str = "z") -> str:
    """Canonical exact text form, re-parseable by :func:`parse_polynomial`."""
    if not f.terms:
        return "0"
    pieces = []
    for e, c in f.terms.items():
        mono = []
        for i, k in enumerate(e, start=1):
            if k:
                name = var if f.nvars == 1 and var == "w" else f"{var}{i}"
                mono.append(name if k == 1 else f"{name}^{k}")
        coef = format_scalar(c)
        neg = coef.startswith("-")
        if neg:
            coef = coef[1:]
        if mono:
            body = "*".join(mono) if coef == "1" else coef + "*" + "*".join(mono)
        else:
            body = coef
        pieces.append(("- " if neg else "+ ") + body)
    text = " ".join(pieces)
    return text[2:] if text.startswith("+ ") else "-" + text[2:]


def format_system(sys: TriangularSystem) -> str:
    return "\n".join(format_polynomial(f) for f in sys.fs) + "\n"


class _Parser:
    """Recursive descent over one line; see README for the grammar."""

    def __init__(self, text: str, line: int, nvars: int | None, var: str):
        self.text = text
        self.pos = 0
        self.line = line
        self.nvars = nvars
        self.var = var
        self.max_index = 0

    def error(self, msg: str, pos: int | None = None):
        raise ParseError(msg, self.line, (self.pos if pos is None else pos) + 1)

    def skip(self):
        while self.pos < len(self.text) and self.text[self.pos] in " \t":
            self.pos += 1

    def peek(self) -> str:
        self.skip()
        return self.text[self.pos] if self.pos < len(self.text) else ""

    # Polynomials are built as term maps over a generous variable count and
    # trimmed afterwards.
    def parse(self) -> dict[Exponent, GaussRat]:
        terms = self.expr()
        if self.peek():
            self.error(f"unexpected character {self.peek()!r}")
        return terms

    def expr(self) -> dict[Exponent, GaussRat]:
        sign = 1
        if self.peek() in "+-":
            sign = -1 if self.text[self.pos] == "-" else 1
            self.pos += 1
        total = _tm_scale(self.term(), sign)
        while self.peek() in ("+", "-") and self.peek():
            sign = -1 if self.text[self.pos] == "-" else 1
            self.pos += 1
            total = _tm_add(total, _tm_scale(self.term(), sign))
        return total

    def term(self) -> dict[Exponent, GaussRat]:
        out = self.factor()
        while True:
            ch = self.peek()
            if ch == "*" and self.text[self.pos:self.pos + 2] != "**":
                self.pos += 1
                out = _tm_mul(out, self.factor())
            elif ch and (ch.isdigit() or ch in "(.i" or ch == self.var[0]):
                out = _tm_mul(out, self.factor())
            else:
                return out

    def factor(self) -> dict[Exponent, GaussRat]:
        base = self.atom()
        self.skip()
        if self.text.startswith("^", self.pos) or self.text.startswith("**", self.pos):
            self.pos += 1 if self.text[self.pos] == "^" else 2
            self.skip()
            start = self.pos
            while self.pos < len(self.text) and self.text[self.pos].isdigit():
                self.pos += 1
            if start == self.pos:
                self.error("expected a nonnegative integer exponent")
            k = int(self.text[start:self.pos])
            out: dict[Exponent, GaussRat] = {(): ONE}
            for _ in range(k):
                out = _tm_mul(out, base)
            return out
        return base

    def atom(self) -> dict[Exponent, GaussRat]:
        ch = self.peek()
        start = self.pos
        if ch == "(":
            self.pos += 1
            inner = self.expr()
            if self.peek() != ")":
                self.error("expected ')'")
            self.pos += 1
            return inner
        if ch and (ch.isdigit() or ch == "."):
            value = self.number()
            if self.pos < len(self.text) and self.text[self.pos] == "i":
                self.pos += 1
                return {(): GaussRat(Fraction(0), value)}
            return {(): GaussRat(value)}
        if ch == "i":
            self.pos += 1
            return {(): GaussRat(Fraction(0), Fraction(1))}
        if self.var == "w" and ch == "w":
            self.pos += 1
            self.max_index = max(self.max_index, 1)
            return {(1,): ONE}
        if self.var == "z" and ch == "z":
            self.pos += 1
            if self.text.startswith("_", self.pos):
                self.pos += 1
            d0 = self.pos
            while self.pos < len(self.text) and self.text[self.pos].isdigit():
                self.pos += 1
            if d0 == self.pos:
                self.error("expected a variable index after 'z'")
            idx = int(self.text[d0:self.pos])
            if idx < 1:
                self.error("variable indices start at 1", d0)
            if self.nvars is not None and idx > self.nvars:
                self.error(f"variable z{idx} exceeds the {self.nvars} available", start)
            self.max_index = max(self.max_index, idx)
            return {(0,) * (idx - 1) + (1,): ONE}
        self.error(f"unexpected {'end of line' if not ch else repr(ch)}")

    def number(self) -> Fraction:
        start = self.pos
        t = self.text
        while self.pos < len(t) and (t[self.pos].isdigit() or t[self.pos] == "."):
            self.pos += 1
        if self.pos < len(t) and t[self.pos] in "eE":
            save = self.pos
            self.pos += 1
            if self.pos < len(t) and t[self.pos] in "+-":
                self.pos += 1
            if self.pos < len(t) and t[self.pos].isdigit():
                while self.pos < len(t) and t[self.pos].isdigit():
                    self.pos += 1
            else:
                self.pos = save
        try:
            value = Fraction(t[start:self.pos])
        except ValueError:
            self.error(f"malformed number {t[start:self.pos]!r}", start)
        if self.pos < len(t) and t[self.pos] == "/":
            self.pos += 1
            d0 = self.pos
            while self.pos < len(t) and t[self.pos].isdigit():
                self.pos += 1
            if d0 == self.pos or int(t[d0:self.pos]) == 0:
                self.error("expected a positive integer denominator", d0)
            value /= int(t[d0:self.pos])
        return value


def _pad(e: Exponent, n: int) -> Exponent:
    return e + (0,) * (n - len(e))


def _tm_add(a, b):
    out = dict(a)
    for e, c in b.items():
        n = max(len(e), max((len(k) for k in out), default=0))
        out = {_pad(k, n): v for k, v in out.items()}
        e = _pad(e, n)
        out[e] = out.get(e, ZERO) + c
    return {k: v for k, v in out.items() if v}


def _tm_scale(a, sign):
    return {e: c * sign for e, c in a.items()}


def _tm_mul(a, b):
    out: dict[Exponent, GaussRat] = {}
    for e1, c1 in a.items():
        for e2, c2 in b.items():
            n = max(len(e1), len(e2))
            e = tuple(x + y for x, y in zip(_pad(e1, n), _pad(e2, n)))
            out[e] = out.get(e, ZERO) + c1 * c2
    n = max((len(e) for e in out), default=0)
    return {_pad(e, n): c for e, c in out.items() if c}


def _strip_comment(line: str) -> str:
    return line.split("#", 1)[0].rstrip()


def parse_polynomial(text: str, nvars: int | None = None, var: str = "z",
                     line: int = 1) -> ComplexPoly:
    """Parse one polynomial line.  ``var`` is ``"z"`` (z1, z2, ...) or ``"w"``."""
    body = _strip_comment(text)
    if not body.strip():
        raise ParseError("empty polynomial", line, 1)
    p = _Parser(body, line, nvars, var)
    terms = p.parse()
    n = nvars if nvars is not None else max(p.max_index, 1)
    return ComplexPoly(n, {_pad(e, n): c for e, c in terms.items()})


def _content_lines(text: str) -> list[tuple[int, str]]:
    return [(i, ln) for i, ln in enumerate(text.splitlines(), start=1) if _strip_comment(ln).strip()]


def parse_system(text: str, U_radius: float = 1.0) -> TriangularSystem:
    """One polynomial per non-blank line; line s (after comments) is f_s."""
    lines = _content_lines(text)
    if not lines:
        raise ParseError("no polynomials found", 1, 1)
    n = len(lines)
    fs = [parse_polynomial(body, n, "z", ln) for ln, body in lines]
    return make_system(fs, U_radius=U_radius)


def parse_curve(text: str, n: int | None = None) -> Curve:
    """n + 1 lines in the variable w, one per coordinate z_1, ..., z_{n+1}."""
    lines = _content_lines(text)
    if not lines:
        raise ParseError("no curve components found", 1, 1)
    if n is not None and len(lines) != n + 1:
        raise ParseError(f"expected {n + 1} curve components, found {len(lines)}", lines[-1][0], 1)
    return Curve(tuple(parse_polynomial(body, 1, "w", ln) for ln, body in lines))


def format_curve(curve: Curve) -> str:
    return "\n".join(format_polynomial(g, var="w") for g in curve.components) + "\n"
