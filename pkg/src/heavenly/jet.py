"""Differential polynomials and rational differential functions on a jet space.

The base manifold has coordinates t, z1, z2, z3, encoded as the integers
0, 1, 2, 3.  A jet coordinate is a dependent name plus a sorted index tuple,
so ``u_{12}`` and ``u_{21}`` share one key.  Parameters carry no derivatives.

Variables are plain tuples so they hash and compare quickly:

* parameter: ``(0, name, ())``
* jet coordinate: ``(1, dep, index)``
"""

from __future__ import annotations

import heapq
import random
import re
from contextlib import contextmanager
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Iterable, Iterator, Mapping

try:  # gmpy2 rationals are a drop-in, much faster replacement for Fraction
    from gmpy2 import mpq as Q
except ImportError:  # pragma: no cover
    from fractions import Fraction as Q

T, X1, X2, X3 = 0, 1, 2, 3
DIRECTIONS = (T, X1, X2, X3)
DIR_CHARS = "t123"
PARAM, JET = 0, 1

PARAMETERS = (
    [f"a{i}" for i in range(1, 14)]
    + [f"b{i}" for i in range(1, 5)]
    + [f"c{i}" for i in range(1, 25)]
    + ["c8p", "beta", "gamma", "lambda", "b0", "k"]
)


class JetError(Exception):
    """Base class for jet-space errors."""


class OrderOverflow(JetError):
    pass


class MissingAssignment(JetError):
    pass


class ZeroDenominator(JetError):
    pass


class RetryExhausted(JetError):
    pass


# ---------------------------------------------------------------- variables


def parse_index(index: str | Iterable[int]) -> tuple[int, ...]:
    if isinstance(index, str):
        return tuple(sorted(DIR_CHARS.index(ch) for ch in index))
    return tuple(sorted(index))


def jet_var(dep: str, index: str | Iterable[int] = ()) -> tuple:
    return (JET, dep, parse_index(index))


def param_var(name: str) -> tuple:
    return (PARAM, name, ())


def is_jet(var: tuple) -> bool:
    return var[0] == JET


def index_str(index: tuple[int, ...]) -> str:
    return "".join(DIR_CHARS[i] for i in index)


def var_name(var: tuple) -> str:
    kind, name, index = var
    if kind == PARAM or not index:
        return name
    return f"{name}_{index_str(index)}"


def _natural(name: str) -> tuple:
    return tuple(int(p) if p.isdigit() else p for p in re.split(r"(\d+)", name) if p)


_DEP_RANK = {"u": 0, "v": 1}


@lru_cache(maxsize=None)
def var_sort_key(var: tuple) -> tuple:
    """Canonical order: parameters, then jets with u < v, then by order and index."""
    kind, name, index = var
    if kind == PARAM:
        return (0, _natural(name), 0, ())
    return (1, (_DEP_RANK.get(name, 2), name), len(index), index)


@dataclass(frozen=True)
class JetSpace:
    """Prolongation settings.

    ``max_order`` bounds jet orders.  ``frozen`` lists, per dependent name,
    directions along which that symbol is constant (e.g. a function k(t, z1)
    has frozen directions {2, 3}).
    """

    max_order: int = 6
    frozen: tuple = ()

    def is_frozen(self, dep: str, direction: int) -> bool:
        for name, dirs in self.frozen:
            if name == dep:
                return direction in dirs
        return False


# a function k(t, z1) used as a jet symbol is constant along z2 and z3
DEFAULT_SPACE = JetSpace(6, (("k", (2, 3)),))


_ORDER_CAP: list = [None]


@contextmanager
def order_cap(n: int | None):
    """Temporarily lower the maximum jet order for every space."""
    old = _ORDER_CAP[0]
    _ORDER_CAP[0] = n
    _prolong.cache_clear()
    _mono_deriv.cache_clear()
    try:
        yield
    finally:
        _ORDER_CAP[0] = old
        _prolong.cache_clear()
        _mono_deriv.cache_clear()


@lru_cache(maxsize=None)
def _prolong(var: tuple, direction: int, space: JetSpace) -> tuple | None:
    kind, dep, index = var
    if kind == PARAM or space.is_frozen(dep, direction):
        return None
    limit = space.max_order if _ORDER_CAP[0] is None else min(space.max_order, _ORDER_CAP[0])
    if len(index) + 1 > limit:
        raise OrderOverflow(f"D_{DIR_CHARS[direction]}({var_name(var)}) exceeds order {limit}")
    return (JET, dep, tuple(sorted(index + (direction,))))


# ---------------------------------------------------------------- monomials


@lru_cache(maxsize=1 << 20)
def _mono_mul(a: tuple, b: tuple) -> tuple:
    if not a:
        return b
    if not b:
        return a
    d = dict(a)
    for v, e in b:
        d[v] = d.get(v, 0) + e
    return tuple(sorted(d.items()))


@lru_cache(maxsize=1 << 20)
def _mono_deriv(m: tuple, direction: int, space: JetSpace) -> tuple:
    """Total derivative of a monomial as a tuple of (monomial, integer factor)."""
    out = []
    for pos, (v, e) in enumerate(m):
        w = _prolong(v, direction, space)
        if w is None:
            continue
        rest = m[:pos] + ((v, e - 1),) + m[pos + 1:] if e > 1 else m[:pos] + m[pos + 1:]
        out.append((_mono_mul(rest, ((w, 1),)), e))
    return tuple(out)


def _mono_key_lex(m: tuple) -> tuple:
    # min of this key == lex-largest monomial (used by exact division)
    return tuple((v, -e) for v, e in m) + (((9,), 0),)


def mono_degree(m: tuple, jets_only: bool = False) -> int:
    return sum(e for v, e in m if not jets_only or v[0] == JET)


def mono_str(m: tuple) -> str:
    parts = []
    for v, e in sorted(m, key=lambda ve: var_sort_key(ve[0])):
        parts.append(var_name(v) if e == 1 else f"{var_name(v)}^{e}")
    return "*".join(parts)


@lru_cache(maxsize=1 << 18)
def mono_sort_key(m: tuple) -> tuple:
    """Graded lexicographic key over canonical variable keys (higher degree first)."""
    return (-mono_degree(m), tuple((var_sort_key(v), -e) for v, e in sorted(m, key=lambda ve: var_sort_key(ve[0]))))


# ---------------------------------------------------------------- polynomials


class DiffPolynomial:
    """Sparse polynomial with exact rational coefficients.

    Stored as a dict monomial -> coefficient with no zero entries, so two
    equal polynomials always have equal storage.
    """

    __slots__ = ("_d", "_h", "_sk")

    def __init__(self, terms: Mapping | None = None):
        d = {}
        if terms:
            for m, c in terms.items():
                c = Q(c)
                if c:
                    d[m] = c
        self._d = d
        self._h = None
        self._sk = None

    @classmethod
    def _raw(cls, d: dict) -> "DiffPolynomial":
        p = cls.__new__(cls)
        p._d = d
        p._h = None
        p._sk = None
        return p

    @classmethod
    def const(cls, c) -> "DiffPolynomial":
        c = Q(c)
        return cls._raw({(): c} if c else {})

    @classmethod
    def var(cls, v: tuple) -> "DiffPolynomial":
        return cls._raw({((v, 1),): Q(1)})

    # --- inspection
    def items(self):
        return self._d.items()

    def __len__(self) -> int:
        return len(self._d)

    def __bool__(self) -> bool:
        return bool(self._d)

    def is_zero(self) -> bool:
        return not self._d

    def is_constant(self) -> bool:
        return not self._d or (len(self._d) == 1 and () in self._d)

    def constant_value(self):
        return self._d.get((), Q(0))

    def variables(self) -> set:
        return {v for m in self._d for v, _ in m}

    def jets(self) -> set:
        return {v for v in self.variables() if v[0] == JET}

    def is_jet_free(self) -> bool:
        return all(v[0] != JET for m in self._d for v, _ in m)

    def terms(self) -> list:
        """Canonically ordered list of (monomial, coefficient)."""
        return sorted(self._d.items(), key=lambda mc: mono_sort_key(mc[0]))

    def sort_key(self) -> tuple:
        if self._sk is None:
            self._sk = tuple((mono_sort_key(m), c) for m, c in self.terms())
        return self._sk

    def leading(self):
        return self.terms()[0]

    def degree(self) -> int:
        return max((mono_degree(m) for m in self._d), default=0)

    def __eq__(self, other) -> bool:
        if isinstance(other, DiffPolynomial):
            return self._d == other._d
        if isinstance(other, (int, type(Q(0)))):
            return self._d == ({(): Q(other)} if other else {})
        return NotImplemented

    def __hash__(self) -> int:
        if self._h is None:
            self._h = hash(frozenset(self._d.items()))
        return self._h

    # --- arithmetic
    def __neg__(self) -> "DiffPolynomial":
        return DiffPolynomial._raw({m: -c for m, c in self._d.items()})

    def __add__(self, other) -> "DiffPolynomial":
        if not isinstance(other, DiffPolynomial):
            if isinstance(other, DiffRational):
                return NotImplemented
            other = DiffPolynomial.const(other)
        a, b = (self._d, other._d) if len(self._d) >= len(other._d) else (other._d, self._d)
        d = dict(a)
        for m, c in b.items():
            s = d.get(m)
            if s is None:
                d[m] = c
            else:
                s += c
                if s:
                    d[m] = s
                else:
                    del d[m]
        return DiffPolynomial._raw(d)

    __radd__ = __add__

    def __sub__(self, other) -> "DiffPolynomial":
        if not isinstance(other, DiffPolynomial):
            if isinstance(other, DiffRational):
                return NotImplemented
            other = DiffPolynomial.const(other)
        return self + (-other)

    def __rsub__(self, other) -> "DiffPolynomial":
        return (-self) + other

    def scale(self, c) -> "DiffPolynomial":
        c = Q(c)
        if not c:
            return DiffPolynomial._raw({})
        return DiffPolynomial._raw({m: v * c for m, v in self._d.items()})

    def mul_monomial(self, mono: tuple, c=1) -> "DiffPolynomial":
        c = Q(c)
        return DiffPolynomial._raw({_mono_mul(m, mono): v * c for m, v in self._d.items()})

    def __mul__(self, other) -> "DiffPolynomial":
        if not isinstance(other, DiffPolynomial):
            if isinstance(other, DiffRational):
                return NotImplemented
            return self.scale(other)
        if len(other._d) == 1:
            (m, c), = other._d.items()
            return self.mul_monomial(m, c)
        if len(self._d) == 1:
            (m, c), = self._d.items()
            return other.mul_monomial(m, c)
        d: dict = {}
        get = d.get
        for m1, c1 in self._d.items():
            for m2, c2 in other._d.items():
                m = _mono_mul(m1, m2)
                d[m] = get(m, 0) + c1 * c2
        return DiffPolynomial._raw({m: c for m, c in d.items() if c})

    __rmul__ = __mul__

    def __pow__(self, n: int) -> "DiffPolynomial":
        result = DiffPolynomial.const(1)
        base = self
        while n:
            if n & 1:
                result = result * base
            n >>= 1
            if n:
                base = base * base
        return result

    def __truediv__(self, other):
        if isinstance(other, (DiffPolynomial, DiffRational)):
            return DiffRational(self) / other
        return self.scale(1 / Q(other))

    # --- calculus
    def total_derivative(self, direction: int, space: JetSpace = DEFAULT_SPACE) -> "DiffPolynomial":
        d: dict = {}
        get = d.get
        for m, c in self._d.items():
            for m2, k in _mono_deriv(m, direction, space):
                d[m2] = get(m2, 0) + c * k
        return DiffPolynomial._raw({m: c for m, c in d.items() if c})

    def partial(self, var: tuple) -> "DiffPolynomial":
        d: dict = {}
        for m, c in self._d.items():
            for pos, (v, e) in enumerate(m):
                if v == var:
                    rest = m[:pos] + ((v, e - 1),) + m[pos + 1:] if e > 1 else m[:pos] + m[pos + 1:]
                    d[rest] = d.get(rest, 0) + c * e
                    break
        return DiffPolynomial._raw({m: c for m, c in d.items() if c})

    def coefficient_split(self, keep: Callable[[tuple], bool]) -> dict:
        """Group terms by the part of each monomial made of variables where ``keep`` is true.

        Returns a dict kept-monomial -> polynomial in the remaining variables.
        """
        groups: dict = {}
        for m, c in self._d.items():
            kept = tuple(ve for ve in m if keep(ve[0]))
            rest = tuple(ve for ve in m if not keep(ve[0]))
            g = groups.setdefault(kept, {})
            g[rest] = g.get(rest, 0) + c
        return {k: DiffPolynomial._raw({m: c for m, c in g.items() if c}) for k, g in groups.items()}

    def subs(self, mapping: Mapping) -> "DiffPolynomial":
        """Substitute polynomials for variables."""
        out = DiffPolynomial._raw({})
        cache: dict = {}
        for kept, rest in self.coefficient_split(lambda v: v in mapping).items():
            prod = DiffPolynomial.const(1)
            for v, e in kept:
                key = (v, e)
                if key not in cache:
                    cache[key] = _as_poly(mapping[v]) ** e
                prod = prod * cache[key]
            out = out + rest * prod
        return out

    def map_vars(self, fn: Callable[[tuple], tuple]) -> "DiffPolynomial":
        d: dict = {}
        for m, c in self._d.items():
            acc: dict = {}
            for v, e in m:
                w = fn(v)
                acc[w] = acc.get(w, 0) + e
            key = tuple(sorted(acc.items()))
            d[key] = d.get(key, 0) + c
        return DiffPolynomial._raw({m: c for m, c in d.items() if c})

    def evaluate(self, point) -> object:
        total = Q(0)
        for m, c in self._d.items():
            term = c
            for v, e in m:
                term *= point[v] ** e
            total += term
        return total

    def content(self):
        """Positive rational content: gcd of numerators over lcm of denominators."""
        from math import gcd

        num = 0
        den = 1
        for c in self._d.values():
            num = gcd(num, int(c.numerator))
            den = den * int(c.denominator) // gcd(den, int(c.denominator))
        return Q(num, den) if num else Q(1)

    def divide_exact(self, divisor: "DiffPolynomial") -> "DiffPolynomial | None":
        """Quotient if divisor divides self exactly, else None."""
        if divisor.is_zero():
            raise ZeroDenominator("division by the zero polynomial")
        if self.is_zero():
            return self
        lead_m = min(divisor._d, key=_mono_key_lex)
        lead_c = divisor._d[lead_m]
        lead_vars = dict(lead_m)
        rem = dict(self._d)
        heap = [(_mono_key_lex(m), m) for m in rem]
        heapq.heapify(heap)
        quot: dict = {}
        while heap:
            _, m = heapq.heappop(heap)
            c = rem.get(m)
            if not c:
                continue
            md = dict(m)
            if any(md.get(v, 0) < e for v, e in lead_vars.items()):
                return None
            shift = {v: e for v, e in md.items()}
            for v, e in lead_vars.items():
                shift[v] -= e
            qm = tuple(sorted((v, e) for v, e in shift.items() if e))
            qc = c / lead_c
            quot[qm] = qc
            for dm, dc in divisor._d.items():
                tm = _mono_mul(qm, dm)
                nv = rem.get(tm, 0) - qc * dc
                if nv:
                    if tm not in rem:
                        heapq.heappush(heap, (_mono_key_lex(tm), tm))
                    rem[tm] = nv
                else:
                    rem.pop(tm, None)
        return DiffPolynomial._raw(quot)

    def __str__(self) -> str:
        return poly_str(self)

    def __repr__(self) -> str:
        return f"DiffPolynomial({poly_str(self)!r})"


def _fmt_coeff(c) -> str:
    return str(c)


def poly_str(p: DiffPolynomial) -> str:
    if p.is_zero():
        return "0"
    out = []
    for m, c in p.terms():
        sign = "-" if c < 0 else "+"
        a = -c if c < 0 else c
        if not m:
            body = _fmt_coeff(a)
        elif a == 1:
            body = mono_str(m)
        else:
            body = f"{_fmt_coeff(a)}*{mono_str(m)}"
        out.append((sign, body))
    s = ("-" if out[0][0] == "-" else "") + out[0][1]
    for sign, body in out[1:]:
        s += f" {sign} {body}"
    return s


def _as_poly(x) -> DiffPolynomial:
    if isinstance(x, DiffPolynomial):
        return x
    if isinstance(x, DiffRational):
        if x.den:
            raise TypeError("expected a polynomial, got a proper rational function")
        return x.num
    return DiffPolynomial.const(x)


# ---------------------------------------------------------------- rational functions


def _single_var(p: DiffPolynomial):
    if len(p._d) == 1:
        (m, c), = p._d.items()
        if c == 1 and len(m) == 1 and m[0][1] == 1:
            return m[0][0]
    return None


def _split_den(p: DiffPolynomial):
    """Split a nonzero polynomial into (constant, factors) with normalized factors.

    Monomial content becomes single-variable factors; the rest is made
    primitive with a positive leading coefficient.
    """
    if p.is_zero():
        raise ZeroDenominator("zero denominator")
    mins: dict | None = None
    for m in p._d:
        md = dict(m)
        if mins is None:
            mins = md
        else:
            mins = {v: min(e, md.get(v, 0)) for v, e in mins.items() if md.get(v, 0)}
        if not mins:
            break
    factors: dict = {}
    if mins:
        inv = tuple(sorted((v, -e) for v, e in mins.items()))
        d = {}
        for m, c in p._d.items():
            d[_mono_mul_neg(m, inv)] = c
        p = DiffPolynomial._raw(d)
        for v, e in mins.items():
            factors[DiffPolynomial.var(v)] = e
    if p.is_constant():
        return p.constant_value(), factors
    cont = p.content()
    lead = p.leading()[1]
    if lead < 0:
        cont = -cont
    if cont != 1:
        p = p.scale(1 / cont)
    factors[p] = factors.get(p, 0) + 1
    return cont, factors


def _mono_mul_neg(m: tuple, inv: tuple) -> tuple:
    d = dict(m)
    for v, e in inv:
        d[v] = d.get(v, 0) + e
    return tuple(sorted((v, e) for v, e in d.items() if e))


def _den_tuple(factors: dict) -> tuple:
    return tuple(sorted(((f, e) for f, e in factors.items() if e), key=lambda fe: fe[0].sort_key()))


class DiffRational:
    """Quotient num/den of differential polynomials.

    The denominator is kept factored: a product of normalized factors (each
    primitive with positive leading coefficient) raised to positive powers,
    with any rational constant folded into the numerator.  No polynomial gcd
    is attempted beyond cancelling single-variable factors; equality is by
    cross-multiplication.
    """

    __slots__ = ("num", "den")

    def __init__(self, num=0, den=None):
        num = _as_poly(num) if not isinstance(num, DiffRational) else num
        if isinstance(num, DiffRational):
            r = num if den is None else num / den
            self.num, self.den = r.num, r.den
            return
        if den is None:
            self.num, self.den = num, ()
            return
        if isinstance(den, DiffRational):
            r = DiffRational(num) / den
            self.num, self.den = r.num, r.den
            return
        c, factors = _split_den(_as_poly(den))
        self.num = num.scale(1 / Q(c)) if c != 1 else num
        self.den = _den_tuple(factors)
        self._cancel_vars()

    @classmethod
    def _raw(cls, num: DiffPolynomial, den: tuple) -> "DiffRational":
        r = cls.__new__(cls)
        r.num = num
        r.den = den
        return r

    def _cancel_vars(self) -> None:
        if not self.den or self.num.is_zero():
            if self.num.is_zero():
                self.den = ()
            return
        changed = False
        newden = []
        num = self.num
        for f, e in self.den:
            v = _single_var(f)
            if v is not None:
                k = min(min((dict(m).get(v, 0) for m in num._d), default=0), e)
                if k:
                    num = _shift_var(num, v, -k)
                    changed = True
                    e -= k
            if e:
                newden.append((f, e))
        if changed:
            self.num = num
            self.den = tuple(newden)

    # --- inspection
    def is_zero(self) -> bool:
        return self.num.is_zero()

    def is_polynomial(self) -> bool:
        return not self.den

    @property
    def numerator(self) -> DiffPolynomial:
        return self.num

    @property
    def denominator(self) -> DiffPolynomial:
        out = DiffPolynomial.const(1)
        for f, e in self.den:
            out = out * f ** e
        return out

    def is_jet_free(self) -> bool:
        return self.num.is_jet_free() and all(f.is_jet_free() for f, _ in self.den)

    def variables(self) -> set:
        out = self.num.variables()
        for f, _ in self.den:
            out |= f.variables()
        return out

    def jets(self) -> set:
        return {v for v in self.variables() if v[0] == JET}

    def key(self) -> tuple:
        return (self.num, self.den)

    def __eq__(self, other) -> bool:
        if not isinstance(other, DiffRational):
            if isinstance(other, (DiffPolynomial, int)) or isinstance(other, type(Q(0))):
                other = DiffRational(other)
            else:
                return NotImplemented
        if self.den == other.den:
            return self.num == other.num
        return (self - other).is_zero()

    __hash__ = None

    # --- arithmetic
    def __neg__(self) -> "DiffRational":
        return DiffRational._raw(-self.num, self.den)

    def __add__(self, other) -> "DiffRational":
        other = as_rational(other)
        if other.num.is_zero():
            return self
        if self.num.is_zero():
            return other
        if self.den == other.den:
            r = DiffRational._raw(self.num + other.num, self.den)
        else:
            fa = dict(self.den)
            fb = dict(other.den)
            lcd = dict(fa)
            for f, e in fb.items():
                if e > lcd.get(f, 0):
                    lcd[f] = e
            na = _mul_factors(self.num, {f: e - fa.get(f, 0) for f, e in lcd.items()})
            nb = _mul_factors(other.num, {f: e - fb.get(f, 0) for f, e in lcd.items()})
            r = DiffRational._raw(na + nb, _den_tuple(lcd))
        r._cancel_vars()
        return r

    __radd__ = __add__

    def __sub__(self, other) -> "DiffRational":
        return self + (-as_rational(other))

    def __rsub__(self, other) -> "DiffRational":
        return as_rational(other) - self

    def __mul__(self, other) -> "DiffRational":
        if not isinstance(other, DiffRational):
            if isinstance(other, DiffPolynomial):
                r = DiffRational._raw(self.num * other, self.den)
                r._cancel_vars()
                return r
            return DiffRational._raw(self.num.scale(other), self.den if other else ())
        if not other.den:
            r = DiffRational._raw(self.num * other.num, self.den)
        elif not self.den:
            r = DiffRational._raw(self.num * other.num, other.den)
        else:
            f = dict(self.den)
            for g, e in other.den:
                f[g] = f.get(g, 0) + e
            r = DiffRational._raw(self.num * other.num, _den_tuple(f))
        r._cancel_vars()
        return r

    __rmul__ = __mul__

    def inverse(self) -> "DiffRational":
        if self.num.is_zero():
            raise ZeroDenominator("inverse of zero")
        return DiffRational(self.denominator, self.num)

    def __truediv__(self, other) -> "DiffRational":
        other = as_rational(other)
        if other.num.is_zero():
            raise ZeroDenominator("division by zero")
        c, factors = _split_den(other.num)
        mine = dict(self.den)
        for f, e in factors.items():
            mine[f] = mine.get(f, 0) + e
        num = _mul_factors(self.num, dict(other.den)).scale(1 / Q(c))
        r = DiffRational._raw(num, _den_tuple(mine))
        r._cancel_vars()
        return r

    def __rtruediv__(self, other) -> "DiffRational":
        return as_rational(other) / self

    def __pow__(self, n: int) -> "DiffRational":
        if n < 0:
            return DiffRational(1) / self ** (-n)
        num = self.num ** n
        return DiffRational._raw(num, tuple((f, e * n) for f, e in self.den) if n else ())

    # --- calculus
    def total_derivative(self, direction: int, space: JetSpace = DEFAULT_SPACE) -> "DiffRational":
        dn = self.num.total_derivative(direction, space)
        if not self.den:
            return DiffRational._raw(dn, ())
        moving = []
        fixed = []
        for f, e in self.den:
            df = f.total_derivative(direction, space)
            (moving if df else fixed).append((f, e, df))
        if not moving:
            return DiffRational._raw(dn, self.den)
        prod_all = DiffPolynomial.const(1)
        for f, _, _ in moving:
            prod_all = prod_all * f
        num = dn * prod_all
        for i, (f, e, df) in enumerate(moving):
            others = DiffPolynomial.const(1)
            for j, (g, _, _) in enumerate(moving):
                if j != i:
                    others = others * g
            num = num - self.num * df * others * e
        den = {f: e for f, e, _ in fixed}
        for f, e, _ in moving:
            den[f] = e + 1
        r = DiffRational._raw(num, _den_tuple(den))
        r._cancel_vars()
        return r

    def partial(self, var: tuple) -> "DiffRational":
        dn = self.num.partial(var)
        out = DiffRational._raw(dn, self.den)
        for f, e in self.den:
            df = f.partial(var)
            if df:
                out = out - DiffRational._raw(self.num * df * e, self.den) / f
        return out

    def evaluate(self, point):
        den = Q(1)
        for f, e in self.den:
            den *= f.evaluate(point) ** e
        if not den:
            raise ZeroDenominator("denominator vanishes at the point")
        return self.num.evaluate(point) / den

    def subs(self, mapping: Mapping) -> "DiffRational":
        """Substitute rational functions for variables."""
        out = subs_rational(self.num, mapping)
        for f, e in self.den:
            out = out / subs_rational(f, mapping) ** e
        return out

    def map_vars(self, fn) -> "DiffRational":
        out = DiffRational(self.num.map_vars(fn))
        for f, e in self.den:
            out = out / DiffRational(f.map_vars(fn)) ** e
        return out

    def reduced(self) -> "DiffRational":
        """Cancel non-monomial denominator factors that divide the numerator."""
        if not self.den or self.num.is_zero():
            return self
        num = self.num
        den = []
        for f, e in self.den:
            if _single_var(f) is None:
                while e:
                    q = num.divide_exact(f)
                    if q is None:
                        break
                    num = q
                    e -= 1
            if e:
                den.append((f, e))
        return DiffRational._raw(num, tuple(den))

    def __str__(self) -> str:
        if not self.den:
            return poly_str(self.num)
        n = poly_str(self.num)
        if len(self.num) > 1:
            n = f"({n})"
        parts = []
        for f, e in self.den:
            s = poly_str(f)
            if len(f) > 1:
                s = f"({s})"
            parts.append(s if e == 1 else f"{s}^{e}")
        d = "*".join(parts)
        if len(parts) > 1:
            d = f"({d})"
        return f"{n}/{d}"

    def __repr__(self) -> str:
        return f"DiffRational({str(self)!r})"


def _shift_var(p: DiffPolynomial, v: tuple, k: int) -> DiffPolynomial:
    d = {}
    for m, c in p._d.items():
        md = dict(m)
        md[v] = md.get(v, 0) + k
        d[tuple(sorted((w, e) for w, e in md.items() if e))] = c
    return DiffPolynomial._raw(d)


def _mul_factors(p: DiffPolynomial, factors: dict) -> DiffPolynomial:
    for f, e in factors.items():
        if e:
            v = _single_var(f)
            p = _shift_var(p, v, e) if v is not None else p * f ** e
    return p


def as_rational(x) -> DiffRational:
    if isinstance(x, DiffRational):
        return x
    return DiffRational._raw(_as_poly(x), ())


def subs_rational(p: DiffPolynomial, mapping: Mapping) -> DiffRational:
    out = DiffRational(0)
    cache: dict = {}
    groups = p.coefficient_split(lambda v: v in mapping)
    for kept, rest in groups.items():
        prod = DiffRational(rest)
        for v, e in kept:
            if (v, e) not in cache:
                cache[(v, e)] = as_rational(mapping[v]) ** e
            prod = prod * cache[(v, e)]
        out = out + prod
    return out


def total_derivative(direction: int | str, x, space: JetSpace = DEFAULT_SPACE):
    """D_dir applied to a polynomial or rational function."""
    if isinstance(direction, str):
        direction = DIR_CHARS.index(direction)
    return x.total_derivative(direction, space)


def total_derivative_multi(index: Iterable[int], x, space: JetSpace = DEFAULT_SPACE):
    for d in index:
        x = x.total_derivative(d, space)
    return x


def evaluate(x, point):
    """Exact value of a polynomial or rational function at a point."""
    if isinstance(x, (DiffPolynomial, DiffRational)):
        return x.evaluate(point)
    return Q(x)


# ---------------------------------------------------------------- parsing

_TOKEN = re.compile(r"\s*(?:(\d+)|([A-Za-z][A-Za-z0-9]*(?:_[t0-9]+)?)|(\*\*|[-+*/^()]))")

DEPENDENTS = frozenset({"u", "v"})


def parse(text: str, dependents: Iterable[str] = DEPENDENTS) -> DiffPolynomial:
    """Parse a polynomial such as ``u_tt*u_11 - u_t1^2 + 3/2*a7``."""
    deps = frozenset(dependents)
    tokens = []
    pos = 0
    text = text.strip()
    while pos < len(text):
        mt = _TOKEN.match(text, pos)
        if not mt or mt.end() == pos:
            raise ValueError(f"cannot parse {text[pos:]!r}")
        pos = mt.end()
        num, name, op = mt.groups()
        if num is not None:
            tokens.append(("num", int(num)))
        elif name is not None:
            tokens.append(("name", name))
        elif op is not None:
            tokens.append(("op", "^" if op == "**" else op))
    tokens.append(("end", None))
    i = 0

    def peek():
        return tokens[i]

    def take():
        nonlocal i
        tok = tokens[i]
        i += 1
        return tok

    def name_to_poly(name: str) -> DiffPolynomial:
        if "_" in name:
            dep, idx = name.split("_", 1)
            if dep in deps:
                return DiffPolynomial.var(jet_var(dep, idx))
            raise ValueError(f"unknown dependent in {name!r}")
        if name in deps:
            return DiffPolynomial.var(jet_var(name))
        return DiffPolynomial.var(param_var(name))

    def expr():
        node = term()
        while peek() in (("op", "+"), ("op", "-")):
            op = take()[1]
            rhs = term()
            node = node + rhs if op == "+" else node - rhs
        return node

    def term():
        node = unary()
        while peek() in (("op", "*"), ("op", "/")):
            op = take()[1]
            rhs = unary()
            if op == "*":
                node = node * rhs
            else:
                if not rhs.is_constant() or rhs.is_zero():
                    raise ValueError("division only by nonzero constants")
                node = node.scale(1 / rhs.constant_value())
        return node

    def unary():
        if peek() == ("op", "-"):
            take()
            return -unary()
        if peek() == ("op", "+"):
            take()
            return unary()
        return power()

    def power():
        base = atom()
        if peek() == ("op", "^"):
            take()
            kind, val = take()
            if kind != "num":
                raise ValueError("exponent must be an integer")
            return base ** val
        return base

    def atom():
        kind, val = take()
        if kind == "num":
            return DiffPolynomial.const(val)
        if kind == "name":
            return name_to_poly(val)
        if (kind, val) == ("op", "("):
            node = expr()
            if take() != ("op", ")"):
                raise ValueError("missing ')'")
            return node
        raise ValueError(f"unexpected token {val!r}")

    out = expr()
    if peek()[0] != "end":
        raise ValueError(f"trailing input in {text!r}")
    return out


P = parse


def U(index: str = "") -> DiffPolynomial:
    return DiffPolynomial.var(jet_var("u", index))


def V(index: str = "") -> DiffPolynomial:
    return DiffPolynomial.var(jet_var("v", index))


def C(name: str) -> DiffPolynomial:
    return DiffPolynomial.var(param_var(name))


# ---------------------------------------------------------------- on-shell reduction


class Shell:
    """Elimination rules defining an on-shell normal form.

    ``rules`` maps a dependent name to ``(k, value)``: a jet of that
    dependent whose index holds at least k copies of t is constrained.  If
    ``value`` is a string the jet is an alias, u_{tJ} -> value_J (one t
    removed); otherwise ``value`` is the rational function for the base jet
    (k copies of t) and higher jets are total derivatives of it.

    ``relations`` maps a dependent to the polynomial whose prolongations
    determine its constrained jets numerically (linear in the top jet).
    """

    def __init__(self, rules: Mapping, relations: Mapping | None = None,
                 nonvanishing: Iterable = (), space: JetSpace = DEFAULT_SPACE):
        self.rules = dict(rules)
        self.relations = dict(relations or {})
        self.nonvanishing = tuple(nonvanishing)
        self.space = space
        self._memo: dict = {}

    @classmethod
    def one_component(cls, f: DiffPolynomial, g: DiffPolynomial, nonvanishing: Iterable = (),
                      space: JetSpace = DEFAULT_SPACE) -> "Shell":
        if g.is_zero():
            raise ZeroDenominator("g vanishes identically")
        F = f - U("tt") * g
        return cls({"u": (2, DiffRational(f, g))}, {"u": F}, (g,) + tuple(nonvanishing), space)

    @classmethod
    def two_component(cls, q: DiffPolynomial, delta: DiffPolynomial, nonvanishing: Iterable = (),
                      space: JetSpace = DEFAULT_SPACE) -> "Shell":
        if delta.is_zero():
            raise ZeroDenominator("Delta vanishes identically")
        G = delta * V("t") - q
        return cls({"u": (1, "v"), "v": (1, DiffRational(q, delta))}, {"v": G},
                   (delta,) + tuple(nonvanishing), space)

    def is_constrained(self, var: tuple) -> bool:
        if var[0] != JET:
            return False
        rule = self.rules.get(var[1])
        return rule is not None and var[2].count(T) >= rule[0]

    def reduce_jet(self, var: tuple) -> DiffRational:
        if var in self._memo:
            return self._memo[var]
        _, dep, index = var
        k, value = self.rules[dep]
        if isinstance(value, str):
            idx = list(index)
            idx.remove(T)
            target = jet_var(value, idx)
            out = self.reduce_jet(target) if self.is_constrained(target) else DiffRational(DiffPolynomial.var(target))
        elif index.count(T) == k and len(index) == k:
            out = self.reduce(value)
        else:
            d = index[-1]
            idx = list(index)
            idx.remove(d)
            lower = self.reduce_jet(jet_var(dep, idx))
            out = self.reduce(lower.total_derivative(d, self.space))
        self._memo[var] = out
        return out

    def reduce(self, x) -> DiffRational:
        x = as_rational(x)
        out = self._reduce_poly(x.num)
        for f, e in x.den:
            out = out / self._reduce_poly(f) ** e
        return out

    def _reduce_poly(self, p: DiffPolynomial) -> DiffRational:
        if not any(self.is_constrained(v) for v in p.variables()):
            return DiffRational(p)
        mapping = {v: self.reduce_jet(v) for v in p.variables() if self.is_constrained(v)}
        return subs_rational(p, mapping)

    def point(self, seed: int, attempt: int = 0, fixed: Mapping | None = None) -> "OnShellPoint":
        return OnShellPoint(self, seed, attempt, fixed)


def on_shell_reduce(x, eq) -> DiffRational:
    shell = eq if isinstance(eq, Shell) else eq.shell
    return shell.reduce(x)


# ---------------------------------------------------------------- points


class JetPoint:
    """A finite assignment of exact rationals to variables."""

    def __init__(self, values: Mapping):
        self._values = {}
        for k, v in values.items():
            if isinstance(k, str):
                k = _name_to_var(k)
            self._values[k] = Q(v)

    def __getitem__(self, var: tuple):
        try:
            return self._values[var]
        except KeyError:
            raise MissingAssignment(f"no value for {var_name(var)}") from None

    def __contains__(self, var) -> bool:
        return var in self._values


def _name_to_var(name: str) -> tuple:
    p = parse(name)
    (m, _), = p.items()
    return m[0][0]


def _random_rational(rng: random.Random):
    num = rng.randint(-9, 9)
    den = 0
    while den == 0:
        den = rng.randint(-9, 9)
    return Q(num, den)


class OnShellPoint:
    """Lazily evaluated random point satisfying a Shell's relations.

    Free jets and parameters get seeded random rationals that depend only on
    (seed, attempt, variable), so the value of a coordinate never depends on
    the order of queries.  Constrained jets are solved from the prolonged
    relations.
    """

    def __init__(self, shell: Shell, seed: int, attempt: int = 0, fixed: Mapping | None = None):
        self.shell = shell
        self.seed = seed
        self.attempt = attempt
        self._values: dict = {}
        if fixed:
            for k, v in fixed.items():
                self._values[k if isinstance(k, tuple) else _name_to_var(k)] = Q(v)
        self._relations: dict = {}
        self._derived: dict = {}

    def _random(self, var: tuple):
        rng = random.Random(f"{self.seed}:{self.attempt}:{var_name(var)}:{var[0]}")
        return _random_rational(rng)

    def __getitem__(self, var: tuple):
        val = self._values.get(var)
        if val is not None:
            return val
        if var[0] == JET and len(var[2]) > self.shell.space.max_order:
            raise MissingAssignment(f"{var_name(var)} exceeds the maximum order")
        if self.shell.is_constrained(var):
            val = self._solve(var)
        else:
            val = self._random(var)
        self._values[var] = val
        return val

    def _relation(self, dep: str) -> DiffPolynomial:
        if dep not in self._relations:
            rel = self.shell.relations[dep]
            params = {v for v in rel.variables() if v[0] == PARAM}
            self._relations[dep] = rel.subs({v: DiffPolynomial.const(self[v]) for v in params})
        return self._relations[dep]

    def _derived_relation(self, dep: str, index: tuple) -> DiffPolynomial:
        key = (dep, index)
        if key not in self._derived:
            if not index:
                self._derived[key] = self._relation(dep)
            else:
                lower = self._derived_relation(dep, index[:-1])
                self._derived[key] = lower.total_derivative(index[-1], self.shell.space)
        return self._derived[key]

    def _solve(self, var: tuple):
        _, dep, index = var
        k, value = self.shell.rules[dep]
        if isinstance(value, str):
            idx = list(index)
            idx.remove(T)
            return self[jet_var(value, idx)]
        rest = list(index)
        for _ in range(k):
            rest.remove(T)
        rel = self._derived_relation(dep, tuple(rest))
        coef = rel.partial(var)
        if coef.variables() & {var}:
            raise JetError("relation is not linear in its top jet")
        remainder = rel - coef * DiffPolynomial.var(var)
        c = coef.evaluate(self)
        if not c:
            raise ZeroDenominator(f"cannot solve for {var_name(var)}")
        return -remainder.evaluate(self) / c

    def assignment(self, variables: Iterable[tuple]) -> dict:
        return {v: self[v] for v in variables}


def random_on_shell_point(eq, seed: int, max_order: int | None = None, *,
                          nonvanishing: Iterable = (), fixed: Mapping | None = None,
                          attempts: int = 100) -> OnShellPoint:
    """Seeded on-shell point with every required denominator nonzero."""
    shell = eq if isinstance(eq, Shell) else eq.shell
    if max_order is not None and max_order != shell.space.max_order:
        shell = Shell(shell.rules, shell.relations, shell.nonvanishing,
                      JetSpace(max_order, shell.space.frozen))
    checks = tuple(shell.nonvanishing) + tuple(nonvanishing)
    for attempt in range(attempts):
        pt = OnShellPoint(shell, seed, attempt, fixed)
        try:
            if all(evaluate(x, pt) != 0 for x in checks):
                return pt
        except ZeroDenominator:
            continue
    raise RetryExhausted(f"no admissible point after {attempts} attempts (seed {seed})")


def free_point(seed: int, attempt: int = 0, fixed: Mapping | None = None,
               space: JetSpace = DEFAULT_SPACE) -> OnShellPoint:
    """Random point with no relations (every coordinate free)."""
    return OnShellPoint(Shell({}, {}, (), space), seed, attempt, fixed)
