"""Linear differential operators with rational coefficients.

Inverse-free operators are kept in normal form: a map from a sorted tuple of
directions J to the coefficient c of ``c * D_J`` (coefficients on the left).

Formal inverses of first-order operators are uninterpreted.  An operator may
carry words ``x P^-1 y`` with one inverse each.  Words are reduced with
P P^-1 = P^-1 P = 1 only: x is divided on the right by P and y on the left,
so that neither remainder contains the lead derivative of P.  The remaining
pair is stored as a tensor over the field of constants (parameters commute
with every operator), split into jet monomials over jet denominators.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import product as iproduct
from math import comb
from typing import Iterable, Mapping

from .jet import (
    DEFAULT_SPACE,
    DIR_CHARS,
    JET,
    DiffPolynomial,
    DiffRational,
    JetError,
    JetSpace,
    Q,
    U,
    as_rational,
    jet_var,
    poly_str,
)


class InversePresent(JetError):
    """A formal inverse cannot act on values."""


class NestedInverse(JetError):
    """Products of two words with formal inverses are not represented."""


class UnsupportedInverse(JetError):
    pass


def _dir(d) -> int:
    return DIR_CHARS.index(d) if isinstance(d, str) else d


def _counts(index: tuple) -> tuple:
    return tuple(index.count(d) for d in range(4))


def _from_counts(counts: Iterable[int]) -> tuple:
    out = []
    for d, n in enumerate(counts):
        out.extend([d] * n)
    return tuple(out)


_INVERSES: dict = {}


def _rkey(r: DiffRational) -> tuple:
    return r.key()


def _split_constant(r: DiffRational) -> dict:
    """Write r as a sum of const * (jet monomial / jet denominator).

    Keys are (monomial, denominator); values are jet-free DiffRationals.
    """
    jet_den = tuple((f, e) for f, e in r.den if not f.is_jet_free())
    par_den = tuple((f, e) for f, e in r.den if f.is_jet_free())
    out = {}
    for mono, coef in r.num.coefficient_split(lambda v: v[0] == JET).items():
        term = DiffRational(DiffPolynomial._raw({mono: Q(1)}))
        for f, e in jet_den:
            term = term / DiffRational(f) ** e
        key = (term.num, term.den)
        val = DiffRational._raw(coef, par_den)
        if key in out:
            out[key] = out[key] + val
        else:
            out[key] = val
    return {k: v for k, v in out.items() if not v.is_zero()}


class DiffOperator:
    """Immutable linear differential operator."""

    __slots__ = ("nf", "words")

    def __init__(self, nf: Mapping | None = None, words: Mapping | None = None):
        self.nf = {}
        if nf:
            for k, c in nf.items():
                c = as_rational(c)
                if not c.is_zero():
                    self.nf[tuple(sorted(k))] = c
        self.words = {}
        if words:
            for k, c in words.items():
                if not c.is_zero():
                    self.words[k] = c

    # --- constructors
    @classmethod
    def zero(cls) -> "DiffOperator":
        return cls()

    @classmethod
    def identity(cls) -> "DiffOperator":
        return cls({(): DiffRational(1)})

    def is_zero(self) -> bool:
        return not self.nf and (not self.words or _words_zero(self.words))

    def is_inverse_free(self) -> bool:
        return not self.words

    def order(self) -> int:
        return max((len(k) for k in self.nf), default=0)

    # --- linear structure
    def __add__(self, other) -> "DiffOperator":
        other = as_operator(other)
        nf = dict(self.nf)
        for k, c in other.nf.items():
            nf[k] = nf[k] + c if k in nf else c
        words = dict(self.words)
        for k, c in other.words.items():
            words[k] = words[k] + c if k in words else c
        return DiffOperator(nf, words)

    __radd__ = __add__

    def __neg__(self) -> "DiffOperator":
        return DiffOperator({k: -c for k, c in self.nf.items()}, {k: -c for k, c in self.words.items()})

    def __sub__(self, other) -> "DiffOperator":
        return self + (-as_operator(other))

    def __rsub__(self, other) -> "DiffOperator":
        return as_operator(other) - self

    def __mul__(self, other) -> "DiffOperator":
        return compose(self, as_operator(other))

    def __rmul__(self, other) -> "DiffOperator":
        return compose(as_operator(other), self)

    def scale(self, r) -> "DiffOperator":
        """Left multiplication by a jet-free constant."""
        r = as_rational(r)
        if not r.is_jet_free():
            return compose(multiplication(r), self)
        return DiffOperator({k: r * c for k, c in self.nf.items()}, {k: r * c for k, c in self.words.items()})

    def __eq__(self, other) -> bool:
        try:
            other = as_operator(other)
        except TypeError:
            return NotImplemented
        return (self - other).is_zero()

    __hash__ = None

    def coefficient(self, index: Iterable = ()) -> DiffRational:
        key = tuple(sorted(_dir(d) for d in index))
        return self.nf.get(key, DiffRational(0))

    def word_terms(self) -> list:
        """Words as (x, P, y) triples of inverse-free operators with x P^-1 y."""
        out = []
        for (pkey, lkey, rkey), c in self.words.items():
            x = _basis_op(lkey).scale(c)
            y = _basis_op(rkey)
            out.append((x, _INVERSES[pkey][0], y))
        return out

    def structural_key(self) -> tuple:
        return (tuple(sorted((k, _rkey(c)) for k, c in self.nf.items())),)

    def __str__(self) -> str:
        return operator_str(self)

    def __repr__(self) -> str:
        return f"DiffOperator({operator_str(self)!r})"


def _words_zero(words: Mapping) -> bool:
    """Zero test for a sum of words x P^-1 y.

    The same tensor can be written with different coefficient keys (m/f
    versus m*g/(f*g)), so each group sharing P and both derivative indices
    is moved over a common denominator on each side and expanded in
    monomials before comparing.
    """
    groups: dict = {}
    for (pkey, lk, rk), c in words.items():
        groups.setdefault((pkey, lk[0], rk[0]), []).append((lk[1], lk[2], rk[1], rk[2], c))
    for terms in groups.values():
        lden: dict = {}
        rden: dict = {}
        for _, ld, _, rd, _ in terms:
            for f, e in ld:
                lden[f] = max(lden.get(f, 0), e)
            for f, e in rd:
                rden[f] = max(rden.get(f, 0), e)
        total: dict = {}
        lcache: dict = {}
        rcache: dict = {}
        for ln, ld, rn, rd, c in terms:
            left = lcache.get((ln, ld))
            if left is None:
                left = lcache[(ln, ld)] = _lift(ln, ld, lden).coefficient_split(_is_jet_var)
            right = rcache.get((rn, rd))
            if right is None:
                right = rcache[(rn, rd)] = _lift(rn, rd, rden).coefficient_split(_is_jet_var)
            for lm, lc in left.items():
                for rm, rc in right.items():
                    key = (lm, rm)
                    val = c * (lc * rc)
                    total[key] = total[key] + val if key in total else val
        if any(not v.is_zero() for v in total.values()):
            return False
    return True


def _is_jet_var(v) -> bool:
    return v[0] == JET


def _lift(num: DiffPolynomial, den: tuple, common: Mapping) -> DiffPolynomial:
    have = dict(den)
    for f, e in common.items():
        extra = e - have.get(f, 0)
        if extra:
            num = num * f ** extra
    return num


def _basis_op(key) -> DiffOperator:
    index, num, den = key
    return DiffOperator({index: DiffRational._raw(num, den)})


def as_operator(x) -> DiffOperator:
    if isinstance(x, DiffOperator):
        return x
    if isinstance(x, (DiffPolynomial, DiffRational, int)) or isinstance(x, type(Q(0))):
        return multiplication(x)
    raise TypeError(f"cannot convert {type(x).__name__} to an operator")


# ---------------------------------------------------------------- tree nodes


def Atom(coeff, derivs: Iterable = ()) -> DiffOperator:
    """coeff * D_J."""
    return DiffOperator({tuple(sorted(_dir(d) for d in derivs)): as_rational(coeff)})


def Sum(terms: Iterable) -> DiffOperator:
    out = DiffOperator()
    for t in terms:
        out = out + t
    return out


def Compose(*ops) -> DiffOperator:
    out = DiffOperator.identity()
    for op in ops:
        out = compose(out, as_operator(op))
    return out


def multiplication(c) -> DiffOperator:
    return Atom(c, ())


def D(*dirs) -> DiffOperator:
    return Atom(1, dirs)


# ---------------------------------------------------------------- composition


class _DerivCache:
    def __init__(self, coeff: DiffRational, space: JetSpace):
        self.space = space
        self.cache = {(): coeff}

    def get(self, index: tuple) -> DiffRational:
        r = self.cache.get(index)
        if r is None:
            r = self.get(index[:-1]).total_derivative(index[-1], self.space)
            self.cache[index] = r
        return r


def _compose_nf(a: Mapping, b: Mapping, space: JetSpace = DEFAULT_SPACE) -> dict:
    out: dict = {}
    for beta, cb in b.items():
        cache = _DerivCache(cb, space)
        for alpha, ca in a.items():
            counts = _counts(alpha)
            for ks in iproduct(*(range(n + 1) for n in counts)):
                mult = 1
                for n, k in zip(counts, ks):
                    mult *= comb(n, k)
                gamma = _from_counts(ks)
                dg = cache.get(gamma)
                if dg.is_zero():
                    continue
                rest = tuple(sorted(_from_counts(n - k for n, k in zip(counts, ks)) + beta))
                term = ca * dg
                if mult != 1:
                    term = term * mult
                out[rest] = out[rest] + term if rest in out else term
    return {k: v for k, v in out.items() if not v.is_zero()}


def compose(a: DiffOperator, b: DiffOperator) -> DiffOperator:
    a, b = as_operator(a), as_operator(b)
    if a.words and b.words:
        raise NestedInverse("composition of two operators with formal inverses")
    parts = [DiffOperator(_compose_nf(a.nf, b.nf))]
    if b.words:
        left = DiffOperator(a.nf)
        grouped: dict = {}
        for (pkey, lkey, rkey), c in b.words.items():
            grouped.setdefault((pkey, rkey), []).append(_basis_op(lkey).scale(c))
        for (pkey, rkey), xs in grouped.items():
            x = compose(left, sum_operators(xs))
            parts.append(_make_word(x, _INVERSES[pkey][0], _basis_op(rkey)))
    if a.words:
        right = DiffOperator(b.nf)
        grouped = {}
        for (pkey, lkey, rkey), c in a.words.items():
            grouped.setdefault((pkey, lkey), []).append(_basis_op(rkey).scale(c))
        for (pkey, lkey), ys in grouped.items():
            y = compose(sum_operators(ys), right)
            parts.append(_make_word(_basis_op(lkey), _INVERSES[pkey][0], y))
    return sum_operators(parts)


def commutator(a, b) -> DiffOperator:
    return compose(a, b) - compose(b, a)


# ---------------------------------------------------------------- adjoint


def adjoint(op: DiffOperator) -> DiffOperator:
    """Formal adjoint (integration by parts)."""
    op = as_operator(op)
    parts = []
    for index, c in op.nf.items():
        sign = -1 if len(index) % 2 else 1
        parts.append(DiffOperator(_compose_nf({index: DiffRational(sign)}, {(): c})))
    # x1 P^-1 y + x2 P^-1 y = (x1 + x2) P^-1 y, so group words by (P, y)
    grouped: dict = {}
    for (pkey, lkey, rkey), c in op.words.items():
        grouped.setdefault((pkey, rkey), []).append(_basis_op(lkey).scale(c))
    p_adj: dict = {}
    for (pkey, rkey), xs in grouped.items():
        if pkey not in p_adj:
            p_adj[pkey] = adjoint(_INVERSES[pkey][0])
        x = sum_operators(xs)
        parts.append(_make_word(adjoint(_basis_op(rkey)), p_adj[pkey], adjoint(x)))
    return sum_operators(parts)


def sum_operators(ops: Iterable) -> DiffOperator:
    """Sum of many operators with one normalization pass."""
    nf: dict = {}
    words: dict = {}
    for op in ops:
        for k, c in op.nf.items():
            nf[k] = nf[k] + c if k in nf else c
        for k, c in op.words.items():
            words[k] = words[k] + c if k in words else c
    return DiffOperator(nf, words)


# ---------------------------------------------------------------- formal inverses


def _lead(p: DiffOperator) -> int:
    firsts = [k[0] for k in p.nf if len(k) == 1]
    if not firsts:
        raise UnsupportedInverse("operator has no first-order part")
    return min(firsts)


def _normalize_inverse(p: DiffOperator):
    """(scale, normalized P, key) with P = scale * normalized."""
    if p.words or p.order() != 1:
        raise UnsupportedInverse("formal inverses are limited to inverse-free first-order operators")
    lead = _lead(p)
    lam = p.nf[(lead,)].num.leading()[1]
    pn = p.scale(1 / lam) if lam != 1 else p
    key = (lead,) + tuple(sorted((k, _rkey(c)) for k, c in pn.nf.items()))
    _INVERSES.setdefault(key, (pn, lead))
    return lam, pn, key


def _right_divide(a: DiffOperator, p: DiffOperator, lead: int):
    """a = quotient * p + remainder, remainder free of D_lead."""
    plead = p.nf[(lead,)]
    quotient = DiffOperator()
    rem = DiffOperator(a.nf)
    while True:
        cands = [k for k in rem.nf if lead in k]
        if not cands:
            return quotient, rem
        top = max(cands, key=lambda k: (len(k), k.count(lead), k))
        idx = list(top)
        idx.remove(lead)
        q = Atom(rem.nf[top] / plead, idx)
        quotient = quotient + q
        rem = rem - compose(q, p)


def _left_divide(b: DiffOperator, p: DiffOperator, lead: int):
    """b = p * quotient + remainder, remainder free of D_lead."""
    plead = p.nf[(lead,)]
    quotient = DiffOperator()
    rem = DiffOperator(b.nf)
    while True:
        cands = [k for k in rem.nf if lead in k]
        if not cands:
            return quotient, rem
        top = max(cands, key=lambda k: (len(k), k.count(lead), k))
        idx = list(top)
        idx.remove(lead)
        q = Atom(rem.nf[top] / plead, idx)
        quotient = quotient + q
        rem = rem - compose(p, q)


def _make_word(x: DiffOperator, p: DiffOperator, y: DiffOperator) -> DiffOperator:
    """Canonical form of x P^-1 y for inverse-free x, y."""
    if x.words or y.words:
        raise NestedInverse("nested formal inverses")
    if x.is_zero() or y.is_zero():
        return DiffOperator()
    if p.order() == 0:
        return compose(compose(x, multiplication(1 / p.coefficient(()))), y)
    lam, pn, pkey = _normalize_inverse(p)
    lead = pkey[0]
    qx, xr = _right_divide(x, pn, lead)
    qy, yr = _left_divide(y, pn, lead)
    result = compose(qx, y) + compose(xr, qy)
    if lam != 1:
        result = result.scale(1 / lam)
    words: dict = {}
    inv_lam = 1 / Q(lam)
    lefts = []
    for index, c in xr.nf.items():
        for (num, den), val in _split_constant(c).items():
            lefts.append(((index, num, den), val))
    rights = []
    for index, c in yr.nf.items():
        for (num, den), val in _split_constant(c).items():
            rights.append(((index, num, den), val))
    for lk, lv in lefts:
        for rk, rv in rights:
            k = (pkey, lk, rk)
            val = lv * rv * inv_lam
            words[k] = words[k] + val if k in words else val
    return result + DiffOperator(words=words)


def InverseAtom(p) -> DiffOperator:
    """Formal inverse P^-1 (exact reciprocal when P is a multiplication)."""
    p = as_operator(p)
    if p.words:
        raise UnsupportedInverse("inverse of an operator that already contains an inverse")
    if p.order() == 0:
        c = p.coefficient(())
        if c.is_zero():
            raise UnsupportedInverse("inverse of the zero operator")
        return multiplication(1 / c)
    one = DiffOperator.identity()
    return _make_word(one, p, one)


# ---------------------------------------------------------------- action


def apply(op: DiffOperator, x, space: JetSpace = DEFAULT_SPACE) -> DiffRational:
    op = as_operator(op)
    if op.words:
        raise InversePresent("cannot apply an operator containing a formal inverse")
    x = as_rational(x)
    cache = _DerivCache(x, space)
    total = DiffRational(0)
    for index, c in sorted(op.nf.items()):
        total = total + c * cache.get(index)
    return total


# ---------------------------------------------------------------- matrices


@dataclass
class OperatorMatrix2x2:
    e11: DiffOperator
    e12: DiffOperator
    e21: DiffOperator
    e22: DiffOperator

    @classmethod
    def of(cls, rows) -> "OperatorMatrix2x2":
        (a, b), (c, d) = rows
        return cls(as_operator(a), as_operator(b), as_operator(c), as_operator(d))

    def rows(self):
        return ((self.e11, self.e12), (self.e21, self.e22))

    def entries(self) -> dict:
        return {"11": self.e11, "12": self.e12, "21": self.e21, "22": self.e22}

    def __matmul__(self, other: "OperatorMatrix2x2") -> "OperatorMatrix2x2":
        a = self.rows()
        b = other.rows()
        out = [[compose(a[i][0], b[0][j]) + compose(a[i][1], b[1][j]) for j in range(2)] for i in range(2)]
        return OperatorMatrix2x2.of(out)

    def __add__(self, other: "OperatorMatrix2x2") -> "OperatorMatrix2x2":
        return OperatorMatrix2x2(self.e11 + other.e11, self.e12 + other.e12,
                                 self.e21 + other.e21, self.e22 + other.e22)

    def __neg__(self) -> "OperatorMatrix2x2":
        return OperatorMatrix2x2(-self.e11, -self.e12, -self.e21, -self.e22)

    def __sub__(self, other: "OperatorMatrix2x2") -> "OperatorMatrix2x2":
        return self + (-other)

    def adjoint(self) -> "OperatorMatrix2x2":
        return OperatorMatrix2x2(adjoint(self.e11), adjoint(self.e21), adjoint(self.e12), adjoint(self.e22))

    def is_zero(self) -> bool:
        return all(e.is_zero() for e in (self.e11, self.e12, self.e21, self.e22))

    def apply(self, column) -> tuple:
        phi, psi = column
        return (apply(self.e11, phi) + apply(self.e12, psi), apply(self.e21, phi) + apply(self.e22, psi))


# ---------------------------------------------------------------- L operators


def build_L(i, j, k) -> DiffOperator:
    """u_jk D_i - u_ik D_j."""
    i, j, k = _dir(i), _dir(j), _dir(k)
    return Atom(U((j, k)), (i,)) - Atom(U((i, k)), (j,))


def _ujet(*idx) -> DiffPolynomial:
    return DiffPolynomial.var(jet_var("u", tuple(_dir(d) for d in idx)))


U_ = _ujet


def verify_L_identities(i, j, k, l) -> dict:
    """Residuals of the three L-operator identity families (all zero when they hold)."""
    i, j, k, l = (_dir(x) for x in (i, j, k, l))
    L = build_L
    cyclic = L(i, j, k) + L(k, i, j) + L(j, k, i)
    second = (compose(D(l), L(i, j, k)) - compose(D(k), L(i, j, l))
              - compose(L(i, j, k), D(l)) + compose(L(i, j, l), D(k)))
    third = compose(L(i, j, l), D(k)) + compose(L(j, k, l), D(i)) + compose(L(k, i, l), D(j))
    return {"cyclic": cyclic, "commuted": second, "mixed": third}


def factorization_relation(variant: int, i, j, k, l, *, with_inverse_factor: bool = True):
    """(lhs, rhs, claimed residual) for the four L-relations, lhs == rhs + residual.

    ``with_inverse_factor=False`` drops the 1/u middle factor from the
    product term (negative control).
    """
    i, j, k, l = (_dir(x) for x in (i, j, k, l))
    L = build_L
    lhs = compose(L(i, j, k), D(l)) - compose(L(i, j, l), D(k))
    minor = U_(j, k) * U_(i, l) - U_(i, k) * U_(j, l)

    def mid(a, b):
        return multiplication(DiffRational(1, U_(a, b)) if with_inverse_factor else DiffRational(1))

    def resid(outer, a, b, inner):
        return Compose(D(outer), multiplication(DiffRational(minor, U_(a, b))), D(inner))

    if variant == 1:
        rhs = Compose(L(i, j, k), mid(j, k), L(l, k, j))
        claimed = resid(j, j, k, k)
    elif variant == 2:
        rhs = Compose(L(l, k, j), mid(j, k), L(i, j, k))
        claimed = resid(k, j, k, j)
    elif variant == 3:
        rhs = Compose(L(i, j, l), mid(j, l), L(l, k, j))
        claimed = resid(j, j, l, l)
    elif variant == 4:
        rhs = Compose(L(l, i, j), mid(i, j), L(k, j, i)) - Compose(L(k, i, j), mid(i, j), L(l, j, i))
        claimed = resid(i, i, j, j)
    else:
        raise ValueError(f"unknown relation variant {variant}")
    return lhs, rhs, claimed


# ---------------------------------------------------------------- Euler operator


def euler(p, dep: str, space: JetSpace = DEFAULT_SPACE):
    """Variational derivative sum_J (-D)_J dp/du_J for dependent ``dep``."""
    p = as_rational(p) if not isinstance(p, DiffPolynomial) else p
    total = DiffPolynomial() if isinstance(p, DiffPolynomial) else DiffRational(0)
    for var in sorted(p.jets(), key=lambda v: v[2]):
        if var[1] != dep:
            continue
        term = p.partial(var)
        for d in var[2]:
            term = -term.total_derivative(d, space)
        total = total + term
    return total


def divergence_test(p, dependents: Iterable[str] = ("u", "v"), space: JetSpace = DEFAULT_SPACE) -> bool:
    """True iff p is a total divergence (all variational derivatives vanish)."""
    for dep in dependents:
        if not _is_zero(euler(p, dep, space)):
            return False
    return True


def _is_zero(x) -> bool:
    return x.is_zero()


# ---------------------------------------------------------------- display


def _dstr(index: tuple) -> str:
    if not index:
        return ""
    parts = []
    for d in range(4):
        n = index.count(d)
        if n:
            parts.append(f"D{DIR_CHARS[d]}" + (f"^{n}" if n > 1 else ""))
    return "*".join(parts)


def _nf_terms(nf: Mapping) -> list:
    return sorted(nf.items(), key=lambda kc: (-len(kc[0]), kc[0]))


def operator_str(op: DiffOperator) -> str:
    pieces = []
    for index, c in _nf_terms(op.nf):
        cs = str(c)
        ds = _dstr(index)
        if not ds:
            pieces.append(f"({cs})" if " " in cs else cs)
        elif cs == "1":
            pieces.append(ds)
        elif cs == "-1":
            pieces.append(f"-{ds}")
        else:
            pieces.append(f"({cs})*{ds}" if " " in cs else f"{cs}*{ds}")
    for x, p, y in sorted(op.word_terms(), key=lambda t: (operator_str(t[0]), operator_str(t[2]))):
        pieces.append(f"({operator_str(x)})*inv({operator_str(p)})*({operator_str(y)})")
    if not pieces:
        return "0"
    out = pieces[0]
    for s in pieces[1:]:
        out += f" - {s[1:]}" if s.startswith("-") else f" + {s}"
    return out
