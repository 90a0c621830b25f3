"""Symmetry operators, skew factorizations, Lax pairs and index permutations."""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Mapping

from .jet import (
    JET,
    PARAM,
    DiffPolynomial,
    DiffRational,
    JetError,
    Q,
    C,
    U,
    ZeroDenominator,
    evaluate,
    jet_var,
    on_shell_reduce,
    parse,
    random_on_shell_point,
)
from .monge_ampere import LABELS, MASystem, _normalize, block, build_F, coefficient_vector, from_equation
from .operators import (
    Atom,
    D,
    DiffOperator,
    apply,
    build_L,
    commutator,
    compose,
    multiplication,
    operator_str,
)
from .report import Report
from .variational import frechet


class OutsideSubfamily(JetError):
    pass


class UnknownName(JetError):
    pass


class UnsupportedPermutation(JetError):
    pass


L = build_L

# L_ij(k) D_l - L_ij(l) D_k for each quadratic label
SYMCOND_L = {
    "a7": ("t", 1, 1, "t"), "a8": ("t", 1, 2, "t"), "a9": ("t", 1, 3, "t"),
    "a10": ("t", 2, 2, "t"), "a11": ("t", 2, 3, "t"), "a12": ("t", 3, 3, "t"),
    "c1": (1, 2, 1, "t"), "c2": (1, 3, 1, "t"), "c3": (1, 2, 2, "t"),
    "c4": (1, 2, 3, "t"), "c5": (2, 3, 2, "t"), "c6": (1, 3, 3, "t"),
    "c7": (2, 3, 3, "t"), "c8": (2, 3, 1, "t"), "c8p": (1, 3, 2, "t"),
    "c9": (1, 2, 3, 1), "c10": (2, 3, 2, 1), "c11": (2, 3, 3, 1),
    "c12": (1, 2, 2, 1), "c13": (1, 3, 3, 1), "c14": (2, 3, 3, 2),
}
SYMCOND_D = {
    "a13": ("t", "t"), "c15": ("t", 1), "c16": ("t", 2), "c17": ("t", 3),
    "c18": (1, 1), "c19": (1, 2), "c20": (1, 3), "c21": (2, 2), "c22": (2, 3), "c23": (3, 3),
}
NONQUADRATIC = [f"a{i}" for i in range(1, 7)] + [f"b{i}" for i in range(1, 5)]


def symcond_term(label: str) -> DiffOperator:
    if label in SYMCOND_L:
        i, j, k, l = SYMCOND_L[label]
        return compose(L(i, j, k), D(l)) - compose(L(i, j, l), D(k))
    if label in SYMCOND_D:
        return D(*SYMCOND_D[label])
    if label == "c24":
        return DiffOperator()
    raise OutsideSubfamily(f"{label} has no quadratic symmetry term")


def build_symmetry_operator(coeffs: Mapping) -> DiffOperator:
    """Linearization of a quadratic-subfamily equation written with L operators."""
    coeffs = _normalize(coeffs)
    bad = [l for l in NONQUADRATIC if not coeffs[l].is_zero()]
    if bad:
        raise OutsideSubfamily(f"coefficients outside the quadratic subfamily: {bad}")
    total = DiffOperator()
    for label in LABELS:
        c = coeffs[label]
        if label in NONQUADRATIC or c.is_zero():
            continue
        total = total + symcond_term(label).scale(c)
    return total


# ---------------------------------------------------------------- data types


@dataclass
class SkewFactorization:
    A1: DiffOperator
    A2: DiffOperator
    B1: DiffOperator
    B2: DiffOperator
    mu: DiffRational = field(default_factory=lambda: DiffRational(1))
    required_nonvanishing: tuple = ()

    def swapped(self) -> "SkewFactorization":
        """A_i <-> B_i; A1B2 - A2B1 changes sign, so mu does too."""
        return replace(self, A1=self.B1, A2=self.B2, B1=self.A1, B2=self.A2, mu=-self.mu)

    def product(self) -> DiffOperator:
        return compose(self.A1, self.B2) - compose(self.A2, self.B1)


@dataclass
class CatalogEntry:
    name: str
    coeffs: dict
    sf: SkewFactorization
    tag: str = ""
    params: tuple = ()
    # displayed data where it differs from the verified factorization
    printed: SkewFactorization | None = None
    printed_coeffs: dict | None = None

    @property
    def commute_identically(self) -> bool:
        """E-type entries claim [B1,B2] = 0 identically; heavenly ones only on solutions."""
        return self.name.startswith("E")

    def as_printed(self) -> "CatalogEntry":
        return replace(self, sf=self.printed or self.sf, coeffs=self.printed_coeffs or self.coeffs,
                       printed=None, printed_coeffs=None)

    @property
    def F(self) -> DiffPolynomial:
        return build_F(self.coeffs)

    def system(self) -> MASystem:
        return from_equation(self.F, tuple(DiffPolynomial.var(v) for v in self.sf.required_nonvanishing))

    def symmetry_operator(self) -> DiffOperator:
        return frechet(self.F)


@dataclass
class LaxPair:
    A1: DiffOperator
    A2: DiffOperator
    B1: DiffOperator
    B2: DiffOperator

    def X(self, i: int, lam=None) -> DiffOperator:
        lam = C("lambda") if lam is None else lam
        a, b = (self.A1, self.B1) if i == 1 else (self.A2, self.B2)
        return a.scale(lam) + b

    def degrees(self) -> dict:
        """Coefficient operators of [X1, X2] by power of lambda."""
        return {
            2: commutator(self.A1, self.A2),
            1: commutator(self.A1, self.B2) - commutator(self.A2, self.B1),
            0: commutator(self.B1, self.B2),
        }


# ---------------------------------------------------------------- catalog


def _u(idx: str) -> DiffRational:
    return DiffRational(U(idx))


def _over(jet: str, op: DiffOperator, c=1) -> DiffOperator:
    return compose(multiplication(DiffRational(c) / _u(jet)), op)


def _lin(*pairs) -> DiffOperator:
    total = DiffOperator()
    for c, op in pairs:
        total = total + op.scale(c)
    return total


def _coeffs(values: Mapping) -> dict:
    return coefficient_vector({k: (v if not isinstance(v, str) else parse(v)) for k, v in values.items()})


def _entry(name: str) -> CatalogEntry:
    c = C
    if name == "second-heavenly":
        # the displayed equation has u_t3 where its own symmetry condition,
        # factorization and Lax pair all require u_13
        coeffs = _coeffs({"a7": 1, "c16": 1, "c20": 1})
        sf = SkewFactorization(D("t"), D(1), L("t", 1, "t") - D(3), L("t", 1, 1) + D(2))
        entry = CatalogEntry(name, coeffs, sf, "second heavenly equation; displayed u_t3 read as u_13")
        entry.printed_coeffs = _coeffs({"a7": 1, "c16": 1, "c17": 1})
        return entry
    if name == "first-heavenly":
        coeffs = _coeffs({"a11": 1, "c9": -1, "c8": -1, "c24": -1})
        b1 = L("t", 2, "t") - L(1, 2, 1) - L("t", 1, 2)
        b2 = L("t", 2, 3) + L(1, 2, 3)
        sf = SkewFactorization(D("t") - D(1), D(3), b1, b2)
        entry = CatalogEntry(name, coeffs, sf, "first heavenly equation, evolutionary form; A2 sign corrected")
        entry.printed = SkewFactorization(D("t") - D(1), -D(3), b1, b2, DiffRational(-1))
        return entry
    if name == "modified-heavenly":
        coeffs = _coeffs({"a8": -1, "c20": 1})
        sf = SkewFactorization(D("t"), D(1), L("t", 2, "t") + D(3), L("t", 2, 1), DiffRational(-1))
        return CatalogEntry(name, coeffs, sf, "modified heavenly equation")
    if name == "husain":
        coeffs = _coeffs({"a13": 1, "c18": 1, "c8": 1})
        sf = SkewFactorization(D("t"), D(1), L(2, 3, "t") - D(1), L(2, 3, 1) + D("t"))
        return CatalogEntry(name, coeffs, sf, "Husain equation")
    if name == "general-heavenly":
        bg, b_g = c("beta") + c("gamma"), c("beta") - c("gamma")
        coeffs = _coeffs({"a11": -bg, "c9": bg, "c8": -b_g})
        a1, a2 = _over("23", L("t", 2, 3)), _over("23", L(1, 2, 3))
        b1 = _over("23", _lin((b_g, L("t", 3, 2)), (bg, L(1, 3, 2))))
        sf = SkewFactorization(
            a1, a2, b1,
            _over("23", _lin((bg, L("t", 3, 2)), (b_g, L(1, 3, 2)))),
            DiffRational(-1, U("23")),
            (jet_var("u", "23"),),
        )
        entry = CatalogEntry(name, coeffs, sf, "general heavenly equation; B2 completed with its L_13(2) term",
                             ("beta", "gamma"))
        entry.printed = SkewFactorization(a1, a2, b1, _over("23", L("t", 3, 2), bg),
                                          DiffRational(-1, U("23")), (jet_var("u", "23"),))
        return entry
    if name == "E1":
        labels = ("a11", "c4", "c5", "c8", "c9", "c10")
        sf = SkewFactorization(
            _over("23", L("t", 2, 3)),
            -_over("23", L(1, 2, 3)),
            _over("23", _lin((c("c4") - c("c8"), L("t", 3, 2)), (c("c9"), L(1, 3, 2)), (c("c10"), L(2, 3, 2)))),
            _over("23", _lin((c("c5"), L(2, 3, 2)), (c("c8"), L(1, 3, 2)), (c("a11"), L("t", 3, 2)))),
            DiffRational(1, U("23")),
            (jet_var("u", "23"),),
        )
    elif name == "E2":
        labels = ("a11", "c4", "c7", "c8", "c9", "c11")
        sf = SkewFactorization(
            _over("23", L("t", 3, 2)),
            -_over("23", L(1, 3, 2)),
            _over("23", _lin((c("c8"), L("t", 2, 3)), (c("c9"), L(1, 2, 3)), (c("c11"), L(2, 3, 3)))),
            _over("23", _lin((c("c4") - c("c8"), L(1, 2, 3)), (c("c7"), L(2, 3, 3)), (c("a11"), L("t", 2, 3)))),
            DiffRational(1, U("23")),
            (jet_var("u", "23"),),
        )
    elif name == "E3":
        labels = ("a8", "a10", "a11", "c7", "c8")
        sf = SkewFactorization(
            _over("t2", L(2, 3, "t")),
            -_over("t2", L("t", 2, "t")),
            _over("t2", _lin((c("a8"), L("t", 1, 2)), (c("a10"), L("t", 2, 2)), (c("a11"), L("t", 3, 2)))),
            _over("t2", _lin((c("c7"), L("t", 3, 2)), (c("c8"), L("t", 1, 2)))),
            DiffRational(1, U("t2")),
            (jet_var("u", "t2"),),
        )
    elif name == "E4":
        labels = ("a12", "c5", "c6", "c7", "c8")
        sf = SkewFactorization(
            _over("t3", L("t", 3, 3)),
            _over("t3", _lin((c("c5"), L("t", 2, 3)), (c("c8"), L("t", 1, 3)))),
            -_over("t3", L(2, 3, "t")),
            _over("t3", _lin((c("a12"), L("t", 3, "t")), (c("c6"), L(1, 3, "t")), (c("c7"), L(2, 3, "t")))),
            DiffRational(1, U("t3")),
            (jet_var("u", "t3"),),
        )
    elif name == "E5":
        labels = ("a7", "a8", "a9", "c1", "c3", "c4")
        sf = SkewFactorization(
            _over("t1", L("t", 1, "t")),
            -_over("t1", L(1, 2, "t")),
            _over("t1", _lin((c("c1"), L("t", 1, 1)), (c("c3"), L("t", 2, 1)), (c("c4"), L("t", 3, 1)))),
            _over("t1", _lin((c("a7"), L("t", 1, 1)), (c("a8"), L("t", 2, 1)), (c("a9"), L("t", 3, 1)))),
            DiffRational(1, U("t1")),
            (jet_var("u", "t1"),),
        )
    elif name == "E1-perm12":
        labels = ("a9", "c2", "c4", "c8p", "c9", "c10")
        sf = SkewFactorization(
            _over("13", L("t", 1, 3)),
            _over("13", L(1, 2, 3)),
            -_over("13", _lin((c("c4") + c("c8p"), L("t", 3, 1)), (c("c9"), L(1, 3, 1)), (c("c10"), L(2, 3, 1)))),
            _over("13", _lin((c("c2"), L(1, 3, 1)), (c("c8p"), L(2, 3, 1)), (c("a9"), L("t", 3, 1)))),
            DiffRational(1, U("13")),
            (jet_var("u", "13"),),
        )
    else:
        raise UnknownName(f"unknown catalog entry {name!r}")
    coeffs = coefficient_vector({l: "sym" for l in labels})
    return CatalogEntry(name, coeffs, sf, f"{name} Monge-Ampere system", labels)


CATALOG_NAMES = (
    "second-heavenly", "first-heavenly", "modified-heavenly", "husain", "general-heavenly",
    "E1", "E2", "E3", "E4", "E5", "E1-perm12",
)
TEN = CATALOG_NAMES[:10]


def catalog(name: str) -> CatalogEntry:
    return _entry(name)


# ---------------------------------------------------------------- checks


def _coefficients(op: DiffOperator) -> list:
    if op.words:
        raise JetError("operator with formal inverse in an on-shell check")
    return sorted(op.nf.items())


def _points(sysm: MASystem, count: int, seed: int, extra=()):
    return [random_on_shell_point(sysm.shell, seed + n, nonvanishing=extra) for n in range(count)]


def on_shell_zero(report: Report, name: str, op: DiffOperator, sysm: MASystem,
                  points: int = 0, seed: int = 0, extra=()) -> bool:
    """Symbolic on-shell zero test of every coefficient; optional numeric cross-check."""
    with report.timed(name) as box:
        bad = DiffRational(0)
        for _, c in _coefficients(op):
            r = on_shell_reduce(c, sysm.shell)
            if not r.is_zero():
                bad = r
                break
        box["ok"] = bad.is_zero()
        box["residual"] = bad
    ok = report.checks[-1].passed
    if points:
        with report.timed(name + "@points") as box:
            coeffs = [c for _, c in _coefficients(op)]
            failures = 0
            for pt in _points(sysm, points, seed, extra):
                if any(evaluate(c, pt) != 0 for c in coeffs):
                    failures += 1
            box["ok"] = failures == 0
            box["summary"] = "" if not failures else f"nonzero at {failures} of {points} points"
        ok = ok and report.checks[-1].passed
    return ok


def _identically_zero(report: Report, name: str, op: DiffOperator) -> bool:
    with report.timed(name) as box:
        box["ok"] = op.is_zero()
        if not box["ok"]:
            box["summary"] = operator_str(op)[:160]
    return report.checks[-1].passed


def check_skew_factorization(entry: CatalogEntry, points: int = 0, seed: int = 0) -> Report:
    sf = entry.sf
    sysm = entry.system()
    rep = Report()
    _identically_zero(rep, "A1A2-commute", commutator(sf.A1, sf.A2))
    bb = commutator(sf.B1, sf.B2)
    if entry.commute_identically or bb.is_zero():
        _identically_zero(rep, "B1B2-commute", bb)
    else:
        on_shell_zero(rep, "B1B2-commute", bb, sysm, points, seed)
    rep.data["B1B2_identically_zero"] = bb.is_zero()
    mixed = commutator(sf.A1, sf.B2) - commutator(sf.A2, sf.B1)
    on_shell_zero(rep, "mixed-commutator-on-shell", mixed, sysm, points, seed)
    resid = sf.product().scale(1 / sf.mu) - entry.symmetry_operator()
    on_shell_zero(rep, "factorized-equals-symmetry", resid, sysm, points, seed)
    return rep


def build_lax(sf: SkewFactorization) -> LaxPair:
    return LaxPair(sf.A1, sf.A2, sf.B1, sf.B2)


def check_lax(lax: LaxPair, eq, points: int = 0, seed: int = 0) -> Report:
    sysm = eq.system() if isinstance(eq, CatalogEntry) else eq
    rep = Report()
    for deg, op in sorted(lax.degrees().items(), reverse=True):
        on_shell_zero(rep, f"lambda^{deg}", op, sysm, points, seed)
    return rep


def recursion_relations(sf: SkewFactorization, phi=None, eq=None) -> dict:
    """Display form of A_i phi~ = B_i phi; with phi and eq also the compatibility test."""
    out = {
        "relations": [
            f"({operator_str(sf.A1)}) phi~ = ({operator_str(sf.B1)}) phi",
            f"({operator_str(sf.A2)}) phi~ = ({operator_str(sf.B2)}) phi",
        ]
    }
    if phi is not None and eq is not None:
        sysm = eq.system() if isinstance(eq, CatalogEntry) else eq
        S = eq.symmetry_operator() if isinstance(eq, CatalogEntry) else frechet(sysm.F)
        s_phi = on_shell_reduce(apply(S, phi), sysm.shell)
        lhs = on_shell_reduce(apply(sf.product(), phi), sysm.shell)
        out["is_symmetry"] = s_phi.is_zero()
        out["compatible"] = lhs.is_zero() or not s_phi.is_zero()
        out["B_phi"] = (apply(sf.B1, phi), apply(sf.B2, phi))
    return out


# ---------------------------------------------------------------- permutations

# Columns sigma(block(l)) = sum coefficient * block(m), as printed for the
# transposition 1<->2 (completed for the labels it leaves implicit) and for
# 2<->3 with the c4 column chosen so that c8' stays out of E1's image.
_MAP_12 = {
    "a1": "a1", "a2": "a3", "a3": "a2", "a4": "-a5", "a5": "-a4", "a6": "a6",
    "a7": "a10", "a8": "a8", "a9": "a11", "a10": "a7", "a11": "a9", "a12": "a12", "a13": "a13",
    "b1": "b1", "b2": "-b3", "b3": "-b2", "b4": "b4",
    "c1": "-c3", "c2": "c5", "c3": "-c1", "c4": "-c4", "c5": "c2", "c6": "c7", "c7": "c6",
    "c8": "c8p", "c8p": "c8", "c9": "-c10", "c10": "-c9", "c11": "c11", "c12": "c12",
    "c13": "c14", "c14": "c13", "c15": "c16", "c16": "c15", "c17": "c17", "c18": "c21",
    "c19": "c19", "c20": "c22", "c21": "c18", "c22": "c20", "c23": "c23", "c24": "c24",
}
_MAP_23 = {
    "a1": "a2", "a2": "a1", "a3": "a3", "a4": "a4", "a5": "-a6", "a6": "-a5",
    "a7": "a7", "a8": "a9", "a9": "a8", "a10": "a12", "a11": "a11", "a12": "a10", "a13": "a13",
    "b1": "-b2", "b2": "-b1", "b3": "b3", "b4": "b4",
    "c1": "c2", "c2": "c1", "c3": "c6", "c4": "c4+c8", "c5": "-c7", "c6": "c3", "c7": "-c5",
    "c8": "-c8", "c8p": "c4", "c9": "c9", "c10": "-c11", "c11": "-c10", "c12": "c13",
    "c13": "c12", "c14": "c14", "c15": "c15", "c16": "c17", "c17": "c16", "c18": "c18",
    "c19": "c20", "c20": "c19", "c21": "c23", "c22": "c22", "c23": "c21", "c24": "c24",
}
# names printed in the source table of the 1<->2 map; the rest are derived
PRINTED_12 = ("a7", "a10", "a9", "a11", "c1", "c3", "c2", "c5", "c6", "c7",
              "c4", "c8", "c8p", "c9", "c10", "c13", "c14")

_PERMS = {
    ((1, 2), (2, 1)): _MAP_12,
    ((2, 3), (3, 2)): _MAP_23,
}


def _perm_key(perm: Mapping) -> tuple:
    moved = tuple(sorted((_d(a), _d(b)) for a, b in perm.items() if _d(a) != _d(b)))
    return moved


def _d(x) -> int:
    return "t123".index(x) if isinstance(x, str) else int(x)


def _columns(table: Mapping) -> dict:
    out = {}
    for label, text in table.items():
        col = {}
        for part in text.replace("-", "+-").split("+"):
            if not part:
                continue
            sign = -1 if part.startswith("-") else 1
            col[part.lstrip("-")] = sign
        out[label] = col
    return out


def coefficient_map(perm: Mapping) -> dict:
    key = _perm_key(perm)
    if not key:
        return {l: {l: 1} for l in LABELS}
    table = _PERMS.get(key)
    if table is None:
        raise UnsupportedPermutation(f"no coefficient map on file for {dict(perm)}")
    return _columns(table)


def permute_var(var: tuple, perm: Mapping) -> tuple:
    if var[0] != JET:
        return var
    sigma = {_d(a): _d(b) for a, b in perm.items()}
    return (JET, var[1], tuple(sorted(sigma.get(d, d) for d in var[2])))


def permute_poly(p, perm: Mapping):
    """Index permutation of every jet (parameters untouched)."""
    return p.map_vars(lambda var: permute_var(var, perm))


def permute_operator(op: DiffOperator, perm: Mapping) -> DiffOperator:
    if op.words:
        raise UnsupportedPermutation("transport of operators with formal inverses")
    sigma = {_d(a): _d(b) for a, b in perm.items()}
    nf = {}
    for index, c in op.nf.items():
        nf[tuple(sorted(sigma.get(d, d) for d in index))] = permute_poly(c, perm)
    return DiffOperator(nf)


def apply_permutation(perm: Mapping, coeffs: Mapping) -> dict:
    """Coefficients whose equation is the index-permuted equation of ``coeffs``."""
    coeffs = _normalize(coeffs)
    cols = coefficient_map(perm)
    out = {l: DiffPolynomial() for l in LABELS}
    for label, col in cols.items():
        c = coeffs[label]
        if c.is_zero():
            continue
        for target, s in col.items():
            out[target] = out[target] + c.scale(s)
    return out


def check_f_invariance(perm: Mapping, coeffs: Mapping | None = None) -> tuple:
    """(ok, residual) for F(apply_permutation(coeffs)) == sigma F(coeffs)."""
    coeffs = coefficient_vector(symbolic=True) if coeffs is None else _normalize(coeffs)
    lhs = build_F(apply_permutation(perm, coeffs))
    rhs = permute_poly(build_F(coeffs), perm)
    resid = lhs - rhs
    return resid.is_zero(), resid


def _linear_rename(old_labels, new_values: Mapping, new_labels) -> dict:
    """Solve new = M old (linear, over Q) for the old parameter symbols."""
    import sympy

    olds = [sympy.Symbol(l) for l in old_labels]
    news = {l: sympy.Symbol("new_" + l) for l in new_labels}
    eqs = []
    for l in new_labels:
        expr = sympy.Integer(0)
        for mono, q in new_values[l].items():
            term = sympy.Rational(int(q.numerator), int(q.denominator))
            for var, e in mono:
                term *= sympy.Symbol(var[1]) ** e
            expr += term
        eqs.append(sympy.Eq(news[l], expr))
    sol = sympy.solve(eqs, olds, dict=True)
    if not sol:
        raise UnsupportedPermutation("permuted coefficients are not invertible on this entry")
    out = {}
    for s, expr in sol[0].items():
        poly = sympy.Poly(sympy.expand(expr), *news.values())
        total = DiffPolynomial()
        for powers, coef in poly.terms():
            term = DiffPolynomial.const(Q(int(coef.p), int(coef.q)))
            for (l, sym), e in zip(news.items(), powers):
                if e:
                    term = term * C(l) ** e
            total = total + term
        out[(PARAM, str(s), ())] = total
    return out


def transport_entry(entry: CatalogEntry, perm: Mapping, name: str | None = None) -> CatalogEntry:
    """Permute indices of the factorization and rename parameters to the image coefficients."""
    new = apply_permutation(perm, entry.coeffs)
    new_labels = [l for l in LABELS if not new[l].is_zero()]
    rename = _linear_rename(entry.params, new, new_labels)
    coeffs = coefficient_vector({l: "sym" for l in new_labels})

    def move(op):
        moved = permute_operator(op, perm)
        return DiffOperator({k: c.subs(rename) for k, c in moved.nf.items()})

    sf = entry.sf
    mu = permute_poly(sf.mu, perm).subs(rename)
    req = tuple(permute_var(v, perm) for v in sf.required_nonvanishing)
    moved = SkewFactorization(move(sf.A1), move(sf.A2), move(sf.B1), move(sf.B2), mu, req)
    return CatalogEntry(name or f"{entry.name}-transported", coeffs, moved, entry.tag, tuple(new_labels))


def same_factorization(a: SkewFactorization, b: SkewFactorization) -> dict:
    return {
        "A1": (a.A1 - b.A1).is_zero(),
        "A2": (a.A2 - b.A2).is_zero(),
        "B1": (a.B1 - b.B1).is_zero(),
        "B2": (a.B2 - b.B2).is_zero(),
        "mu": (a.mu - b.mu).is_zero(),
        "product": (a.product().scale(1 / a.mu) - b.product().scale(1 / b.mu)).is_zero(),
    }


__all__ = [
    "CATALOG_NAMES",
    "CatalogEntry",
    "LaxPair",
    "OutsideSubfamily",
    "SkewFactorization",
    "UnknownName",
    "UnsupportedPermutation",
    "apply_permutation",
    "build_lax",
    "build_symmetry_operator",
    "catalog",
    "check_f_invariance",
    "check_lax",
    "check_skew_factorization",
    "coefficient_map",
    "on_shell_zero",
    "permute_operator",
    "permute_poly",
    "recursion_relations",
    "same_factorization",
    "transport_entry",
]
