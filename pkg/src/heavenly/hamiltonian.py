"""Dirac constraints, the Poisson matrix K, its two-form, J0 and the first Hamiltonian."""

from __future__ import annotations

import itertools
import time
from dataclasses import dataclass, field
from typing import Mapping

from .jet import (
    JET,
    DiffPolynomial,
    DiffRational,
    Q,
    U,
    V,
    jet_var,
    parse,
    var_sort_key,
)
from .monge_ampere import (
    A_LABELS,
    LABELS,
    MASystem,
    _normalize,
    block,
    build_two_component,
    delta_part,
    q_part,
    single,
)
from .operators import (
    Atom,
    DiffOperator,
    OperatorMatrix2x2,
    adjoint,
    apply,
    divergence_test,
    euler,
    multiplication,
)
from .report import Report
from .variational import _spatial_block, frechet, two_component_lagrangian

# ---------------------------------------------------------------- transcribed tables


def _op(terms) -> DiffOperator:
    out = DiffOperator()
    for coeff, dirs in terms:
        out = out + Atom(parse(coeff), dirs)
    return out


K11_TABLE = {
    "a1": [("2*(v_1*u_22 - v_2*u_12)", "1"), ("2*(v_2*u_11 - v_1*u_12)", "2"),
           ("v_11*u_22 + v_22*u_11 - 2*v_12*u_12", "")],
    "a2": [("2*(v_1*u_33 - v_3*u_13)", "1"), ("2*(v_3*u_11 - v_1*u_13)", "3"),
           ("v_11*u_33 + v_33*u_11 - 2*v_13*u_13", "")],
    "a3": [("2*(v_2*u_33 - v_3*u_23)", "2"), ("2*(v_3*u_22 - v_2*u_23)", "3"),
           ("v_22*u_33 + v_33*u_22 - 2*v_23*u_23", "")],
    "a4": [("2*v_1*u_23 - v_2*u_13 - v_3*u_12", "1"), ("v_3*u_11 - v_1*u_13", "2"),
           ("v_2*u_11 - v_1*u_12", "3"), ("v_11*u_23 + v_23*u_11 - v_12*u_13 - v_13*u_12", "")],
    "a5": [("v_2*u_23 - v_3*u_22", "1"), ("v_1*u_23 - 2*v_2*u_13 + v_3*u_12", "2"),
           ("v_2*u_12 - v_1*u_22", "3"), ("v_12*u_23 + v_23*u_12 - v_13*u_22 - v_22*u_13", "")],
    "a6": [("v_2*u_33 - v_3*u_23", "1"), ("v_1*u_33 - v_3*u_13", "2"),
           ("2*v_3*u_12 - v_1*u_23 - v_2*u_13", "3"), ("v_12*u_33 + v_33*u_12 - v_13*u_23 - v_23*u_13", "")],
    "a7": [("2*v_1", "1"), ("v_11", "")],
    "a8": [("v_2", "1"), ("v_1", "2"), ("v_12", "")],
    "a9": [("v_3", "1"), ("v_1", "3"), ("v_13", "")],
    "a10": [("2*v_2", "2"), ("v_22", "")],
    "a11": [("v_3", "2"), ("v_2", "3"), ("v_23", "")],
    "a12": [("2*v_3", "3"), ("v_33", "")],
    "a13": [],
    "b1": [("u_13*u_22 - u_12*u_23", "1"), ("u_11*u_23 - u_12*u_13", "2"), ("-(u_11*u_22 - u_12^2)", "3")],
    "b2": [("u_13*u_23 - u_12*u_33", "1"), ("u_11*u_33 - u_13^2", "2"), ("-(u_11*u_23 - u_12*u_13)", "3")],
    "b3": [("-(u_22*u_33 - u_23^2)", "1"), ("u_12*u_33 - u_13*u_23", "2"), ("-(u_12*u_23 - u_13*u_22)", "3")],
    "c1": [("u_11", "2"), ("-u_12", "1")],
    "c2": [("u_11", "3"), ("-u_13", "1")],
    "c3": [("u_12", "2"), ("-u_22", "1")],
    "c4": [("u_13", "2"), ("-u_23", "1")],
    "c5": [("u_22", "3"), ("-u_23", "2")],
    "c6": [("u_13", "3"), ("-u_33", "1")],
    "c7": [("u_23", "3"), ("-u_33", "2")],
    "c8": [("u_12", "3"), ("-u_13", "2")],
    "c8p": [("u_12", "3"), ("-u_23", "1")],
    "c15": [("-1", "1")],
    "c16": [("-1", "2")],
    "c17": [("-1", "3")],
}

K12_TABLE = {
    "a1": "-(u_11*u_22 - u_12^2)",
    "a2": "-(u_11*u_33 - u_13^2)",
    "a3": "-(u_22*u_33 - u_23^2)",
    "a4": "-(u_11*u_23 - u_12*u_13)",
    "a5": "-(u_12*u_23 - u_13*u_22)",
    "a6": "-(u_12*u_33 - u_13*u_23)",
    "a7": "-u_11", "a8": "-u_12", "a9": "-u_13", "a10": "-u_22", "a11": "-u_23", "a12": "-u_33",
    "a13": "-1",
}


def table_K11(label: str) -> DiffOperator:
    return _op(K11_TABLE.get(label, []))


def table_K12(label: str) -> DiffPolynomial:
    return parse(K12_TABLE.get(label, "0"))


# two-form tables: lists of (coefficient, first generator, second generator);
# a generator is (dependent, index string)
_du = ("u", "")
_dv = ("v", "")
_d1, _d2, _d3 = ("u", "1"), ("u", "2"), ("u", "3")
OMEGA_TABLE = {
    "a1": [("v_1*u_22 - v_2*u_12", _du, _d1), ("v_2*u_11 - v_1*u_12", _du, _d2),
           ("-(u_11*u_22 - u_12^2)", _du, _dv)],
    "a2": [("v_1*u_33 - v_3*u_13", _du, _d1), ("v_3*u_11 - v_1*u_13", _du, _d3),
           ("-(u_11*u_33 - u_13^2)", _du, _dv)],
    "a3": [("v_2*u_33 - v_3*u_23", _du, _d2), ("v_3*u_22 - v_2*u_23", _du, _d3),
           ("-(u_22*u_33 - u_23^2)", _du, _dv)],
    "a4": [("(2*v_1*u_23 - v_2*u_13 - v_3*u_12)/2", _du, _d1), ("(v_3*u_11 - v_1*u_13)/2", _du, _d2),
           ("(v_2*u_11 - v_1*u_12)/2", _du, _d3), ("-(u_11*u_23 - u_12*u_13)", _du, _dv)],
    "a5": [("(-2*v_2*u_13 + v_1*u_23 + v_3*u_12)/2", _du, _d2), ("(v_2*u_12 - v_1*u_22)/2", _du, _d3),
           ("(v_2*u_23 - v_3*u_22)/2", _du, _d1), ("-(u_12*u_23 - u_13*u_22)", _du, _dv)],
    "a6": [("(2*v_3*u_12 - v_1*u_23 - v_2*u_13)/2", _du, _d3), ("(v_1*u_33 - v_3*u_13)/2", _du, _d2),
           ("(v_2*u_33 - v_3*u_23)/2", _du, _d1), ("-(u_12*u_33 - u_13*u_23)", _du, _dv)],
    "a7": [("v_1", _du, _d1), ("-u_11", _du, _dv)],
    "a8": [("v_1/2", _du, _d2), ("v_2/2", _du, _d1), ("-u_12", _du, _dv)],
    "a9": [("v_1/2", _du, _d3), ("v_3/2", _du, _d1), ("-u_13", _du, _dv)],
    "a10": [("v_2", _du, _d2), ("-u_22", _du, _dv)],
    "a11": [("v_3/2", _du, _d2), ("v_2/2", _du, _d3), ("-u_23", _du, _dv)],
    "a12": [("v_3", _du, _d3), ("-u_33", _du, _dv)],
    "a13": [("1", _du, _dv)],
    "b1": [("(u_13*u_22 - u_12*u_23)/2", _du, _d1), ("(u_11*u_23 - u_12*u_13)/2", _du, _d2),
           ("-(u_11*u_22 - u_12^2)/2", _du, _d3)],
    "b2": [("(u_13*u_23 - u_12*u_33)/2", _du, _d1), ("(u_11*u_33 - u_13^2)/2", _du, _d2),
           ("-(u_11*u_23 - u_12*u_13)/2", _du, _d3)],
    "b3": [("(u_23^2 - u_22*u_33)/2", _du, _d1), ("(u_12*u_33 - u_13*u_23)/2", _du, _d2),
           ("-(u_12*u_23 - u_13*u_22)/2", _du, _d3)],
    "c1": [("u_11/2", _du, _d2), ("-u_12/2", _du, _d1)],
    "c2": [("u_11/2", _du, _d3), ("-u_13/2", _du, _d1)],
    "c3": [("u_12/2", _du, _d2), ("-u_22/2", _du, _d1)],
    "c4": [("u_13/2", _du, _d2), ("-u_23/2", _du, _d1)],
    "c5": [("u_22/2", _du, _d3), ("-u_23/2", _du, _d2)],
    "c6": [("u_13/2", _du, _d3), ("-u_33/2", _du, _d1)],
    "c7": [("u_23/2", _du, _d3), ("-u_33/2", _du, _d2)],
    "c8": [("u_12/2", _du, _d3), ("-u_13/2", _du, _d2)],
    "c8p": [("u_12/2", _du, _d3), ("-u_23/2", _du, _d1)],
    "c15": [("-1/2", _du, _d1)],
    "c16": [("-1/2", _du, _d2)],
    "c17": [("-1/2", _du, _d3)],
}


# ---------------------------------------------------------------- constraint density and K


def build_constraint_W(coeffs: Mapping) -> DiffPolynomial:
    """Momentum density W with Phi_u = pi_u - W."""
    coeffs = _normalize(coeffs)
    v = V()
    total = DiffPolynomial()
    for label in A_LABELS:
        if not coeffs[label].is_zero():
            total = total + v * delta_part(label) * coeffs[label]
    groups = [(("b1", "b2", "b3"), Q(1, 4)),
              (("c1", "c2", "c3", "c4", "c5", "c6", "c7", "c8", "c8p"), Q(1, 3)),
              (("c15", "c16", "c17"), Q(1, 2))]
    for labels, w in groups:
        for label in labels:
            if not coeffs[label].is_zero():
                total = total + _spatial_block(label) * coeffs[label] * w
    return total


@dataclass
class PoissonMatrixK:
    K11: DiffOperator
    K12: DiffPolynomial
    per_term_K11: dict = field(default_factory=dict)
    per_term_K12: dict = field(default_factory=dict)

    def matrix(self) -> OperatorMatrix2x2:
        k12 = multiplication(self.K12)
        return OperatorMatrix2x2(self.K11, k12, -k12, DiffOperator())


def _derive(W: DiffPolynomial) -> tuple:
    lin = frechet(W, "u")
    K11 = adjoint(lin) - lin
    K12 = -W.partial(jet_var("v"))
    return K11, K12


def derive_K(W: DiffPolynomial | Mapping, per_term: bool = False) -> PoissonMatrixK:
    """K11 = D_W* - D_W (in u), K12 = -dW/dv.

    ``W`` may also be a coefficient mapping, in which case per-term entries
    can be requested.
    """
    coeffs = None
    if not isinstance(W, DiffPolynomial):
        coeffs = _normalize(W)
        W = build_constraint_W(coeffs)
    K11, K12 = _derive(W)
    result = PoissonMatrixK(K11, K12)
    if per_term and coeffs is not None:
        for label in LABELS:
            if not coeffs[label].is_zero():
                k11, k12 = _derive(build_constraint_W(single(label)))
                result.per_term_K11[label] = k11
                result.per_term_K12[label] = k12
    return result


def label_K(label: str) -> tuple:
    return _derive(build_constraint_W(single(label)))


# ---------------------------------------------------------------- graded two-forms


def _gen(dep: str, index) -> tuple:
    return jet_var(dep, index)


def _gen_key(g: tuple) -> tuple:
    return var_sort_key(g)


class Form:
    """Differential form with anticommuting generators dW_J (W a dependent)."""

    __slots__ = ("terms",)

    def __init__(self, terms: Mapping | None = None):
        self.terms = {k: c for k, c in (terms or {}).items() if not c.is_zero()}

    @staticmethod
    def _canon(gens: tuple):
        keyed = [(_gen_key(g), g) for g in gens]
        sign = 1
        arr = list(keyed)
        for i in range(len(arr)):
            for j in range(len(arr) - 1 - i):
                if arr[j][0] > arr[j + 1][0]:
                    arr[j], arr[j + 1] = arr[j + 1], arr[j]
                    sign = -sign
                elif arr[j][0] == arr[j + 1][0]:
                    return 0, ()
        for a, b in zip(arr, arr[1:]):
            if a[0] == b[0]:
                return 0, ()
        return sign, tuple(g for _, g in arr)

    @classmethod
    def basis(cls, coeff, *gens) -> "Form":
        sign, key = cls._canon(tuple(gens))
        if not sign:
            return cls()
        c = coeff if isinstance(coeff, DiffPolynomial) else DiffPolynomial.const(coeff)
        return cls({key: c * sign})

    def __add__(self, other: "Form") -> "Form":
        d = dict(self.terms)
        for k, c in other.terms.items():
            d[k] = d[k] + c if k in d else c
        return Form(d)

    def __sub__(self, other: "Form") -> "Form":
        return self + other.scale(-1)

    def scale(self, c) -> "Form":
        return Form({k: v * c for k, v in self.terms.items()})

    def is_zero(self) -> bool:
        return not self.terms

    def degree(self) -> int:
        return max((len(k) for k in self.terms), default=0)

    def exterior_derivative(self) -> "Form":
        out = Form()
        for gens, c in self.terms.items():
            for var in c.jets():
                dc = c.partial(var)
                out = out + Form.basis(dc, var, *gens)
        return out

    def pair(self, slots) -> DiffPolynomial:
        """Evaluate on vector fields with characteristics ``slots``.

        ``slots`` is a list of dicts dependent -> test symbol name; the
        generator dW_J evaluates to the jet (symbol)_J.
        """
        total = DiffPolynomial()
        n = len(slots)
        for gens, c in self.terms.items():
            if len(gens) != n:
                raise ValueError("form degree does not match the number of slots")
            for perm in itertools.permutations(range(n)):
                sign = _perm_sign(perm)
                prod = c * sign
                for g, slot in zip(gens, perm):
                    _, dep, index = g
                    prod = prod * DiffPolynomial.var(jet_var(slots[slot][dep], index))
                total = total + prod
        return total

    def __eq__(self, other) -> bool:
        return isinstance(other, Form) and (self - other).is_zero()

    __hash__ = None


def _perm_sign(perm) -> int:
    sign = 1
    p = list(perm)
    for i in range(len(p)):
        for j in range(i + 1, len(p)):
            if p[i] > p[j]:
                sign = -sign
    return sign


def omega_from_K(K11: DiffOperator, K12) -> Form:
    """omega = 1/2 du ^ K11 du + du ^ K12 dv."""
    du = _gen("u", ())
    out = Form()
    for index, c in K11.nf.items():
        if not c.is_polynomial():
            raise ValueError("two-forms need polynomial coefficients")
        out = out + Form.basis(c.num * Q(1, 2), du, _gen("u", index))
    k12 = K12 if isinstance(K12, DiffPolynomial) else K12.num
    out = out + Form.basis(k12, du, _gen("v", ()))
    return out


def table_omega(label: str) -> Form:
    out = Form()
    for coeff, g1, g2 in OMEGA_TABLE.get(label, []):
        out = out + Form.basis(parse(coeff), _gen(*g1), _gen(*g2))
    return out


TEST_SLOTS = [{"u": f"p{i}", "v": f"r{i}"} for i in (1, 2, 3)]
TEST_SYMBOLS = [s for slot in TEST_SLOTS for s in (slot["u"], slot["v"])]


def is_closed(omega: Form, first_slot_only: bool = False) -> tuple:
    """(closed, paired density) for d(omega) modulo total divergences.

    For a density trilinear in the test symbols it suffices to check the
    Euler operators of the first slot; the default checks all slots.
    """
    d_omega = omega.exterior_derivative()
    density = d_omega.pair(TEST_SLOTS)
    deps = TEST_SYMBOLS[:2] if first_slot_only else TEST_SYMBOLS
    return divergence_test(density, deps), density


def symplectic_check(K, first_slot_only: bool = False) -> Report:
    if isinstance(K, PoissonMatrixK):
        K11, K12 = K.K11, K.K12
    else:
        K11, K12 = K
    report = Report()
    t0 = time.perf_counter()
    skew = adjoint(K11) + K11
    report.add("K11-skew-adjoint", skew.is_zero(), skew, int((time.perf_counter() - t0) * 1000))
    t0 = time.perf_counter()
    omega = omega_from_K(K11, K12)
    closed, density = is_closed(omega, first_slot_only)
    report.add("d-omega-closed", closed, None if closed else density, int((time.perf_counter() - t0) * 1000))
    return report


# ---------------------------------------------------------------- J0 and H1


def build_J0(K: PoissonMatrixK) -> OperatorMatrix2x2:
    if K.K12.is_zero():
        from .monge_ampere import DeltaZero

        raise DeltaZero("K12 vanishes identically")
    inv = multiplication(DiffRational(1, K.K12))
    from .operators import compose

    return OperatorMatrix2x2(DiffOperator(), -inv, inv, compose(compose(inv, K.K11), inv))


_H1_U_WEIGHTS = {"b4": Q(1, 4), **{f"c{i}": Q(1, 3) for i in range(9, 15)},
                 **{f"c{i}": Q(1, 2) for i in range(18, 24)}}


def build_H1(coeffs: Mapping) -> DiffPolynomial:
    """First Hamiltonian density from its tabulated form."""
    coeffs = _normalize(coeffs)
    v, u = V(), U()
    total = DiffPolynomial()
    for label in A_LABELS:
        if not coeffs[label].is_zero():
            total = total - v * v * table_K12(label) * coeffs[label] * Q(1, 2)
    for label, w in _H1_U_WEIGHTS.items():
        if not coeffs[label].is_zero():
            total = total + u * block(label) * coeffs[label] * w
    if not coeffs["c24"].is_zero():
        total = total + u * coeffs["c24"]
    return total


def velocity_to_v(p: DiffPolynomial) -> DiffPolynomial:
    """u_{tJ} -> v_J (one t removed)."""

    def fn(var):
        if var[0] == JET and var[1] == "u" and 0 in var[2]:
            rest = list(var[2])
            rest.remove(0)
            return jet_var("v", rest)
        return var

    return p.map_vars(fn)


def legendre_residual(coeffs: Mapping) -> DiffPolynomial:
    """W*v - L2|_{u_t = v} - H1, zero when H1 is the Legendre transform."""
    coeffs = _normalize(coeffs)
    W = build_constraint_W(coeffs)
    L2 = velocity_to_v(two_component_lagrangian(coeffs))
    return W * V() - L2 - build_H1(coeffs)


# ---------------------------------------------------------------- flow


def _flow_label(label: str) -> tuple:
    c = single(label)
    H1 = build_H1(c)
    K11, _ = label_K(label)
    lhs = euler(H1, "u") - apply(K11, V())
    return lhs + q_part(label), lhs


def verify_hamiltonian_flow(system: MASystem | Mapping, labels=None) -> Report:
    """Per-label flow identities, the v-identity and the assembled J0 flow."""
    if not isinstance(system, MASystem):
        system = build_two_component(system)
    coeffs = system.coeffs
    report = Report()
    labels = labels if labels is not None else [l for l in LABELS if not coeffs[l].is_zero()]
    for label in labels:
        t0 = time.perf_counter()
        resid, _ = _flow_label(label)
        report.add(f"flow-label-{label}", as_zero(resid), resid, int((time.perf_counter() - t0) * 1000))
    t0 = time.perf_counter()
    H1 = build_H1(coeffs)
    K = derive_K(coeffs)
    dv = euler(H1, "v")
    resid_v = dv + V() * K.K12
    report.add("flow-delta-v", as_zero(resid_v), resid_v, int((time.perf_counter() - t0) * 1000))
    resid_k12 = K.K12 + system.delta
    report.add("K12-equals-minus-Delta", resid_k12.is_zero(), resid_k12)
    t0 = time.perf_counter()
    J0 = build_J0(K)
    du = euler(H1, "u")
    ut, vt = J0.apply((du, dv))
    r1 = ut - V()
    r2 = vt - DiffRational(system.q, system.delta)
    ms = int((time.perf_counter() - t0) * 1000)
    report.add("flow-assembled-u", r1.is_zero(), r1, ms)
    report.add("flow-assembled-v", r2.is_zero(), r2, ms)
    return report


def as_zero(x) -> bool:
    return x.is_zero()
