"""The coefficient family of symplectic Monge-Ampere equations and its two-component form."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping

from .jet import (
    JET,
    T,
    DiffPolynomial,
    DiffRational,
    JetError,
    Shell,
    C,
    U,
    V,
    jet_var,
    param_var,
    parse,
)


class NotAffineInUtt(JetError):
    pass


class DeltaZero(JetError):
    pass


A_LABELS = [f"a{i}" for i in range(1, 14)]
B_LABELS = [f"b{i}" for i in range(1, 5)]
C_LABELS = [f"c{i}" for i in range(1, 9)] + ["c8p"] + [f"c{i}" for i in range(9, 25)]
LABELS = A_LABELS + B_LABELS + C_LABELS

# F = sum of coefficient * block
F_BLOCKS = {
    "a1": "u_tt*(u_11*u_22 - u_12^2) - u_t1*(u_t1*u_22 - u_t2*u_12) + u_t2*(u_t1*u_12 - u_t2*u_11)",
    "a2": "u_tt*(u_11*u_33 - u_13^2) - u_t1*(u_t1*u_33 - u_t3*u_13) + u_t3*(u_t1*u_13 - u_t3*u_11)",
    "a3": "u_tt*(u_22*u_33 - u_23^2) - u_t2*(u_t2*u_33 - u_t3*u_23) + u_t3*(u_t2*u_23 - u_t3*u_22)",
    "a4": "u_tt*(u_11*u_23 - u_12*u_13) - u_t1*(u_t1*u_23 - u_t2*u_13) + u_t3*(u_t1*u_12 - u_t2*u_11)",
    "a5": "u_tt*(u_12*u_23 - u_13*u_22) - u_t1*(u_t2*u_23 - u_t3*u_22) + u_t2*(u_t2*u_13 - u_t3*u_12)",
    "a6": "u_tt*(u_12*u_33 - u_13*u_23) - u_t2*(u_t1*u_33 - u_t3*u_13) + u_t3*(u_t1*u_23 - u_t3*u_12)",
    "a7": "u_tt*u_11 - u_t1^2",
    "a8": "u_tt*u_12 - u_t1*u_t2",
    "a9": "u_tt*u_13 - u_t1*u_t3",
    "a10": "u_tt*u_22 - u_t2^2",
    "a11": "u_tt*u_23 - u_t2*u_t3",
    "a12": "u_tt*u_33 - u_t3^2",
    "a13": "u_tt",
    "b1": "u_t1*(u_12*u_23 - u_13*u_22) - u_t2*(u_11*u_23 - u_12*u_13) + u_t3*(u_11*u_22 - u_12^2)",
    "b2": "u_t1*(u_12*u_33 - u_13*u_23) - u_t2*(u_11*u_33 - u_13^2) + u_t3*(u_11*u_23 - u_12*u_13)",
    "b3": "u_t1*(u_22*u_33 - u_23^2) - u_t2*(u_12*u_33 - u_13*u_23) + u_t3*(u_12*u_23 - u_13*u_22)",
    "b4": "u_11*(u_22*u_33 - u_23^2) - u_12*(u_12*u_33 - u_13*u_23) + u_13*(u_12*u_23 - u_13*u_22)",
    "c1": "u_t1*u_12 - u_t2*u_11",
    "c2": "u_t1*u_13 - u_t3*u_11",
    "c3": "u_t1*u_22 - u_t2*u_12",
    "c4": "u_t1*u_23 - u_t2*u_13",
    "c5": "u_t2*u_23 - u_t3*u_22",
    "c6": "u_t1*u_33 - u_t3*u_13",
    "c7": "u_t2*u_33 - u_t3*u_23",
    "c8": "u_t2*u_13 - u_t3*u_12",
    "c8p": "u_t1*u_23 - u_t3*u_12",
    "c9": "u_11*u_23 - u_12*u_13",
    "c10": "u_12*u_23 - u_13*u_22",
    "c11": "u_12*u_33 - u_13*u_23",
    "c12": "u_11*u_22 - u_12^2",
    "c13": "u_11*u_33 - u_13^2",
    "c14": "u_22*u_33 - u_23^2",
    "c15": "u_t1",
    "c16": "u_t2",
    "c17": "u_t3",
    "c18": "u_11",
    "c19": "u_12",
    "c20": "u_13",
    "c21": "u_22",
    "c22": "u_23",
    "c23": "u_33",
    "c24": "1",
}

# Delta = sum of coefficient * (coefficient of w in the substituted block)
DELTA_TABLE = {
    "a1": "u_11*u_22 - u_12^2",
    "a2": "u_11*u_33 - u_13^2",
    "a3": "u_22*u_33 - u_23^2",
    "a4": "u_11*u_23 - u_12*u_13",
    "a5": "u_12*u_23 - u_13*u_22",
    "a6": "u_12*u_33 - u_13*u_23",
    "a7": "u_11", "a8": "u_12", "a9": "u_13", "a10": "u_22", "a11": "u_23", "a12": "u_33", "a13": "1",
}

# transcribed numerator tables of v_t = q/Delta; regression data for the generated parts
Q_TABLE = {
    "a1": "v_1^2*u_22 + v_2^2*u_11 - 2*v_1*v_2*u_12",
    "a2": "v_1^2*u_33 + v_3^2*u_11 - 2*v_1*v_3*u_13",
    "a3": "v_2^2*u_33 + v_3^2*u_22 - 2*v_2*v_3*u_23",
    "a4": "v_1*(v_1*u_23 - v_2*u_13) - v_3*(v_1*u_12 - v_2*u_11)",
    "a5": "v_1*(v_2*u_23 - v_3*u_22) - v_2*(v_2*u_13 - v_3*u_12)",
    "a6": "v_2*(v_1*u_33 - v_3*u_13) - v_3*(v_1*u_23 - v_3*u_12)",
    "a7": "v_1^2", "a8": "v_1*v_2", "a9": "v_1*v_3", "a10": "v_2^2", "a11": "v_2*v_3", "a12": "v_3^2",
    "a13": "0",
    "b1": "-(v_1*(u_12*u_23 - u_13*u_22) - v_2*(u_11*u_23 - u_12*u_13) + v_3*(u_11*u_22 - u_12^2))",
    "b2": "-(v_1*(u_12*u_33 - u_13*u_23) - v_2*(u_11*u_33 - u_13^2) + v_3*(u_11*u_23 - u_12*u_13))",
    "b3": "-(v_1*(u_22*u_33 - u_23^2) - v_2*(u_12*u_33 - u_13*u_23) + v_3*(u_12*u_23 - u_13*u_22))",
    "b4": "-(u_11*(u_22*u_33 - u_23^2) - u_12*(u_12*u_33 - u_13*u_23) + u_13*(u_12*u_23 - u_13*u_22))",
    "c1": "-(v_1*u_12 - v_2*u_11)",
    "c2": "-(v_1*u_13 - v_3*u_11)",
    "c3": "-(v_1*u_22 - v_2*u_12)",
    "c4": "-(v_1*u_23 - v_2*u_13)",
    "c5": "-(v_2*u_23 - v_3*u_22)",
    "c6": "-(v_1*u_33 - v_3*u_13)",
    "c7": "-(v_2*u_33 - v_3*u_23)",
    "c8": "-(v_2*u_13 - v_3*u_12)",
    "c8p": "-(v_1*u_23 - v_3*u_12)",
    "c9": "-(u_11*u_23 - u_12*u_13)",
    "c10": "-(u_12*u_23 - u_13*u_22)",
    "c11": "-(u_12*u_33 - u_13*u_23)",
    "c12": "-(u_11*u_22 - u_12^2)",
    "c13": "-(u_11*u_33 - u_13^2)",
    "c14": "-(u_22*u_33 - u_23^2)",
    "c15": "-v_1", "c16": "-v_2", "c17": "-v_3",
    "c18": "-u_11", "c19": "-u_12", "c20": "-u_13", "c21": "-u_22", "c22": "-u_23", "c23": "-u_33",
    "c24": "-1",
}

_BLOCK_CACHE: dict = {}


def block(label: str) -> DiffPolynomial:
    if label not in _BLOCK_CACHE:
        _BLOCK_CACHE[label] = parse(F_BLOCKS[label])
    return _BLOCK_CACHE[label]


def coefficient_vector(values: Mapping | None = None, symbolic: bool = False) -> dict:
    """Map every label to a jet-free polynomial.

    ``values`` may hold numbers, jet-free polynomials, or the string "sym"
    for the label's own parameter symbol.  Missing labels are 0, or the
    parameter symbol when ``symbolic`` is set.
    """
    out = {}
    values = dict(values or {})
    unknown = set(values) - set(LABELS)
    if unknown:
        raise KeyError(f"unknown coefficient labels: {sorted(unknown)}")
    for label in LABELS:
        val = values.get(label, "sym" if symbolic else 0)
        if isinstance(val, str) and val == "sym":
            out[label] = C(label)
        elif isinstance(val, DiffPolynomial):
            out[label] = val
        elif isinstance(val, DiffRational):
            if not val.is_polynomial():
                raise ValueError(f"coefficient {label} must be polynomial in parameters")
            out[label] = val.num
        else:
            out[label] = DiffPolynomial.const(val)
    return out


def symbolic_coefficients() -> dict:
    return coefficient_vector(symbolic=True)


def single(label: str, value=1) -> dict:
    return coefficient_vector({label: value})


def active_labels(coeffs: Mapping) -> list:
    return [l for l in LABELS if not coeffs[l].is_zero()]


def _normalize(coeffs: Mapping) -> dict:
    if len(coeffs) == len(LABELS) and all(isinstance(coeffs.get(l), DiffPolynomial) for l in LABELS):
        return dict(coeffs)
    return coefficient_vector(coeffs)


def build_F(coeffs: Mapping) -> DiffPolynomial:
    coeffs = _normalize(coeffs)
    total = DiffPolynomial()
    for label in LABELS:
        if not coeffs[label].is_zero():
            total = total + block(label) * coeffs[label]
    return total


UTT = jet_var("u", "tt")


def split_f_g(F: DiffPolynomial) -> tuple:
    """(f, g) with F = f - u_tt * g and f, g free of u_tt."""
    g = -F.partial(UTT)
    if UTT in g.variables():
        raise NotAffineInUtt("F is not affine in u_tt")
    f = F + U("tt") * g
    if UTT in f.variables():
        raise NotAffineInUtt("F is not affine in u_tt")
    return f, g


W_SYMBOL = jet_var("w")


def substitute_velocities(p: DiffPolynomial) -> DiffPolynomial:
    """u_tt -> w and u_ti -> v_i."""

    def fn(var):
        if var[0] == JET and var[1] == "u" and T in var[2]:
            rest = list(var[2])
            rest.remove(T)
            if rest == [T]:
                return W_SYMBOL
            return jet_var("v", rest)
        return var

    return p.map_vars(fn)


def delta_and_q(F: DiffPolynomial) -> tuple:
    """Delta and q with F[u_tt -> w, u_ti -> v_i] = w*Delta - q."""
    sub = substitute_velocities(F)
    delta = sub.partial(W_SYMBOL)
    if W_SYMBOL in delta.variables():
        raise NotAffineInUtt("F is not affine in u_tt")
    q = DiffPolynomial.var(W_SYMBOL) * delta - sub
    return delta, q


@dataclass
class MASystem:
    coeffs: dict
    F: DiffPolynomial
    f: DiffPolynomial
    g: DiffPolynomial
    delta: DiffPolynomial
    q_parts: dict
    q: DiffPolynomial
    nonvanishing: tuple = ()
    _shells: dict = field(default_factory=dict, repr=False)

    @property
    def shell(self) -> Shell:
        """One-component shell (u_tt = f/g)."""
        if "one" not in self._shells:
            self._shells["one"] = Shell.one_component(self.f, self.g, self.nonvanishing)
        return self._shells["one"]

    @property
    def two_shell(self) -> Shell:
        """Two-component shell (u_t = v, v_t = q/Delta)."""
        if "two" not in self._shells:
            self._shells["two"] = Shell.two_component(self.q, self.delta, self.nonvanishing)
        return self._shells["two"]

    def substitution_residual(self) -> DiffPolynomial:
        sub = substitute_velocities(self.F)
        return sub - (DiffPolynomial.var(W_SYMBOL) * self.delta - self.q)


def q_part(label: str) -> DiffPolynomial:
    """Numerator contribution of one coefficient, generated from its block."""
    return delta_and_q(block(label))[1]


def delta_part(label: str) -> DiffPolynomial:
    return delta_and_q(block(label))[0]


def build_two_component(coeffs: Mapping, nonvanishing=()) -> MASystem:
    coeffs = _normalize(coeffs)
    F = build_F(coeffs)
    f, g = split_f_g(F)
    delta = DiffPolynomial()
    parts = {}
    q = DiffPolynomial()
    for label in LABELS:
        parts[label] = q_part(label)
        c = coeffs[label]
        if not c.is_zero():
            delta = delta + delta_part(label) * c
            q = q + parts[label] * c
    if delta.is_zero():
        raise DeltaZero("Delta vanishes identically for these coefficients")
    sysm = MASystem(coeffs, F, f, g, delta, parts, q, tuple(nonvanishing))
    if not sysm.substitution_residual().is_zero():  # pragma: no cover - structural guarantee
        raise JetError("substitution identity failed")
    return sysm


def build_one_component(coeffs: Mapping, nonvanishing=()) -> MASystem:
    """Like build_two_component but tolerates Delta = 0 (one-component use only)."""
    coeffs = _normalize(coeffs)
    F = build_F(coeffs)
    f, g = split_f_g(F)
    delta, q = delta_and_q(F)
    return MASystem(coeffs, F, f, g, delta, {}, q, tuple(nonvanishing))


def from_equation(F: DiffPolynomial, nonvanishing=()) -> MASystem:
    """System data for an arbitrary u_tt-affine equation (catalog entries)."""
    f, g = split_f_g(F)
    delta, q = delta_and_q(F)
    return MASystem({}, F, f, g, delta, {}, q, tuple(nonvanishing))
