"""Frechet derivatives, Helmholtz conditions, Euler operators and Lagrangians."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping

from .jet import JET, T, DiffPolynomial, DiffRational, Q, U, V, jet_var, mono_degree
from .monge_ampere import LABELS, _normalize, block
from .operators import Atom, DiffOperator, adjoint, euler

GROUP_NAMES = ("D_t", "D_1", "D_2", "D_3", "free")


def frechet(F, var: str = "u") -> DiffOperator:
    """Linearization sum_J dF/dvar_J D_J."""
    nf = {}
    for jet in F.jets():
        if jet[1] == var:
            nf[jet[2]] = F.partial(jet)
    return DiffOperator(nf)


@dataclass
class HelmholtzReport:
    self_adjoint: bool
    residuals: dict

    def nonzero_groups(self) -> list:
        return [k for k, r in self.residuals.items() if not r.is_zero()]


def helmholtz_check(F, var: str = "u") -> HelmholtzReport:
    """Split D_F* - D_F into the D_t, D_1, D_2, D_3 and derivative-free groups.

    Higher-order leftovers (possible for F outside the second-order class)
    go to an extra ``higher`` group.
    """
    lin = frechet(F, var)
    diff = adjoint(lin) - lin
    residuals = {name: DiffRational(0) for name in GROUP_NAMES}
    higher = DiffOperator()
    for index, c in diff.nf.items():
        if len(index) == 1:
            residuals[GROUP_NAMES[index[0]]] = c
        elif not index:
            residuals["free"] = c
        else:
            higher = higher + Atom(c, index)
    if not higher.is_zero():
        residuals["higher"] = higher
    ok = all(r.is_zero() for r in residuals.values())
    return HelmholtzReport(ok, residuals)


def homotopy_lagrangian(F: DiffPolynomial, var: str = "u") -> DiffPolynomial:
    """Each monomial of jet degree d becomes u*m/(d+1)."""
    base = DiffPolynomial.var(jet_var(var))
    out = {}
    for mono, c in F.items():
        d = mono_degree(mono, jets_only=True)
        out[mono] = c / (d + 1)
    return DiffPolynomial(out) * base


def _velocity_to_space(p: DiffPolynomial) -> DiffPolynomial:
    # u_ti -> u_i, for building the density blocks of the two-component Lagrangian
    def fn(var):
        if var[0] == JET and var[1] == "u" and var[2].count(T) == 1 and len(var[2]) == 2:
            return jet_var("u", [d for d in var[2] if d != T])
        return var

    return p.map_vars(fn)


def _spatial_block(label: str) -> DiffPolynomial:
    return _velocity_to_space(block(label))


def two_component_lagrangian(coeffs: Mapping) -> DiffPolynomial:
    """The Lagrangian of the two-component system, overall sign flipped."""
    from .monge_ampere import delta_part

    coeffs = _normalize(coeffs)
    ut, u, v = U("t"), U(), V()
    delta = DiffPolynomial()
    for label in LABELS[:13]:
        if not coeffs[label].is_zero():
            delta = delta + delta_part(label) * coeffs[label]
    total = (ut * v - v * v * Q(1, 2)) * delta
    weights = [
        (("b1", "b2", "b3"), ut, Q(1, 4)),
        (("b4",), u, Q(-1, 4)),
        (("c1", "c2", "c3", "c4", "c5", "c6", "c7", "c8", "c8p"), ut, Q(1, 3)),
        (("c9", "c10", "c11", "c12", "c13", "c14"), u, Q(-1, 3)),
        (("c15", "c16", "c17"), ut, Q(1, 2)),
        (("c18", "c19", "c20", "c21", "c22", "c23"), u, Q(-1, 2)),
        (("c24",), u, Q(-1)),
    ]
    for labels, factor, w in weights:
        inner = DiffPolynomial()
        for label in labels:
            if not coeffs[label].is_zero():
                inner = inner + _spatial_block(label) * coeffs[label]
        if inner:
            total = total + factor * inner * w
    return total


__all__ = [
    "GROUP_NAMES",
    "HelmholtzReport",
    "euler",
    "frechet",
    "helmholtz_check",
    "homotopy_lagrangian",
    "two_component_lagrangian",
]
