import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import oracle
from strategies import polynomials
from heavenly.integrability import catalog
from heavenly.jet import DiffPolynomial, Q, U, V, parse
from heavenly.monge_ampere import LABELS, block, build_F, delta_part, single, symbolic_coefficients
from heavenly.operators import D, DiffOperator, adjoint, multiplication
from heavenly.variational import (
    GROUP_NAMES,
    euler,
    frechet,
    helmholtz_check,
    homotopy_lagrangian,
    two_component_lagrangian,
)


def same(a, b) -> bool:
    return (a - b).is_zero()


def test_frechet_examples():
    assert same(frechet(U("tt")), D("t", "t"))
    F = parse("u_tt*u_11 - u_t1^2 + u_t2 + u_t3")
    want = (DiffOperator({(0, 0): U("11"), (1, 1): U("tt"), (0, 1): U("t1") * -2})
            + D("t", 2) + D("t", 3))
    assert same(frechet(F), want)


def test_frechet_of_family_has_no_mixed_g_terms():
    lin = frechet(build_F(symbolic_coefficients()))
    g = -lin.coefficient((0, 0)).num
    assert not any(0 in var[2] for var in g.jets())
    assert max(len(k) for k in lin.nf) == 2


def test_helmholtz_examples():
    assert helmholtz_check(build_F(symbolic_coefficients())).self_adjoint
    assert helmholtz_check(parse("a7*(u_tt*u_11 - u_t1^2)")).self_adjoint
    hr = helmholtz_check(parse("u_tt - u_t1^3"))
    assert not hr.self_adjoint
    assert "D_t" in hr.nonzero_groups()


def test_helmholtz_groups_are_the_operator_difference():
    F = parse("u_tt - u_t1^3 + u_11*u_t2*u_t3")
    lin = frechet(F)
    diff = adjoint(lin) - lin
    hr = helmholtz_check(F)
    assert set(hr.residuals) >= set(GROUP_NAMES)
    for i, name in enumerate(GROUP_NAMES[:4]):
        assert same(hr.residuals[name], diff.coefficient((i,)))
    assert same(hr.residuals["free"], diff.coefficient(()))


def test_euler_examples():
    assert euler(U("1") ** 2 * Q(1, 2), "u") == -U("11")
    assert euler(U() * U("tt") * Q(1, 2), "u") == U("tt")


def test_homotopy_examples():
    assert homotopy_lagrangian(parse("a13*u_tt")) == U() * parse("a13*u_tt") * Q(1, 2)
    quartic = block("b4")
    assert homotopy_lagrangian(quartic) == U() * quartic * Q(1, 4)
    assert homotopy_lagrangian(parse("c24")) == parse("c24*u")


def test_homotopy_round_trip_family():
    F = build_F(symbolic_coefficients())
    assert euler(homotopy_lagrangian(F), "u") == F


@pytest.mark.parametrize("label", LABELS)
def test_homotopy_round_trip_per_label(label):
    F = build_F(single(label))
    assert euler(homotopy_lagrangian(F), "u") == F


@pytest.mark.parametrize("name", ["second-heavenly", "first-heavenly", "modified-heavenly", "husain",
                                  "general-heavenly"])
def test_heavenly_equations_are_variational(name):
    F = catalog(name).F
    assert helmholtz_check(F).self_adjoint
    assert euler(homotopy_lagrangian(F), "u") == F


def test_two_component_lagrangian_a13():
    L2 = two_component_lagrangian(single("a13"))
    assert L2 == U("t") * V() - V() * V() * Q(1, 2)
    assert euler(L2, "v") == U("t") - V()


def test_two_component_lagrangian_symbolic():
    coeffs = symbolic_coefficients()
    delta = DiffPolynomial()
    for label in LABELS[:13]:
        delta = delta + delta_part(label) * coeffs[label]
    L2 = two_component_lagrangian(coeffs)
    assert euler(L2, "v") == (U("t") - V()) * delta


def test_two_component_euler_vanishes_on_shell():
    from heavenly.jet import evaluate, random_on_shell_point
    from heavenly.monge_ampere import build_two_component

    sysm = build_two_component(single("a11") | {"c5": DiffPolynomial.const(2)})
    L2 = two_component_lagrangian(sysm.coeffs)
    ev = euler(L2, "v")
    eu = euler(L2, "u")
    for seed in range(10):
        pt = random_on_shell_point(sysm.two_shell, seed)
        assert evaluate(ev, pt) == 0
        assert evaluate(eu, pt) == 0


# ---------------------------------------------------------------- properties


@given(polynomials(), st.integers(0, 3))
def test_euler_kills_divergences(p, i):
    d = p.total_derivative(i)
    assert euler(d, "u").is_zero()
    assert euler(d, "v").is_zero()


@settings(max_examples=40)
@given(polynomials(max_terms=3, max_degree=2))
def test_euler_matches_sympy(p):
    assert oracle.is_zero(oracle.euler(oracle.sym(p)) - oracle.sym(euler(p, "u")))
