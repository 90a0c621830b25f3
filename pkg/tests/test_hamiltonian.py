import pytest

from heavenly.hamiltonian import (
    Form,
    build_H1,
    build_J0,
    build_constraint_W,
    derive_K,
    is_closed,
    label_K,
    legendre_residual,
    omega_from_K,
    symplectic_check,
    table_K11,
    table_K12,
    table_omega,
    verify_hamiltonian_flow,
)
from heavenly.hamiltonian import _gen
from heavenly.jet import DiffPolynomial, DiffRational, Q, U, V, parse
from heavenly.monge_ampere import LABELS, build_two_component, q_part, single, symbolic_coefficients
from heavenly.operators import D, Atom, DiffOperator, adjoint, apply, divergence_test, euler, multiplication


def same(a, b) -> bool:
    return (a - b).is_zero()


def test_constraint_density_examples():
    assert build_constraint_W(single("a7")) == V() * U("11")
    assert build_constraint_W(single("c15")) == U("1") * Q(1, 2)
    b1 = parse("u_1*(u_12*u_23 - u_13*u_22) - u_2*(u_11*u_23 - u_12*u_13) + u_3*(u_11*u_22 - u_12^2)")
    assert build_constraint_W(single("b1")) == b1 * Q(1, 4)


def test_poisson_examples():
    k11, k12 = label_K("a7")
    assert same(k11, Atom(V("1") * 2, (1,)) + multiplication(V("11")))
    assert k12 == -U("11")
    k11, _ = label_K("c15")
    assert same(k11, -D(1))
    k11, k12 = label_K("a13")
    assert k11.is_zero() and k12 == DiffPolynomial.const(-1)
    k11, _ = label_K("b1")
    assert k11.coefficient((1,)) == DiffRational(parse("u_13*u_22 - u_12*u_23"))


@pytest.mark.parametrize("label", LABELS)
def test_derived_K_matches_table(label):
    k11, k12 = label_K(label)
    assert same(k11, table_K11(label))
    assert k12 == table_K12(label)
    assert (adjoint(k11) + k11).is_zero()


def test_full_K_is_sum_of_parts():
    coeffs = symbolic_coefficients()
    K = derive_K(coeffs, per_term=True)
    total11 = sum((K.per_term_K11[l].scale(coeffs[l]) for l in LABELS), start=DiffOperator())
    total12 = sum((K.per_term_K12[l] * coeffs[l] for l in LABELS), start=DiffPolynomial())
    assert same(total11, K.K11)
    assert K.K12 == total12
    assert K.K12 == -build_two_component(coeffs).delta


def test_symplectic_full_symbolic():
    rep = symplectic_check(derive_K(symbolic_coefficients()))
    assert [c.verdict for c in rep.checks] == ["pass", "pass"]


def test_omega_a7_closed():
    om = table_omega("a7")
    assert is_closed(om)[0]
    k11, k12 = label_K("a7")
    assert (omega_from_K(k11, k12) - om).is_zero()


@pytest.mark.parametrize("label", LABELS)
def test_per_label_forms_closed(label):
    assert is_closed(omega_from_K(*label_K(label)))[0]


def test_altered_form_not_closed():
    om = Form.basis(U("11"), _gen("u", ()), _gen("v", ()))
    assert not is_closed(om)[0]
    K = derive_K(symbolic_coefficients())
    bad = omega_from_K(K.K11, K.K12) + Form.basis(parse("a1*u_11"), _gen("u", ()), _gen("v", (1,)))
    assert not is_closed(bad)[0]


def test_H1_examples():
    assert build_H1(single("a11")) == V() * V() * U("23") * Q(1, 2)
    assert build_H1(single("c24")) == U()
    assert build_H1(single("c15")).is_zero()


@pytest.mark.parametrize("label", LABELS)
def test_legendre_transform(label):
    assert divergence_test(legendre_residual(single(label)))


def test_flow_examples():
    H1 = build_H1(single("a11"))
    k11, _ = label_K("a11")
    assert euler(H1, "u") - apply(k11, V()) == DiffRational(-V("2") * V("3"))
    assert euler(build_H1(single("c24")), "u") == DiffRational(1)
    assert (euler(build_H1(single("b4")), "u") + q_part("b4")).is_zero()


def test_flow_all_labels_symbolic():
    rep = verify_hamiltonian_flow(symbolic_coefficients(), labels=list(LABELS))
    bad = [c.name for c in rep.checks if not c.passed]
    assert not bad
    assert len(rep.checks) == len(LABELS) + 4


def test_J0_shape():
    K = derive_K(single("a11"))
    J0 = build_J0(K)
    assert J0.e11.is_zero()
    assert same(J0.e12, multiplication(DiffRational(1, U("23"))))
    assert same(J0.e21, multiplication(DiffRational(-1, U("23"))))
    assert (J0.adjoint() + J0).is_zero()
