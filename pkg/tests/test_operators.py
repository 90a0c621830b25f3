import itertools

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import oracle
from strategies import operators, polynomials
from heavenly.jet import DiffRational, U, parse
from heavenly.operators import (
    Atom,
    D,
    DiffOperator,
    InverseAtom,
    InversePresent,
    adjoint,
    apply,
    build_L,
    commutator,
    compose,
    divergence_test,
    factorization_relation,
    multiplication,
    verify_L_identities,
)

L = build_L
DIRS = ("t", 1, 2, 3)


def same(a, b) -> bool:
    return (a - b).is_zero()


def test_apply_examples():
    op = Atom(U("12"), (1,)) - Atom(U("11"), (2,))
    assert apply(op, U("2")) == DiffRational(U("12") * U("12") - U("11") * U("22"))
    assert apply(D("t", "t"), U()) == DiffRational(U("tt"))
    assert apply(L(2, 3, 1), U("1")).is_zero()


def test_apply_refuses_formal_inverse():
    with pytest.raises(InversePresent):
        apply(InverseAtom(L(1, 2, 3)), U("1"))


def test_commutator_examples():
    assert commutator(D(1), D(2)).is_zero()
    assert same(commutator(D(1), Atom(U("23"), (1,))), Atom(U("123"), (1,)))
    u23 = multiplication(DiffRational(1, U("23")))
    a1 = compose(u23, L("t", 2, 3))
    a2 = -compose(u23, L(1, 2, 3))
    assert commutator(a1, a2).is_zero()


def test_adjoint_examples():
    assert same(adjoint(D(1)), -D(1))
    assert same(adjoint(Atom(U("23"), (1,))), -Atom(U("23"), (1,)) - multiplication(U("123")))
    assert same(adjoint(L(1, 2, 3)), -L(1, 2, 3))


def test_build_L_examples():
    assert same(L(1, 2, 1), Atom(U("12"), (1,)) - Atom(U("11"), (2,)))
    assert same(L("t", 2, 3), Atom(U("23"), (0,)) - Atom(U("t3"), (2,)))
    for i, k in itertools.product(DIRS, DIRS):
        assert L(i, i, k).is_zero()
    for i, j, k in itertools.product(DIRS, repeat=3):
        assert same(L(i, j, k), -L(j, i, k))


def test_L_identity_families():
    for name, resid in verify_L_identities(1, 2, 3, "t").items():
        assert resid.is_zero(), name
    assert verify_L_identities("t", 1, 2, 3)["commuted"].is_zero()
    for name, resid in verify_L_identities(2, 2, 3, 1).items():
        assert resid.is_zero(), name


def test_L_identities_all_index_choices():
    for i, j, k, l in itertools.product(DIRS, repeat=4):
        for name, resid in verify_L_identities(i, j, k, l).items():
            assert resid.is_zero(), (name, i, j, k, l)


@pytest.mark.parametrize("variant", [1, 2, 3, 4])
def test_factorization_relations_distinct_indices(variant):
    for idx in itertools.permutations(DIRS):
        lhs, rhs, claimed = factorization_relation(variant, *idx)
        assert (lhs - rhs - claimed).is_zero(), idx


def test_factorization_relation_examples():
    lhs, rhs, claimed = factorization_relation(1, "t", 2, 3, 1)
    assert (lhs - rhs - claimed).is_zero()
    lhs, rhs, claimed = factorization_relation(4, "t", 1, 2, 3)
    assert (lhs - rhs - claimed).is_zero()


def test_factorization_relation_negative_control():
    lhs, rhs, claimed = factorization_relation(1, "t", 2, 3, 1, with_inverse_factor=False)
    assert not (lhs - rhs - claimed).is_zero()


def test_divergence_examples():
    assert divergence_test(parse("u*u_2").total_derivative(1))
    assert divergence_test(U("11"))
    assert not divergence_test(U("1") ** 2)


def test_formal_inverse_rules():
    P = L(1, 2, 3)
    Pi = InverseAtom(P)
    one = DiffOperator.identity()
    assert same(compose(P, Pi), one)
    assert same(compose(Pi, P), one)
    # (P^-1)* = (P*)^-1 = -P^-1 for skew-adjoint P
    assert same(adjoint(Pi), -Pi)
    assert same(adjoint(adjoint(Pi)), Pi)
    x = compose(multiplication(U("23")), Pi)
    assert same(adjoint(x), compose(-Pi, multiplication(U("23"))))


def test_inverse_of_multiplication_is_exact():
    assert same(InverseAtom(multiplication(U("23"))), multiplication(DiffRational(1, U("23"))))


# ---------------------------------------------------------------- properties


@settings(max_examples=100)
@given(operators())
def test_adjoint_is_an_involution(op):
    assert same(adjoint(adjoint(op)), op)


@settings(max_examples=100)
@given(operators(max_terms=2), operators(max_terms=2))
def test_adjoint_reverses_products(a, b):
    assert same(adjoint(compose(a, b)), compose(adjoint(b), adjoint(a)))


@settings(max_examples=100)
@given(operators(max_terms=2), polynomials(max_terms=2, max_degree=2), polynomials(max_terms=2, max_degree=2))
def test_integration_by_parts(op, x, y):
    density = apply(op, x) * y - x * apply(adjoint(op), y)
    assert density.is_polynomial()
    assert divergence_test(density.num, ("u", "v"))


@settings(max_examples=100)
@given(operators(max_terms=2), operators(max_terms=2), operators(max_terms=2), st.integers(-3, 3))
def test_commutator_bilinear_antisymmetric(a, b, c, s):
    assert same(commutator(a, b), -commutator(b, a))
    assert same(commutator(a + c.scale(s), b), commutator(a, b) + commutator(c, b).scale(s))


@given(st.sampled_from(DIRS), st.sampled_from(DIRS), st.sampled_from(DIRS))
def test_L_is_skew_adjoint(i, j, k):
    assert (adjoint(L(i, j, k)) + L(i, j, k)).is_zero()


@settings(max_examples=30)
@given(operators(max_terms=2), polynomials(max_terms=2, max_degree=2))
def test_apply_and_adjoint_match_sympy(op, x):
    f = oracle.sym(x)
    assert oracle.is_zero(oracle.apply_operator(op, f) - oracle.sym(apply(op, x)))
    assert oracle.is_zero(oracle.adjoint_apply(op, f) - oracle.sym(apply(adjoint(op), x)))
