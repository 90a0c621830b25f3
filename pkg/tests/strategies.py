"""Hypothesis strategies for random differential polynomials and operators."""

from hypothesis import strategies as st

from heavenly.jet import DiffPolynomial, Q, jet_var, param_var
from heavenly.operators import Atom, DiffOperator

JETS = [jet_var("u", i) for i in ("", "1", "2", "3", "t", "11", "12", "23", "t1", "t2", "tt")]
JETS += [jet_var("v", i) for i in ("", "1", "3")]
PARAMS = [param_var(n) for n in ("a7", "c8", "k")]
INDICES = [(), (0,), (1,), (2,), (3,), (1, 1), (1, 2), (0, 3)]


@st.composite
def polynomials(draw, max_terms=4, max_degree=3):
    total = DiffPolynomial()
    for _ in range(draw(st.integers(0, max_terms))):
        num = draw(st.integers(-9, 9))
        den = draw(st.integers(1, 5))
        term = DiffPolynomial.const(Q(num, den))
        for _ in range(draw(st.integers(0, max_degree))):
            term = term * DiffPolynomial.var(draw(st.sampled_from(JETS + PARAMS)))
        total = total + term
    return total


@st.composite
def operators(draw, max_terms=3):
    op = DiffOperator()
    for _ in range(draw(st.integers(0, max_terms))):
        op = op + Atom(draw(polynomials(max_terms=2, max_degree=2)), draw(st.sampled_from(INDICES)))
    return op
