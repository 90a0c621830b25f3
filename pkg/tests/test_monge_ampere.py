import pytest

from heavenly.integrability import catalog, check_f_invariance
from heavenly.jet import DiffPolynomial, U, V, parse
from heavenly.monge_ampere import (
    DELTA_TABLE,
    LABELS,
    Q_TABLE,
    DeltaZero,
    NotAffineInUtt,
    build_F,
    build_two_component,
    coefficient_vector,
    delta_part,
    q_part,
    single,
    split_f_g,
    symbolic_coefficients,
)
from heavenly.operators import euler
from heavenly.variational import helmholtz_check, homotopy_lagrangian


def test_label_count():
    assert len(LABELS) == 42
    assert LABELS[:13] == [f"a{i}" for i in range(1, 14)]
    assert "c8p" in LABELS


def test_build_F_examples():
    assert build_F(single("a13")) == U("tt")
    assert build_F(single("a7")) == U("tt") * U("11") - U("t1") ** 2
    hessian = parse("u_11*(u_22*u_33 - u_23^2) - u_12*(u_12*u_33 - u_13*u_23) + u_13*(u_12*u_23 - u_13*u_22)")
    assert build_F(single("b4")) == hessian


def test_split_examples():
    assert split_f_g(U("tt") * U("11") - U("t1") ** 2) == (-U("t1") ** 2, -U("11"))
    assert split_f_g(U("tt")) == (DiffPolynomial(), DiffPolynomial.const(-1))
    _, g = split_f_g(catalog("E1").F)
    assert g == parse("-a11*u_23")


def test_split_rejects_nonaffine():
    with pytest.raises(NotAffineInUtt):
        split_f_g(U("tt") ** 2)


def test_q_parts_examples():
    assert q_part("a11") == V("2") * V("3")
    assert q_part("c24") == DiffPolynomial.const(-1)
    assert q_part("b4") == -build_F(single("b4"))


@pytest.mark.parametrize("label", LABELS)
def test_generated_tables_match_transcriptions(label):
    assert q_part(label) == parse(Q_TABLE[label])
    want = parse(DELTA_TABLE[label]) if label in DELTA_TABLE else DiffPolynomial()
    assert delta_part(label) == want


def test_substitution_identity_symbolic():
    sysm = build_two_component(symbolic_coefficients())
    assert sysm.substitution_residual().is_zero()
    assert sysm.delta == -sysm.g
    assert not any(0 in var[2] for var in sysm.g.jets())


def test_delta_zero():
    with pytest.raises(DeltaZero):
        build_two_component(single("c5"))


def test_coefficient_vector_parsing():
    c = coefficient_vector({"a7": "sym", "c5": 2})
    assert c["a7"] == parse("a7")
    assert c["c5"] == DiffPolynomial.const(2)
    assert c["a8"].is_zero()
    with pytest.raises(KeyError):
        coefficient_vector({"zz": 1})


def test_family_properties():
    F = build_F(symbolic_coefficients())
    assert helmholtz_check(F).self_adjoint
    for label in LABELS:
        Fl = build_F(single(label))
        assert euler(homotopy_lagrangian(Fl), "u") == Fl
    assert check_f_invariance({1: 2, 2: 1})[0]
