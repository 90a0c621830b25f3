"""Independent sympy reference: jets become derivatives of sympy functions of (t, z1, z2, z3)."""

import sympy

from heavenly.jet import JET, DiffPolynomial, DiffRational

COORDS = sympy.symbols("t z1 z2 z3")
FUNCS = {name: sympy.Function(name)(*COORDS) for name in ("u", "v")}


def sym_var(var):
    if var[0] != JET:
        return sympy.Symbol(var[1])
    f = FUNCS.get(var[1]) or sympy.Function(var[1])(*COORDS)
    if not var[2]:
        return f
    return sympy.Derivative(f, *[COORDS[d] for d in var[2]])


def sym(x):
    if isinstance(x, DiffRational):
        return sym(x.numerator) / sym(x.denominator)
    total = sympy.Integer(0)
    for mono, c in x.items():
        term = sympy.Rational(int(c.numerator), int(c.denominator))
        for var, e in mono:
            term *= sym_var(var) ** e
        total += term
    return total


def is_zero(expr) -> bool:
    expr = expr.doit()
    return sympy.simplify(sympy.together(sympy.expand(expr))) == 0


def total_derivative(expr, direction: int):
    return sympy.diff(expr, COORDS[direction])


def euler(density, dep: str = "u"):
    """Variational derivative via sympy's Euler-Lagrange builder (sign: dL/du - D(dL/du_i) + ...)."""
    from sympy.calculus.euler import euler_equations

    # a symbolic linear term keeps sympy from discarding constant equations
    shift = sympy.Symbol("_shift")
    (eq,) = euler_equations(density + shift * FUNCS[dep], [FUNCS[dep]], COORDS)
    return eq.lhs - eq.rhs - shift


def apply_operator(op, expr):
    """Action of a normal-form operator on a sympy expression."""
    total = sympy.Integer(0)
    for index, c in op.nf.items():
        total += sym(c) * (sympy.diff(expr, *[COORDS[d] for d in index]) if index else expr)
    return total


def adjoint_apply(op, expr):
    """Formal adjoint: sum (-D)_J (c_J expr)."""
    total = sympy.Integer(0)
    for index, c in op.nf.items():
        term = sym(c) * expr
        if index:
            term = (-1) ** len(index) * sympy.diff(term, *[COORDS[d] for d in index])
        total += term
    return total
