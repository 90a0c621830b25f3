"""Command-line front end: ``heavenly <command> [options]``.

The machine-readable report is one JSON document on stdout; a short human
summary goes to stderr.  Exit status: 0 all checks pass, 1 some check
fails, 2 usage, parse or structural error.
"""

from __future__ import annotations

import argparse
import configparser
import json
import sys
from dataclasses import dataclass, field, replace

from .jet import DiffPolynomial, DiffRational, JetError, Q, order_cap, parse, poly_str
from .monge_ampere import LABELS, active_labels, build_F, build_two_component, coefficient_vector
from .report import Report

COMMANDS = ("lagrangian", "hamiltonian", "factorize", "lax", "biham")


class SpecError(Exception):
    """Bad equation or option input: exit status 2."""


@dataclass
class EquationSpec:
    catalog: str | None = None
    values: dict = field(default_factory=dict)
    nonvanishing: tuple = ()
    points: int = 20
    seed: int = 0
    max_order: int = 6
    perturb: str | None = None
    all_labels: bool = False


def parse_value(text: str):
    """Exact rational "p/q" (or integer), or the token "sym"."""
    text = text.strip()
    if text == "sym":
        return "sym"
    try:
        return Q(text)
    except (ValueError, ZeroDivisionError) as exc:
        raise SpecError(f"not an exact rational: {text!r}") from exc


def _split_assignment(item: str) -> tuple:
    if "=" not in item:
        raise SpecError(f"expected key=value, got {item!r}")
    key, value = item.split("=", 1)
    return key.strip(), value.strip()


def load_spec_file(path: str) -> EquationSpec:
    cp = configparser.ConfigParser(delimiters=("=",), comment_prefixes=("#", ";"))
    cp.optionxform = str
    try:
        with open(path, encoding="utf-8") as fh:
            cp.read_file(fh)
    except (OSError, configparser.Error) as exc:
        raise SpecError(f"cannot read spec file {path}: {exc}") from exc
    spec = EquationSpec()
    if cp.has_section("coefficients"):
        for key, value in cp.items("coefficients"):
            spec.values[key] = parse_value(value)
    if cp.has_section("options"):
        opts = dict(cp.items("options"))
        spec.catalog = opts.pop("catalog", None)
        try:
            for name in ("points", "seed", "max_order"):
                if name in opts:
                    setattr(spec, name, int(opts.pop(name)))
        except ValueError as exc:
            raise SpecError(f"bad integer option: {exc}") from exc
        if "nonvanishing" in opts:
            spec.nonvanishing = tuple(s.strip() for s in opts.pop("nonvanishing").split(",") if s.strip())
        spec.perturb = opts.pop("perturb", None)
        if opts:
            raise SpecError(f"unknown options: {sorted(opts)}")
    return spec


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="heavenly", description=__doc__.splitlines()[0])
    ap.add_argument("command", choices=COMMANDS)
    ap.add_argument("spec", nargs="?", help="spec file with [coefficients] and [options] sections")
    ap.add_argument("--catalog", metavar="NAME")
    ap.add_argument("--set", action="append", default=[], metavar="K=V", help="coefficient value, p/q or sym")
    ap.add_argument("--seed", type=int)
    ap.add_argument("--points", type=int, help="random on-shell points per check (default 20)")
    ap.add_argument("--max-order", type=int, help="maximum jet order (default 6)")
    ap.add_argument("--json", metavar="PATH", help="also write the report here")
    ap.add_argument("--all-labels", action="store_true", help="hamiltonian: per-label table regression")
    ap.add_argument("--perturb", metavar="POLY", help="lagrangian: add a term to F")
    ap.add_argument("--timing", action="store_true", help="record wall-clock milliseconds")
    return ap


def resolve_spec(args) -> EquationSpec:
    spec = load_spec_file(args.spec) if args.spec else EquationSpec()
    if args.catalog:
        spec.catalog = args.catalog
    for item in args.set:
        key, value = _split_assignment(item)
        spec.values[key] = parse_value(value)
    for name in ("seed", "points", "max_order", "perturb"):
        val = getattr(args, name)
        if val is not None:
            setattr(spec, name, val)
    spec.all_labels = args.all_labels
    if spec.points < 0 or spec.max_order < 2:
        raise SpecError("points must be >= 0 and max-order >= 2")
    return spec


# ---------------------------------------------------------------- spec helpers


def _entry(spec: EquationSpec):
    from .integrability import UnknownName, catalog

    if not spec.catalog:
        raise SpecError("this command needs --catalog NAME")
    try:
        entry = catalog(spec.catalog)
    except UnknownName as exc:
        raise SpecError(str(exc)) from exc
    if spec.values:
        entry = _specialize(entry, spec.values)
    if spec.nonvanishing:
        extra = tuple(_jet_of(name) for name in spec.nonvanishing)
        entry = replace(entry, sf=replace(entry.sf, required_nonvanishing=entry.sf.required_nonvanishing + extra))
    return entry


def _jet_of(name: str) -> tuple:
    p = parse(name)
    if len(p) != 1 or len(p.variables()) != 1:
        raise SpecError(f"nonvanishing entries must be single jet names, got {name!r}")
    return next(iter(p.variables()))


def _param_mapping(values: dict) -> dict:
    return {(0, k, ()): DiffRational(DiffPolynomial.const(v)) for k, v in values.items() if v != "sym"}


def _specialize(entry, values: dict):
    """Substitute numeric values for the entry's free parameters."""
    from .bihamiltonian import _subs_params
    from .operators import DiffOperator

    allowed = set(entry.params) | {l for l, c in entry.coeffs.items() if not c.is_zero()}
    names = {var[1] for c in entry.coeffs.values() for var in c.variables()}
    unknown = set(values) - names - allowed
    if unknown:
        raise SpecError(f"{entry.name} has no parameters {sorted(unknown)}")
    mapping = _param_mapping(values)

    def op(o):
        return DiffOperator({k: _subs_params(c, mapping) for k, c in o.nf.items()})

    coeffs = {}
    for label, c in entry.coeffs.items():
        r = _subs_params(DiffRational(c), mapping)
        coeffs[label] = r.num
    sf = replace(entry.sf, A1=op(entry.sf.A1), A2=op(entry.sf.A2), B1=op(entry.sf.B1), B2=op(entry.sf.B2),
                 mu=_subs_params(entry.sf.mu, mapping))
    return replace(entry, coeffs=coeffs, sf=sf)


def _coefficients(spec: EquationSpec) -> dict:
    if spec.catalog:
        return dict(_entry(spec).coeffs)
    if not spec.values:
        raise SpecError("give --catalog NAME, --set LABEL=VALUE or a spec file")
    unknown = set(spec.values) - set(LABELS)
    if unknown:
        raise SpecError(f"unknown coefficient labels: {sorted(unknown)}")
    return coefficient_vector(spec.values)


# ---------------------------------------------------------------- commands


def cmd_lagrangian(spec: EquationSpec) -> tuple:
    from .operators import euler
    from .variational import helmholtz_check, homotopy_lagrangian

    F = build_F(_coefficients(spec))
    if spec.perturb:
        F = F + parse(spec.perturb)
    rep = Report()
    with rep.timed("helmholtz-self-adjoint") as box:
        hr = helmholtz_check(F)
        box["ok"] = hr.self_adjoint
        box["summary"] = "" if hr.self_adjoint else "nonzero groups: " + ", ".join(hr.nonzero_groups())
    for group, resid in hr.residuals.items():
        rep.add(f"helmholtz-group-{group}", resid.is_zero(), resid if hasattr(resid, "num") else None,
                summary=None if hasattr(resid, "num") else ("" if resid.is_zero() else str(resid)[:160]))
    with rep.timed("euler-roundtrip") as box:
        Lag = homotopy_lagrangian(F)
        diff = euler(Lag, "u") - F
        box["ok"] = diff.is_zero()
        box["residual"] = diff
    notes = [f"F = {poly_str(F)}", f"L = {poly_str(Lag)}"]
    return rep, notes


def cmd_hamiltonian(spec: EquationSpec) -> tuple:
    from .hamiltonian import (
        build_H1,
        derive_K,
        label_K,
        symplectic_check,
        table_K11,
        table_K12,
        verify_hamiltonian_flow,
    )
    from .operators import adjoint, operator_str

    rep = Report()
    notes = []
    if spec.all_labels:
        matched = 0
        for label in LABELS:
            with rep.timed(f"K-table-{label}") as box:
                k11, k12 = label_K(label)
                ok = (k11 - table_K11(label)).is_zero() and (k12 - table_K12(label)).is_zero()
                box["ok"] = ok
                matched += ok
            skew = adjoint(k11) + k11
            rep.add(f"K11-skew-{label}", skew.is_zero(), summary="" if skew.is_zero() else operator_str(skew)[:160])
        rep.extend(verify_hamiltonian_flow(coefficient_vector(symbolic=True), labels=list(LABELS)))
        notes.append(f"{matched}/{len(LABELS)} table matches")
        return rep, notes
    coeffs = _coefficients(spec)
    sysm = build_two_component(coeffs)
    K = derive_K(coeffs, per_term=True)
    for label in active_labels(sysm.coeffs):
        k11, k12 = K.per_term_K11[label], K.per_term_K12[label]
        ok = (k11 - table_K11(label)).is_zero() and (k12 - table_K12(label)).is_zero()
        rep.add(f"K-table-{label}", ok)
    rep.extend(symplectic_check(K))
    rep.extend(verify_hamiltonian_flow(sysm))
    notes += [f"K11 = {operator_str(K.K11)}", f"K12 = {poly_str(K.K12)}",
              f"H1 = {poly_str(build_H1(sysm.coeffs))}"]
    return rep, notes


def cmd_factorize(spec: EquationSpec) -> tuple:
    from .integrability import check_skew_factorization

    entry = _entry(spec)
    rep = check_skew_factorization(entry, spec.points, spec.seed)
    return rep, [f"{entry.name}: {entry.tag}"]


def cmd_lax(spec: EquationSpec) -> tuple:
    from .integrability import build_lax, check_lax

    entry = _entry(spec)
    rep = check_lax(build_lax(entry.sf), entry, spec.points, spec.seed)
    return rep, [f"{entry.name}: {entry.tag}"]


def cmd_biham(spec: EquationSpec) -> tuple:
    from .bihamiltonian import SYSTEMS, check_system

    if spec.catalog not in SYSTEMS:
        raise SpecError(f"biham needs --catalog one of {', '.join(SYSTEMS)}")
    if spec.values:
        raise SpecError("biham works with symbolic coefficients; --set is not supported")
    rep = check_system(spec.catalog, spec.points, spec.seed)
    notes = [f"constraint: {c}" for c in rep.constraints] + [f"H0 = {rep.h0}"]
    return rep, notes


HANDLERS = {
    "lagrangian": cmd_lagrangian,
    "hamiltonian": cmd_hamiltonian,
    "factorize": cmd_factorize,
    "lax": cmd_lax,
    "biham": cmd_biham,
}


# ---------------------------------------------------------------- output


def render(command: list, seed: int, rep: Report | None, code: int, timing: bool, error: str = "") -> str:
    doc = {
        "command": command,
        "seed": seed,
        "checks": [c.as_dict(timing) for c in rep.sorted_checks()] if rep else [],
        "constraints": list(rep.constraints) if rep else [],
        "h0": rep.h0 if rep else "",
        "exit": code,
    }
    if error:
        doc["error"] = error
    return json.dumps(doc, indent=2)


def run(argv: list | None = None) -> tuple:
    """Returns (exit code, JSON text, human summary lines, --json path)."""
    argv = list(sys.argv[1:] if argv is None else argv)
    args = build_parser().parse_args(argv)
    code, text, lines = _run(argv, args)
    return code, text, lines, args.json


def _run(argv: list, args) -> tuple:
    seed = args.seed if args.seed is not None else 0
    try:
        spec = resolve_spec(args)
        seed = spec.seed
        with order_cap(spec.max_order):
            rep, notes = HANDLERS[args.command](spec)
    except (SpecError, JetError, KeyError, ValueError) as exc:
        msg = f"{type(exc).__name__}: {exc}"
        return 2, render(argv, seed, None, 2, args.timing, msg), [f"error: {msg}"]
    code = 0 if rep.passed else 1
    lines = [f"{c.verdict.upper():4s} {c.name}" + (f"  [{c.residual_summary}]" if c.residual_summary else "")
             for c in rep.sorted_checks()]
    lines += notes
    counts = {v: sum(c.verdict == v for c in rep.checks) for v in ("pass", "fail", "skip")}
    lines.append(f"{args.command}: {counts['pass']} pass, {counts['fail']} fail, {counts['skip']} skip")
    return code, render(argv, seed, rep, code, args.timing), lines


def main(argv: list | None = None) -> int:
    code, text, lines, json_path = run(argv)
    sys.stdout.write(text + "\n")
    if json_path:
        with open(json_path, "w", encoding="utf-8") as fh:
            fh.write(text + "\n")
    for line in lines:
        print(line, file=sys.stderr)
    return code


if __name__ == "__main__":
    sys.exit(main())
