"""Check results shared by the verification modules and the CLI."""

from __future__ import annotations

import time
from contextlib import contextmanager
from dataclasses import dataclass, field

PASS, FAIL, SKIP = "pass", "fail", "skip"


def summarize(residual, limit: int = 3, width: int = 160) -> str:
    """Leading terms of a nonzero residual, truncated; empty for zero."""
    if residual is None:
        return ""
    if hasattr(residual, "is_zero") and residual.is_zero():
        return ""
    num = getattr(residual, "num", residual)
    terms = getattr(num, "terms", None)
    if callable(terms):
        from .jet import DiffPolynomial, poly_str

        lead = terms()[:limit]
        text = poly_str(DiffPolynomial(dict(lead)))
        if len(num) > limit:
            text += f" + ... ({len(num)} terms)"
    else:
        text = str(residual)
    return text if len(text) <= width else text[: width - 3] + "..."


@dataclass
class Check:
    name: str
    verdict: str
    residual_summary: str = ""
    millis: int = 0

    @property
    def passed(self) -> bool:
        return self.verdict == PASS

    def as_dict(self, timing: bool = False) -> dict:
        return {
            "name": self.name,
            "verdict": self.verdict,
            "residual_summary": self.residual_summary,
            "millis": self.millis if timing else 0,
        }


@dataclass
class Report:
    checks: list = field(default_factory=list)
    constraints: list = field(default_factory=list)
    h0: str = ""
    data: dict = field(default_factory=dict)

    def add(self, name: str, ok: bool, residual=None, millis: int = 0, summary: str | None = None) -> Check:
        text = summary if summary is not None else ("" if ok else summarize(residual))
        chk = Check(name, PASS if ok else FAIL, text, millis)
        self.checks.append(chk)
        return chk

    def skip(self, name: str, why: str = "") -> Check:
        chk = Check(name, SKIP, why)
        self.checks.append(chk)
        return chk

    def extend(self, other: "Report", prefix: str = "") -> None:
        for c in other.checks:
            self.checks.append(Check(prefix + c.name, c.verdict, c.residual_summary, c.millis))
        for c in other.constraints:
            if c not in self.constraints:
                self.constraints.append(c)
        if other.h0 and not self.h0:
            self.h0 = other.h0
        self.data.update(other.data)

    @contextmanager
    def timed(self, name: str):
        """Record a check from a block that sets ``box['ok']`` and optionally ``box['residual']``."""
        box: dict = {}
        start = time.perf_counter()
        try:
            yield box
        finally:
            ms = int((time.perf_counter() - start) * 1000)
            self.add(name, bool(box.get("ok")), box.get("residual"), ms, box.get("summary"))

    @property
    def passed(self) -> bool:
        return all(c.verdict != FAIL for c in self.checks) and bool(self.checks)

    def failures(self) -> list:
        return [c for c in self.checks if c.verdict == FAIL]

    def by_name(self) -> dict:
        return {c.name: c for c in self.checks}

    def sorted_checks(self) -> list:
        return sorted(self.checks, key=lambda c: c.name)
