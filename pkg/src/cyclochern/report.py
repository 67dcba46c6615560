"""Structured verification reports.

A report is a list of per-check records (identity id, residual, bound,
tolerance, pass flag); a check passes when residual <= tolerance, or
residual <= bound where a bound applies.  Reports serialize to JSON and
are byte-identical for a fixed seed; wall-clock timings are only included
when explicitly requested, to keep the determinism contract.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

from . import __version__
from .schemas import SCHEMA_VERSION, validate_payload


@dataclass
class CheckRecord:
    id: str
    identity: str
    residual: float = None
    bound: float = None
    tolerance: float = None
    passed: object = None      # True / False / "n/a"
    wall_ms: float = None

    def finalized(self) -> "CheckRecord":
        if self.passed is None:
            limit = self.tolerance if self.bound is None else max(
                self.bound, self.tolerance or 0.0)
            self.passed = bool(self.residual is not None and limit is not None
                               and self.residual <= limit)
        return self


@dataclass
class VerificationReport:
    suite: str
    seed: int = None
    checks: list = field(default_factory=list)
    include_timing: bool = False

    def add(self, id: str, identity: str, residual=None, bound=None,
            tolerance=None, passed=None, wall_ms=None) -> CheckRecord:
        rec = CheckRecord(id, identity,
                          None if residual is None else float(residual),
                          None if bound is None else float(bound),
                          None if tolerance is None else float(tolerance),
                          passed,
                          wall_ms).finalized()
        self.checks.append(rec)
        return rec

    def extend(self, other: "VerificationReport"):
        self.checks.extend(other.checks)
        return self

    @property
    def passed(self) -> bool:
        return all(c.passed is True or c.passed == "n/a" for c in self.checks)

    def failures(self):
        return [c for c in self.checks if c.passed is False]

    def to_dict(self) -> dict:
        checks = []
        for c in self.checks:
            rec = {
                "id": c.id,
                "identity": c.identity,
                "residual": c.residual,
                "bound": c.bound,
                "tolerance": c.tolerance,
                "passed": c.passed,
            }
            if self.include_timing and c.wall_ms is not None:
                rec["wall_ms"] = c.wall_ms
            checks.append(rec)
        data = {
            "suite": self.suite,
            "schema_version": SCHEMA_VERSION,
            "tool_version": __version__,
            "seed": self.seed,
            "passed": self.passed,
            "checks": checks,
        }
        validate_payload(data, "report")
        return data

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=1, sort_keys=True)

    def lines(self):
        out = []
        for c in self.checks:
            status = {True: "PASS", False: "FAIL"}.get(c.passed, "N/A ")
            res = "" if c.residual is None else f" residual={c.residual:.3e}"
            bnd = "" if c.bound is None else f" bound={c.bound:.3e}"
            tol = "" if c.tolerance is None else f" tol={c.tolerance:.1e}"
            out.append(f"[{status}] {c.id}: {c.identity}{res}{bnd}{tol}")
        return out
