"""Pass/fail reports with residuals and witnesses."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, List, Optional


@dataclass
class Check:
    name: str
    passed: bool
    residual: float = 0.0
    witness: Optional[Any] = None
    note: str = ""

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "passed": bool(self.passed),
            "residual": float(self.residual),
            "witness": _jsonable(self.witness),
            "note": self.note,
        }


@dataclass
class VerificationReport:
    """Ordered list of named checks; the report passes iff every check does."""

    checks: List[Check] = field(default_factory=list)
    reason: str = ""

    def add(self, name, passed, residual=0.0, witness=None, note="") -> Check:
        c = Check(name, bool(passed), float(residual), witness, note)
        self.checks.append(c)
        return c

    def structural(self, name: str, note: str) -> Check:
        return self.add(name, True, 0.0, None, f"structural: pass ({note})")

    @property
    def ok(self) -> bool:
        return not self.reason and all(c.passed for c in self.checks)

    def __bool__(self):
        return self.ok

    def __getitem__(self, name: str) -> Check:
        for c in self.checks:
            if c.name == name:
                return c
        raise KeyError(name)

    def failed(self) -> List[Check]:
        return [c for c in self.checks if not c.passed]

    @property
    def max_residual(self) -> float:
        return max((c.residual for c in self.checks), default=0.0)

    def to_dict(self) -> dict:
        out = {"ok": self.ok, "checks": [c.to_dict() for c in self.checks]}
        if self.reason:
            out["reason"] = self.reason
        return out

    def summary(self) -> str:
        if self.reason:
            return f"FAIL ({self.reason})"
        bad = self.failed()
        if not bad:
            return f"PASS ({len(self.checks)} checks, max residual {self.max_residual:.3g})"
        names = ", ".join(c.name for c in bad)
        return f"FAIL: {names}"


def _jsonable(x):
    if x is None or isinstance(x, (bool, int, float, str)):
        return x
    if isinstance(x, (tuple, list)):
        return [_jsonable(v) for v in x]
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    return str(x)
