"""Check records and verification reports with deterministic JSON."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Any

PASS, FAIL, INCONCLUSIVE = "pass", "fail", "inconclusive"


@dataclass
class Check:
    name: str
    residual: float
    tolerance: float
    verdict: str
    witness: str | None = None
    detail: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return self.verdict == PASS

    def __bool__(self) -> bool:
        return self.passed

    @classmethod
    def from_residual(cls, name: str, residual: float, tolerance: float, witness=None, **detail) -> "Check":
        ok = residual <= tolerance and not math.isnan(residual)
        return cls(name, float(residual), float(tolerance), PASS if ok else FAIL, witness if not ok else None, detail)

    @classmethod
    def from_bool(cls, name: str, ok: bool, witness=None, **detail) -> "Check":
        return cls(name, 0.0 if ok else 1.0, 0.0, PASS if ok else FAIL, None if ok else witness, detail)

    def to_json(self) -> dict:
        out = {
            "name": self.name,
            "residual": _num(self.residual),
            "tolerance": _num(self.tolerance),
            "verdict": self.verdict,
        }
        if self.witness is not None:
            out["witness"] = self.witness
        if self.detail:
            out["detail"] = _jsonable(self.detail)
        return out


def _num(x: float):
    if math.isnan(x) or math.isinf(x):
        return str(x)
    return float(f"{x:.6e}")


def _jsonable(obj: Any):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in sorted(obj.items(), key=lambda kv: str(kv[0]))}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, float):
        return _num(obj)
    if isinstance(obj, complex):
        return [_num(obj.real), _num(obj.imag)]
    if hasattr(obj, "tolist"):
        return _jsonable(obj.tolist())
    if isinstance(obj, (str, int, bool)) or obj is None:
        return obj
    return str(obj)


@dataclass
class VerificationReport:
    command: list[str]
    source: str
    environment: dict
    checks: list[Check] = field(default_factory=list)
    results: dict = field(default_factory=dict)

    def add(self, check: Check) -> Check:
        self.checks.append(check)
        return check

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def to_json(self) -> dict:
        return {
            "command": list(self.command),
            "source": self.source,
            "environment": _jsonable(self.environment),
            "checks": [c.to_json() for c in sorted(self.checks, key=lambda c: c.name)],
            "results": _jsonable(self.results),
            "overall": PASS if self.passed else FAIL,
        }

    def dumps(self) -> str:
        return json.dumps(self.to_json(), indent=2, sort_keys=True)
