"""Machine-readable verification reports."""
from __future__ import annotations

import csv
import io
import json
import time
from dataclasses import dataclass, field

from . import quadrature

SCHEMA_VERSION = 1
CHECK_FIELDS = ("name", "computed", "reference", "abs_error", "rel_error", "tolerance", "pass")


def make_check(name: str, computed: float, reference: float, tolerance: float) -> dict:
    """A check passes when ``rel_error <= tolerance``, or ``abs_error <= tolerance`` for a zero reference."""
    computed, reference = float(computed), float(reference)
    abs_error = abs(computed - reference)
    # No relative error exists against a zero reference; null keeps the JSON strict.
    rel_error = abs_error / abs(reference) if reference != 0 else None
    ok = (abs_error <= tolerance) if reference == 0 else (rel_error <= tolerance)
    return {"name": name, "computed": computed, "reference": reference, "abs_error": abs_error,
            "rel_error": rel_error, "tolerance": float(tolerance), "pass": bool(ok)}


def bound_check(name: str, value: float, floor: float, tolerance: float) -> dict:
    """``value >= floor - tolerance`` phrased as a zero-reference check on the shortfall."""
    return make_check(name, max(0.0, floor - float(value)), 0.0, tolerance)


@dataclass
class VerificationReport:
    command: str
    params: dict
    checks: list = field(default_factory=list)
    extras: dict = field(default_factory=dict)
    wall_time: float = 0.0
    quadrature_stats: dict = field(default_factory=dict)
    _started: float = field(default=0.0, repr=False)

    def __enter__(self):
        quadrature.reset_stats()
        self._started = time.perf_counter()
        return self

    def __exit__(self, *exc):
        self.wall_time = time.perf_counter() - self._started
        self.quadrature_stats = quadrature.get_stats()
        return False

    def add(self, check: dict) -> None:
        self.checks.append(check)

    @property
    def passed(self) -> bool:
        return all(c["pass"] for c in self.checks)

    def as_dict(self) -> dict:
        return {"schema": SCHEMA_VERSION, "command": self.command, "params": self.params,
                "checks": self.checks, "results": self.extras, "pass": self.passed,
                "wall_time": self.wall_time, "quadrature_stats": self.quadrature_stats}

    def to_json(self) -> str:
        return json.dumps(self.as_dict(), indent=2, default=_jsonable)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.DictWriter(buf, fieldnames=CHECK_FIELDS, lineterminator="\n")
        w.writeheader()
        for c in self.checks:
            w.writerow({k: (repr(v) if isinstance(v, float) else v) for k, v in c.items()})
        return buf.getvalue()


def _jsonable(obj):
    if hasattr(obj, "tolist"):
        return obj.tolist()
    if hasattr(obj, "item"):
        return obj.item()
    raise TypeError(f"cannot serialize {type(obj).__name__}")
