from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Dict

BOUND_SLACK = 1e-12


@dataclass(frozen=True)
class Report:
    """Outcome of one check.

    For axiom checks ``lhs`` is the measured deviation and ``rhs`` the
    threshold it was held to; for bound audits ``lhs`` is the measured
    quantity and ``rhs`` the proven bound.  Raw values go in ``details``.
    """

    name: str
    passed: bool
    lhs: float
    rhs: float
    details: Dict[str, Any] = field(default_factory=dict)

    def __bool__(self) -> bool:
        return self.passed

    def to_json(self) -> dict:
        return {
            "name": self.name,
            "pass": bool(self.passed),
            "lhs": float(self.lhs),
            "rhs": float(self.rhs),
            "details": dict(sorted(self.details.items())),
        }


def bound_report(name: str, lhs: float, rhs: float, **details) -> Report:
    """A bound audit: passes iff ``lhs <= rhs + 1e-12``."""
    return Report(name, bool(lhs <= rhs + BOUND_SLACK), float(lhs), float(rhs), details)


def within(name: str, deviation: float, threshold: float, **details) -> Report:
    return Report(name, bool(deviation <= threshold), float(deviation), float(threshold), details)
