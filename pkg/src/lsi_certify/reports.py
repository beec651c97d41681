"""Check reports shared by every verification routine."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass
class CheckReport:
    """Outcome of a sampled inequality check.

    ``worst_margin`` is the most violated slack (positive means satisfied);
    ``passed`` is ``worst_margin >= -tolerance``.
    """

    name: str
    passed: bool
    worst_margin: float
    worst_location: dict
    samples: int
    tolerance: float
    skipped: int = 0
    details: dict = field(default_factory=dict)

    def __bool__(self) -> bool:
        return self.passed

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "passed": self.passed,
            "worst_margin": self.worst_margin,
            "worst_location": self.worst_location,
            "samples": self.samples,
            "tolerance": self.tolerance,
            "skipped": self.skipped,
            "details": self.details,
        }

    @classmethod
    def from_margins(cls, name: str, margins, locations, tolerance: float, skipped: int = 0,
                     **details) -> "CheckReport":
        """Build a report from a flat array of margins.

        ``locations`` is a sequence of records or a callable mapping a flat index to one.
        """
        margins = np.asarray(margins, dtype=float).ravel()
        if margins.size == 0:
            return cls(name, True, float("inf"), {}, 0, tolerance, skipped, details)
        k = int(np.argmin(margins))
        worst = float(margins[k])
        return cls(name, bool(worst >= -tolerance), worst,
                   dict(locations(k) if callable(locations) else locations[k]), int(margins.size),
                   tolerance, skipped, details)

    def merge(self, other: "CheckReport") -> "CheckReport":
        """Combine two reports of the same check (associative)."""
        first = self if self.worst_margin <= other.worst_margin else other
        return CheckReport(
            self.name,
            self.passed and other.passed,
            first.worst_margin,
            first.worst_location,
            self.samples + other.samples,
            first.tolerance,
            self.skipped + other.skipped,
            {**other.details, **self.details},
        )


def merge_reports(reports) -> CheckReport:
    reports = list(reports)
    out = reports[0]
    for r in reports[1:]:
        out = out.merge(r)
    return out
