"""Diagnostic records collected while running experiments.

Library code reports conditions the caller has to decide about (an
intensity that violates A1, a bandwidth picked at the edge of the grid,
a training class that had to be regenerated) as Diagnostic records on a
DiagnosticLog instead of failing.  Each record is also sent to the
module logger at WARNING level.
"""

from __future__ import annotations

import logging
from collections import Counter
from dataclasses import dataclass, field

logger = logging.getLogger(__name__)

# Known categories, in the order summaries list them.
CATEGORIES = {
    "assumption_a1": "intensity not bounded away from zero; theoretical bounds unavailable",
    "class_regenerated": "training set without one of the classes was redrawn",
    "folds_reduced": "class smaller than the requested CV folds",
    "bandwidth_fallback": "CV bandwidth unavailable; fallback bandwidth used",
    "bandwidth_edge": "CV selected a bandwidth at the edge of the grid",
}
SUMMARY_CONTEXTS = 3


@dataclass(frozen=True)
class Diagnostic:
    """A single diagnostic produced by an operation."""
    category: str       # a CATEGORIES key
    message: str
    context: str = ""   # figure id, run, class

    def __str__(self) -> str:
        loc = f"{self.context}: " if self.context else ""
        return f"{self.category}: {loc}{self.message}"


@dataclass
class DiagnosticLog:
    """Ordered collection of diagnostics."""
    records: list[Diagnostic] = field(default_factory=list)

    def add(self, category: str, message: str, context: str = "") -> Diagnostic:
        record = Diagnostic(category, message, context)
        self.records.append(record)
        logger.warning("%s", record)
        return record

    def extend(self, other: DiagnosticLog) -> None:
        self.records.extend(other.records)

    def by_category(self, category: str) -> list[Diagnostic]:
        return [r for r in self.records if r.category == category]

    def counts(self) -> dict[str, int]:
        """Records per category; known categories first, then unknown ones by first appearance."""
        seen: Counter[str] = Counter(r.category for r in self.records)
        order = [c for c in CATEGORIES if c in seen]
        order += [c for c in seen if c not in CATEGORIES]
        return {c: seen[c] for c in order}

    def __len__(self) -> int:
        return len(self.records)

    def summary(self) -> str:
        """One line per category: count, meaning and where it first happened."""
        if not self.records:
            return "no diagnostics"
        lines = []
        for category, n in self.counts().items():
            contexts = list(dict.fromkeys(r.context for r in self.by_category(category) if r.context))
            where = ", ".join(contexts[:SUMMARY_CONTEXTS])
            if len(contexts) > SUMMARY_CONTEXTS:
                where += f" (+{len(contexts) - SUMMARY_CONTEXTS} more)"
            suffix = f" [{where}]" if where else ""
            lines.append(f"{n} x {category}: {CATEGORIES.get(category, 'unclassified')}{suffix}")
        return "\n".join(lines)

    def report(self) -> str:
        """Every record, grouped under its category."""
        if not self.records:
            return "no diagnostics"
        lines = []
        for category in self.counts():
            lines.append(f"{category}: {CATEGORIES.get(category, 'unclassified')}")
            for r in self.by_category(category):
                loc = f"{r.context}: " if r.context else ""
                lines.append(f"  {loc}{r.message}")
        return "\n".join(lines)
