"""Scenario reports: named checks with measured values and tolerances."""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np


def _clean(value):
    """JSON-safe copy with ``inf``/``nan`` as string sentinels."""
    if isinstance(value, float):
        if math.isnan(value):
            return "nan"
        if math.isinf(value):
            return "inf" if value > 0 else "-inf"
        return value
    if isinstance(value, np.ndarray):
        return _clean(value.tolist())
    if isinstance(value, dict):
        return {str(k): _clean(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_clean(v) for v in value]
    if hasattr(value, "item") and not isinstance(value, (str, bytes)):
        return _clean(value.item())
    return value


@dataclass
class Assertion:
    """One check: ``value`` compared against ``expected`` within ``tolerance``.

    ``reference`` names the statement being reproduced, ``passed`` is decided
    by the caller since comparison modes differ (equality, bounds, growth).
    """

    name: str
    reference: str
    value: object
    expected: object
    tolerance: float | None
    passed: bool

    def to_json(self) -> dict:
        return _clean({"name": self.name, "reference": self.reference, "value": self.value,
                       "expected": self.expected, "tolerance": self.tolerance, "passed": bool(self.passed)})


@dataclass
class Report:
    name: str
    parameters: dict
    assertions: list[Assertion] = field(default_factory=list)
    records: dict = field(default_factory=dict)
    tables: dict[str, str] = field(default_factory=dict)
    figures: dict[str, str] = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(a.passed for a in self.assertions)

    def check(self, name: str, reference: str, value, expected=None, tolerance: float | None = None,
              passed: bool | None = None) -> Assertion:
        """Record an assertion.

        Without an explicit ``passed`` flag the check is ``|value - expected| <= tolerance``
        (exact equality when ``tolerance`` is ``None``).
        """
        if passed is None:
            if tolerance is None:
                passed = value == expected
            else:
                passed = bool(abs(value - expected) <= tolerance)
        a = Assertion(name, reference, value, expected, tolerance, bool(passed))
        self.assertions.append(a)
        return a

    def failures(self) -> list[Assertion]:
        return [a for a in self.assertions if not a.passed]

    def to_json(self) -> dict:
        return {
            "scenario": self.name,
            "parameters": _clean(self.parameters),
            "passed": self.passed,
            "assertions": [a.to_json() for a in self.assertions],
            "records": _clean(self.records),
        }

    def dumps(self) -> str:
        """Byte-stable serialization (sorted keys, fixed indentation)."""
        return json.dumps(self.to_json(), sort_keys=True, indent=2) + "\n"

    def write(self, out_dir, plots: bool = False) -> list[Path]:
        """Write ``report.json``, the CSV tables and (optionally) the SVG figures."""
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        written = [out / "report.json"]
        written[0].write_text(self.dumps())
        for name, text in sorted(self.tables.items()):
            path = out / f"{name}.csv"
            path.write_text(text)
            written.append(path)
        if plots:
            for name, text in sorted(self.figures.items()):
                path = out / f"{name}.svg"
                path.write_text(text)
                written.append(path)
        return written

    def summary_lines(self) -> list[str]:
        return [f"{'PASS' if a.passed else 'FAIL'} {self.name}:{a.name} value={_clean(a.value)}"
                for a in self.assertions]


def csv_table(header: list[str], rows) -> str:
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(repr(float(v)) if isinstance(v, float) else str(v) for v in row))
    return "\n".join(lines) + "\n"
