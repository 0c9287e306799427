"""Linear inequality systems over named rate variables.

Coefficients are exact :class:`fractions.Fraction` values; constants are
floats (they come from entropies). Comparisons against constants use an
absolute tolerance of ``TOL``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Mapping

from ..errors import InputError

TOL = 1e-9
RELATIONS = ("<=", ">=", "=")


def _frac(v) -> Fraction:
    if isinstance(v, Fraction):
        return v
    if isinstance(v, float):
        return Fraction(v).limit_denominator(1 << 20) if v != int(v) else Fraction(int(v))
    return Fraction(v)


@dataclass(frozen=True)
class Row:
    """``sum(coeffs[v] * v) rel const``."""

    coeffs: tuple  # sorted ((name, Fraction), ...), zero entries removed
    rel: str
    const: float
    label: str = ""

    @classmethod
    def make(cls, coeffs: Mapping, rel: str, const: float, label: str = "") -> "Row":
        if rel not in RELATIONS:
            raise InputError(f"unknown relation {rel!r}")
        items = tuple(sorted((k, _frac(v)) for k, v in coeffs.items() if _frac(v) != 0))
        return cls(items, rel, float(const), label)

    @property
    def cmap(self) -> dict:
        return dict(self.coeffs)

    @property
    def variables(self) -> set:
        return {k for k, _ in self.coeffs}

    def lhs(self, assignment: Mapping) -> float:
        return sum(float(c) * float(assignment[k]) for k, c in self.coeffs)

    def slack(self, assignment: Mapping) -> float:
        """Nonnegative iff satisfied; equalities report minus the absolute gap."""
        lhs = self.lhs(assignment)
        if self.rel == "<=":
            return self.const - lhs
        if self.rel == ">=":
            return lhs - self.const
        return -abs(lhs - self.const)

    def as_le(self) -> list:
        """Equivalent rows in ``<=`` form."""
        if self.rel == "<=":
            return [self]
        neg = Row(tuple((k, -c) for k, c in self.coeffs), "<=", -self.const, self.label)
        if self.rel == ">=":
            return [neg]
        pos = Row(self.coeffs, "<=", self.const, self.label)
        return [pos, neg]

    def scaled(self, factor: Fraction) -> "Row":
        factor = _frac(factor)
        return Row(tuple((k, c * factor) for k, c in self.coeffs), self.rel, self.const * float(factor), self.label)

    def to_dict(self) -> dict:
        return {
            "coeffs": {k: str(c) for k, c in self.coeffs},
            "rel": self.rel,
            "const": self.const,
            "label": self.label,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "Row":
        return cls.make({k: Fraction(v) for k, v in data["coeffs"].items()}, data["rel"], data["const"], data.get("label", ""))

    def __str__(self) -> str:
        terms = []
        for k, c in self.coeffs:
            sign = "-" if c < 0 else "+"
            mag = abs(c)
            terms.append(f"{sign} {k}" if mag == 1 else f"{sign} {mag}*{k}")
        text = " ".join(terms).lstrip("+ ") or "0"
        return f"{text} {self.rel} {self.const:.12g}"


@dataclass
class IneqSystem:
    """Ordered variable list plus rows; every row uses declared variables only."""

    variables: list = field(default_factory=list)
    rows: list = field(default_factory=list)
    name: str = ""

    def declare(self, *names: str) -> None:
        for n in names:
            if n not in self._varset:
                self.variables.append(n)
                self._varset.add(n)

    def __post_init__(self):
        self._varset = set(self.variables)
        for row in self.rows:
            self._check(row)

    def _check(self, row: Row) -> None:
        missing = row.variables - self._varset
        if missing:
            raise InputError(f"row {row.label!r} uses undeclared variables {sorted(missing)}")

    def add(self, coeffs: Mapping, rel: str, const: float, label: str = "") -> Row:
        row = Row.make(coeffs, rel, const, label)
        self._check(row)
        self.rows.append(row)
        return row

    def find(self, label: str) -> Row:
        for row in self.rows:
            if row.label == label:
                return row
        raise KeyError(label)

    def slacks(self, assignment: Mapping) -> list:
        missing = set(self.variables) - set(assignment)
        if missing:
            raise InputError(f"assignment misses {sorted(missing)}")
        return [(row, row.slack(assignment)) for row in self.rows]

    def check_witness(self, assignment: Mapping, tol: float = TOL) -> "WitnessReport":
        """Evaluate every row at a full assignment of the system's variables."""
        results = self.slacks(assignment)
        violated = [(r.label or str(r), s) for r, s in results if s < -tol]
        min_slack = min((s for _, s in results), default=float("inf"))
        return WitnessReport(not violated, min_slack, violated, len(results))

    def to_dict(self) -> dict:
        return {"name": self.name, "variables": list(self.variables), "rows": [r.to_dict() for r in self.rows]}

    @classmethod
    def from_dict(cls, data: dict) -> "IneqSystem":
        return cls(list(data["variables"]), [Row.from_dict(r) for r in data["rows"]], data.get("name", ""))

    def copy(self) -> "IneqSystem":
        return IneqSystem(list(self.variables), list(self.rows), self.name)


@dataclass(frozen=True)
class WitnessReport:
    ok: bool
    min_slack: float
    violated: list
    checked: int


def combine(weighted: Iterable, label: str = "combination") -> Row:
    """Nonnegative combination of rows in ``<=`` form.

    ``weighted`` yields ``(row, weight)``. A ``>=`` row is negated first,
    so subtracting a covering bound is a positive weight on it. Equalities
    accept weights of either sign. The result is a ``<=`` row.
    """
    acc: dict = {}
    const = 0.0
    for row, w in weighted:
        w = _frac(w)
        if row.rel == "=":
            base = row
        else:
            if w < 0:
                raise InputError(f"negative weight on inequality {row.label!r}")
            base = row.as_le()[0]
        for k, c in base.coeffs:
            acc[k] = acc.get(k, Fraction(0)) + w * c
        const += float(w) * base.const
    return Row.make(acc, "<=", const, label)


def dump_systems(systems: list, path, meta: dict | None = None) -> None:
    doc = {"systems": [s.to_dict() for s in systems]}
    if meta:
        doc["meta"] = meta
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=1, sort_keys=True)


def load_systems(path) -> list:
    with open(path) as fh:
        doc = json.load(fh)
    if "systems" in doc:
        return [IneqSystem.from_dict(s) for s in doc["systems"]]
    return [IneqSystem.from_dict(doc)]
