"""Exact Fourier-Motzkin projection of inequality systems onto rate variables."""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Mapping, Sequence

import numpy as np

from ..errors import Blowup, DimensionMismatch, InputError
from .system import TOL, IneqSystem, Row

DEFAULT_ROW_CAP = 200_000

FEASIBLE = "feasible"
MARGINAL = "marginal"
INFEASIBLE = "infeasible"
_RANK = {INFEASIBLE: 0, MARGINAL: 1, FEASIBLE: 2}


def row_cap() -> int:
    raw = os.environ.get("MDLAB_ROW_CAP")
    return int(raw) if raw else DEFAULT_ROW_CAP


@dataclass
class RateRegion:
    """Union of projected pieces; each piece is a list of ``<=`` rows over ``kept``."""

    kept: tuple
    pieces: list
    log: list = field(default_factory=list)

    @property
    def rows(self) -> list:
        return [r for piece in self.pieces for r in piece]

    def to_dict(self) -> dict:
        return {
            "kept": list(self.kept),
            "pieces": [[r.to_dict() for r in piece] for piece in self.pieces],
            "log": list(self.log),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "RateRegion":
        return cls(
            tuple(data["kept"]),
            [[Row.from_dict(r) for r in piece] for piece in data["pieces"]],
            list(data.get("log", [])),
        )

    def dump(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh, indent=1, sort_keys=True)

    @classmethod
    def load(cls, path) -> "RateRegion":
        with open(path) as fh:
            return cls.from_dict(json.load(fh))

    def __str__(self) -> str:
        parts = []
        for i, piece in enumerate(self.pieces):
            parts.append(f"piece {i}:")
            parts.extend(f"  {r}" for r in piece)
        return "\n".join(parts)


# internal row: (coeffs dict var -> Fraction, const float, history frozenset)


def _normalized(coeffs: dict, const: float):
    """Scale so the first (by name) coefficient has magnitude one."""
    first = min(coeffs)
    scale = abs(coeffs[first])
    if scale != 1:
        coeffs = {k: v / scale for k, v in coeffs.items()}
        const = const / float(scale)
    return tuple(sorted(coeffs.items())), const


class _RowSet:
    """Deduplicating store keeping the tightest constant per coefficient direction."""

    def __init__(self):
        self.rows: dict = {}
        self.infeasible: float | None = None

    def add(self, coeffs: dict, const: float, hist: frozenset) -> None:
        coeffs = {k: v for k, v in coeffs.items() if v != 0}
        if not coeffs:
            if const < -TOL:
                self.infeasible = const if self.infeasible is None else min(self.infeasible, const)
            return
        key, const = _normalized(coeffs, const)
        old = self.rows.get(key)
        if old is None or const < old[0] - 1e-12 or (abs(const - old[0]) <= 1e-12 and len(hist) < len(old[1])):
            self.rows[key] = (const, hist)

    def __len__(self):
        return len(self.rows)

    def items(self):
        for key, (const, hist) in self.rows.items():
            yield dict(key), const, hist


def _substitute(eq: tuple, var: str, row: tuple) -> tuple:
    coeffs, const = row
    if var not in coeffs:
        return row
    ec, ek = eq
    f = coeffs[var] / ec[var]
    out = dict(coeffs)
    for k, v in ec.items():
        out[k] = out.get(k, Fraction(0)) - f * v
    out.pop(var, None)
    return {k: v for k, v in out.items() if v != 0}, const - float(f) * ek


def _prepare(system: IneqSystem, keep: set, log: list):
    """Substitute equalities away, preferring to eliminate non-kept variables."""
    eqs, ineqs = [], []
    for row in system.rows:
        if row.rel == "=":
            eqs.append((row.cmap, row.const))
        else:
            le = row.as_le()[0]
            ineqs.append((le.cmap, le.const))
    contradiction = None
    while eqs:
        coeffs, const = eqs.pop(0)
        coeffs = {k: v for k, v in coeffs.items() if v != 0}
        candidates = [v for v in coeffs if v not in keep]
        if not candidates:
            if coeffs:
                ineqs.append((coeffs, const))
                ineqs.append(({k: -v for k, v in coeffs.items()}, -const))
            elif abs(const) > TOL:
                contradiction = -abs(const)
            continue
        counts = {v: sum(1 for c, _ in ineqs + eqs if v in c) for v in candidates}
        var = min(candidates, key=lambda v: (counts[v], v))
        eq = (coeffs, const)
        eqs = [_substitute(eq, var, e) for e in eqs]
        ineqs = [_substitute(eq, var, r) for r in ineqs]
        log.append(f"substitute {var}")
    return ineqs, contradiction


def _lp_redundant_filter(rows: list) -> list:
    """Drop rows implied by the others (LP test, tolerance ``TOL``)."""
    from scipy.optimize import linprog

    if len(rows) < 2:
        return rows
    names = sorted({k for c, _, _ in rows for k in c})
    if not names:
        return rows
    index = {n: i for i, n in enumerate(names)}
    A = np.zeros((len(rows), len(names)))
    b = np.zeros(len(rows))
    for i, (c, k, _) in enumerate(rows):
        for name, v in c.items():
            A[i, index[name]] = float(v)
        b[i] = k
    alive = np.ones(len(rows), dtype=bool)
    bounds = [(None, None)] * len(names)
    for i in range(len(rows)):
        alive[i] = False
        if not alive.any():
            alive[i] = True
            continue
        res = linprog(-A[i], A_ub=A[alive], b_ub=b[alive], bounds=bounds, method="highs")
        if res.status == 0 and -res.fun <= b[i] + TOL:
            continue  # redundant: stays dropped
        alive[i] = True
    return [r for r, a in zip(rows, alive) if a]


def _is_feasible_lp(rows: list) -> bool:
    from scipy.optimize import linprog

    names = sorted({k for c, _, _ in rows for k in c})
    if not names:
        return all(k >= -TOL for _, k, _ in rows)
    index = {n: i for i, n in enumerate(names)}
    A = np.zeros((len(rows), len(names)))
    b = np.array([k for _, k, _ in rows]) + TOL
    for i, (c, _, _) in enumerate(rows):
        for name, v in c.items():
            A[i, index[name]] = float(v)
    res = linprog(np.zeros(len(names)), A_ub=A, b_ub=b, bounds=[(None, None)] * len(names), method="highs")
    return res.status != 2


def fm_eliminate(
    system: IneqSystem,
    keep: Sequence[str],
    *,
    cap: int | None = None,
    prune: str = "syntactic",
) -> RateRegion:
    """Project ``system`` onto ``keep`` by Fourier-Motzkin elimination.

    Equalities are substituted first. Variables are then eliminated one at
    a time, always picking the one with the fewest upper x lower bound
    pairs (ties by name). New rows are deduplicated by normalized direction
    (tightest constant kept) and filtered by Chernikov's rule. With
    ``prune="lp"`` an LP redundancy test also runs after every step.

    Raises :class:`~mdlab.errors.Blowup` when an intermediate system would
    exceed ``cap`` rows (default 200000, or ``MDLAB_ROW_CAP``).
    """
    keep = tuple(keep)
    unknown = set(keep) - set(system.variables)
    if unknown:
        raise InputError(f"kept variables {sorted(unknown)} are not in the system")
    if prune not in ("syntactic", "lp"):
        raise InputError(f"unknown prune mode {prune!r}")
    cap = row_cap() if cap is None else cap
    log: list = [f"system {system.name or '?'}: {len(system.rows)} rows, keep {','.join(keep)}"]
    ineqs, contradiction = _prepare(system, set(keep), log)

    store = _RowSet()
    for i, (c, k) in enumerate(ineqs):
        store.add(c, k, frozenset([i]))
    if contradiction is not None:
        store.infeasible = contradiction
    rows = list(store.items())
    if prune == "lp":
        if not _is_feasible_lp(rows):
            return RateRegion(keep, [[Row((), "<=", -1.0, "infeasible")]], log + ["infeasible"])
        rows = _lp_redundant_filter(rows)

    eliminated = 0
    pending = {v for c, _, _ in rows for v in c} - set(keep)
    while pending and store.infeasible is None:
        stats = {}
        for v in pending:
            pos = sum(1 for c, _, _ in rows if c.get(v, 0) > 0)
            neg = sum(1 for c, _, _ in rows if c.get(v, 0) < 0)
            stats[v] = (pos * neg, v, pos, neg)
        _, var, npos, nneg = min(stats.values())
        eliminated += 1
        nxt = _RowSet()
        ups, lows = [], []
        for c, k, h in rows:
            a = c.get(var, 0)
            if a > 0:
                ups.append((c, k, h))
            elif a < 0:
                lows.append((c, k, h))
            else:
                nxt.add(c, k, h)
        dropped = 0
        for cu, ku, hu in ups:
            au = cu[var]
            for cl, kl, hl in lows:
                hist = hu | hl
                if len(hist) > eliminated + 1:
                    dropped += 1
                    continue
                al = -cl[var]
                merged = {}
                for name in cu.keys() | cl.keys():
                    if name == var:
                        continue
                    val = al * cu.get(name, 0) + au * cl.get(name, 0)
                    if val != 0:
                        merged[name] = val
                nxt.add(merged, float(al) * ku + float(au) * kl, hist)
                if len(nxt) > cap:
                    raise Blowup(f"more than {cap} rows while eliminating {var}")
        if nxt.infeasible is not None:
            store.infeasible = nxt.infeasible
        rows = list(nxt.items())
        if prune == "lp" and store.infeasible is None:
            rows = _lp_redundant_filter(rows)
        log.append(
            f"eliminate {var}: {npos} upper x {nneg} lower, chernikov dropped {dropped}, {len(rows)} rows"
        )
        pending = {v for c, _, _ in rows for v in c} - set(keep)

    if store.infeasible is not None:
        log.append("infeasible")
        return RateRegion(keep, [[Row((), "<=", store.infeasible, "infeasible")]], log)
    out = [Row.make(c, "<=", k) for c, k, _ in sorted(rows, key=lambda r: (sorted(r[0].items()), r[1]))]
    log.append(f"result: {len(out)} rows")
    return RateRegion(keep, [out], log)


def project(systems, keep: Sequence[str], **kwargs) -> RateRegion:
    """Project each system (or a single one) and return the union region."""
    if isinstance(systems, IneqSystem):
        systems = [systems]
    pieces, log = [], []
    for s in systems:
        part = fm_eliminate(s, keep, **kwargs)
        pieces.extend(part.pieces)
        log.extend(part.log)
    return RateRegion(tuple(keep), pieces, log)


def _point_map(region: RateRegion, point) -> dict:
    if isinstance(point, Mapping):
        if set(point) != set(region.kept):
            raise DimensionMismatch(f"point keys {sorted(point)} != region variables {list(region.kept)}")
        return {k: float(v) for k, v in point.items()}
    point = list(point)
    if len(point) != len(region.kept):
        raise DimensionMismatch(f"point has {len(point)} coordinates, region has {len(region.kept)}")
    return {k: float(v) for k, v in zip(region.kept, point)}


def min_slack(rows: list, assignment: Mapping) -> float:
    return min((r.slack(assignment) for r in rows), default=float("inf"))


def classify(slack: float) -> str:
    if slack > TOL:
        return FEASIBLE
    if slack < -TOL:
        return INFEASIBLE
    return MARGINAL


def is_member(region: RateRegion, point) -> str:
    """``feasible``, ``infeasible`` or ``marginal`` (within 1e-9 of the boundary)."""
    x = _point_map(region, point)
    if not region.pieces:
        return INFEASIBLE
    best = INFEASIBLE
    for piece in region.pieces:
        status = classify(min_slack(piece, x))
        if _RANK[status] > _RANK[best]:
            best = status
    return best


def sample_slice(region: RateRegion, fixed: Mapping, sweep: str, start: float, stop: float, step: float) -> list:
    """Membership along ``sweep`` from ``start`` to ``stop`` inclusive."""
    if step <= 0:
        raise InputError("step must be positive")
    covered = set(fixed) | {sweep}
    if covered != set(region.kept) or sweep in fixed:
        raise DimensionMismatch(f"fixed + sweep must cover exactly {list(region.kept)}")
    out = []
    i = 0
    while True:
        value = start + i * step
        if value > stop + 1e-12:
            break
        point = dict(fixed)
        point[sweep] = value
        out.append((value, is_member(region, point)))
        i += 1
    return out
