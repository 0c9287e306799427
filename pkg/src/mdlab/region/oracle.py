"""LP-based membership on unprojected systems, independent of elimination."""

from __future__ import annotations

from typing import Mapping

import numpy as np
from scipy.optimize import linprog

from ..errors import DimensionMismatch, InputError
from .fm import FEASIBLE, INFEASIBLE, MARGINAL
from .system import TOL, IneqSystem

SLACK_CAP = 1.0
PROBE = 1e-6


def max_slack(system: IneqSystem, point: Mapping) -> float:
    """Largest t such that every inequality holds with slack t at some lift of ``point``.

    Equalities are imposed exactly. Returns ``-inf`` when even the
    equalities cannot be met; the value is capped at ``SLACK_CAP``.
    """
    fixed = {k: float(v) for k, v in point.items()}
    unknown = set(fixed) - set(system.variables)
    if unknown:
        raise DimensionMismatch(f"point names {sorted(unknown)} not in the system")
    free = [v for v in system.variables if v not in fixed]
    col = {v: i for i, v in enumerate(free)}
    nt = len(free)  # column of t
    a_ub, b_ub, a_eq, b_eq = [], [], [], []
    for row in system.rows:
        for le in row.as_le() if row.rel != "=" else [row]:
            vec = np.zeros(nt + 1)
            const = le.const
            for k, c in le.coeffs:
                if k in fixed:
                    const -= float(c) * fixed[k]
                else:
                    vec[col[k]] += float(c)
            if row.rel == "=":
                a_eq.append(vec)
                b_eq.append(const)
            else:
                vec[nt] = 1.0  # lhs + t <= const
                a_ub.append(vec)
                b_ub.append(const)
    c = np.zeros(nt + 1)
    c[nt] = -1.0
    bounds = [(None, None)] * nt + [(None, SLACK_CAP)]
    res = linprog(
        c,
        A_ub=np.array(a_ub) if a_ub else None,
        b_ub=np.array(b_ub) if b_ub else None,
        A_eq=np.array(a_eq) if a_eq else None,
        b_eq=np.array(b_eq) if b_eq else None,
        bounds=bounds,
        method="highs",
    )
    if res.status == 2:
        return float("-inf")
    if res.status != 0:
        raise InputError(f"LP failed: {res.message}")
    return float(res.x[nt])


def lp_member(system: IneqSystem, point: Mapping, eps: float = PROBE) -> str:
    """Three-valued membership of ``point`` in the shadow of ``system``.

    Rows that are tight on the whole lifted polyhedron (``r <= rho <= r``,
    pinned reductions) cap the LP slack at zero everywhere, so the slack
    alone cannot separate interior from boundary. A member point is
    called feasible when all ``2 d`` axis probes at distance ``eps`` are
    members too, and marginal otherwise.
    """
    if not lp_feasible(system, point):
        return INFEASIBLE
    for name in point:
        for sign in (1.0, -1.0):
            probe = dict(point)
            probe[name] = float(point[name]) + sign * eps
            if not lp_feasible(system, probe):
                return MARGINAL
    return FEASIBLE


def lp_feasible(system: IneqSystem, point: Mapping, tol: float = TOL) -> bool:
    return max_slack(system, point) >= -tol


def union_member(systems, point: Mapping) -> str:
    best = INFEASIBLE
    order = {INFEASIBLE: 0, MARGINAL: 1, FEASIBLE: 2}
    for s in systems:
        status = lp_member(s, point)
        if order[status] > order[best]:
            best = status
    return best


def bisect_threshold(system: IneqSystem, fixed: Mapping, sweep: str, lo: float, hi: float, iters: int = 60) -> float:
    """Smallest feasible value of ``sweep`` in ``[lo, hi]``, assuming feasibility is upward closed.

    Returns ``nan`` when ``hi`` itself is infeasible.
    """
    def ok(v):
        return lp_feasible(system, {**fixed, sweep: v})

    if not ok(hi):
        return float("nan")
    if ok(lo):
        return lo
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        if ok(mid):
            hi = mid
        else:
            lo = mid
    return hi
