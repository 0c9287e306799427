"""Covering/packing inequality systems for layered multiple-description codes.

A :class:`CodebookLayout` lists the codebooks, each tied to a variable of
the attached :class:`~mdlab.probkit.JointPmf`:

* base codebook ``(A, i)``: decoded when at least ``i`` descriptions of
  ``A`` arrive; binned separately on every description in ``A``;
* refinement codebook ``(k, j)``: decoded when description ``j`` arrives
  together with at least ``k - 1`` others; binned on ``j`` only;
* extra codebook: decoded when the received set contains one of the listed
  sets; binned on their union unless ``bins`` is given;
* sum pair ``(Y, Z)``: the linear scheme's free codeword for ``Y + Z``.

Rate variables are named ``r[V]`` (pool rate), ``rho[V@j]`` (bin rate on
description j), ``rhop[V]`` (rate reduction of a linear codebook),
``sig[W@s:V]`` (share of the sum bin rate credited to V at decoder s) and
``R1..RL`` (description rates).
"""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

from .. import probkit
from ..errors import LayoutMismatch, MissingSumVariable, QTooSmall, UnknownVariable
from ..probkit import JointPmf
from .system import IneqSystem

MAX_CODEBOOKS = 16


def r_var(v: str) -> str:
    return f"r[{v}]"


def rho_var(v: str, j: int) -> str:
    return f"rho[{v}@{j}]"


def rhop_var(v: str) -> str:
    return f"rhop[{v}]"


def rate_var(j: int) -> str:
    return f"R{j}"


def sig_var(w: str, s: frozenset, v: str) -> str:
    return f"sig[{w}@{subset_label(s)}:{v}]"


def subset_label(s) -> str:
    return "".join(str(j) for j in sorted(s)) if all(j < 10 for j in s) else ",".join(map(str, sorted(s)))


@dataclass(frozen=True)
class Codebook:
    var: str
    kind: str
    bins: tuple
    rule: tuple  # kind-specific decode parameters

    def decoded_at(self, s: frozenset) -> bool:
        if self.kind == "base":
            subset, i = self.rule
            return len(s & subset) >= i
        if self.kind == "refine":
            k, j = self.rule
            return j in s and len(s) >= k
        return any(t <= s for t in self.rule)


@dataclass(frozen=True)
class SumSpec:
    y: str
    z: str
    var: str | None = None
    bins: tuple = ()
    decoders: tuple | None = None  # subsets that reconstruct Y+Z; default: those receiving a bin


@dataclass
class CodebookLayout:
    L: int
    base: list = field(default_factory=list)  # (A, i, var)
    refine: list = field(default_factory=list)  # (k, j, var)
    extra: list = field(default_factory=list)  # (sets, var, bins or None)
    sums: list = field(default_factory=list)  # SumSpec

    def codebooks(self) -> list:
        out = []
        for subset, i, var in self.base:
            subset = frozenset(subset)
            if not subset or not subset <= set(range(1, self.L + 1)):
                raise LayoutMismatch(f"base codebook {var}: A={sorted(subset)} not a nonempty subset of [1:{self.L}]")
            if not 1 <= i <= len(subset):
                raise LayoutMismatch(f"base codebook {var}: threshold {i} not in [1:{len(subset)}]")
            out.append(Codebook(var, "base", tuple(sorted(subset)), (subset, i)))
        for k, j, var in self.refine:
            if not 1 <= j <= self.L or not 1 <= k <= self.L:
                raise LayoutMismatch(f"refinement codebook {var}: (k={k}, j={j}) out of range")
            out.append(Codebook(var, "refine", (j,), (k, j)))
        for sets, var, bins in self.extra:
            sets = tuple(frozenset(t) for t in sets)
            if not sets or any(not t or not t <= set(range(1, self.L + 1)) for t in sets):
                raise LayoutMismatch(f"extra codebook {var}: bad decode condition")
            if bins is None:
                bins = sorted(set().union(*sets))
            out.append(Codebook(var, "extra", tuple(sorted(bins)), sets))
        names = [c.var for c in out]
        if len(set(names)) != len(names):
            raise LayoutMismatch(f"codebook variables must be unique, got {names}")
        if len(out) > MAX_CODEBOOKS:
            raise LayoutMismatch(f"{len(out)} codebooks exceed the cap of {MAX_CODEBOOKS}")
        return out

    def to_dict(self) -> dict:
        return {
            "base": [{"A": sorted(a), "i": i, "var": v} for a, i, v in self.base],
            "refine": [{"k": k, "j": j, "var": v} for k, j, v in self.refine],
            "extra": [
                {"sets": [sorted(t) for t in sets], "var": v, **({"bins": list(b)} if b is not None else {})}
                for sets, v, b in self.extra
            ],
            "sums": [
                {
                    "y": s.y,
                    "z": s.z,
                    **({"var": s.var} if s.var else {}),
                    "bins": list(s.bins),
                    **({"decoders": [sorted(d) for d in s.decoders]} if s.decoders is not None else {}),
                }
                for s in self.sums
            ],
        }

    @classmethod
    def from_dict(cls, L: int, data: dict) -> "CodebookLayout":
        try:
            return cls(
                L=L,
                base=[(frozenset(b["A"]), int(b["i"]), b["var"]) for b in data.get("base", [])],
                refine=[(int(r["k"]), int(r["j"]), r["var"]) for r in data.get("refine", [])],
                extra=[(tuple(frozenset(t) for t in e["sets"]), e["var"], e.get("bins")) for e in data.get("extra", [])],
                sums=[
                    SumSpec(
                        s["y"],
                        s["z"],
                        s.get("var"),
                        tuple(s.get("bins", [])),
                        None if "decoders" not in s else tuple(frozenset(d) for d in s["decoders"]),
                    )
                    for s in data.get("sums", [])
                ],
            )
        except (KeyError, TypeError) as exc:
            raise LayoutMismatch(f"malformed layout: {exc}") from exc


@dataclass(frozen=True)
class Decoder:
    subset: frozenset
    distortion: dict | None = None

    @property
    def label(self) -> str:
        return subset_label(self.subset)


@dataclass
class Setup:
    """Everything needed to build a rate-region system."""

    L: int
    pmf: JointPmf
    layout: CodebookLayout
    decoders: list
    source: tuple = ("X",)
    q_bits: float = 1.0
    extra_rows: list = field(default_factory=list)  # dicts: coeffs, rel, const, label

    def to_dict(self) -> dict:
        return {
            "L": self.L,
            "pmf": self.pmf.to_dict(),
            "source": list(self.source),
            "layout": self.layout.to_dict(),
            "decoders": [
                {"subset": sorted(d.subset), **({"distortion": d.distortion} if d.distortion else {})}
                for d in self.decoders
            ],
            "q_bits": self.q_bits,
            "extra_rows": self.extra_rows,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "Setup":
        try:
            L = int(data["L"])
            return cls(
                L=L,
                pmf=JointPmf.from_dict(data["pmf"]),
                layout=CodebookLayout.from_dict(L, data["layout"]),
                decoders=[Decoder(frozenset(d["subset"]), d.get("distortion")) for d in data["decoders"]],
                source=tuple(data.get("source", ["X"])),
                q_bits=float(data.get("q_bits", 1.0)),
                extra_rows=list(data.get("extra_rows", [])),
            )
        except (KeyError, TypeError) as exc:
            raise LayoutMismatch(f"malformed setup: {exc}") from exc

    @classmethod
    def load(cls, path) -> "Setup":
        with open(path) as fh:
            return cls.from_dict(json.load(fh))

    def dump(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh, indent=1)


class _Entropies:
    """Memoized H(group) and H(group | source) on one pmf."""

    def __init__(self, pmf: JointPmf, source: Sequence[str]):
        self.pmf = pmf
        self.source = list(source)
        self._cache: dict = {}

    def h(self, names) -> float:
        key = frozenset(names)
        if not key:
            return 0.0
        if key not in self._cache:
            self._cache[key] = probkit.entropy(self.pmf, sorted(key))
        return self._cache[key]

    def cond(self, names, given) -> float:
        return max(self.h(set(names) | set(given)) - self.h(given), 0.0)

    def given_source(self, names) -> float:
        return self.cond(names, self.source)


def _check_setup(setup: Setup, codebooks: list) -> None:
    names = set(setup.pmf.names)
    for cb in codebooks:
        if cb.var not in names:
            raise LayoutMismatch(f"codebook variable {cb.var!r} not in pmf")
    for s in setup.source:
        if s not in names:
            raise LayoutMismatch(f"source variable {s!r} not in pmf")
    if set(setup.source) & {cb.var for cb in codebooks}:
        raise LayoutMismatch("source variables cannot be codebook variables")
    if not setup.decoders:
        raise LayoutMismatch("at least one decoder is required")
    for d in setup.decoders:
        if not d.subset or not d.subset <= set(range(1, setup.L + 1)):
            raise LayoutMismatch(f"decoder {sorted(d.subset)} not a nonempty subset of [1:{setup.L}]")


class _Builder:
    """Shared machinery: the two schemes differ only in the per-codebook 'entropy term'."""

    def __init__(self, setup: Setup, linear: bool, name: str):
        self.setup = setup
        self.linear = linear
        self.codebooks = setup.layout.codebooks()
        _check_setup(setup, self.codebooks)
        self.ent = _Entropies(setup.pmf, setup.source)
        self.sys = IneqSystem(name=name)
        self.by_var = {cb.var: cb for cb in self.codebooks}
        self._seen_rows: set = set()
        self.sys.declare(*(rate_var(j) for j in range(1, setup.L + 1)))
        for cb in self.codebooks:
            self.sys.declare(r_var(cb.var), *(rho_var(cb.var, j) for j in cb.bins))
            if linear:
                self.sys.declare(rhop_var(cb.var))

    def add(self, coeffs, rel, const, label):
        key = (tuple(sorted((k, Fraction(v)) for k, v in coeffs.items() if v)), rel, round(const, 12))
        if key in self._seen_rows:
            return
        self._seen_rows.add(key)
        self.sys.add(coeffs, rel, const, label)

    def term(self, var: str):
        """(coefficients, constant) standing in for H(var) in the bounds."""
        if self.linear:
            return {rhop_var(var): -1}, self.setup.q_bits
        return {}, self.ent.h([var])

    def covering(self):
        cbs = self.codebooks
        for size in range(1, len(cbs) + 1):
            for group in itertools.combinations(cbs, size):
                names = [cb.var for cb in group]
                coeffs: dict = {}
                const = -self.ent.given_source(names)
                # H(S|X) >= sum(term - r)  <=>  sum(r - term_coeffs) >= sum(term_const) - H(S|X)
                for v in names:
                    tc, tk = self.term(v)
                    coeffs[r_var(v)] = coeffs.get(r_var(v), 0) + 1
                    for k, c in tc.items():
                        coeffs[k] = coeffs.get(k, 0) - c
                    const += tk
                self.add(coeffs, ">=", const, f"cover{{{','.join(names)}}}")

    def packing(self, dec: Decoder, members: dict):
        """``members`` maps variable -> (term coeffs, term const, bin coeffs, pool-rate var)."""
        names = sorted(members)
        for size in range(1, len(names) + 1):
            for part in itertools.combinations(names, size):
                rest = [v for v in names if v not in part]
                coeffs: dict = {}
                const = -self.ent.cond(part, rest)
                # H(P1|P2) <= sum(term + bins - r)  <=>  sum(r - bins - term_coeffs) <= sum(term_const) - H(P1|P2)
                for v in part:
                    tc, tk, bins, rv = members[v]
                    coeffs[rv] = coeffs.get(rv, 0) + 1
                    for k, c in list(tc.items()) + list(bins.items()):
                        coeffs[k] = coeffs.get(k, 0) - c
                    const += tk
                label = f"pack[{dec.label}]{{{','.join(part)}|{','.join(rest)}}}"
                self.add(coeffs, "<=", const, label)

    def members_at(self, dec: Decoder) -> dict:
        s = dec.subset
        out = {}
        for cb in self.codebooks:
            if cb.decoded_at(s):
                tc, tk = self.term(cb.var)
                bins = {rho_var(cb.var, j): 1 for j in cb.bins if j in s}
                out[cb.var] = (tc, tk, bins, r_var(cb.var))
        return out

    def bookkeeping(self, sum_bins: dict):
        L = self.setup.L
        for j in range(1, L + 1):
            coeffs = {rate_var(j): 1}
            for cb in self.codebooks:
                if j in cb.bins:
                    coeffs[rho_var(cb.var, j)] = -1
            for w, bins in sum_bins.items():
                if j in bins:
                    coeffs[rho_var(w, j)] = -1
            self.add(coeffs, "=", 0.0, f"rate[{j}]")
        for cb in self.codebooks:
            self.add({r_var(cb.var): 1}, ">=", 0.0, f"nonneg[{r_var(cb.var)}]")
            for j in cb.bins:
                rv = rho_var(cb.var, j)
                self.add({rv: 1}, ">=", 0.0, f"nonneg[{rv}]")
                self.add({rv: 1, r_var(cb.var): -1}, "<=", 0.0, f"bin<=pool[{rv}]")
        for w, bins in sum_bins.items():
            for j in bins:
                rv = rho_var(w, j)
                self.add({rv: 1}, ">=", 0.0, f"nonneg[{rv}]")
                self.add({rv: 1, r_var(w): -1}, "<=", 0.0, f"bin<=pool[{rv}]")

    def extra_rows(self):
        for i, row in enumerate(self.setup.extra_rows):
            coeffs = {k: Fraction(str(v)) for k, v in row["coeffs"].items()}
            self.sys.declare(*coeffs)
            self.sys.add(coeffs, row["rel"], float(row["const"]), row.get("label", f"extra[{i}]"))


def build_cms_system(setup: Setup) -> IneqSystem:
    """Covering, packing and bookkeeping rows of the random-coding (CMS with binning) scheme."""
    b = _Builder(setup, linear=False, name="cms")
    b.covering()
    for dec in setup.decoders:
        b.packing(dec, b.members_at(dec))
    b.bookkeeping({})
    b.extra_rows()
    return b.sys


def _sum_variable(setup: Setup, spec: SumSpec) -> tuple:
    """Name of the Y+Z variable, extending the pmf when it has to be synthesized."""
    pmf = setup.pmf
    for v in (spec.y, spec.z):
        if v not in pmf.names:
            raise LayoutMismatch(f"sum operand {v!r} not in pmf")
    if spec.var is not None:
        if spec.var not in pmf.names:
            raise MissingSumVariable(f"sum variable {spec.var!r} not in pmf")
        return spec.var, pmf
    qy, qz = pmf.size_of(spec.y), pmf.size_of(spec.z)
    if qy != qz:
        raise MissingSumVariable(f"cannot synthesize {spec.y}+{spec.z}: alphabets {qy} and {qz} differ")
    name = f"{spec.y}+{spec.z}"
    if name in pmf.names:
        return name, pmf
    return name, pmf.extend(name, qy, lambda a, b: (a + b) % qy, [spec.y, spec.z])


def build_linear_system(setup: Setup, pin_rate_reductions: bool = False) -> list:
    """Linear-coding systems, one per branch of every ``max{r_Y, r_Z}`` bound.

    For each sum pair the branch picks which operand carries the larger
    pool rate; the sum codebook's pool rate equals it. The returned list
    has ``2 ** len(sums)`` systems whose union of projections is the region.
    With ``pin_rate_reductions`` every ``rhop[V]`` is fixed to
    ``q - H(V)``, which reproduces the random-coding system.
    """
    work = setup
    sum_names = []
    for spec in setup.layout.sums:
        name, pmf = _sum_variable(work, spec)
        work = _with_pmf(work, pmf)
        sum_names.append(name)
    pmf = work.pmf
    layout_vars = [cb.var for cb in work.layout.codebooks()] + sum_names
    for v in layout_vars:
        try:
            need = math.log2(pmf.size_of(v))
        except UnknownVariable:
            raise LayoutMismatch(f"layout variable {v!r} not in pmf") from None
        if need > setup.q_bits + 1e-12:
            raise QTooSmall(f"q_bits={setup.q_bits} < log2|{v}| = {need:.6g}")
    branches = list(itertools.product(*[(s.y, s.z) for s in setup.layout.sums]))
    return [_linear_branch(work, sum_names, choice, pin_rate_reductions) for choice in branches]


def _with_pmf(setup: Setup, pmf: JointPmf) -> Setup:
    return Setup(setup.L, pmf, setup.layout, setup.decoders, setup.source, setup.q_bits, setup.extra_rows)


def _linear_branch(setup: Setup, sum_names: list, choice: tuple, pin: bool) -> IneqSystem:
    tag = ",".join(f"{w}:{c}" for w, c in zip(sum_names, choice))
    b = _Builder(setup, linear=True, name=f"linear[{tag}]" if tag else "linear")
    q = setup.q_bits
    specs = setup.layout.sums
    sum_bins = {}
    for spec, w in zip(specs, sum_names):
        if spec.y not in b.by_var or spec.z not in b.by_var:
            raise LayoutMismatch(f"sum operands {spec.y}, {spec.z} must be codebook variables")
        sum_bins[w] = tuple(sorted(spec.bins))
        b.sys.declare(r_var(w), rhop_var(w), *(rho_var(w, j) for j in spec.bins))
    b.covering()

    for dec in setup.decoders:
        s = dec.subset
        members = b.members_at(dec)
        extra_bins: dict = {}
        for spec, w in zip(specs, sum_names):
            if not _reconstructs(spec, s):
                continue
            sum_rate = {rho_var(w, j): 1 for j in spec.bins if j in s}
            has_y, has_z = spec.y in members, spec.z in members
            if has_y and has_z:
                # split the sum bin rate between the operands
                sy, sz = sig_var(w, s, spec.y), sig_var(w, s, spec.z)
                b.sys.declare(sy, sz)
                extra_bins.setdefault(spec.y, {})[sy] = 1
                extra_bins.setdefault(spec.z, {})[sz] = 1
                b.add({sy: 1, sz: 1, **{k: -1 for k in sum_rate}}, "=", 0.0, f"split[{w}@{dec.label}]")
                b.add({sy: 1}, ">=", 0.0, f"nonneg[{sy}]")
                b.add({sz: 1}, ">=", 0.0, f"nonneg[{sz}]")
            elif has_y or has_z:
                other = spec.z if has_y else spec.y
                if other not in members:
                    tc, tk = b.term(other)
                    own = {rho_var(other, j): 1 for j in b.by_var[other].bins if j in s}
                    members[other] = (tc, tk, own, r_var(other))
                extra_bins.setdefault(other, {}).update(sum_rate)
            else:
                tc, tk = b.term(w)
                members[w] = (tc, tk, dict(sum_rate), r_var(w))
        for v, add in extra_bins.items():
            tc, tk, bins, rv = members[v]
            merged = dict(bins)
            for k, c in add.items():
                merged[k] = merged.get(k, 0) + c
            members[v] = (tc, tk, merged, rv)
        b.packing(dec, members)

    ent = b.ent
    for spec, w, big in zip(specs, sum_names, choice):
        small = spec.z if big == spec.y else spec.y
        b.add({r_var(w): 1, r_var(big): -1}, "=", 0.0, f"sum-pool[{w}]")
        b.add({r_var(big): 1, r_var(small): -1}, ">=", 0.0, f"sum-order[{w}]")
        b.add({r_var(big): 1}, ">=", q - ent.h([w]), f"sum-cover[{w}]")
    for v in [cb.var for cb in b.codebooks] + list(sum_names):
        hv = ent.h([v])
        b.add({rhop_var(v): 1}, "<=", q - hv, f"rhop-max[{v}]")
        b.add({rhop_var(v): 1}, ">=", 0.0, f"nonneg[{rhop_var(v)}]")
        if pin:
            b.add({rhop_var(v): 1}, "=", q - hv, f"pin[{rhop_var(v)}]")
    b.bookkeeping(sum_bins)
    b.extra_rows()
    return b.sys


def _reconstructs(spec: SumSpec, s: frozenset) -> bool:
    if spec.decoders is not None:
        return s in spec.decoders
    return bool(set(spec.bins) & s)
