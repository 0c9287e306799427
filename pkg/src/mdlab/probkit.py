"""Finite-alphabet joint distributions and Shannon information measures.

All quantities are in bits. A :class:`JointPmf` stores a dense table whose
axes follow the order of its variables, so the flattened table is in
lexicographic order with the first-listed variable varying slowest.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components

from .errors import (
    AlphabetTooLarge,
    NegativeMass,
    NotNormalized,
    OutOfRange,
    OverlappingSets,
    ShapeMismatch,
    UnknownVariable,
)

NORM_TOL = 1e-12
ZERO_MASS = 1e-15
SUPPORT_TOL = 1e-12
MAX_CELLS = 1 << 24


@dataclass(frozen=True)
class JointPmf:
    """Dense joint pmf over named finite-alphabet variables.

    Parameters
    ----------
    names : tuple of str
        Variable names, in axis order.
    sizes : tuple of int
        Alphabet size of each variable.
    probs : np.ndarray
        Table of shape ``sizes``. A flat sequence is reshaped.
    """

    names: tuple
    sizes: tuple
    probs: np.ndarray

    def __init__(self, names: Sequence[str], sizes: Sequence[int], probs):
        names = tuple(names)
        sizes = tuple(int(s) for s in sizes)
        if len(names) != len(sizes):
            raise ShapeMismatch("names and sizes differ in length")
        if len(set(names)) != len(names):
            raise ShapeMismatch(f"duplicate variable names in {names}")
        if any(s < 1 for s in sizes):
            raise ShapeMismatch(f"alphabet sizes must be >= 1, got {sizes}")
        cells = int(np.prod(sizes, dtype=np.int64)) if sizes else 1
        if cells > MAX_CELLS:
            raise AlphabetTooLarge(f"joint alphabet has {cells} cells (cap {MAX_CELLS})")
        table = np.asarray(probs, dtype=float)
        if table.size != cells:
            raise ShapeMismatch(f"table has {table.size} entries, expected {cells}")
        table = table.reshape(sizes).copy()
        table.setflags(write=False)
        object.__setattr__(self, "names", names)
        object.__setattr__(self, "sizes", sizes)
        object.__setattr__(self, "probs", table)

    # construction helpers

    @classmethod
    def from_function(cls, names, sizes, fn) -> "JointPmf":
        """Build a pmf by evaluating ``fn(*values)`` on every joint outcome."""
        table = np.zeros(tuple(sizes))
        for idx in itertools.product(*(range(s) for s in sizes)):
            table[idx] = fn(*idx)
        return cls(names, sizes, table)

    @classmethod
    def from_dict(cls, data: dict) -> "JointPmf":
        try:
            names = [v["name"] for v in data["variables"]]
            sizes = [v["size"] for v in data["variables"]]
            probs = data["probs"]
        except (KeyError, TypeError) as exc:
            raise ShapeMismatch(f"malformed pmf document: {exc}") from exc
        return cls(names, sizes, probs)

    def to_dict(self) -> dict:
        return {
            "variables": [{"name": n, "size": s} for n, s in zip(self.names, self.sizes)],
            "probs": [float(p) for p in self.probs.ravel()],
        }

    @classmethod
    def load(cls, path) -> "JointPmf":
        with open(path) as fh:
            return cls.from_dict(json.load(fh))

    def dump(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh, indent=1)

    # structure

    def size_of(self, name: str) -> int:
        return self.sizes[self._axis(name)]

    def _axis(self, name: str) -> int:
        try:
            return self.names.index(name)
        except ValueError:
            raise UnknownVariable(name) from None

    def marginal(self, names: Iterable[str]) -> np.ndarray:
        """Marginal table with axes in the order given by ``names``."""
        names = list(names)
        axes = [self._axis(n) for n in names]
        if len(set(axes)) != len(axes):
            raise OverlappingSets(f"repeated variable in {names}")
        drop = tuple(i for i in range(len(self.names)) if i not in axes)
        table = self.probs.sum(axis=drop) if drop else self.probs
        kept = sorted(axes)
        return np.transpose(table, [kept.index(a) for a in axes])

    def extend(self, name: str, size: int, fn, args: Sequence[str]) -> "JointPmf":
        """Append a variable defined deterministically as ``fn(*args)``."""
        if name in self.names:
            raise ShapeMismatch(f"variable {name!r} already present")
        arg_axes = [self._axis(a) for a in args]
        table = np.zeros(self.sizes + (size,))
        for idx in itertools.product(*(range(s) for s in self.sizes)):
            value = int(fn(*(idx[a] for a in arg_axes)))
            if not 0 <= value < size:
                raise OutOfRange(f"{name}={value} outside alphabet of size {size}")
            table[idx + (value,)] = self.probs[idx]
        return JointPmf(self.names + (name,), self.sizes + (size,), table)


def validate(pmf: JointPmf) -> float:
    """Check non-negativity and normalization; return the normalization deviation."""
    if pmf.probs.size != int(np.prod(pmf.sizes, dtype=np.int64)):
        raise ShapeMismatch("table length does not match alphabet sizes")
    if np.any(pmf.probs < 0):
        raise NegativeMass(f"minimum entry {pmf.probs.min()!r}")
    deviation = abs(float(pmf.probs.sum()) - 1.0)
    if deviation > NORM_TOL:
        raise NotNormalized(f"entries sum to 1{deviation:+.3e}")
    return deviation


def _names(group) -> list:
    if isinstance(group, str):
        return [group]
    return list(group)


def _plogp(table: np.ndarray) -> float:
    p = table.ravel()
    p = p[p > ZERO_MASS]
    return float(-(p * np.log2(p)).sum())


def entropy(pmf: JointPmf, names, given=()) -> float:
    """Joint entropy H(names), or H(names | given) when ``given`` is nonempty."""
    names, given = _names(names), _names(given)
    if not names:
        raise UnknownVariable("entropy needs at least one variable")
    if set(names) & set(given):
        raise OverlappingSets(f"{names} and {given} overlap")
    h = _plogp(pmf.marginal(names + given))
    if given:
        h -= _plogp(pmf.marginal(given))
    return max(h, 0.0)


def mutual_information(pmf: JointPmf, a, b, c=()) -> float:
    """I(a; b | c) in bits, clamped at zero."""
    a, b, c = _names(a), _names(b), _names(c)
    if not a or not b:
        raise UnknownVariable("mutual information needs nonempty A and B")
    for name in a + b + c:
        pmf._axis(name)
    if set(a) & set(b) or set(a) & set(c) or set(b) & set(c):
        raise OverlappingSets(f"A={a}, B={b}, C={c} must be pairwise disjoint")
    raw = _mi_raw(pmf, a, b, c)
    return max(raw, 0.0)


def _mi_raw(pmf: JointPmf, a, b, c) -> float:
    h = lambda vs: _plogp(pmf.marginal(vs)) if vs else 0.0  # noqa: E731
    return h(a + c) + h(b + c) - h(a + b + c) - h(c)


def binary_entropy(p: float) -> float:
    if not 0.0 <= p <= 1.0:
        raise OutOfRange(f"p={p} not in [0, 1]")
    if p == 0.0 or p == 1.0:
        return 0.0
    return float(-p * np.log2(p) - (1 - p) * np.log2(1 - p))


def binary_convolve(a: float, b: float) -> float:
    """Crossover of two cascaded binary symmetric channels: a(1-b) + b(1-a)."""
    for v in (a, b):
        if not 0.0 <= v <= 1.0:
            raise OutOfRange(f"{v} not in [0, 1]")
    return a * (1 - b) + b * (1 - a)


@dataclass(frozen=True)
class MarkovResult:
    holds: bool
    deviation: float


def is_markov(pmf: JointPmf, a, b, c, tol: float = 1e-9) -> MarkovResult:
    """Test the chain a - b - c via I(a; c | b) <= tol."""
    dev = mutual_information(pmf, a, c, b)
    return MarkovResult(dev <= tol, dev)


def _grouped(pmf: JointPmf, groups) -> np.ndarray:
    """Marginal over several name groups, reshaped to one axis per group."""
    flat = [n for g in groups for n in g]
    table = pmf.marginal(flat) if flat else np.array(pmf.probs.sum())
    shape = [int(np.prod([pmf.size_of(n) for n in g], dtype=np.int64)) for g in groups]
    return np.asarray(table).reshape(shape)


def common_function_witnesses(pmf: JointPmf, b, c, d, support_tol: float = SUPPORT_TOL) -> dict:
    """Per-value verdict: does B=b admit non-constant f_b(C) = g_b(D) almost surely?

    Builds the bipartite graph on the supported values of C and D given B=b,
    joining c and d when p(b, c, d) > ``support_tol``. A common function
    exists exactly when that graph has two or more components. Values of B
    with zero mass are skipped.
    """
    b, c, d = _names(b), _names(c), _names(d)
    for name in b + c + d:
        pmf._axis(name)
    if set(b) & set(c) or set(b) & set(d) or set(c) & set(d):
        raise OverlappingSets("B, C, D must be pairwise disjoint")
    table = _grouped(pmf, [b, c, d])
    nc, nd = table.shape[1], table.shape[2]
    out = {}
    for bi in range(table.shape[0]):
        slab = table[bi]
        if slab.sum() <= ZERO_MASS:
            continue
        rows, cols = np.nonzero(slab > support_tol)
        if rows.size == 0:
            continue
        # vertices: c-values 0..nc-1, d-values nc..nc+nd-1; only supported ones count
        graph = coo_matrix(
            (np.ones(rows.size), (rows, cols + nc)), shape=(nc + nd, nc + nd)
        )
        _, labels = connected_components(graph, directed=False)
        live = np.union1d(rows, cols + nc)
        out[bi] = len(set(labels[live].tolist())) >= 2
    return out


def common_function_exists(pmf: JointPmf, b, c, d, support_tol: float = SUPPORT_TOL) -> bool:
    return any(common_function_witnesses(pmf, b, c, d, support_tol).values())


@dataclass(frozen=True)
class LemmaCheck:
    hypotheses_hold: bool
    conclusion_holds: bool
    deviations: dict

    @property
    def implication_holds(self) -> bool:
        return (not self.hypotheses_hold) or self.conclusion_holds


def check_lemma2(pmf: JointPmf, a, b, c, d, tol: float = 1e-9, conclusion_tol=None) -> LemmaCheck:
    """Two short chains plus connectivity imply a - b - (c, d).

    ``conclusion_tol`` defaults to ``tol``.
    """
    a, b, c, d = _names(a), _names(b), _names(c), _names(d)
    conclusion_tol = tol if conclusion_tol is None else conclusion_tol
    dev = {
        "I(A;D|B,C)": mutual_information(pmf, a, d, b + c),
        "I(A;C|B,D)": mutual_information(pmf, a, c, b + d),
        "I(A;C,D|B)": mutual_information(pmf, a, c + d, b),
    }
    connected = not common_function_exists(pmf, b, c, d)
    hyp = dev["I(A;D|B,C)"] <= tol and dev["I(A;C|B,D)"] <= tol and connected
    return LemmaCheck(hyp, dev["I(A;C,D|B)"] <= conclusion_tol, dev)


def check_lemma3(pmf: JointPmf, a, b, c, d, tol: float = 1e-9) -> LemmaCheck:
    """Three short chains imply the long chain a - b - c - d."""
    a, b, c, d = _names(a), _names(b), _names(c), _names(d)
    dev = {
        "I(A;D|B,C)": mutual_information(pmf, a, d, b + c),
        "I(A;C|B)": mutual_information(pmf, a, c, b),
        "I(B;D|C)": mutual_information(pmf, b, d, c),
        "I(A;C,D|B)": mutual_information(pmf, a, c + d, b),
        "I(A,B;D|C)": mutual_information(pmf, a + b, d, c),
    }
    hyp = dev["I(A;D|B,C)"] <= tol and dev["I(A;C|B)"] <= tol and dev["I(B;D|C)"] <= tol
    concl = dev["I(A;C,D|B)"] <= tol and dev["I(A,B;D|C)"] <= tol
    return LemmaCheck(hyp, concl, dev)


# random constructions used by tests and the ``check --random`` command


def random_pmf(rng: np.random.Generator, names, sizes, concentration: float = 1.0) -> JointPmf:
    """Dirichlet-distributed table; full support almost surely."""
    cells = int(np.prod(sizes))
    p = rng.dirichlet(np.full(cells, concentration))
    return JointPmf(names, sizes, p)


def random_kernel(rng: np.random.Generator, n_in: int, n_out: int) -> np.ndarray:
    """Row-stochastic matrix ``K[i, j] = p(out=j | in=i)``."""
    return rng.dirichlet(np.ones(n_out), size=n_in)


def random_chain(rng: np.random.Generator, sizes=(2, 2, 2, 2), names=("A", "B", "C", "D")) -> JointPmf:
    """Markov chain p(a) p(b|a) p(c|b) p(d|c) ... with random kernels."""
    table = rng.dirichlet(np.ones(sizes[0]))
    for prev, nxt in zip(sizes, sizes[1:]):
        kern = random_kernel(rng, prev, nxt)
        table = table[..., :, None] * kern.reshape((1,) * (table.ndim - 1) + kern.shape)
    return JointPmf(names, sizes, table)


def random_lemma2_case(rng: np.random.Generator, sizes=(2, 2, 2, 2)) -> JointPmf:
    """Full-support pmf over A, B, C, D for the two-chain implication.

    Half of the draws are unstructured Dirichlet tables; the other half
    factor as p(b) p(c, d | b) p(a | b), so both hypotheses hold.
    """
    sa, sb, sc, sd = sizes
    if rng.random() < 0.5:
        return random_pmf(rng, ("A", "B", "C", "D"), sizes)
    pb = rng.dirichlet(np.ones(sb))
    pcd = rng.dirichlet(np.ones(sc * sd), size=sb).reshape(sb, sc, sd)
    pa = random_kernel(rng, sb, sa)
    table = np.einsum("b,bcd,ba->abcd", pb, pcd, pa)
    return JointPmf(("A", "B", "C", "D"), sizes, table)


def random_lemma3_case(rng: np.random.Generator) -> JointPmf:
    """Factorized chain A - B - C - D with alphabets of size 2 or 3."""
    sizes = tuple(int(s) for s in rng.integers(2, 4, size=4))
    return random_chain(rng, sizes)
