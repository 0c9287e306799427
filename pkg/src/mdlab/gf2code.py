"""Binary linear block codes used as quantizers and channel codes.

Words are packed into Python/numpy integers with the first bit of the
word in the most significant position, so integer order on message
indices is the lexicographic order on message bit vectors.
"""

from __future__ import annotations

import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from functools import cached_property
from typing import Sequence

import numpy as np

from . import kernels
from .errors import InvalidDimensions, LengthMismatch, OutOfRange, TooLargeForExhaustive

MAX_N = 24
EXHAUSTIVE_SOURCE_N = 20
EXHAUSTIVE_CHANNEL_N = 16
SYNDROME_N = 20


def bits_to_int(bits: Sequence[int]) -> int:
    value = 0
    for b in bits:
        value = (value << 1) | (int(b) & 1)
    return value


def int_to_bits(value: int, length: int) -> np.ndarray:
    return np.array([(int(value) >> (length - 1 - i)) & 1 for i in range(length)], dtype=np.uint8)


def bits_to_ints(rows: np.ndarray) -> np.ndarray:
    """Pack each row of a 2-D 0/1 array into a uint64 word."""
    rows = np.asarray(rows, dtype=np.uint64)
    if rows.shape[-1] == 0:
        return np.zeros(rows.shape[:-1], dtype=np.uint64)
    weights = np.uint64(1) << np.arange(rows.shape[-1] - 1, -1, -1, dtype=np.uint64)
    return (rows * weights).sum(axis=-1, dtype=np.uint64)


def ints_to_bits(words: np.ndarray, length: int) -> np.ndarray:
    words = np.asarray(words, dtype=np.uint64)
    shifts = np.arange(length - 1, -1, -1, dtype=np.uint64)
    return ((words[..., None] >> shifts) & np.uint64(1)).astype(np.uint8)


def gf2_rank(rows: Sequence[int]) -> int:
    """Rank over GF(2) of packed integer rows."""
    by_lead: dict[int, int] = {}
    for r in rows:
        r = int(r)
        while r:
            top = r.bit_length()
            if top not in by_lead:
                by_lead[top] = r
                break
            r ^= by_lead[top]
    return len(by_lead)


def weight(word: int) -> int:
    return int(word).bit_count()


@dataclass(frozen=True)
class Estimate:
    """A goodness figure; ``stderr`` is 0 for exhaustive evaluation."""

    value: float
    stderr: float = 0.0
    samples: int = 0
    exact: bool = True

    def __float__(self):
        return float(self.value)


@dataclass(frozen=True)
class Quantization:
    index: np.ndarray
    codeword: np.ndarray
    distance: int

    @property
    def message(self) -> int:
        return bits_to_int(self.index)


@dataclass(frozen=True)
class LinearCode:
    """k x n binary generator matrix with a lazily built codebook."""

    generator: np.ndarray = field(repr=False)
    n: int = 0

    def __init__(self, generator, n: int | None = None):
        g = np.asarray(generator, dtype=np.uint8)
        if g.ndim == 1 and g.size == 0:
            g = g.reshape(0, 0 if n is None else n)
        if g.ndim != 2:
            raise InvalidDimensions("generator must be a 2-D bit matrix")
        if n is not None and g.shape[1] != n:
            if g.shape[0] == 0:
                g = np.zeros((0, n), dtype=np.uint8)
            else:
                raise InvalidDimensions(f"generator has {g.shape[1]} columns, n={n}")
        if np.any(g > 1):
            raise InvalidDimensions("generator entries must be bits")
        if not 1 <= g.shape[1] <= MAX_N:
            raise InvalidDimensions(f"blocklength must be in [1, {MAX_N}]")
        if g.shape[0] > g.shape[1]:
            raise InvalidDimensions("k must not exceed n")
        g = g.copy()
        g.setflags(write=False)
        object.__setattr__(self, "generator", g)
        object.__setattr__(self, "n", int(g.shape[1]))

    @property
    def k(self) -> int:
        return int(self.generator.shape[0])

    @property
    def rate(self) -> float:
        return self.k / self.n

    @cached_property
    def rows(self) -> tuple:
        return tuple(int(r) for r in bits_to_ints(self.generator))

    @cached_property
    def codebook(self) -> np.ndarray:
        """All 2^k codewords; entry m is the encoding of message index m."""
        book = np.zeros(1, dtype=np.uint64)
        # message bit i (from the most significant end) selects row i
        for row in self.rows:
            book = np.concatenate([book, book ^ np.uint64(row)])
        # concatenation order makes row 0 the least significant index bit; reorder
        if self.k > 1:
            perm = _bit_reverse_permutation(self.k)
            book = book[perm]
        book.setflags(write=False)
        return book

    def is_full_rank(self) -> bool:
        return gf2_rank(self.rows) == self.k

    # coset structure

    @cached_property
    def _reduced(self) -> tuple:
        """Reduced row echelon rows and pivot masks (pivot = leading bit)."""
        rows = sorted((r for r in self.rows), reverse=True)
        basis: list[int] = []
        for r in rows:
            for b in basis:
                if r & _lead(b):
                    r ^= b
            if r:
                basis = [b ^ r if b & _lead(r) else b for b in basis]
                basis.append(r)
        pivots = [_lead(b) for b in basis]
        return tuple(basis), tuple(pivots)

    def coset_key(self, word: int) -> int:
        """Canonical coset index in [0, 2^(n - rank))."""
        basis, pivots = self._reduced
        w = int(word)
        for b, p in zip(basis, pivots):
            if w & p:
                w ^= b
        return _compress(w, self._free_positions)

    @cached_property
    def _free_positions(self) -> tuple:
        _, pivots = self._reduced
        pivot_mask = 0
        for p in pivots:
            pivot_mask |= p
        return tuple(i for i in range(self.n) if not (pivot_mask >> i) & 1)

    @cached_property
    def _key_gens(self) -> np.ndarray:
        # coset key of each unit word; keys are linear in the word
        return np.array([self.coset_key(1 << i) for i in range(self.n)], dtype=np.uint64)

    def coset_keys(self, words: np.ndarray) -> np.ndarray:
        """Vectorized :meth:`coset_key` over packed words."""
        words = np.asarray(words, dtype=np.uint64)
        keys = np.zeros(words.shape, dtype=np.uint64)
        one = np.uint64(1)
        for i, g in enumerate(self._key_gens):
            keys ^= np.where((words >> np.uint64(i)) & one, g, np.uint64(0))
        return keys

    @cached_property
    def coset_min_weights(self) -> np.ndarray:
        """Minimum weight (coset-leader weight) of each coset of the code."""
        nkeys = 1 << len(self._free_positions)
        return kernels.coset_min_weights(self._key_gens, nkeys)

    @cached_property
    def coset_leaders(self) -> np.ndarray:
        """Canonical leader per coset: minimum weight, then smallest packed value."""
        if self.n > SYNDROME_N:
            raise TooLargeForExhaustive(f"coset leader table needs n <= {SYNDROME_N}, got {self.n}")
        words = np.arange(1 << self.n, dtype=np.uint64)
        rank = (np.bitwise_count(words).astype(np.uint64) << np.uint64(self.n)) | words
        best = np.full(1 << len(self._free_positions), np.iinfo(np.uint64).max, dtype=np.uint64)
        np.minimum.at(best, self.all_word_keys().astype(np.intp), rank)
        leaders = best & np.uint64((1 << self.n) - 1)
        leaders.setflags(write=False)
        return leaders

    @cached_property
    def _codeword_order(self) -> tuple:
        order = np.argsort(self.codebook, kind="stable")
        return self.codebook[order], order

    def all_word_keys(self) -> np.ndarray:
        """Coset key of every n-bit word, indexed by the word itself."""
        keys = np.zeros(1, dtype=np.uint64)
        for i in range(self.n):
            # word bit i counted from the least significant end
            keys = np.concatenate([keys, keys ^ np.uint64(self.coset_key(1 << i))])
        return keys

    # serialization

    def to_dict(self) -> dict:
        return {"n": self.n, "k": self.k, "generator": self.generator.astype(int).tolist()}

    @classmethod
    def from_dict(cls, data: dict) -> "LinearCode":
        try:
            code = cls(np.array(data["generator"], dtype=np.uint8).reshape(data["k"], data["n"]), n=data["n"])
        except (KeyError, ValueError) as exc:
            raise InvalidDimensions(f"malformed code document: {exc}") from exc
        return code

    def dump(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh)

    @classmethod
    def load(cls, path) -> "LinearCode":
        with open(path) as fh:
            return cls.from_dict(json.load(fh))

    @classmethod
    def repetition(cls, n: int) -> "LinearCode":
        return cls(np.ones((1, n), dtype=np.uint8))

    @classmethod
    def identity(cls, n: int) -> "LinearCode":
        return cls(np.eye(n, dtype=np.uint8))

    @classmethod
    def trivial(cls, n: int) -> "LinearCode":
        return cls(np.zeros((0, n), dtype=np.uint8), n=n)


def _lead(x: int) -> int:
    return 1 << (x.bit_length() - 1)


def _compress(word: int, positions: tuple) -> int:
    out = 0
    for j, pos in enumerate(positions):
        out |= ((word >> pos) & 1) << j
    return out


def _bit_reverse_permutation(k: int) -> np.ndarray:
    idx = np.arange(1 << k)
    rev = np.zeros_like(idx)
    for b in range(k):
        rev |= ((idx >> b) & 1) << (k - 1 - b)
    return rev


def encode(code: LinearCode, u) -> np.ndarray:
    """Codeword u G over GF(2) as a bit array."""
    u = np.asarray(u, dtype=np.uint8).ravel()
    if u.size != code.k:
        raise LengthMismatch(f"message has {u.size} bits, code dimension is {code.k}")
    if code.k == 0:
        return np.zeros(code.n, dtype=np.uint8)
    return (u.astype(np.int64) @ code.generator.astype(np.int64) % 2).astype(np.uint8)


def quantize(code: LinearCode, x) -> Quantization:
    """Nearest codeword to ``x``; ties go to the smallest message index."""
    x = np.asarray(x, dtype=np.uint8).ravel()
    if x.size != code.n:
        raise LengthMismatch(f"word has {x.size} bits, blocklength is {code.n}")
    idx, dist = quantize_packed(code, np.array([bits_to_int(x)], dtype=np.uint64))
    m = int(idx[0])
    return Quantization(
        index=int_to_bits(m, code.k),
        codeword=int_to_bits(int(code.codebook[m]), code.n),
        distance=int(dist[0]),
    )


def quantize_packed(code: LinearCode, words: np.ndarray):
    """Batch quantization of packed words; returns (message indices, distances)."""
    return kernels.nearest_codewords(np.ascontiguousarray(words, dtype=np.uint64), code.codebook)


def decode_packed(code: LinearCode, words: np.ndarray):
    """Syndrome decoding of packed words; returns (message indices, distances).

    The received word minus the canonical leader of its coset is a nearest
    codeword, so this is minimum-distance decoding. Unlike
    :func:`quantize_packed` the tie-break depends only on the coset, which
    makes the error event independent of the transmitted codeword.
    """
    words = np.ascontiguousarray(words, dtype=np.uint64)
    err = code.coset_leaders[code.coset_keys(words).astype(np.intp)]
    sorted_book, order = code._codeword_order
    idx = order[np.searchsorted(sorted_book, words ^ err)]
    return idx.astype(np.int64), np.bitwise_count(err).astype(np.int64)


def decode(code: LinearCode, r) -> Quantization:
    """Minimum-distance channel decoding of one received word (coset-leader tie-break)."""
    r = np.asarray(r, dtype=np.uint8).ravel()
    if r.size != code.n:
        raise LengthMismatch(f"word has {r.size} bits, blocklength is {code.n}")
    idx, dist = decode_packed(code, np.array([bits_to_int(r)], dtype=np.uint64))
    m = int(idx[0])
    return Quantization(
        index=int_to_bits(m, code.k),
        codeword=int_to_bits(int(code.codebook[m]), code.n),
        distance=int(dist[0]),
    )


def source_goodness(code: LinearCode, mode: str = "auto", samples: int = 100_000, seed: int = 0) -> Estimate:
    """Average per-symbol Hamming distortion of quantizing a uniform source.

    ``mode`` is ``"exhaustive"``, ``"mc"`` or ``"auto"`` (exhaustive when
    n <= 20). Exhaustive evaluation averages coset-leader weights, which
    equals the mean nearest-codeword distance over all 2^n words.
    """
    if mode == "auto":
        mode = "exhaustive" if code.n <= EXHAUSTIVE_SOURCE_N else "mc"
    if mode == "exhaustive":
        if code.n > EXHAUSTIVE_SOURCE_N:
            raise TooLargeForExhaustive(f"n={code.n} > {EXHAUSTIVE_SOURCE_N}")
        minw = code.coset_min_weights
        return Estimate(float(minw.sum()) / (code.n * minw.size))
    if mode != "mc":
        raise ValueError(f"unknown mode {mode!r}")
    rng = np.random.default_rng(seed)
    words = rng.integers(0, 1 << code.n, size=samples, dtype=np.uint64)
    _, dist = quantize_packed(code, words)
    per = dist / code.n
    return Estimate(float(per.mean()), float(per.std(ddof=1) / np.sqrt(samples)), samples, exact=False)


def channel_goodness(
    code: LinearCode, crossover: float, mode: str = "auto", samples: int = 100_000, seed: int = 0
) -> Estimate:
    """Block error probability of syndrome decoding over a BSC.

    The decoder subtracts the canonical leader of the received coset, so
    it fails exactly when the noise word is not that leader, whatever
    codeword was sent. The exhaustive value is therefore
    ``1 - sum over cosets of p^w (1-p)^(n-w)`` with ``w`` the leader weight.
    """
    if not 0.0 < crossover < 0.5:
        raise OutOfRange(f"crossover {crossover} not in (0, 0.5)")
    if code.n > SYNDROME_N:
        raise TooLargeForExhaustive(f"channel decoding supports n <= {SYNDROME_N}, got {code.n}")
    if mode == "auto":
        mode = "exhaustive" if code.n <= EXHAUSTIVE_CHANNEL_N else "mc"
    if mode == "exhaustive":
        w = np.bitwise_count(code.coset_leaders).astype(np.int64)
        counts = np.bincount(w, minlength=code.n + 1)
        ws = np.arange(code.n + 1)
        success = float(np.sum(counts * crossover**ws * (1 - crossover) ** (code.n - ws)))
        return Estimate(min(max(1.0 - success, 0.0), 1.0))
    if mode != "mc":
        raise ValueError(f"unknown mode {mode!r}")
    rng = np.random.default_rng(seed)
    noise = bits_to_ints((rng.random((samples, code.n)) < crossover).astype(np.uint8))
    idx, _ = decode_packed(code, noise)
    fail = (idx != 0).astype(float)
    return Estimate(float(fail.mean()), float(fail.std(ddof=1) / np.sqrt(samples)), samples, exact=False)


@dataclass(frozen=True)
class GoodnessReport:
    avg_distortion: float
    channel_error_prob: float
    crossover: float

    def to_dict(self) -> dict:
        return {
            "avg_distortion": self.avg_distortion,
            "channel_error_prob": self.channel_error_prob,
            "crossover": self.crossover,
        }


@dataclass(frozen=True)
class SearchResult:
    code: LinearCode
    report: GoodnessReport
    trial: int


def random_generator(rng: np.random.Generator, n: int, k: int) -> np.ndarray:
    """Uniformly random full-rank k x n generator (rank-deficient draws resampled)."""
    while True:
        g = rng.integers(0, 2, size=(k, n), dtype=np.uint8)
        if gf2_rank(bits_to_ints(g).tolist()) == k:
            return g


def search_code(
    n: int,
    k: int,
    trials: int,
    criterion: str = "source",
    crossover: float = 0.1,
    seed: int = 0,
    threads: int = 1,
) -> SearchResult:
    """Random search for a good code under the given criterion.

    ``criterion`` is ``"source"`` (minimize average distortion),
    ``"channel"`` (minimize block error at ``crossover``) or ``"both"``
    (lexicographic on the pair). The first best trial wins ties. All
    candidates are drawn up front, so the result does not depend on
    ``threads``.
    """
    if not (1 <= k <= n <= EXHAUSTIVE_SOURCE_N) or trials < 1:
        raise InvalidDimensions(f"need 1 <= k <= n <= {EXHAUSTIVE_SOURCE_N} and trials >= 1")
    if criterion not in ("source", "channel", "both"):
        raise ValueError(f"unknown criterion {criterion!r}")
    rng = np.random.default_rng(seed)
    candidates = [LinearCode(random_generator(rng, n, k)) for _ in range(trials)]

    def score(code: LinearCode):
        if criterion == "source":
            return (source_goodness(code).value,)
        ch = channel_goodness(code, crossover, seed=seed).value
        if criterion == "channel":
            return (ch,)
        return (source_goodness(code).value, ch)

    if threads > 1:
        with ThreadPoolExecutor(threads) as pool:
            scores = list(pool.map(score, candidates))
    else:
        scores = [score(c) for c in candidates]
    best = min(range(trials), key=lambda t: (scores[t], t))
    code = candidates[best]
    report = GoodnessReport(
        avg_distortion=source_goodness(code).value,
        channel_error_prob=channel_goodness(code, crossover, seed=seed).value,
        crossover=crossover,
    )
    return SearchResult(code, report, best)
