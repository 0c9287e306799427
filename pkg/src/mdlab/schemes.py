"""End-to-end linear-code multiple-descriptions schemes.

Two schemes share one linear code ``C`` with generator ``G``:

* three descriptions: X, Z independent uniform bits. Descriptions carry
  the indices of Q(x), Q(z) and their XOR; decoders 13 and 23 recover the
  missing quantization by linearity.
* four descriptions: X = Z xor N. Descriptions 1 and 4 carry the indices
  u, v of Q(x), Q(z); descriptions 2 and 3 carry the quantization noises.
  Decoder 23 channel-decodes the XOR of the noises to get x xor z.
"""

from __future__ import annotations

import csv
import io
import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import gf2code
from .distortion import build_dxz
from .errors import InputError, LengthMismatch
from .gf2code import LinearCode, bits_to_int, int_to_bits
from .probkit import binary_entropy

_MASK64 = (1 << 64) - 1


@dataclass(frozen=True)
class ThreeDescConfig:
    delta: float
    code: LinearCode
    blocks: int = 1000
    seed: int = 0

    def __post_init__(self):
        if not 0.0 < self.delta < 0.5:
            raise InputError(f"delta={self.delta} not in (0, 0.5)")
        if self.blocks < 1:
            raise InputError("blocks must be >= 1")

    @property
    def rate(self) -> float:
        return self.code.k / self.code.n


@dataclass(frozen=True)
class FourDescConfig:
    delta: float
    lam: float
    code: LinearCode
    blocks: int = 1000
    seed: int = 0

    def __post_init__(self):
        if not 0.0 < self.delta < 0.5:
            raise InputError(f"delta={self.delta} not in (0, 0.5)")
        if not 0.0 <= self.lam < self.delta:
            raise InputError(f"lambda={self.lam} must satisfy 0 <= lambda < delta")
        if self.blocks < 1:
            raise InputError("blocks must be >= 1")

    @property
    def noise_bias(self) -> float:
        return self.delta - self.lam


@dataclass
class SchemeReport:
    """Aggregated Monte-Carlo outcome of one scheme run."""

    scheme: str
    n: int
    k: int
    blocks: int
    seed: int
    rates: dict
    distortions: dict
    stderr: dict
    lossless_failures: dict
    decoders: dict = field(default_factory=dict)
    extra: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "scheme": self.scheme,
            "n": self.n,
            "k": self.k,
            "blocks": self.blocks,
            "seed": self.seed,
            "rates": self.rates,
            "distortions": self.distortions,
            "stderr": self.stderr,
            "lossless_failures": self.lossless_failures,
            "decoders": self.decoders,
            "extra": self.extra,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"

    def to_csv(self) -> str:
        buf = io.StringIO()
        out = csv.writer(buf, lineterminator="\n")
        out.writerow(["decoder", "label", "rate", "distortion", "stderr", "failures"])
        for dec, info in self.decoders.items():
            out.writerow([
                dec,
                info["label"],
                repr(info["rate"]),
                repr(self.distortions[dec]),
                repr(self.stderr[dec]),
                self.lossless_failures.get(dec, 0),
            ])
        return buf.getvalue()


def block_rng(seed: int, block: int) -> np.random.Generator:
    """Counter-based stream keyed by (seed, block index)."""
    return np.random.Generator(np.random.Philox(key=np.array([seed & _MASK64, block], dtype=np.uint64)))


def _check_words(code: LinearCode, *words):
    out = []
    for w in words:
        w = np.asarray(w, dtype=np.uint8).ravel()
        if w.size != code.n:
            raise LengthMismatch(f"word has {w.size} bits, blocklength is {code.n}")
        out.append(w)
    return out


def three_desc_block(cfg: ThreeDescConfig, x, z) -> dict:
    """Encode one block and return every decoder's reconstruction.

    Returns a dict with ``descriptions`` (the three k-bit indices) and
    ``outputs`` mapping decoder labels to tuples of n-bit words: decoder 3
    outputs an estimate of x xor z; decoders 12, 13, 23 output (U1, U2).
    """
    code = cfg.code
    x, z = _check_words(code, x, z)
    q1, q2 = gf2code.quantize(code, x), gf2code.quantize(code, z)
    i1, i2 = q1.message, q2.message
    i3 = i1 ^ i2
    cw = lambda m: int_to_bits(int(code.codebook[m]), code.n)  # noqa: E731
    u1, u2, s = cw(i1), cw(i2), cw(i3)
    return {
        "descriptions": {1: int_to_bits(i1, code.k), 2: int_to_bits(i2, code.k), 3: int_to_bits(i3, code.k)},
        "outputs": {
            "1": (u1,),
            "2": (u2,),
            "3": (s,),
            "12": (u1, u2),
            "13": (u1, s ^ u1),
            "23": (s ^ u2, u2),
        },
    }


def four_desc_block(cfg: FourDescConfig, x, z) -> dict:
    """Encode one block of the four-description scheme and decode everywhere.

    ``outputs["23"]`` is the estimate of x xor z; ``decoded_sum`` is the
    channel decoder's message estimate, compared against u xor v in
    ``sum_ok``.
    """
    code = cfg.code
    x, z = _check_words(code, x, z)
    u, v = gf2code.quantize(code, x), gf2code.quantize(code, z)
    d2 = x ^ u.codeword
    d3 = z ^ v.codeword
    received = d2 ^ d3
    w_hat = gf2code.decode(code, received)
    return {
        "descriptions": {1: u.index, 2: d2, 3: d3, 4: v.index},
        "outputs": {
            "1": (u.codeword,),
            "4": (v.codeword,),
            "12": (u.codeword ^ d2,),
            "34": (v.codeword ^ d3,),
            "23": (received ^ w_hat.codeword,),
        },
        "decoded_sum": w_hat.index,
        "sum_ok": w_hat.message == (u.message ^ v.message),
    }


# Monte-Carlo drivers (packed-integer fast path)


def _draw_three(cfg: ThreeDescConfig, lo: int, hi: int):
    n = cfg.code.n
    x = np.empty(hi - lo, dtype=np.uint64)
    z = np.empty(hi - lo, dtype=np.uint64)
    for b in range(lo, hi):
        rng = block_rng(cfg.seed, b)
        x[b - lo], z[b - lo] = rng.integers(0, 1 << n, size=2, dtype=np.uint64)
    return x, z


def _draw_four(cfg: FourDescConfig, lo: int, hi: int):
    n = cfg.code.n
    z = np.empty(hi - lo, dtype=np.uint64)
    noise = np.empty(hi - lo, dtype=np.uint64)
    for b in range(lo, hi):
        rng = block_rng(cfg.seed, b)
        z[b - lo] = rng.integers(0, 1 << n, dtype=np.uint64)
        noise[b - lo] = bits_to_int(rng.random(n) < cfg.noise_bias)
    return z ^ noise, z


def _three_chunk(cfg: ThreeDescConfig, lo: int, hi: int) -> dict:
    code = cfg.code
    book = code.codebook
    x, z = _draw_three(cfg, lo, hi)
    i1, _ = gf2code.quantize_packed(code, x)
    i2, _ = gf2code.quantize_packed(code, z)
    i3 = i1 ^ i2
    u1, u2, s = book[i1], book[i2], book[i3]
    rec_u2 = s ^ u1  # decoder 13
    rec_u1 = s ^ u2  # decoder 23
    w = lambda a: np.bitwise_count(a).astype(np.int64)  # noqa: E731
    errs = {
        "1": w(x ^ u1),
        "2": w(z ^ u2),
        "3": w((x ^ z) ^ s),
        "12x": w(x ^ u1),
        "12z": w(z ^ u2),
        "13x": w(x ^ u1),
        "13z": w(z ^ rec_u2),
        "23x": w(x ^ rec_u1),
        "23z": w(z ^ u2),
    }
    sums = {key: (int(v.sum()), int((v * v).sum())) for key, v in errs.items()}
    pair = {}
    for dec in ("12", "13", "23"):
        tot = errs[dec + "x"] + errs[dec + "z"]
        both = _both_wrong(x, z, u1 if dec != "23" else rec_u1, u2 if dec != "13" else rec_u2)
        # each block: count of one-coordinate and two-coordinate symbol mismatches
        one = tot - 2 * both
        pair[dec] = (one, both)
    return {
        "sums": sums,
        "pair": {d: (int(o.sum()), int(b.sum()), o, b) for d, (o, b) in pair.items()},
        "fail13": int(np.count_nonzero(rec_u2 != u2)),
        "fail23": int(np.count_nonzero(rec_u1 != u1)),
        "payload1": int(code.k * (hi - lo)),
    }


def _both_wrong(x, z, xh, zh):
    return np.bitwise_count((x ^ xh) & (z ^ zh)).astype(np.int64)


def _four_chunk(cfg: FourDescConfig, lo: int, hi: int) -> dict:
    code = cfg.code
    book = code.codebook
    x, z = _draw_four(cfg, lo, hi)
    u, _ = gf2code.quantize_packed(code, x)
    v, _ = gf2code.quantize_packed(code, z)
    d2 = x ^ book[u]
    d3 = z ^ book[v]
    received = d2 ^ d3
    w_hat, _ = gf2code.decode_packed(code, received)
    est = received ^ book[w_hat]
    w = lambda a: np.bitwise_count(a).astype(np.int64)  # noqa: E731
    errs = {
        "1": w(x ^ book[u]),
        "4": w(z ^ book[v]),
        "12": w(x ^ (book[u] ^ d2)),
        "34": w(z ^ (book[v] ^ d3)),
        "23": w((x ^ z) ^ est),
    }
    return {
        "sums": {key: (int(v_.sum()), int((v_ * v_).sum())) for key, v_ in errs.items()},
        "fail12": int(np.count_nonzero(errs["12"])),
        "fail34": int(np.count_nonzero(errs["34"])),
        "fail23": int(np.count_nonzero(w_hat != (u ^ v))),
        "wrong23": int(np.count_nonzero(errs["23"])),
        "ones2": int(w(d2).sum()),
        "ones3": int(w(d3).sum()),
        "payload1": int(code.k * (hi - lo)),
    }


def _chunks(blocks: int, threads: int):
    size = max(1, min(4096, -(-blocks // max(threads, 1))))
    return [(lo, min(lo + size, blocks)) for lo in range(0, blocks, size)]


def _run_chunks(fn, cfg, threads: int) -> list:
    spans = _chunks(cfg.blocks, threads)
    if threads > 1:
        with ThreadPoolExecutor(threads) as pool:
            return list(pool.map(lambda span: fn(cfg, *span), spans))
    return [fn(cfg, *span) for span in spans]


def _mean_se(total: int, total_sq: int, count: int, scale: float):
    """Mean and standard error of per-block values ``v / scale`` from exact sums."""
    mean = total / count / scale
    if count < 2:
        return mean, 0.0
    var = (total_sq - total * total / count) / (count - 1) / scale**2
    return mean, float(np.sqrt(max(var, 0.0) / count))


def _merge_sums(parts: list, key: str) -> tuple:
    return (sum(p["sums"][key][0] for p in parts), sum(p["sums"][key][1] for p in parts))


def run_monte_carlo(cfg, threads: int = 1) -> SchemeReport:
    """Simulate ``cfg.blocks`` independent blocks and aggregate per-decoder figures.

    Per-symbol distortions are means over blocks of the per-block
    normalized Hamming distortion; ``stderr`` is the standard error of that
    mean. Pair decoders of the three-description scheme are scored with the
    constructed joint distortion (scale 1, the configured delta).
    All accumulators are integers, so the report does not depend on
    ``threads``.
    """
    if isinstance(cfg, ThreeDescConfig):
        return _report_three(cfg, _run_chunks(_three_chunk, cfg, threads))
    if isinstance(cfg, FourDescConfig):
        return _report_four(cfg, _run_chunks(_four_chunk, cfg, threads))
    raise InputError(f"unsupported config type {type(cfg).__name__}")


def _report_three(cfg: ThreeDescConfig, parts: list) -> SchemeReport:
    n, k, blocks = cfg.code.n, cfg.code.k, cfg.blocks
    rate = k / n
    dist, se = {}, {}
    for dec in ("1", "2", "3"):
        dist[dec], se[dec] = _mean_se(*_merge_sums(parts, dec), blocks, n)
    table = build_dxz(cfg.delta, 1.0)
    one_cost = float(table.values[0][1])
    two_cost = float(table.values[0][3])
    for dec in ("12", "13", "23"):
        per_block = np.concatenate(
            [one_cost * p["pair"][dec][2] + two_cost * p["pair"][dec][3] for p in parts]
        ) / n
        dist[dec] = float(per_block.sum() / blocks)
        se[dec] = float(per_block.std(ddof=1) / np.sqrt(blocks)) if blocks > 1 else 0.0
        for comp in ("x", "z"):
            label = f"{dec}.{comp}"
            dist[label], se[label] = _mean_se(*_merge_sums(parts, dec + comp), blocks, n)
    fails = {
        "12": 0,
        "13": sum(p["fail13"] for p in parts),
        "23": sum(p["fail23"] for p in parts),
    }
    labels = {
        "1": ("U1 (quantization of X)", rate),
        "2": ("U2 (quantization of Z)", rate),
        "3": ("U1+U2 (estimate of X+Z)", rate),
        "12": ("(U1, U2)", 2 * rate),
        "13": ("(U1, U2 recovered)", 2 * rate),
        "23": ("(U1 recovered, U2)", 2 * rate),
    }
    return SchemeReport(
        scheme="three-desc",
        n=n,
        k=k,
        blocks=blocks,
        seed=cfg.seed,
        rates={"R1": rate, "R2": rate, "R3": rate},
        distortions=dist,
        stderr=se,
        lossless_failures=fails,
        decoders={d: {"label": lab, "rate": r} for d, (lab, r) in labels.items()},
        extra={
            "delta": cfg.delta,
            "payload_bits_desc1": sum(p["payload1"] for p in parts),
            "asymptotic_rate": 1.0 - binary_entropy(cfg.delta),
        },
    )


def _report_four(cfg: FourDescConfig, parts: list) -> SchemeReport:
    n, k, blocks = cfg.code.n, cfg.code.k, cfg.blocks
    rate = k / n
    dist, se = {}, {}
    for dec in ("1", "4", "12", "34", "23"):
        dist[dec], se[dec] = _mean_se(*_merge_sums(parts, dec), blocks, n)
    bias2 = sum(p["ones2"] for p in parts) / (n * blocks)
    bias3 = sum(p["ones3"] for p in parts) / (n * blocks)
    r2, r3 = binary_entropy(bias2), binary_entropy(bias3)
    fail23 = sum(p["fail23"] for p in parts)
    p23 = fail23 / blocks
    labels = {
        "1": ("uG (quantization of X)", rate),
        "4": ("vG (quantization of Z)", rate),
        "12": ("X (lossless)", rate + r2),
        "34": ("Z (lossless)", rate + r3),
        "23": ("X+Z via channel decoding", r2 + r3),
    }
    return SchemeReport(
        scheme="four-desc",
        n=n,
        k=k,
        blocks=blocks,
        seed=cfg.seed,
        rates={"R1": rate, "R2": r2, "R3": r3, "R4": rate},
        distortions=dist,
        stderr=se,
        lossless_failures={
            "12": sum(p["fail12"] for p in parts),
            "34": sum(p["fail34"] for p in parts),
            "23": fail23,
        },
        decoders={d: {"label": lab, "rate": r} for d, (lab, r) in labels.items()},
        extra={
            "delta": cfg.delta,
            "lambda": cfg.lam,
            "raw_rates": {"R1": rate, "R2": 1.0, "R3": 1.0, "R4": rate},
            "noise_bias": {"desc2": bias2, "desc3": bias3},
            "block_error_23": p23,
            "block_error_23_stderr": float(np.sqrt(p23 * (1 - p23) / blocks)),
            "wrong_blocks_23": sum(p["wrong23"] for p in parts),
            "payload_bits_desc1": sum(p["payload1"] for p in parts),
            "asymptotic_rates": {
                "R1": 1.0 - binary_entropy(cfg.delta),
                "R2": binary_entropy(cfg.delta),
            },
        },
    )
