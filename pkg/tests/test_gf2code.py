import itertools
import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mdlab import _pykernels, gf2code, kernels
from mdlab.errors import InvalidDimensions, LengthMismatch, OutOfRange, TooLargeForExhaustive
from mdlab.gf2code import LinearCode

try:
    from mdlab import _ckernels
except ImportError:  # extension not built
    _ckernels = None

BACKENDS = [_pykernels] + ([_ckernels] if _ckernels is not None else [])


# brute-force oracles, written against bit arrays rather than packed ints


def oracle_codebook(g):
    g = np.asarray(g, dtype=int)
    k, n = g.shape
    out = []
    for u in itertools.product((0, 1), repeat=k):
        out.append(tuple((np.array(u, dtype=int) @ g) % 2) if k else (0,) * n)
    return out


def oracle_nearest(g, x):
    book = oracle_codebook(g)
    d = [sum(a != b for a, b in zip(c, x)) for c in book]
    best = min(d)
    return d.index(best), best


def oracle_source(g):
    n = np.asarray(g).shape[1]
    total = sum(oracle_nearest(g, x)[1] for x in itertools.product((0, 1), repeat=n))
    return total / (n * 2**n)


def oracle_min_distance_sets(g):
    """For each word, the set of nearest codewords."""
    n = np.asarray(g).shape[1]
    book = oracle_codebook(g)
    out = {}
    for x in itertools.product((0, 1), repeat=n):
        d = [sum(a != b for a, b in zip(c, x)) for c in book]
        out[x] = {book[i] for i in range(len(book)) if d[i] == min(d)}
    return out


def random_code(rng, n, k):
    return LinearCode(gf2code.random_generator(rng, n, k))


generators = st.integers(1, 7).flatmap(
    lambda n: st.integers(0, n).flatmap(
        lambda k: st.integers(0, 2**32 - 1).map(lambda s: random_code(np.random.default_rng(s), n, k))
    )
)


# bit packing


def test_bit_packing_first_bit_is_most_significant():
    assert gf2code.bits_to_int([1, 0, 0]) == 4
    assert list(gf2code.int_to_bits(6, 4)) == [0, 1, 1, 0]
    rows = np.array([[1, 0, 1], [0, 1, 1]], dtype=np.uint8)
    words = gf2code.bits_to_ints(rows)
    assert list(words) == [5, 3]
    assert np.array_equal(gf2code.ints_to_bits(words, 3), rows)


def test_gf2_rank():
    assert gf2code.gf2_rank([0b101, 0b011, 0b110]) == 2
    assert gf2code.gf2_rank([0b100, 0b010, 0b001]) == 3
    assert gf2code.gf2_rank([0, 0]) == 0


# construction and serialization


def test_codebook_invariants():
    code = random_code(np.random.default_rng(0), 9, 4)
    book = code.codebook
    assert book.size == 16 and 0 in book
    assert len(set(book.tolist())) == 16
    s = set(book.tolist())
    assert all((a ^ b) in s for a in s for b in s)
    assert code.rate == pytest.approx(4 / 9)


def test_codebook_matches_oracle_order():
    g = np.random.default_rng(1).integers(0, 2, size=(4, 7))
    code = LinearCode(g)
    expect = [gf2code.bits_to_int(c) for c in oracle_codebook(g)]
    assert code.codebook.tolist() == expect


def test_json_round_trip(tmp_path):
    code = random_code(np.random.default_rng(2), 10, 3)
    path = tmp_path / "code.json"
    code.dump(path)
    doc = json.loads(path.read_text())
    assert set(doc) == {"n", "k", "generator"} and doc["n"] == 10 and doc["k"] == 3
    back = LinearCode.load(path)
    assert np.array_equal(back.generator, code.generator)


@pytest.mark.parametrize(
    "g, n",
    [
        (np.zeros((2, 0)), None),
        (np.zeros((3, 2)), None),
        (np.full((1, 3), 2), None),
        (np.zeros((1, 25)), None),
        (np.zeros((1, 3)), 4),
    ],
)
def test_invalid_generators(g, n):
    with pytest.raises(InvalidDimensions):
        LinearCode(g, n=n)


def test_malformed_document():
    with pytest.raises(InvalidDimensions):
        LinearCode.from_dict({"n": 3, "generator": [[1, 1, 1]]})


# encode


def test_encode_examples():
    code = LinearCode([[1, 0, 1], [0, 1, 1]])
    assert list(gf2code.encode(code, [1, 1])) == [1, 1, 0]
    assert list(gf2code.encode(code, [0, 0])) == [0, 0, 0]
    u = np.array([1, 0, 1, 1])
    assert np.array_equal(gf2code.encode(LinearCode.identity(4), u), u)


def test_encode_length_mismatch():
    with pytest.raises(LengthMismatch):
        gf2code.encode(LinearCode.repetition(3), [1, 0])


@pytest.mark.parametrize("k", [1, 4, 8])
def test_encode_linearity_exhaustive(k):
    code = random_code(np.random.default_rng(k), 12, k)
    msgs = list(itertools.product((0, 1), repeat=k))
    cw = {u: gf2code.encode(code, u) for u in msgs}
    rng = np.random.default_rng(0)
    pairs = msgs if k <= 4 else [msgs[i] for i in rng.choice(len(msgs), 40, replace=False)]
    for u1 in pairs:
        for u2 in msgs:
            s = tuple(a ^ b for a, b in zip(u1, u2))
            assert np.array_equal(cw[s], cw[u1] ^ cw[u2])


def test_encode_agrees_with_codebook():
    code = random_code(np.random.default_rng(3), 11, 5)
    for m in range(32):
        cw = gf2code.encode(code, gf2code.int_to_bits(m, 5))
        assert gf2code.bits_to_int(cw) == int(code.codebook[m])


# quantize and decode


def test_quantize_examples():
    rep = LinearCode.repetition(3)
    q = gf2code.quantize(rep, [1, 1, 0])
    assert list(q.codeword) == [1, 1, 1] and q.distance == 1 and q.message == 1
    q = gf2code.quantize(rep, [1, 1, 1])
    assert q.distance == 0
    q = gf2code.quantize(LinearCode.trivial(5), [1, 0, 1, 1, 0])
    assert q.distance == 3 and q.codeword.sum() == 0 and q.index.size == 0


def test_quantize_length_mismatch():
    with pytest.raises(LengthMismatch):
        gf2code.quantize(LinearCode.repetition(3), [1, 0])
    with pytest.raises(LengthMismatch):
        gf2code.decode(LinearCode.repetition(3), [1, 0, 1, 1])


@pytest.mark.parametrize("seed", range(4))
def test_quantize_matches_oracle_with_tie_break(seed):
    rng = np.random.default_rng(seed)
    n, k = 6, int(rng.integers(1, 5))
    g = gf2code.random_generator(rng, n, k)
    code = LinearCode(g)
    for x in itertools.product((0, 1), repeat=n):
        q = gf2code.quantize(code, x)
        idx, dist = oracle_nearest(g, x)
        assert q.message == idx and q.distance == dist


@pytest.mark.parametrize("backend", BACKENDS, ids=lambda m: m.__name__.split(".")[-1])
def test_kernel_backends_agree_with_oracle(backend):
    rng = np.random.default_rng(11)
    code = random_code(rng, 12, 6)
    words = rng.integers(0, 1 << 12, size=3000, dtype=np.uint64)
    idx, dist = backend.nearest_codewords(words, code.codebook)
    full = np.bitwise_count(words[:, None] ^ code.codebook[None, :])
    assert np.array_equal(dist, full.min(axis=1))
    assert np.array_equal(idx, full.argmin(axis=1))
    minw = backend.coset_min_weights(code._key_gens, 1 << 6)
    keys = code.all_word_keys()
    ref = np.full(1 << 6, 99)
    np.minimum.at(ref, keys.astype(np.intp), np.bitwise_count(np.arange(1 << 12, dtype=np.uint64)).astype(int))
    assert np.array_equal(minw, ref)


def test_backend_flag():
    assert kernels.BACKEND in ("cython", "python")


@pytest.mark.parametrize("seed", range(3))
def test_decode_is_minimum_distance(seed):
    rng = np.random.default_rng(seed)
    g = gf2code.random_generator(rng, 7, 3)
    code = LinearCode(g)
    nearest = oracle_min_distance_sets(g)
    for x, best in nearest.items():
        d = gf2code.decode(code, x)
        assert tuple(d.codeword.tolist()) in best
        assert d.distance == oracle_nearest(g, x)[1]


def test_decode_error_event_is_translation_invariant():
    rng = np.random.default_rng(4)
    code = random_code(rng, 10, 4)
    noise = np.arange(1 << 10, dtype=np.uint64)
    base_fail = gf2code.decode_packed(code, noise)[0] != 0
    for m in range(16):
        c = code.codebook[m]
        idx, _ = gf2code.decode_packed(code, noise ^ c)
        assert np.array_equal(idx != m, base_fail)


def test_coset_leaders_are_canonical():
    code = random_code(np.random.default_rng(5), 9, 4)
    leaders = code.coset_leaders
    assert np.array_equal(np.bitwise_count(leaders).astype(np.int64), code.coset_min_weights)
    keys = code.all_word_keys()
    words = np.arange(1 << 9, dtype=np.uint64)
    for key in range(leaders.size):
        members = words[keys == key]
        w = np.bitwise_count(members)
        assert int(leaders[key]) == int(members[w == w.min()].min())


def test_coset_leaders_size_limit():
    with pytest.raises(TooLargeForExhaustive):
        _ = random_code(np.random.default_rng(0), 21, 20).coset_leaders


@settings(max_examples=200, deadline=None)
@given(generators, st.integers(0, 2**32 - 1))
def test_quantize_optimality(code, seed):
    x = np.random.default_rng(seed).integers(0, 2, size=code.n)
    q = gf2code.quantize(code, x)
    cw = gf2code.ints_to_bits(code.codebook, code.n)
    assert q.distance == int((cw != x).sum(axis=1).min())
    assert q.distance == int((q.codeword != x).sum())


@settings(max_examples=200, deadline=None)
@given(generators, st.integers(0, 2**32 - 1))
def test_quantization_closure(code, seed):
    rng = np.random.default_rng(seed)
    x, z = rng.integers(0, 2, size=(2, code.n))
    qx, qz = gf2code.quantize(code, x), gf2code.quantize(code, z)
    s = gf2code.bits_to_int(qx.codeword ^ qz.codeword)
    assert s in set(code.codebook.tolist())
    assert int(code.codebook[qx.message ^ qz.message]) == s


# source goodness


def test_source_goodness_examples():
    assert gf2code.source_goodness(LinearCode.identity(6)).value == 0.0
    assert gf2code.source_goodness(LinearCode.trivial(7)).value == 0.5
    assert gf2code.source_goodness(LinearCode.repetition(3)).value == 0.25


@pytest.mark.parametrize("seed", range(4))
def test_source_goodness_matches_oracle(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(3, 8))
    g = gf2code.random_generator(rng, n, int(rng.integers(0, n + 1)))
    assert gf2code.source_goodness(LinearCode(g, n=n)).value == pytest.approx(oracle_source(g), abs=1e-15)


def test_source_goodness_mc_consistent():
    code = random_code(np.random.default_rng(0), 14, 6)
    exact = gf2code.source_goodness(code).value
    est = gf2code.source_goodness(code, mode="mc", samples=40_000, seed=1)
    assert not est.exact and est.stderr > 0
    assert abs(est.value - exact) < 4 * est.stderr


def test_source_goodness_too_large():
    with pytest.raises(TooLargeForExhaustive):
        gf2code.source_goodness(random_code(np.random.default_rng(0), 21, 3), mode="exhaustive")


def test_source_goodness_monotone_in_nested_codes():
    rng = np.random.default_rng(8)
    g = gf2code.random_generator(rng, 12, 8)
    values = [gf2code.source_goodness(LinearCode(g[:k], n=12)).value for k in range(9)]
    assert all(a >= b for a, b in zip(values, values[1:]))


# channel goodness


def test_channel_goodness_examples():
    p = 0.1
    assert gf2code.channel_goodness(LinearCode.trivial(5), p).value == pytest.approx(0.0, abs=1e-15)
    assert gf2code.channel_goodness(LinearCode.identity(5), p).value == pytest.approx(1 - 0.9**5, abs=1e-15)
    assert gf2code.channel_goodness(LinearCode.repetition(3), p).value == pytest.approx(0.028, abs=1e-15)


@pytest.mark.parametrize("seed", range(4))
def test_channel_goodness_bounds_against_oracle(seed):
    # any minimum-distance tie-break lies between "always right" and "always wrong" on ties
    rng = np.random.default_rng(seed)
    g = gf2code.random_generator(rng, 7, int(rng.integers(1, 5)))
    code = LinearCode(g)
    p = 0.15
    nearest = oracle_min_distance_sets(g)
    zero = (0,) * 7
    lo = 1 - sum(p ** sum(e) * (1 - p) ** (7 - sum(e)) for e, b in nearest.items() if zero in b)
    hi = 1 - sum(p ** sum(e) * (1 - p) ** (7 - sum(e)) for e, b in nearest.items() if b == {zero})
    value = gf2code.channel_goodness(code, p).value
    assert lo - 1e-12 <= value <= hi + 1e-12
    # and it equals the exact failure rate of the decoder itself
    fail = 0.0
    for e in nearest:
        if gf2code.decode(code, e).message != 0:
            fail += p ** sum(e) * (1 - p) ** (7 - sum(e))
    assert value == pytest.approx(fail, abs=1e-12)


def test_channel_goodness_mc_consistent():
    code = random_code(np.random.default_rng(1), 14, 5)
    exact = gf2code.channel_goodness(code, 0.08).value
    est = gf2code.channel_goodness(code, 0.08, mode="mc", samples=50_000, seed=2)
    assert abs(est.value - exact) < 4 * est.stderr


@pytest.mark.parametrize("p", [0.0, 0.5, -0.1, 0.7])
def test_channel_goodness_out_of_range(p):
    with pytest.raises(OutOfRange):
        gf2code.channel_goodness(LinearCode.repetition(3), p)


# search


def test_search_examples():
    res = gf2code.search_code(4, 4, 3, seed=0)
    assert res.report.avg_distortion == 0.0 and res.code.is_full_rank()
    res = gf2code.search_code(3, 1, 30, seed=0)
    assert res.report.avg_distortion == 0.25


def test_search_regression_pin():
    # measured once; the sphere-covering bound rules out values below about 0.1497
    res = gf2code.search_code(16, 8, 500, seed=7)
    assert res.report.avg_distortion == 0.15185546875
    assert res.report.channel_error_prob == pytest.approx(0.19880389091069883, abs=1e-15)
    assert res.trial == 117


def test_search_deterministic_and_thread_independent():
    a = gf2code.search_code(10, 4, 40, criterion="both", crossover=0.05, seed=3)
    b = gf2code.search_code(10, 4, 40, criterion="both", crossover=0.05, seed=3, threads=4)
    assert np.array_equal(a.code.generator, b.code.generator)
    assert a.report == b.report and a.trial == b.trial


def test_search_criteria():
    src = gf2code.search_code(10, 4, 30, criterion="source", seed=1)
    ch = gf2code.search_code(10, 4, 30, criterion="channel", crossover=0.05, seed=1)
    assert src.report.avg_distortion <= ch.report.avg_distortion
    assert ch.report.channel_error_prob <= src.report.channel_error_prob
    assert 0 <= src.report.avg_distortion <= 0.5
    assert 0 <= ch.report.channel_error_prob <= 1


@pytest.mark.parametrize("n, k, trials", [(3, 0, 5), (3, 4, 5), (21, 3, 5), (5, 2, 0)])
def test_search_invalid(n, k, trials):
    with pytest.raises(InvalidDimensions):
        gf2code.search_code(n, k, trials)
