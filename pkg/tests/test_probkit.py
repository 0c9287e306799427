import itertools
import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mdlab import probkit
from mdlab.errors import NegativeMass, NotNormalized, OutOfRange, OverlappingSets, ShapeMismatch, UnknownVariable
from mdlab.probkit import JointPmf


def hb(p):
    # independent oracle for the binary entropy function
    return 0.0 if p in (0.0, 1.0) else -p * math.log(p, 2) - (1 - p) * math.log(1 - p, 2)


def uniform_pair():
    return JointPmf(("A", "B"), (2, 2), [0.25] * 4)


def diagonal_case():
    # B constant; A = C = D a fair bit
    return JointPmf.from_function(
        ("A", "B", "C", "D"), (2, 1, 2, 2), lambda a, b, c, d: 0.5 if a == c == d else 0.0
    )


# validate


def test_validate_uniform_ok():
    assert probkit.validate(uniform_pair()) == 0.0


def test_validate_not_normalized():
    with pytest.raises(NotNormalized):
        probkit.validate(JointPmf(("X",), (2,), [0.5, 0.6]))


def test_validate_negative_mass():
    with pytest.raises(NegativeMass):
        probkit.validate(JointPmf(("X",), (2,), [1.1, -0.1]))


def test_shape_mismatch():
    with pytest.raises(ShapeMismatch):
        JointPmf(("X", "Y"), (2, 2), [0.5, 0.5])
    with pytest.raises(ShapeMismatch):
        JointPmf(("X",), (0,), [])


def test_json_roundtrip(tmp_path):
    rng = np.random.default_rng(0)
    pmf = probkit.random_pmf(rng, ("X", "Y", "Z"), (2, 3, 2))
    path = tmp_path / "p.json"
    pmf.dump(path)
    doc = json.loads(path.read_text())
    assert doc["variables"] == [{"name": "X", "size": 2}, {"name": "Y", "size": 3}, {"name": "Z", "size": 2}]
    back = JointPmf.load(path)
    assert back.names == pmf.names and np.array_equal(back.probs, pmf.probs)


def test_json_order_first_variable_slowest():
    pmf = JointPmf.from_dict({"variables": [{"name": "A", "size": 2}, {"name": "B", "size": 2}], "probs": [0.1, 0.2, 0.3, 0.4]})
    assert pmf.probs[0, 1] == 0.2 and pmf.probs[1, 0] == 0.3


# entropy and information


def test_entropy_examples():
    assert probkit.entropy(JointPmf(("X",), (2,), [0.5, 0.5]), ["X"]) == pytest.approx(1.0, abs=1e-12)
    assert probkit.entropy(JointPmf(("X",), (2,), [1.0, 0.0]), ["X"]) == 0.0
    be = JointPmf(("X",), (2,), [0.89, 0.11])
    assert probkit.entropy(be, "X") == pytest.approx(hb(0.11), abs=1e-12)
    assert probkit.entropy(be, "X") == pytest.approx(0.49992, abs=5e-6)


def test_entropy_unknown_variable():
    with pytest.raises(UnknownVariable):
        probkit.entropy(uniform_pair(), ["Q"])


def test_mutual_information_examples():
    assert probkit.mutual_information(uniform_pair(), "A", "B") == pytest.approx(0.0, abs=1e-12)
    copy = JointPmf(("A", "B"), (2, 2), [0.5, 0, 0, 0.5])
    assert probkit.mutual_information(copy, "A", "B") == pytest.approx(1.0, abs=1e-12)
    d = 0.2
    ch = JointPmf.from_function(("X", "Xh"), (2, 2), lambda x, y: 0.5 * (d if x != y else 1 - d))
    assert probkit.mutual_information(ch, "X", "Xh") == pytest.approx(1 - hb(0.2), abs=1e-12)
    assert probkit.mutual_information(ch, "X", "Xh") == pytest.approx(0.27807, abs=5e-6)


def test_mutual_information_errors():
    with pytest.raises(OverlappingSets):
        probkit.mutual_information(uniform_pair(), ["A"], ["A"])
    with pytest.raises(UnknownVariable):
        probkit.mutual_information(uniform_pair(), ["A"], ["Q"])


def test_binary_entropy_and_convolution():
    assert probkit.binary_entropy(0.5) == 1.0
    assert probkit.binary_entropy(0.0) == 0.0
    assert probkit.binary_entropy(0.11) == pytest.approx(hb(0.11), abs=1e-14)
    assert probkit.binary_convolve(0.0, 0.3) == 0.3
    assert probkit.binary_convolve(0.5, 0.3) == pytest.approx(0.5)
    assert probkit.binary_convolve(0.1, 0.1) == pytest.approx(0.1 + 0.1 - 2 * 0.01)
    for bad in (-0.1, 1.5):
        with pytest.raises(OutOfRange):
            probkit.binary_entropy(bad)
        with pytest.raises(OutOfRange):
            probkit.binary_convolve(bad, 0.1)


def test_convolution_matches_xor_of_bits():
    a, b = 0.13, 0.37
    pmf = JointPmf.from_function(("P", "Q"), (2, 2), lambda p, q: (a if p else 1 - a) * (b if q else 1 - b))
    pmf = pmf.extend("S", 2, lambda p, q: p ^ q, ["P", "Q"])
    assert pmf.marginal(["S"])[1] == pytest.approx(probkit.binary_convolve(a, b), abs=1e-15)


# Markov chains and common functions


def test_is_markov_examples():
    rng = np.random.default_rng(1)
    prod = probkit.random_pmf(rng, ("A",), (2,))
    prod = JointPmf(("A", "B", "C"), (2, 2, 2), np.einsum("a,b,c->abc", prod.probs, [0.3, 0.7], [0.6, 0.4]))
    res = probkit.is_markov(prod, "A", "B", "C", 1e-12)
    assert res.holds and res.deviation == pytest.approx(0.0, abs=1e-12)
    copy = JointPmf.from_function(("A", "B", "C"), (2, 1, 2), lambda a, b, c: 0.5 * (a == c))
    res = probkit.is_markov(copy, "A", "B", "C", 1e-9)
    assert not res.holds and res.deviation == pytest.approx(1.0, abs=1e-12)
    for _ in range(20):
        chain = probkit.random_chain(rng, (2, 2, 2), ("A", "B", "C"))
        assert probkit.is_markov(chain, "A", "B", "C", 1e-9).holds


def test_common_function_examples():
    rng = np.random.default_rng(2)
    indep = JointPmf(("B", "C", "D"), (2, 2, 2), np.einsum("b,c,d->bcd", [0.4, 0.6], [0.3, 0.7], [0.5, 0.5]))
    assert not probkit.common_function_exists(indep, "B", "C", "D")
    diag = JointPmf.from_function(("B", "C", "D"), (1, 2, 2), lambda b, c, d: 0.5 * (c == d))
    assert probkit.common_function_exists(diag, "B", "C", "D")
    for _ in range(20):
        full = probkit.random_pmf(rng, ("B", "C", "D"), (2, 3, 3))
        assert not probkit.common_function_exists(full, "B", "C", "D")


def test_common_function_skips_zero_mass_b():
    table = np.zeros((2, 2, 2))
    table[0] = 0.25  # b = 0: full support; b = 1 carries no mass
    pmf = JointPmf(("B", "C", "D"), (2, 2, 2), table)
    assert probkit.common_function_witnesses(pmf, "B", "C", "D") == {0: False}


def test_common_function_block_structure_per_b():
    # b=0 connected, b=1 block diagonal with two blocks
    table = np.zeros((2, 3, 3))
    table[0] = 1 / 18
    table[1, 0, 0] = table[1, 1, 1] = table[1, 0, 1] = 0.1
    table[1, 2, 2] = 0.2
    pmf = JointPmf(("B", "C", "D"), (2, 3, 3), table)
    assert probkit.common_function_witnesses(pmf, "B", "C", "D") == {0: False, 1: True}


# lemma checkers


def test_lemma2_examples():
    rng = np.random.default_rng(3)
    pb = [0.3, 0.7]
    pcd = rng.dirichlet(np.ones(4), size=2).reshape(2, 2, 2)
    pa = probkit.random_kernel(rng, 2, 2)
    chain = JointPmf(("A", "B", "C", "D"), (2, 2, 2, 2), np.einsum("b,bcd,ba->abcd", pb, pcd, pa))
    res = probkit.check_lemma2(chain, "A", "B", "C", "D", 1e-9)
    assert res.hypotheses_hold and res.conclusion_holds

    res = probkit.check_lemma2(diagonal_case(), "A", "B", "C", "D", 1e-9)
    assert not res.hypotheses_hold and not res.conclusion_holds
    assert res.deviations["I(A;D|B,C)"] <= 1e-12 and res.deviations["I(A;C|B,D)"] <= 1e-12
    assert res.deviations["I(A;C,D|B)"] == pytest.approx(1.0, abs=1e-9)

    # A copies D while C is independent noise: first hypothesis fails
    gate = JointPmf.from_function(("A", "B", "C", "D"), (2, 1, 2, 2), lambda a, b, c, d: 0.25 * (a == d))
    res = probkit.check_lemma2(gate, "A", "B", "C", "D", 1e-9)
    assert not res.hypotheses_hold and res.deviations["I(A;D|B,C)"] == pytest.approx(1.0)


def test_lemma3_examples():
    rng = np.random.default_rng(4)
    chain = probkit.random_chain(rng)
    res = probkit.check_lemma3(chain, "A", "B", "C", "D", 1e-9)
    assert res.hypotheses_hold and res.conclusion_holds
    indep = JointPmf(("A", "B", "C", "D"), (2,) * 4, [1 / 16] * 16)
    assert probkit.check_lemma3(indep, "A", "B", "C", "D").conclusion_holds
    same = JointPmf.from_function(("A", "B", "C", "D"), (2,) * 4, lambda a, b, c, d: 0.5 * (a == b == c == d))
    res = probkit.check_lemma3(same, "A", "B", "C", "D")
    assert res.hypotheses_hold and res.conclusion_holds


def test_lemma3_hypothesis_failure_is_reported():
    # A = D fair bit, B and C constant: the first short chain fails
    pmf = JointPmf.from_function(("A", "B", "C", "D"), (2, 1, 1, 2), lambda a, b, c, d: 0.5 * (a == d))
    res = probkit.check_lemma3(pmf, "A", "B", "C", "D")
    assert not res.hypotheses_hold and not res.conclusion_holds and res.implication_holds


def test_extend_rejects_out_of_range():
    with pytest.raises(OutOfRange):
        uniform_pair().extend("S", 2, lambda a, b: a + b, ["A", "B"])


# properties

small_sizes = st.lists(st.integers(1, 4), min_size=2, max_size=3)


@settings(max_examples=1000, deadline=None)
@given(sizes=small_sizes, seed=st.integers(0, 2**32 - 1))
def test_chain_rule(sizes, seed):
    rng = np.random.default_rng(seed)
    names = tuple("ABC"[: len(sizes)])
    pmf = probkit.random_pmf(rng, names, sizes, concentration=0.5)
    a, rest = [names[0]], list(names[1:])
    joint = probkit.entropy(pmf, a + rest)
    assert joint == pytest.approx(probkit.entropy(pmf, a) + probkit.entropy(pmf, rest, given=a), abs=1e-9)


@settings(max_examples=300, deadline=None)
@given(seed=st.integers(0, 2**32 - 1))
def test_conditional_mi_nonnegative(seed):
    rng = np.random.default_rng(seed)
    sizes = tuple(int(s) for s in rng.integers(1, 4, size=3))
    pmf = probkit.random_pmf(rng, ("A", "B", "C"), sizes, concentration=0.3)
    from mdlab.probkit import _mi_raw

    assert _mi_raw(pmf, ["A"], ["B"], ["C"]) >= -1e-9
    assert probkit.mutual_information(pmf, "A", "B", "C") >= 0.0


unit = st.floats(0.0, 1.0, allow_nan=False)
half = st.floats(0.0, 0.5, allow_nan=False)


@given(a=unit, b=unit, c=unit)
def test_convolution_commutative_associative(a, b, c):
    conv = probkit.binary_convolve
    assert conv(a, b) == pytest.approx(conv(b, a), abs=1e-12)
    assert conv(conv(a, b), c) == pytest.approx(conv(a, conv(b, c)), abs=1e-12)


@given(a=half, b=half)
def test_entropy_of_convolution_dominates(a, b):
    h = probkit.binary_entropy
    assert h(probkit.binary_convolve(a, b)) >= max(h(a), h(b)) - 1e-12


@settings(max_examples=200, deadline=None)
@given(seed=st.integers(0, 2**32 - 1))
def test_common_function_relabel_invariant(seed):
    rng = np.random.default_rng(seed)
    table = rng.dirichlet(np.ones(2 * 3 * 3)).reshape(2, 3, 3)
    table[table < 0.04] = 0.0  # sparse supports give both verdicts
    table /= table.sum()
    pmf = JointPmf(("B", "C", "D"), (2, 3, 3), table)
    pc, pd = rng.permutation(3), rng.permutation(3)
    relabeled = JointPmf(("B", "C", "D"), (2, 3, 3), table[:, pc][:, :, pd])
    assert probkit.common_function_witnesses(pmf, "B", "C", "D") == probkit.common_function_witnesses(
        relabeled, "B", "C", "D"
    )


@settings(max_examples=300, deadline=None)
@given(seed=st.integers(0, 2**32 - 1))
def test_lemma2_implication(seed):
    rng = np.random.default_rng(seed)
    pmf = probkit.random_lemma2_case(rng)
    assert probkit.check_lemma2(pmf, "A", "B", "C", "D", 1e-9).implication_holds


@settings(max_examples=300, deadline=None)
@given(seed=st.integers(0, 2**32 - 1))
def test_lemma2_sparse_supports(seed):
    # chains through a disconnected support must be caught by the connectivity gate
    rng = np.random.default_rng(seed)
    table = rng.dirichlet(np.ones(16)).reshape(2, 2, 2, 2)
    mask = rng.random((1, 2, 2, 2)) < 0.6
    table = table * mask
    if table.sum() == 0:
        return
    table /= table.sum()
    pmf = JointPmf(("A", "B", "C", "D"), (2,) * 4, table)
    assert probkit.check_lemma2(pmf, "A", "B", "C", "D", 1e-9).implication_holds


@settings(max_examples=300, deadline=None)
@given(seed=st.integers(0, 2**32 - 1))
def test_lemma3_implication_on_chains(seed):
    rng = np.random.default_rng(seed)
    res = probkit.check_lemma3(probkit.random_lemma3_case(rng), "A", "B", "C", "D", 1e-9)
    assert res.hypotheses_hold and res.conclusion_holds


def test_lemma3_implication_rejection_sampled():
    # perturbed chains; keep those whose short chains hold at the tolerance
    rng = np.random.default_rng(5)
    checked = rejected = 0
    for _ in range(1000):
        base = probkit.random_chain(rng).probs
        table = base * np.exp(rng.normal(scale=rng.choice([0.01, 0.1, 0.5]), size=base.shape))
        pmf = JointPmf(("A", "B", "C", "D"), (2,) * 4, table / table.sum())
        res = probkit.check_lemma3(pmf, "A", "B", "C", "D", 1e-3)
        checked += res.hypotheses_hold
        rejected += not res.hypotheses_hold
        if res.hypotheses_hold:
            # chain rule: each long-chain term is a sum of two hypothesis terms
            assert max(res.deviations["I(A;C,D|B)"], res.deviations["I(A,B;D|C)"]) <= 2e-3 + 1e-9
    assert checked > 50 and rejected > 50


def test_random_chain_factorizes():
    rng = np.random.default_rng(6)
    pmf = probkit.random_chain(rng, (2, 3, 2, 3))
    for a, b, c in itertools.combinations("ABCD", 3):
        assert probkit.is_markov(pmf, a, b, c, 1e-9).holds
