"""Ready-made setups: the three- and four-description linear schemes, plus small test layouts."""

from __future__ import annotations

import numpy as np

from ..probkit import JointPmf, binary_entropy, mutual_information, random_kernel
from .builder import (
    CodebookLayout,
    Decoder,
    Setup,
    SumSpec,
    build_cms_system,
    r_var,
    rate_var,
    rho_var,
    rhop_var,
)
from .system import IneqSystem


def _bsc(p: float) -> np.ndarray:
    return np.array([[1 - p, p], [p, 1 - p]])


def _decoders(*subsets, distortion=None) -> list:
    distortion = distortion or {}
    return [Decoder(frozenset(s), distortion.get(frozenset(s))) for s in subsets]


# three descriptions: U1 = Q(X), U2 = Q(Z), description 3 carries U1 + U2


def three_desc_setup(delta: float = 0.2) -> Setup:
    """Test channels BSC(delta) from X to U1 and from Z to U2; U1+U2 decoded at 3, 13, 23."""
    ch = _bsc(delta)
    pmf = JointPmf.from_function(
        ("X", "Z", "U1", "U2"), (2, 2, 2, 2),
        lambda x, z, u1, u2: 0.25 * ch[x, u1] * ch[z, u2],
    )
    layout = CodebookLayout(
        L=3,
        base=[(frozenset({1}), 1, "U1"), (frozenset({2}), 1, "U2")],
        sums=[SumSpec("U1", "U2", None, (3,), (frozenset({3}), frozenset({1, 3}), frozenset({2, 3})))],
    )
    dist = {
        frozenset({1}): {"measure": "hamming", "source": "X", "recon": "U1", "target": delta},
        frozenset({2}): {"measure": "hamming", "source": "Z", "recon": "U2", "target": delta},
        frozenset({3}): {"measure": "hamming", "source": "X+Z", "recon": "U1+U2", "target": 2 * delta * (1 - delta)},
    }
    decoders = _decoders({1}, {2}, {3}, {1, 2}, {1, 3}, {2, 3}, distortion=dist)
    return Setup(3, pmf, layout, decoders, source=("X", "Z"), q_bits=1.0)


def three_desc_witness(delta: float = 0.2) -> dict:
    """Rate assignment realizing R1 = R2 = R3 = 1 - h(delta) in either branch."""
    r = 1.0 - binary_entropy(delta)
    w = "U1+U2"
    return {
        rate_var(1): r, rate_var(2): r, rate_var(3): r,
        r_var("U1"): r, r_var("U2"): r, r_var(w): r,
        rho_var("U1", 1): r, rho_var("U2", 2): r, rho_var(w, 3): r,
        rhop_var("U1"): 0.0, rhop_var("U2"): 0.0, rhop_var(w): 0.0,
    }


# four descriptions: quantizations of X and Z on 1 and 4, quantization noises on 2 and 3


def four_desc_setup(delta: float = 0.11, noise: float | None = None) -> Setup:
    """X = Z + N; U1 = X + N1, U4 = Z + N4; E1 = N1 and E2 = N4 are the quantization noises.

    ``noise`` is the bias of N (defaults to ``delta``). Decoder 23 recovers
    U1 + U4 from E1, E2 through the sum codebook, and with it X + Z.
    """
    noise = delta if noise is None else noise
    cn, cd = _bsc(noise)[0], _bsc(delta)[0]
    base = JointPmf.from_function(
        ("Z", "N", "N1", "N4"), (2, 2, 2, 2),
        lambda z, n, n1, n4: 0.5 * cn[n] * cd[n1] * cd[n4],
    )
    pmf = base.extend("X", 2, lambda z, n: z ^ n, ["Z", "N"])
    pmf = pmf.extend("U1", 2, lambda x, n1: x ^ n1, ["X", "N1"])
    pmf = pmf.extend("U4", 2, lambda z, n4: z ^ n4, ["Z", "N4"])
    pmf = pmf.extend("E1", 2, lambda n1: n1, ["N1"])
    pmf = pmf.extend("E2", 2, lambda n4: n4, ["N4"])
    layout = CodebookLayout(
        L=4,
        base=[
            (frozenset({1}), 1, "U1"),
            (frozenset({4}), 1, "U4"),
            (frozenset({2}), 1, "E1"),
            (frozenset({3}), 1, "E2"),
        ],
        sums=[SumSpec("U1", "U4", None, (), (frozenset({2, 3}),))],
    )
    dist = {
        frozenset({1}): {"measure": "hamming", "source": "X", "recon": "U1", "target": delta},
        frozenset({4}): {"measure": "hamming", "source": "Z", "recon": "U4", "target": delta},
        frozenset({1, 2}): {"measure": "hamming", "source": "X", "target": 0.0},
        frozenset({3, 4}): {"measure": "hamming", "source": "Z", "target": 0.0},
        frozenset({2, 3}): {"measure": "hamming", "source": "X+Z", "target": 0.0},
    }
    decoders = _decoders({1}, {4}, {1, 2}, {3, 4}, {2, 3}, distortion=dist)
    return Setup(4, pmf, layout, decoders, source=("X", "Z"), q_bits=1.0)


def four_desc_witness(delta: float = 0.11) -> dict:
    """Rates (1 - h, h, h, 1 - h) with the noise codebooks reduced by 1 - h."""
    h = binary_entropy(delta)
    r = 1.0 - h
    w = "U1+U4"
    return {
        rate_var(1): r, rate_var(2): h, rate_var(3): h, rate_var(4): r,
        r_var("U1"): r, r_var("U4"): r, r_var("E1"): h, r_var("E2"): h, r_var(w): r,
        rho_var("U1", 1): r, rho_var("U4", 4): r, rho_var("E1", 2): h, rho_var("E2", 3): h,
        rhop_var("U1"): 0.0, rhop_var("U4"): 0.0, rhop_var("E1"): r, rhop_var("E2"): r, rhop_var(w): 0.0,
    }


# random layouts used for cross-checking the two system builders


def _channel_pmf(rng: np.random.Generator, names: tuple) -> JointPmf:
    """Uniform bit X and binary auxiliaries drawn through independent random kernels from X."""
    kernels = [random_kernel(rng, 2, 2) for _ in names]

    def fn(x, *us):
        p = 0.5
        for k, u in zip(kernels, us):
            p *= k[x, u]
        return p

    return JointPmf.from_function(("X",) + names, (2,) * (len(names) + 1), fn)


def two_desc_setup(rng: np.random.Generator) -> Setup:
    """Two descriptions with private, common and refinement layers."""
    names = ("U1", "U2", "V", "U0")
    layout = CodebookLayout(
        L=2,
        base=[
            (frozenset({1}), 1, "U1"),
            (frozenset({2}), 1, "U2"),
            (frozenset({1, 2}), 1, "V"),
            (frozenset({1, 2}), 2, "U0"),
        ],
    )
    return Setup(2, _channel_pmf(rng, names), layout, _decoders({1}, {2}, {1, 2}))


def three_desc_random_setup(rng: np.random.Generator) -> Setup:
    """Three descriptions: private codebooks, a shared threshold-2 codebook and a refinement of 3."""
    names = ("U1", "U2", "U3", "V", "W3")
    layout = CodebookLayout(
        L=3,
        base=[
            (frozenset({1}), 1, "U1"),
            (frozenset({2}), 1, "U2"),
            (frozenset({3}), 1, "U3"),
            (frozenset({1, 2, 3}), 2, "V"),
        ],
        refine=[(2, 3, "W3")],
    )
    decoders = _decoders({1}, {2}, {3}, {1, 2}, {1, 3}, {2, 3}, {1, 2, 3})
    return Setup(3, _channel_pmf(rng, names), layout, decoders)


# derivation fixtures


def common_layer_fixture(pmf: JointPmf) -> tuple:
    """Rows behind the 'no common codebook at sum-rate optimality' argument.

    ``pmf`` must hold X, U1, U2, V, U0. Returns ``(system, rows, target)``
    where ``rows`` names the packing bounds at decoders 1, 2 and 12, the
    covering bound on all four codebooks, the rate accounting and the
    sum-rate optimality row, and ``target = I(U1;U2|V)``. The nonnegative
    combination of those rows collapses to ``r[V] + target <= 0``.
    """
    layout = CodebookLayout(
        L=2,
        base=[
            (frozenset({1}), 1, "U1"),
            (frozenset({2}), 1, "U2"),
            (frozenset({1, 2}), 1, "V"),
            (frozenset({1, 2}), 2, "U0"),
        ],
    )
    sum_rate = mutual_information(pmf, ["U0", "U1", "U2", "V"], ["X"])
    setup = Setup(
        2, pmf, layout, _decoders({1}, {2}, {1, 2}),
        extra_rows=[{"coeffs": {"R1": 1, "R2": 1}, "rel": "<=", "const": sum_rate, "label": "opt[12]"}],
    )
    full = build_cms_system(setup)
    labels = [
        "pack[1]{U1,V|}",
        "pack[2]{U2,V|}",
        "pack[12]{U0|U1,U2,V}",
        "cover{U1,U2,V,U0}",
        "rate[1]",
        "rate[2]",
        "opt[12]",
    ]
    rows = [full.find(lab) for lab in labels]
    system = IneqSystem(list(full.variables), rows, "common-layer")
    target = mutual_information(pmf, ["U1"], ["U2"], ["V"])
    return system, labels, target


def refinement_fixture(delta: float = 0.2, seed: int = 0) -> tuple:
    """Private codebooks U1, U2, U3 and a refinement codebook U23 carried on description 3.

    U1 and U2 are BSC(delta) test channels from X and Z; U3 and U23 are
    random binary channels from (X, Z). The system keeps the packing bound
    at decoder 13 on all its codebooks, the covering bound on everything,
    the rate accounting of descriptions 1 and 3, ``rho = r`` for the private
    codebooks and ``r1 = r2 = 1 - h(delta)``. Returns ``(system, expected)``
    where ``expected = I(U3,U23; X,Z,U1,U2) - I(U1; U3,U23)`` is the lower
    bound on R3 the elimination should produce.
    """
    rng = np.random.default_rng(seed)
    ch = _bsc(delta)
    k3 = random_kernel(rng, 4, 2)
    k23 = random_kernel(rng, 4, 2)
    pmf = JointPmf.from_function(
        ("X", "Z", "U1", "U2", "U3", "U23"), (2,) * 6,
        lambda x, z, u1, u2, u3, u23: 0.25 * ch[x, u1] * ch[z, u2] * k3[2 * x + z, u3] * k23[2 * x + z, u23],
    )
    r = 1.0 - binary_entropy(delta)
    layout = CodebookLayout(
        L=3,
        base=[(frozenset({1}), 1, "U1"), (frozenset({2}), 1, "U2"), (frozenset({3}), 1, "U3")],
        refine=[(2, 3, "U23")],
    )
    extra = [
        {"coeffs": {rho_var("U1", 1): 1, r_var("U1"): -1}, "rel": "=", "const": 0.0, "label": "private[U1]"},
        {"coeffs": {rho_var("U3", 3): 1, r_var("U3"): -1}, "rel": "=", "const": 0.0, "label": "private[U3]"},
        {"coeffs": {r_var("U1"): 1}, "rel": "=", "const": r, "label": "pool[U1]"},
        {"coeffs": {r_var("U2"): 1}, "rel": "=", "const": r, "label": "pool[U2]"},
    ]
    setup = Setup(3, pmf, layout, _decoders({1, 3}), source=("X", "Z"), extra_rows=extra)
    full = build_cms_system(setup)
    labels = ["pack[13]{U1,U23,U3|}", "cover{U1,U2,U3,U23}", "rate[1]", "rate[3]"] + [e["label"] for e in extra]
    system = IneqSystem(list(full.variables), [full.find(lab) for lab in labels], "refinement")
    expected = mutual_information(pmf, ["U3", "U23"], ["X", "Z", "U1", "U2"]) - mutual_information(
        pmf, ["U1"], ["U3", "U23"]
    )
    return system, expected
