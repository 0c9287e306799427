"""Hamming distortion and the log-likelihood joint distortion for bit pairs.

The joint measure on (x, z) -> (x_hat, z_hat) is

    d = -c * log2 p(x, z | x_hat, z_hat) + d0(x, z)

where the reverse channel comes from two independent BSC(delta) test
channels acting on uniform bits, and d0 zeroes the diagonal.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateDelta, InputError, LengthMismatch, ShapeMismatch
from .probkit import JointPmf


def hamming_avg(a, b) -> float:
    a = np.asarray(a, dtype=np.uint8).ravel()
    b = np.asarray(b, dtype=np.uint8).ravel()
    if a.size != b.size:
        raise LengthMismatch(f"lengths {a.size} and {b.size} differ")
    if a.size == 0:
        return 0.0
    return float(np.count_nonzero(a != b)) / a.size


@dataclass(frozen=True)
class DistortionTable:
    """Distortion matrix indexed [source symbol, reconstruction symbol]."""

    values: np.ndarray
    c: float = 1.0
    d0: np.ndarray | None = None

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.ndim != 2:
            raise ShapeMismatch("distortion table must be 2-D")
        if not np.all(np.isfinite(v)) or np.any(v < 0):
            raise InputError("distortion entries must be finite and >= 0")
        v = v.copy()
        v.setflags(write=False)
        object.__setattr__(self, "values", v)
        if self.d0 is not None:
            object.__setattr__(self, "d0", np.asarray(self.d0, dtype=float))

    @property
    def source_size(self) -> int:
        return self.values.shape[0]

    @property
    def recon_size(self) -> int:
        return self.values.shape[1]

    def to_dict(self) -> dict:
        return {
            "c": self.c,
            "values": self.values.tolist(),
            "d0": None if self.d0 is None else self.d0.tolist(),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "DistortionTable":
        return cls(np.array(data["values"], dtype=float), float(data.get("c", 1.0)), data.get("d0"))

    def dump(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh, indent=1)


def _bsc(delta: float) -> np.ndarray:
    return np.array([[1 - delta, delta], [delta, 1 - delta]])


def build_dxz(delta: float, c: float = 1.0) -> DistortionTable:
    """4 x 4 joint distortion over pairs, symbol index 2*x + z."""
    if not 0.0 < delta < 0.5:
        raise DegenerateDelta(f"delta={delta} must lie strictly inside (0, 0.5)")
    if c <= 0:
        raise InputError("c must be positive")
    # uniform inputs make the reverse channel the same BSC pair
    forward = np.kron(_bsc(delta), _bsc(delta))  # symmetric: p(recon | source)
    prior = np.full(4, 0.25)
    joint = prior[:, None] * forward  # [source, recon]
    reverse = joint / joint.sum(axis=0, keepdims=True)  # p(source | recon)
    d0 = c * np.log2(np.diag(reverse))
    values = -c * np.log2(reverse) + d0[:, None]
    np.fill_diagonal(values, 0.0)
    return DistortionTable(values, c, d0)


def bsc_pair_pmf(delta: float) -> JointPmf:
    """p(x, z, x_hat, z_hat) for uniform X, Z through independent BSC(delta)."""
    ch = _bsc(delta)
    return JointPmf.from_function(
        ("X", "Z", "Xh", "Zh"), (2, 2, 2, 2),
        lambda x, z, xh, zh: 0.25 * ch[x, xh] * ch[z, zh],
    )


def expected_distortion(pmf: JointPmf, table: DistortionTable, source_vars, recon_vars) -> float:
    """E[d(source, reconstruction)] with symbols formed lexicographically from the variable groups."""
    source_vars, recon_vars = list(source_vars), list(recon_vars)
    joint = pmf.marginal(source_vars + recon_vars)
    ns = int(np.prod([pmf.size_of(v) for v in source_vars]))
    nr = int(np.prod([pmf.size_of(v) for v in recon_vars]))
    if (ns, nr) != table.values.shape:
        raise ShapeMismatch(f"table is {table.values.shape}, variables give {(ns, nr)}")
    return float(np.sum(joint.reshape(ns, nr) * table.values))
