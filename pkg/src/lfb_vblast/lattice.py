"""Real-valued lattice model, constrained shortest vector and sphere decoding.

A complex system ``y = H x + n`` is handled through its real form
``[Re y; Im y] = [[Re H, -Im H], [Im H, Re H]] [Re x; Im x] + ...``.
Both searches factor the basis by Householder QR and run a depth-first
Schnorr-Euchner enumeration restricted to a finite box of coordinates.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .errors import OracleTooLargeError

__all__ = [
    "OpCount",
    "RealLattice",
    "realify",
    "realify_vector",
    "constrained_svp",
    "sphere_decode",
    "brute_force_min",
    "coord_grid",
]

BRUTE_FORCE_CAP = 10**7


@dataclass
class OpCount:
    """Real-operation tallies for one or more searches.

    ``nodes_visited`` counts leaf candidates (complete coordinate vectors)
    whose distance was evaluated, so it never exceeds the box size.
    """

    real_mults: int = 0
    real_adds: int = 0
    nodes_visited: int = 0

    @property
    def total(self) -> int:
        return self.real_mults + self.real_adds

    def __add__(self, other: "OpCount") -> "OpCount":
        return OpCount(
            self.real_mults + other.real_mults,
            self.real_adds + other.real_adds,
            self.nodes_visited + other.nodes_visited,
        )

    @classmethod
    def from_array(cls, ops) -> "OpCount":
        return cls(int(ops[0]), int(ops[1]), int(ops[2]))


def realify(m) -> np.ndarray:
    """Real block form ``[[Re M, -Im M], [Im M, Re M]]``.

    Leading axes are treated as batch dimensions.
    """
    m = np.asarray(m, dtype=complex)
    re, im = m.real, m.imag
    top = np.concatenate([re, -im], axis=-1)
    bottom = np.concatenate([im, re], axis=-1)
    return np.concatenate([top, bottom], axis=-2)


def realify_vector(v) -> np.ndarray:
    """``[Re v; Im v]`` along the last axis."""
    v = np.asarray(v, dtype=complex)
    return np.concatenate([v.real, v.imag], axis=-1)


def coord_grid(coord_set) -> tuple[float, float, int]:
    """Return ``(lo, step, count)`` for an arithmetic progression of integers."""
    s = np.unique(np.asarray(coord_set, dtype=np.int64))
    if s.size == 0:
        raise ValueError("empty coordinate set")
    if s.size == 1:
        return float(s[0]), 1.0, 1
    steps = np.diff(s)
    if np.any(steps != steps[0]):
        raise ValueError(f"coordinate set {s.tolist()} is not evenly spaced")
    return float(s[0]), float(steps[0]), int(s.size)


@dataclass(frozen=True)
class RealLattice:
    """A real basis together with the admissible integer coordinates."""

    basis: np.ndarray
    coord_set: np.ndarray

    def __post_init__(self):
        basis = np.atleast_2d(np.asarray(self.basis, dtype=float))
        coords = np.unique(np.asarray(self.coord_set, dtype=np.int64))
        if 0 not in coords or not np.array_equal(coords, -coords[::-1]):
            raise ValueError("coordinate set must be symmetric about 0 and contain 0")
        object.__setattr__(self, "basis", basis)
        object.__setattr__(self, "coord_set", coords)

    @classmethod
    def from_complex(cls, h, coord_set) -> "RealLattice":
        return cls(realify(h), coord_set)

    @property
    def dim(self) -> int:
        return self.basis.shape[1]


def constrained_svp(lattice: RealLattice, stats: OpCount | None = None) -> tuple[float, np.ndarray]:
    """Shortest nonzero ``basis @ z`` with every ``z_k`` in the coordinate set.

    Returns ``(dmin, z_star)``. Of the pair ``±z_star`` the one whose last
    nonzero entry is positive is reported. If ``stats`` is given it is
    updated in place with the operations spent.
    """
    lo, step, nlev = coord_grid(lattice.coord_set)
    if nlev < 2:
        raise OracleTooLargeError(f"coordinate set {lattice.coord_set.tolist()} has no nonzero candidate")
    ops = np.zeros(3, dtype=np.int64)
    best = np.zeros(lattice.dim, dtype=np.int64)
    d2 = _kernels.svp_one(lattice.basis, lo, step, nlev, best, ops)
    if stats is not None:
        _accumulate(stats, ops)
    z = (lo + step * best).astype(np.int64)
    return float(np.sqrt(d2)), z


def sphere_decode(basis, y, s) -> tuple[np.ndarray, OpCount]:
    """Exact ML decision ``argmin_{x in S^n} ||y - basis x||``.

    ``s`` is the real PAM alphabet. Returns the decided integer vector and
    the operations spent, QR factorisation included.
    """
    basis = np.atleast_2d(np.asarray(basis, dtype=float))
    y = np.asarray(y, dtype=float)
    if y.shape != (basis.shape[0],):
        raise ValueError(f"received vector shape {y.shape} does not match basis rows {basis.shape[0]}")
    lo, step, nlev = coord_grid(s)
    ops = np.zeros(3, dtype=np.int64)
    out = np.zeros((1, 1, basis.shape[1]), dtype=np.int64)
    _kernels.decode_batch(basis[None], y[None, :, None], lo, step, nlev, out, ops)
    return (lo + step * out[0, 0]).astype(np.int64), OpCount.from_array(ops)


def _accumulate(stats: OpCount, ops) -> None:
    stats.real_mults += int(ops[0])
    stats.real_adds += int(ops[1])
    stats.nodes_visited += int(ops[2])


def brute_force_min(basis, y, coord_set, cap: int = BRUTE_FORCE_CAP):
    """Exhaustive search used as a test oracle.

    With ``y`` given, minimises ``||y - basis x||`` (ML mode); with ``y``
    None, minimises ``||basis z||`` over nonzero ``z`` (SVP mode).
    Returns ``(value, argmin)`` where value is the Euclidean norm.
    """
    basis = np.atleast_2d(np.asarray(basis, dtype=float))
    coords = np.unique(np.asarray(coord_set, dtype=np.int64))
    n = basis.shape[1]
    total = coords.size**n
    if total > cap:
        raise OracleTooLargeError(f"{total} candidates exceed cap {cap}")
    if y is None and total - int(0 in coords) <= 0:
        raise OracleTooLargeError("no nonzero candidate in the search box")
    cand = np.array(list(itertools.product(coords, repeat=n)), dtype=np.int64)
    if y is None:
        cand = cand[np.any(cand != 0, axis=1)]
        resid = cand @ basis.T
    else:
        resid = np.asarray(y, dtype=float)[None, :] - cand @ basis.T
    d2 = np.einsum("ij,ij->i", resid, resid)
    i = int(np.argmin(d2))
    return float(np.sqrt(d2[i])), cand[i]
