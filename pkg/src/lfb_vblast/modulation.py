"""Square QAM alphabets with per-axis Gray labels.

Alphabets are kept on the unnormalised odd-integer grid
(``{±1, ±3, ...} + j{±1, ±3, ...}``) so that lattice coordinates stay
integer; symbol energy enters the simulation only through the noise
variance.

Bit layout of one symbol: the first ``log2(sqrt(M))`` bits are the Gray
label of the in-phase level, the remaining bits label the quadrature
level. Level index 0 is the most negative amplitude, so the all-zero
word maps to ``-(sqrt(M)-1) - j(sqrt(M)-1)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import FramingError, MappingError, UnsupportedModulationError

__all__ = ["Constellation", "qam", "bits_to_vector", "vector_to_bits", "gray_code"]


def gray_code(i):
    """Binary-reflected Gray code of ``i`` (works elementwise on arrays)."""
    return i ^ (i >> 1)


def _inverse_gray(g: int) -> int:
    i = 0
    while g:
        i ^= g
        g >>= 1
    return i


@dataclass(frozen=True)
class Constellation:
    """Square M-QAM alphabet.

    Attributes
    ----------
    m : int
        Modulation order.
    pam : ndarray of int
        Real per-axis amplitudes in ascending order.
    diff : ndarray of int
        Unit-spaced difference set ``{s : |s| <= sqrt(M) - 1}``.
    points : ndarray of complex
        Alphabet indexed by the integer value of the symbol's bit label.
    """

    m: int
    pam: np.ndarray = field(repr=False)
    diff: np.ndarray = field(repr=False)
    points: np.ndarray = field(repr=False)

    @property
    def levels(self) -> int:
        return len(self.pam)

    @property
    def bits_per_axis(self) -> int:
        return int(math.log2(self.levels))

    @property
    def bits_per_symbol(self) -> int:
        return 2 * self.bits_per_axis

    @property
    def es(self) -> float:
        """Mean symbol energy, ``2(M-1)/3`` for the odd-integer grid."""
        return float(np.mean(np.abs(self.points) ** 2))

    def axis_bit_errors(self) -> np.ndarray:
        """Table ``T[a, b]`` = bit errors when level index ``a`` is decided as ``b``."""
        g = gray_code(np.arange(self.levels))
        x = g[:, None] ^ g[None, :]
        return np.array([[bin(int(v)).count("1") for v in row] for row in x], dtype=np.int64)


def qam(m: int) -> Constellation:
    """Build the square ``m``-QAM constellation.

    Raises
    ------
    UnsupportedModulationError
        If ``m`` is not an even power of two of at least 4.
    """
    side = math.isqrt(m) if m > 0 else 0
    if m < 4 or side * side != m or side & (side - 1):
        raise UnsupportedModulationError(f"unsupported QAM order {m}; need a square power of two >= 4")
    pam = np.arange(-(side - 1), side, 2, dtype=np.int64)
    diff = np.arange(-(side - 1), side, dtype=np.int64)
    k = int(math.log2(side))
    points = np.empty(m, dtype=complex)
    for label in range(m):
        i_level = _inverse_gray(label >> k)
        q_level = _inverse_gray(label & (side - 1))
        points[label] = pam[i_level] + 1j * pam[q_level]
    for arr in (pam, diff, points):
        arr.setflags(write=False)
    return Constellation(m=m, pam=pam, diff=diff, points=points)


def bits_to_vector(bits, c: Constellation, nt: int) -> np.ndarray:
    """Map ``nt * log2(M)`` bits to an ``nt``-long symbol vector, antenna 0 first."""
    b = np.asarray(bits, dtype=np.int64).ravel()
    k = c.bits_per_symbol
    if b.size != nt * k:
        raise FramingError(f"expected {nt * k} bits for nt={nt}, M={c.m}; got {b.size}")
    if np.any((b != 0) & (b != 1)):
        raise FramingError("bits must be 0 or 1")
    labels = b.reshape(nt, k) @ (1 << np.arange(k - 1, -1, -1))
    return c.points[labels]


def vector_to_bits(x, c: Constellation) -> np.ndarray:
    """Inverse of :func:`bits_to_vector`."""
    x = np.atleast_1d(np.asarray(x, dtype=complex))
    k = c.bits_per_symbol
    out = np.empty((x.size, k), dtype=np.int64)
    for n, sym in enumerate(x):
        hit = np.flatnonzero(np.abs(c.points - sym) < 1e-9)
        if hit.size == 0:
            raise MappingError(f"symbol {sym} is not in {c.m}-QAM")
        label = int(hit[0])
        out[n] = (label >> np.arange(k - 1, -1, -1)) & 1
    return out.ravel()
