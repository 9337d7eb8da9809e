"""One-parameter unitary precoder families, finite codebooks and selection.

A family maps an angle to an ``nt x nt`` unitary matrix. Sampling it on
the uniform grid ``2 pi i / 2^B`` gives a codebook indexed by B feedback
bits. The receiver picks the entry whose effective channel has the
largest minimum distance over the difference constellation.
"""

from __future__ import annotations

import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import _kernels
from .channel import ChannelRealization, as_rng, complex_gaussian
from .errors import ConfigError
from .lattice import OpCount, RealLattice, constrained_svp, coord_grid, realify
from .modulation import Constellation

__all__ = [
    "UnitaryFamily",
    "PrecoderCodebook",
    "family_u2",
    "family_u2_example",
    "family_u3",
    "family_u_recursive",
    "get_family",
    "default_family",
    "FAMILY_NAMES",
    "build_codebook",
    "dmin_for_index",
    "select_precoder",
    "select_precoders",
    "mu_metric",
]

_SQRT_HALF = 1.0 / math.sqrt(2.0)
_TWO_PI = 2 * math.pi


def family_u2(theta: float) -> np.ndarray:
    t = theta % _TWO_PI
    e = np.exp(1j * t)
    return _SQRT_HALF * np.array([[e, 1.0], [-1.0, np.conj(e)]], dtype=complex)


def family_u2_example(theta: float) -> np.ndarray:
    t = theta % _TWO_PI
    return _SQRT_HALF * np.array(
        [
            [np.exp(-0.5j * t), np.exp(-1j * t)],
            [np.exp(1.5j * t), -np.exp(1j * t)],
        ],
        dtype=complex,
    )


def family_u3(theta: float) -> np.ndarray:
    t = theta % _TWO_PI
    e = np.exp(1j * t)
    h = np.exp(0.5j * t)
    return (1.0 / 3.0) * np.array(
        [
            [2 * e, -2, e],
            [h, 2 / h, 2 * h],
            [2, 1 / e, -2],
        ],
        dtype=complex,
    )


def family_u_recursive(m: int, theta: float) -> np.ndarray:
    """Block recursion giving a ``2^(m+1)``-dimensional unitary, ``m >= 1``.

    ``U_{2k} = [[U_k, I], [-I, U_k^H]] / sqrt(2)`` with ``U_2`` as base.
    """
    if m < 1:
        raise ConfigError(f"recursion level must be >= 1, got {m}")
    u = family_u2(theta)
    for _ in range(m):
        k = u.shape[0]
        eye = np.eye(k)
        u = _SQRT_HALF * np.block([[u, eye], [-eye, u.conj().T]])
    return u


@dataclass(frozen=True)
class UnitaryFamily:
    name: str
    nt: int
    eval: Callable[[float], np.ndarray]

    def __call__(self, theta: float) -> np.ndarray:
        return self.eval(theta)


def _identity_family(nt: int) -> UnitaryFamily:
    return UnitaryFamily(f"identity{nt}", nt, lambda theta: np.eye(nt, dtype=complex))


_FAMILIES = {
    "u2": lambda: UnitaryFamily("u2", 2, family_u2),
    "u2-example": lambda: UnitaryFamily("u2-example", 2, family_u2_example),
    "u3": lambda: UnitaryFamily("u3", 3, family_u3),
    "u4": lambda: UnitaryFamily("u4", 4, lambda t: family_u_recursive(1, t)),
    "u8": lambda: UnitaryFamily("u8", 8, lambda t: family_u_recursive(2, t)),
}
FAMILY_NAMES = tuple(_FAMILIES) + ("identityN",)
_DEFAULT_FOR_NT = {2: "u2", 3: "u3", 4: "u4", 8: "u8"}


def get_family(name: str) -> UnitaryFamily:
    """Look up a family by name; ``identity<N>`` gives the constant identity."""
    if name in _FAMILIES:
        return _FAMILIES[name]()
    if name.startswith("identity") and name[8:].isdigit():
        return _identity_family(int(name[8:]))
    raise ConfigError(f"unknown precoder family {name!r}; choose from {', '.join(FAMILY_NAMES)}")


def default_family(nt: int) -> UnitaryFamily:
    if nt not in _DEFAULT_FOR_NT:
        raise ConfigError(f"no default precoder family for nt={nt}")
    return get_family(_DEFAULT_FOR_NT[nt])


@dataclass(frozen=True)
class PrecoderCodebook:
    """Ordered precoders; ``entries[i]`` is the family at angle ``2 pi i / 2^b``."""

    name: str
    b: int
    entries: np.ndarray

    @property
    def nt(self) -> int:
        return self.entries.shape[1]

    def __len__(self) -> int:
        return self.entries.shape[0]

    @classmethod
    def from_matrices(cls, matrices, name: str = "custom") -> "PrecoderCodebook":
        entries = np.asarray(matrices, dtype=complex)
        if entries.ndim == 2:
            entries = entries[None]
        n = entries.shape[0]
        return cls(name, math.ceil(math.log2(n)) if n > 1 else 0, entries)

    def to_json(self) -> str:
        doc = {
            "family": self.name,
            "bits": self.b,
            "nt": self.nt,
            "entries": [
                {
                    "index": i,
                    "theta": 2 * math.pi * i / len(self),
                    "matrix": [[[float(z.real), float(z.imag)] for z in row] for row in m],
                }
                for i, m in enumerate(self.entries)
            ],
        }
        return json.dumps(doc, indent=2)

    @classmethod
    def from_json(cls, text: str) -> "PrecoderCodebook":
        doc = json.loads(text)
        entries = np.array(
            [[[re + 1j * im for re, im in row] for row in e["matrix"]] for e in doc["entries"]],
            dtype=complex,
        )
        return cls(doc["family"], int(doc["bits"]), entries)


def build_codebook(family: UnitaryFamily, b: int) -> PrecoderCodebook:
    if b < 0:
        raise ConfigError(f"feedback bits must be >= 0, got {b}")
    n = 1 << b
    entries = np.stack([family(2 * math.pi * i / n) for i in range(n)])
    return PrecoderCodebook(family.name, b, entries)


def _h(h) -> np.ndarray:
    return h.h if isinstance(h, ChannelRealization) else np.asarray(h, dtype=complex)


def dmin_for_index(h, cb: PrecoderCodebook, i: int, c: Constellation, stats: OpCount | None = None) -> float:
    """Minimum distance of the received constellation when precoding with entry ``i``."""
    if not 0 <= i < len(cb):
        raise IndexError(f"codebook index {i} out of range for {len(cb)} entries")
    lattice = RealLattice.from_complex(_h(h) @ cb.entries[i], c.diff)
    return constrained_svp(lattice, stats)[0]


def select_precoders(hs: np.ndarray, entries: np.ndarray, diff) -> tuple[np.ndarray, np.ndarray, OpCount]:
    """Batched selection over channels ``hs`` of shape (blocks, nr, nt).

    Returns the chosen indices, the squared minimum distances they achieve,
    and the operations spent (effective-channel products included).
    """
    hs = np.asarray(hs, dtype=complex)
    nb, nr, nt = hs.shape
    ncb = entries.shape[0]
    lo, step, nlev = coord_grid(diff)
    bases = realify(np.einsum("bij,njk->bnik", hs, entries))
    p = np.zeros(nb, dtype=np.int64)
    d2 = np.zeros(nb)
    ops = np.zeros(3, dtype=np.int64)
    _kernels.select_batch(np.ascontiguousarray(bases), lo, step, nlev, p, d2, ops)
    stats = OpCount.from_array(ops)
    # H @ F_i: nr*nt*nt complex multiply-accumulates per entry
    cmacs = nb * ncb * nr * nt * nt
    stats.real_mults += 4 * cmacs
    stats.real_adds += 4 * cmacs - 2 * nb * ncb * nr * nt
    return p, d2, stats


def select_precoder(h, cb: PrecoderCodebook, c: Constellation, stats: OpCount | None = None) -> tuple[int, float]:
    """Index maximising the minimum distance (lowest index on ties) and that distance."""
    if len(cb) == 0:
        raise ConfigError("empty codebook")
    p, d2, ops = select_precoders(_h(h)[None], cb.entries, c.diff)
    if stats is not None:
        stats.real_mults += ops.real_mults
        stats.real_adds += ops.real_adds
        stats.nodes_visited += ops.nodes_visited
    return int(p[0]), float(np.sqrt(d2[0]))


def mu_ratios(hs: np.ndarray, cb: PrecoderCodebook, c: Constellation) -> np.ndarray:
    """Per-channel ratio of best precoded to unprecoded squared minimum distance."""
    hs = np.asarray(hs, dtype=complex)
    _, num, _ = select_precoders(hs, cb.entries, c.diff)
    _, den, _ = select_precoders(hs, np.eye(cb.nt, dtype=complex)[None], c.diff)
    return num / den


def mu_metric(family: UnitaryFamily, b: int, c: Constellation, samples: int, rng, nr: int | None = None, workers: int = 1):
    """Monte-Carlo estimate of the expected squared-distance gain of a codebook.

    Each channel sample contributes the paired ratio
    ``max_i dmin^2(H U_i) / dmin^2(H)``. Channels are drawn up front from
    ``rng``, so the estimate does not depend on ``workers``.

    Returns ``(mu, stderr)``.
    """
    if samples < 1:
        raise ConfigError("samples must be >= 1")
    nt = family.nt
    nr = nt if nr is None else nr
    hs = complex_gaussian(as_rng(rng), (samples, nr, nt))
    cb = build_codebook(family, b)
    if workers > 1:
        parts = np.array_split(hs, workers)
        with ThreadPoolExecutor(workers) as pool:
            ratios = np.concatenate(list(pool.map(lambda part: mu_ratios(part, cb, c), parts)))
    else:
        ratios = mu_ratios(hs, cb, c)
    stderr = float(np.std(ratios, ddof=1) / np.sqrt(samples)) if samples > 1 else float("nan")
    return float(np.mean(ratios)), stderr
