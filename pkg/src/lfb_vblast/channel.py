"""Flat Rayleigh MIMO channel and SNR calibration.

The received model is ``y = H F x + n`` with ``H`` i.i.d. CN(0, 1) and
``n`` i.i.d. CN(0, sigma2), where ``sigma2`` is the total variance of a
complex noise entry (each of the real and imaginary parts carries
``sigma2 / 2``).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError

__all__ = [
    "ChannelRealization",
    "NoiseSpec",
    "as_rng",
    "complex_gaussian",
    "sample_channel",
    "noise_sigma2",
    "transmit",
]


def as_rng(rng) -> np.random.Generator:
    """Accept a Generator or an integer seed."""
    if isinstance(rng, np.random.Generator):
        return rng
    return np.random.default_rng(rng)


def complex_gaussian(rng: np.random.Generator, shape, variance: float = 1.0) -> np.ndarray:
    """Circularly-symmetric complex Gaussian samples with total variance ``variance``."""
    if isinstance(shape, int):
        shape = (shape,)
    g = rng.standard_normal(tuple(shape) + (2,))
    return np.sqrt(variance / 2.0) * (g[..., 0] + 1j * g[..., 1])


@dataclass(frozen=True)
class ChannelRealization:
    h: np.ndarray

    def __post_init__(self):
        h = np.asarray(self.h, dtype=complex)
        if h.ndim != 2:
            raise ConfigError(f"channel matrix must be 2-D, got shape {h.shape}")
        if not np.all(np.isfinite(h)):
            raise ConfigError("channel matrix has non-finite entries")
        object.__setattr__(self, "h", h)

    @property
    def nr(self) -> int:
        return self.h.shape[0]

    @property
    def nt(self) -> int:
        return self.h.shape[1]


@dataclass(frozen=True)
class NoiseSpec:
    snr_db: float
    nt: int
    es: float

    @property
    def sigma2(self) -> float:
        return noise_sigma2(self.snr_db, self.nt, self.es)


def sample_channel(nt: int, nr: int, rng) -> ChannelRealization:
    return ChannelRealization(complex_gaussian(as_rng(rng), (nr, nt)))


def noise_sigma2(snr_db: float, nt: int, es: float) -> float:
    """Noise variance ``nt * es / gamma`` for an average received SNR ``gamma`` per receive antenna."""
    if es <= 0:
        raise ConfigError("symbol energy must be positive")
    return nt * es / 10.0 ** (snr_db / 10.0)


def transmit(h, f, x, sigma2: float, rng=None) -> np.ndarray:
    """Return ``H F x + n``.

    ``h`` may be a :class:`ChannelRealization` or a plain matrix. ``rng`` is
    only consulted when ``sigma2 > 0``.
    """
    hm = h.h if isinstance(h, ChannelRealization) else np.asarray(h, dtype=complex)
    f = np.asarray(f, dtype=complex)
    x = np.asarray(x, dtype=complex)
    nr, nt = hm.shape
    if f.shape != (nt, nt) or x.shape != (nt,):
        raise ConfigError(f"dimension mismatch: H {hm.shape}, F {f.shape}, x {x.shape}")
    y = hm @ (f @ x)
    if sigma2 > 0:
        if rng is None:
            raise ConfigError("a random stream is required when sigma2 > 0")
        y = y + complex_gaussian(as_rng(rng), nr, sigma2)
    return y
