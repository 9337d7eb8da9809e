"""2x2 Golden code: encoder, real equivalent channel and exact ML decoder.

Codeword for symbols ``s1..s4``::

    X = 1/sqrt(5) [[a (s1 + s2 phi),      a (s3 + s4 phi)],
                   [i abar (s3 + s4 phib), abar (s1 + s2 phib)]]

with ``phi = (1 + sqrt 5)/2``, ``phib = 1 - phi``, ``a = 1 + i(1 - phi)``
and ``abar = 1 + i(1 - phib)``. Columns are channel uses. With this
scaling the average energy per channel use is ``2 Es``, the same as
uncoded V-BLAST over two antennas.
"""

from __future__ import annotations

import math

import numpy as np

from . import _kernels
from .channel import ChannelRealization
from .lattice import OpCount, coord_grid, realify, realify_vector
from .modulation import Constellation

__all__ = [
    "PHI",
    "golden_encode",
    "golden_dispersion",
    "golden_equivalent_channel",
    "golden_equivalent_channels",
    "golden_ml_decode",
    "stack_received",
]

PHI = (1.0 + math.sqrt(5.0)) / 2.0
PHI_BAR = 1.0 - PHI
ALPHA = 1.0 + 1j * (1.0 - PHI)
ALPHA_BAR = 1.0 + 1j * (1.0 - PHI_BAR)
_SCALE = 1.0 / math.sqrt(5.0)


def golden_encode(s) -> np.ndarray:
    s1, s2, s3, s4 = np.asarray(s, dtype=complex)
    return _SCALE * np.array(
        [
            [ALPHA * (s1 + s2 * PHI), ALPHA * (s3 + s4 * PHI)],
            [1j * ALPHA_BAR * (s3 + s4 * PHI_BAR), ALPHA_BAR * (s1 + s2 * PHI_BAR)],
        ]
    )


def golden_dispersion() -> np.ndarray:
    """Dispersion matrices ``A_k`` with ``X = sum_k s_k A_k``, shape (4, 2, 2)."""
    return np.stack([golden_encode(e) for e in np.eye(4)])


_DISPERSION = golden_dispersion()


def golden_equivalent_channels(hs) -> np.ndarray:
    """Complex 4x4 equivalent channels for a batch of 2x2 channels.

    Row order is the column-major stacking of ``H X`` (first channel use,
    then second).
    """
    hx = np.einsum("bij,kjl->bkli", np.asarray(hs, dtype=complex), _DISPERSION)
    return hx.reshape(hx.shape[0], 4, 4).transpose(0, 2, 1)


def golden_equivalent_channel(h) -> np.ndarray:
    """Real 8x8 matrix ``G`` with ``realify(vec(H X)) = G [Re s; Im s]``."""
    hm = h.h if isinstance(h, ChannelRealization) else np.asarray(h, dtype=complex)
    if hm.shape != (2, 2):
        raise ValueError(f"Golden code needs a 2x2 channel, got {hm.shape}")
    return realify(golden_equivalent_channels(hm[None])[0])


def stack_received(y_block) -> np.ndarray:
    """``realify(vec(Y))`` for received blocks; leading axes are batch axes."""
    y = np.asarray(y_block, dtype=complex)
    v = np.swapaxes(y, -1, -2).reshape(y.shape[:-2] + (4,))
    return realify_vector(v)


# G from four dense complex 2x2 products H @ A_k: 32 mults and 24 adds each
EQUIV_CHANNEL_OPS = OpCount(real_mults=4 * 32, real_adds=4 * 24)


def golden_ml_decode(y_block, h, c: Constellation) -> tuple[np.ndarray, OpCount]:
    """Joint ML decision on the four symbols of one codeword."""
    g = golden_equivalent_channel(h)
    y = stack_received(y_block)
    lo, step, nlev = coord_grid(c.pam)
    ops = np.zeros(3, dtype=np.int64)
    out = np.zeros((1, 1, 8), dtype=np.int64)
    _kernels.decode_batch(g[None], y[None, :, None], lo, step, nlev, out, ops)
    x = lo + step * out[0, 0]
    return x[:4] + 1j * x[4:], OpCount.from_array(ops) + EQUIV_CHANNEL_OPS
