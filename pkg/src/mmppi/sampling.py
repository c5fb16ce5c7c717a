"""Sobol low-discrepancy stream mapped to Gaussian control perturbations.

Points are generated in Gray-code order from the direction-number table in
:mod:`mmppi._sobol_table` (32-bit precision), optionally XOR-ed with a
seed-driven digital shift. Uniform coordinates are mapped to Gaussian
perturbations through the inverse normal CDF, which preserves the
low-discrepancy pairing across coordinates.
"""

from __future__ import annotations

import numpy as np
from scipy.special import ndtri

from ._sobol_table import M_INIT, MAX_DIMENSION, POLY
from .params import ConfigurationError, PerturbationScale

_BITS = 32
_SCALE = 2.0 ** -_BITS
# Clamp for shifted streams where a coordinate may hit exactly 0; plain
# streams starting at index >= 1 never produce 0 or 1.
_U_EPS = 2.0 ** -33


def _direction_vectors(dimension: int) -> np.ndarray:
    """(dimension, 32) direction vectors v_k = m_k << (31 - k), as uint32."""
    v = np.zeros((dimension, _BITS), dtype=np.uint32)
    for j in range(dimension):
        m = np.ones(_BITS, dtype=np.uint64)
        if j > 0:
            poly = POLY[j]
            deg = poly.bit_length() - 1
            init = M_INIT[j]
            for k in range(deg):
                m[k] = init[k]
            for k in range(deg, _BITS):
                mk = m[k - deg] ^ (m[k - deg] << np.uint64(deg))
                for i in range(1, deg):
                    if (poly >> (deg - i)) & 1:
                        mk ^= m[k - i] << np.uint64(i)
                m[k] = mk
        for k in range(_BITS):
            v[j, k] = np.uint32(m[k] << np.uint64(_BITS - 1 - k))
    return v


class SobolStream:
    """Deterministic Sobol point stream of fixed dimension.

    ``start_index`` selects the first sequence ordinal returned (index 0 is
    the all-zeros point); ``shift_seed`` applies a reproducible digital shift
    for multi-seed runs.
    """

    def __init__(self, dimension: int, start_index: int = 0,
                 shift_seed: int | None = None):
        if dimension < 1:
            raise ConfigurationError("sobol dimension must be >= 1")
        if dimension > MAX_DIMENSION:
            raise ConfigurationError(
                f"sobol dimension {dimension} exceeds the direction-number table "
                f"({MAX_DIMENSION})")
        if start_index < 0:
            raise ConfigurationError("start_index must be >= 0")
        self.dimension = dimension
        self.index = int(start_index)
        v = _direction_vectors(dimension)
        # Byte lookup tables: XOR of the 8 direction vectors selected by each
        # possible byte of the Gray code, one table per byte position.
        self._byte_tables = np.zeros((4, 256, dimension), dtype=np.uint32)
        for b in range(4):
            for byte in range(1, 256):
                low = byte & (-byte)
                rest = byte ^ low
                bit = low.bit_length() - 1
                self._byte_tables[b, byte] = (
                    self._byte_tables[b, rest] ^ v[:, 8 * b + bit])
        if shift_seed is None:
            self._shift = None
        else:
            rng = np.random.default_rng(shift_seed)
            self._shift = rng.integers(0, 2 ** _BITS, size=dimension,
                                       dtype=np.uint64).astype(np.uint32)

    def next_points(self, n: int) -> np.ndarray:
        """Next ``n`` points as an (n, dimension) float64 array in [0, 1)."""
        if n < 1:
            raise ConfigurationError("n must be >= 1")
        idx = np.arange(self.index, self.index + n, dtype=np.uint64)
        self.index += n
        gray = (idx ^ (idx >> np.uint64(1))).astype(np.uint32)
        t = self._byte_tables
        x = t[0, gray & 0xFF] ^ t[1, (gray >> np.uint32(8)) & 0xFF] \
            ^ t[2, (gray >> np.uint32(16)) & 0xFF] ^ t[3, (gray >> np.uint32(24)) & 0xFF]
        if self._shift is not None:
            x ^= self._shift
        return x.astype(np.float64) * _SCALE


def sobol_points(stream: SobolStream, n: int) -> np.ndarray:
    """Draw the next ``n`` points from ``stream``."""
    return stream.next_points(n)


def gaussian_perturbations(points: np.ndarray, scale: PerturbationScale) -> np.ndarray:
    """Map (n, 2T) uniform points to (n, T, 2) Gaussian input-rate perturbations.

    Columns [0, T) drive the steering-rate channel, columns [T, 2T) the jerk
    channel.
    """
    points = np.asarray(points, dtype=np.float64)
    if points.ndim != 2 or points.shape[1] % 2 != 0:
        raise ConfigurationError("points must be (n, 2T) with an even column count")
    horizon = points.shape[1] // 2
    z = ndtri(np.clip(points, _U_EPS, 1.0 - _U_EPS))
    out = np.empty((points.shape[0], horizon, 2))
    out[:, :, 0] = z[:, :horizon] * scale.sigma_ddelta
    out[:, :, 1] = z[:, horizon:] * scale.sigma_jx
    return out
