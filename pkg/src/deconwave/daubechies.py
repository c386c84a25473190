"""
Periodized orthonormal Daubechies transform along the profile axis.

The default filter is the extremal-phase Daubechies filter with six vanishing
moments (12 taps), obtained by spectral factorization.  Each pyramid level is
an ``L x L`` orthogonal matrix built by circular wrapping of the filter, which
keeps the transform exactly orthonormal even when ``L`` is shorter than the
filter.

Flat layout used by the batched helpers, for ``M = 2^n`` and coarse level
``j0``::

    [approx (2^j0) | detail j0 (2^j0) | detail j0+1 (2^(j0+1)) | ... | detail n-1]

so the first ``2^J'`` entries span exactly the levels below ``J'``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from math import comb

import numpy as np

from .signal_core import DimensionError, is_power_of_two


@dataclass(frozen=True)
class DaubFilter:
    taps: np.ndarray
    vanishing_moments: int

    @property
    def highpass(self) -> np.ndarray:
        h = self.taps
        return ((-1) ** np.arange(h.size)) * h[::-1]


@lru_cache(maxsize=None)
def daubechies_filter(vanishing_moments: int = 6) -> DaubFilter:
    """
    Extremal-phase low-pass filter with ``vanishing_moments`` zeros at ``z = -1``.

    Roots of the Daubechies polynomial ``sum_k C(p-1+k, k) y^k`` are mapped to
    ``z`` through ``y = (2 - z - 1/z)/4`` and the ones inside the unit circle
    are kept.
    """
    p = vanishing_moments
    if p < 1:
        raise ValueError("need at least one vanishing moment")
    P = [comb(p - 1 + k, k) for k in range(p)]
    y_roots = np.roots(P[::-1]) if p > 1 else np.array([])
    z_roots = []
    for y in y_roots:
        pair = np.roots([1.0, -(2.0 - 4.0 * y), 1.0])
        z_roots.append(pair[np.argmin(np.abs(pair))])
    h = np.array([1.0])
    for _ in range(p):
        h = np.convolve(h, [1.0, 1.0])
    h = np.convolve(h, np.poly(z_roots)).real
    h *= np.sqrt(2.0) / h.sum()
    h.setflags(write=False)
    return DaubFilter(h, p)


@lru_cache(maxsize=None)
def _level_matrix(L: int, vanishing_moments: int) -> np.ndarray:
    # rows 0..L/2-1: low-pass, rows L/2..L-1: high-pass, circular wrap
    filt = daubechies_filter(vanishing_moments)
    h, g = filt.taps, filt.highpass
    half = L // 2
    W = np.zeros((L, L))
    k = np.arange(half)[:, None]
    cols = (2 * k + np.arange(h.size)[None, :]) % L
    rows = np.broadcast_to(k, cols.shape)
    np.add.at(W, (rows, cols), np.broadcast_to(h, cols.shape))
    np.add.at(W, (rows + half, cols), np.broadcast_to(g, cols.shape))
    W.setflags(write=False)
    return W


def _check_length(M: int, coarse_level: int) -> int:
    if not is_power_of_two(M):
        raise DimensionError(f"length {M} is not a power of two")
    n = M.bit_length() - 1
    if not 0 <= coarse_level <= n:
        raise ValueError(f"coarse level {coarse_level} outside [0, {n}]")
    return n


def dwt_flat(x: np.ndarray, coarse_level: int, axis: int = 0,
             vanishing_moments: int = 6) -> np.ndarray:
    """Orthonormal periodized pyramid along ``axis``, in the flat layout."""
    x = np.moveaxis(np.asarray(x), axis, 0)
    n = _check_length(x.shape[0], coarse_level)
    out = np.array(x, dtype=np.result_type(x, float), copy=True)
    for level in range(n, coarse_level, -1):
        L = 2 ** level
        W = _level_matrix(L, vanishing_moments)
        out[:L] = np.tensordot(W, out[:L], axes=(1, 0))
    return np.moveaxis(out, 0, axis)


def idwt_flat(c: np.ndarray, coarse_level: int, axis: int = 0,
              vanishing_moments: int = 6) -> np.ndarray:
    c = np.moveaxis(np.asarray(c), axis, 0)
    n = _check_length(c.shape[0], coarse_level)
    out = np.array(c, dtype=np.result_type(c, float), copy=True)
    for level in range(coarse_level + 1, n + 1):
        L = 2 ** level
        W = _level_matrix(L, vanishing_moments)
        out[:L] = np.tensordot(W.T, out[:L], axes=(1, 0))
    return np.moveaxis(out, 0, axis)


@dataclass
class UWaveletCoeffs:
    """Pyramid coefficients: ``approx`` at ``coarse_level`` and ``detail[j']`` of length ``2^j'``."""

    approx: np.ndarray
    detail: dict[int, np.ndarray] = field(default_factory=dict)
    coarse_level: int = 0

    @property
    def size(self) -> int:
        return self.approx.shape[0] + sum(d.shape[0] for d in self.detail.values())

    def to_flat(self) -> np.ndarray:
        return np.concatenate([self.approx] + [self.detail[j] for j in sorted(self.detail)])

    @classmethod
    def from_flat(cls, flat: np.ndarray, coarse_level: int) -> "UWaveletCoeffs":
        n = _check_length(flat.shape[0], coarse_level)
        approx = flat[: 2 ** coarse_level]
        detail = {j: flat[2 ** j: 2 ** (j + 1)] for j in range(coarse_level, n)}
        return cls(approx, detail, coarse_level)

    def energy(self) -> float:
        return float(np.sum(np.abs(self.to_flat()) ** 2))


def dwt_periodic(x, coarse_level: int, vanishing_moments: int = 6) -> UWaveletCoeffs:
    """
    Periodized orthonormal DWT of a real or complex vector.

    Parameters
    ----------
    x : array_like
        Samples ``x[l]`` of length ``M = 2^n``; trailing axes are carried along.
    coarse_level : int
        Level ``j0`` of the approximation block (``2^j0`` coefficients).
    """
    x = np.asarray(x)
    return UWaveletCoeffs.from_flat(dwt_flat(x, coarse_level, 0, vanishing_moments), coarse_level)


def idwt_periodic(c: UWaveletCoeffs, vanishing_moments: int = 6) -> np.ndarray:
    return idwt_flat(c.to_flat(), c.coarse_level, 0, vanishing_moments)


def continuous_scale(c: UWaveletCoeffs, M: int) -> UWaveletCoeffs:
    """
    Rescale discrete coefficients by ``M^{-1/2}``.

    Turns orthonormal DWT coefficients of samples ``h(u_l)`` into Riemann-sum
    approximations of ``int h(u) eta_{j',k'}(u) du``.
    """
    s = M ** -0.5
    return UWaveletCoeffs(c.approx * s, {j: d * s for j, d in c.detail.items()}, c.coarse_level)
