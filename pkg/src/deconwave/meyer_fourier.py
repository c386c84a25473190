"""
Periodized Meyer wavelets on [0, 1], represented only by Fourier coefficients.

For the periodized wavelet ``psi_{j,k}(t) = sum_n 2^{j/2} psi(2^j (t + n) - k)``
the Fourier coefficients are

    psi_{j,k,m} = 2^{-j/2} exp(-2 pi i m k / 2^j) psi_hat(2 pi m / 2^j),

and likewise for the scaling functions with ``phi_hat``.  Level ``j`` therefore
lives on the integer band ``2^j/3 < |m| < 2^{j+2}/3`` (``2^{j+1}`` frequencies)
and the level-``j`` scaling space on ``|m| < 2^{j+1}/3``.

Analysis over all shifts ``k`` folds the band modulo ``2^j`` and does one
length-``2^j`` FFT, so a level costs ``O(|W_j| + 2^j log 2^j)``.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np


class LevelError(ValueError):
    """Requested resolution level does not fit the frequency grid."""


def meyer_aux(x):
    """Degree-3 auxiliary polynomial ``x^4 (35 - 84x + 70x^2 - 20x^3)``, clamped to [0, 1]."""
    x = np.clip(np.asarray(x, dtype=float), 0.0, 1.0)
    return x ** 4 * (35.0 - 84.0 * x + 70.0 * x ** 2 - 20.0 * x ** 3)


def psi_hat(xi):
    """Fourier transform of the Meyer mother wavelet at angular frequency ``xi``."""
    xi = np.asarray(xi, dtype=float)
    a = np.abs(xi)
    inner = (a >= 2 * np.pi / 3) & (a <= 4 * np.pi / 3)
    outer = (a > 4 * np.pi / 3) & (a <= 8 * np.pi / 3)
    mag = np.zeros_like(a)
    mag[inner] = np.sin(0.5 * np.pi * meyer_aux(3 * a[inner] / (2 * np.pi) - 1))
    mag[outer] = np.cos(0.5 * np.pi * meyer_aux(3 * a[outer] / (4 * np.pi) - 1))
    return np.exp(0.5j * xi) * mag


def phi_hat(xi):
    """Fourier transform of the Meyer scaling function (real, even)."""
    a = np.abs(np.asarray(xi, dtype=float))
    out = np.zeros_like(a)
    out[a <= 2 * np.pi / 3] = 1.0
    mid = (a > 2 * np.pi / 3) & (a <= 4 * np.pi / 3)
    out[mid] = np.cos(0.5 * np.pi * meyer_aux(3 * a[mid] / (2 * np.pi) - 1))
    return out.astype(complex)


@dataclass(frozen=True)
class MeyerBand:
    j: int
    indices: np.ndarray


@dataclass(frozen=True)
class PsiTable:
    """
    k-independent Fourier factors of one level.

    ``values[i] = psi_hat(2 pi m_i / 2^j)`` (or ``phi_hat`` when ``scaling``)
    for ``m_i = indices[i]``; the shift ``k`` enters as ``exp(-2 pi i m k / 2^j)``
    and the level normalization as ``2^{-j/2}``.
    """

    j: int
    scaling: bool
    indices: np.ndarray
    values: np.ndarray
    fold: np.ndarray  # |band| x 2^j one-hot matrix, m -> m mod 2^j

    @property
    def n_shifts(self) -> int:
        return 2 ** self.j

    def coeff(self, k: int, m):
        """``psi_{j,k,m}`` for frequencies ``m`` (zero off the band)."""
        m = np.asarray(m)
        xi = 2 * np.pi * m / 2 ** self.j
        base = phi_hat(xi) if self.scaling else psi_hat(xi)
        return 2.0 ** (-self.j / 2) * np.exp(-2j * np.pi * m * k / 2 ** self.j) * base


def _check_fits(j: int, N: int, top: int) -> None:
    if j < 0:
        raise LevelError(f"level {j} is negative")
    if top >= N // 2:
        raise LevelError(
            f"level {j} needs frequencies up to {top}, beyond Nyquist of N={N}")


def _band(lo_excl: float, hi_excl: float) -> np.ndarray:
    pos = np.arange(int(np.floor(lo_excl)) + 1, int(np.ceil(hi_excl)))
    pos = pos[(pos > lo_excl) & (pos < hi_excl)]
    return np.concatenate([-pos[::-1], pos])


def band_indices(j: int, N: int, clip: bool = False) -> MeyerBand:
    """
    Integer frequencies carrying level-``j`` Meyer wavelets on an ``N``-point grid.

    With ``clip=True`` a band that overruns Nyquist is cut to ``|m| < N/2``
    instead of raising; only level selection uses this.
    """
    idx = _band(2 ** j / 3, 2 ** (j + 2) / 3)
    if clip:
        if j < 0:
            raise LevelError(f"level {j} is negative")
        idx = idx[np.abs(idx) < N // 2]
    else:
        _check_fits(j, N, int(np.max(np.abs(idx))))
    return MeyerBand(j, idx)


def scaling_indices(j: int, N: int) -> MeyerBand:
    """Frequencies of the level-``j`` periodized Meyer scaling functions."""
    top = int(np.ceil(2 ** (j + 1) / 3)) - 1
    idx = np.arange(-top, top + 1)
    _check_fits(j, N, int(np.max(np.abs(idx))))
    return MeyerBand(j, idx)


@lru_cache(maxsize=None)
def psi_table(j: int, N: int, scaling: bool = False) -> PsiTable:
    band = scaling_indices(j, N) if scaling else band_indices(j, N)
    m = band.indices
    xi = 2 * np.pi * m / 2 ** j
    values = phi_hat(xi) if scaling else psi_hat(xi)
    n = 2 ** j
    fold = np.zeros((m.size, n))
    fold[np.arange(m.size), m % n] = 1.0
    for arr in (m, values, fold):
        arr.setflags(write=False)
    return PsiTable(j, scaling, m, values, fold)


def psi_coeff(j: int, k: int, m):
    """Fourier coefficient ``psi_{j,k,m}`` of the periodized Meyer wavelet."""
    if not 0 <= k < 2 ** j:
        raise ValueError(f"shift {k} out of range for level {j}")
    m = np.asarray(m)
    xi = 2 * np.pi * m / 2 ** j
    return 2.0 ** (-j / 2) * np.exp(-2j * np.pi * m * k / 2 ** j) * psi_hat(xi)


def analyze_t(c: np.ndarray, j: int, N: int, scaling: bool = False) -> np.ndarray:
    """
    Wavelet coefficients ``a_k = sum_{m in W_j} c_m conj(psi_{j,k,m})``.

    ``c`` holds values on ``psi_table(j, N, scaling).indices`` along its last
    axis; leading axes are batched.  Returns shape ``c.shape[:-1] + (2^j,)``.
    """
    table = psi_table(j, N, scaling)
    c = np.asarray(c)
    if c.shape[-1] != table.indices.size:
        raise ValueError(f"expected {table.indices.size} band values, got {c.shape[-1]}")
    folded = (c * np.conj(table.values)) @ table.fold
    n = table.n_shifts
    return 2.0 ** (-j / 2) * n * np.fft.ifft(folded, axis=-1)


def synthesize_t(a: np.ndarray, j: int, N: int, scaling: bool = False) -> np.ndarray:
    """Adjoint of :func:`analyze_t`: ``c_m = sum_k a_k psi_{j,k,m}`` on the band."""
    table = psi_table(j, N, scaling)
    a = np.asarray(a)
    if a.shape[-1] != table.n_shifts:
        raise ValueError(f"expected {table.n_shifts} shift coefficients, got {a.shape[-1]}")
    spread = np.fft.fft(a, axis=-1)[..., table.indices % table.n_shifts]
    return 2.0 ** (-j / 2) * table.values * spread
