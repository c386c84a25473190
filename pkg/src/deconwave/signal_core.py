"""
Sampled fields on the unit square and their per-row Fourier analysis.

Rows are profiles ``u_l = l/M``; columns are samples ``t_i = i/N``.  The
forward transform carries a ``1/N`` factor so that a row spectrum holds the
Riemann-sum approximations of the functional Fourier coefficients
``h_m(u) = int_0^1 h(t, u) exp(-2 pi i m t) dt``.

Spectra are stored in numpy FFT order: column ``c`` holds frequency
``m = c`` for ``c < N/2`` and ``m = c - N`` otherwise, so the frequency range
is ``{-N/2, ..., N/2 - 1}``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


class DimensionError(ValueError):
    """Grid dimensions are not admissible (non power of two, too small, mismatched)."""


def is_power_of_two(n: int) -> bool:
    return n > 0 and (n & (n - 1)) == 0


def _check_grid(M: int, N: int) -> None:
    if not (is_power_of_two(M) and is_power_of_two(N)):
        raise DimensionError(f"grid {M}x{N}: both dimensions must be powers of two")
    if M < 8 or N < 8:
        raise DimensionError(f"grid {M}x{N}: both dimensions must be at least 8")


@dataclass(frozen=True)
class SampledField:
    """Real samples ``values[l, i] = h(t_i, u_l)`` on an ``M x N`` grid."""

    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.ndim != 2:
            raise DimensionError(f"expected a 2-D array, got shape {v.shape}")
        _check_grid(*v.shape)
        if not np.all(np.isfinite(v)):
            raise ValueError("field contains non-finite values")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @property
    def M(self) -> int:
        return self.values.shape[0]

    @property
    def N(self) -> int:
        return self.values.shape[1]

    @property
    def shape(self) -> tuple[int, int]:
        return self.values.shape

    def __sub__(self, other: "SampledField") -> "SampledField":
        if self.shape != other.shape:
            raise DimensionError(f"shape mismatch {self.shape} vs {other.shape}")
        return SampledField(self.values - other.values)


@dataclass(frozen=True)
class RowSpectrum:
    """Per-row functional Fourier coefficients, ``coeffs[l, c]`` in FFT column order."""

    coeffs: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.coeffs, dtype=complex)
        if c.ndim != 2:
            raise DimensionError(f"expected a 2-D array, got shape {c.shape}")
        _check_grid(*c.shape)
        c.setflags(write=False)
        object.__setattr__(self, "coeffs", c)

    @property
    def M(self) -> int:
        return self.coeffs.shape[0]

    @property
    def N(self) -> int:
        return self.coeffs.shape[1]

    @property
    def shape(self) -> tuple[int, int]:
        return self.coeffs.shape

    @property
    def freqs(self) -> np.ndarray:
        """Integer frequency of every column."""
        return frequency_index(self.N)

    def at(self, m) -> np.ndarray:
        """Column(s) for signed frequency ``m`` (scalar or array), all rows."""
        return self.coeffs[:, np.asarray(m) % self.N]

    def is_hermitian(self, atol: float = 1e-12) -> bool:
        flipped = np.conj(self.coeffs[:, (-np.arange(self.N)) % self.N])
        return bool(np.allclose(self.coeffs, flipped, rtol=0.0, atol=atol))


def frequency_index(N: int) -> np.ndarray:
    return np.fft.fftfreq(N, d=1.0 / N).astype(int)


def dft_rows(field: SampledField) -> RowSpectrum:
    """
    Forward per-row DFT with integral normalization.

    ``coeffs[l, m] = (1/N) sum_i values[l, i] exp(-2 pi i m t_i)``.
    """
    return RowSpectrum(np.fft.fft(field.values, axis=1) / field.N)


def idft_rows(spectrum: RowSpectrum) -> SampledField:
    """Inverse of :func:`dft_rows`; the real part of the synthesis is returned."""
    return SampledField(np.fft.ifft(spectrum.coeffs, axis=1).real * spectrum.N)


def l2_norm_sq(field: SampledField) -> float:
    """Discrete ``L^2([0,1]^2)`` squared norm, the grid mean of ``values**2``."""
    return float(np.mean(field.values ** 2))


def spectrum_norm_sq(spectrum: RowSpectrum) -> float:
    # Parseval counterpart of l2_norm_sq under the 1/N convention
    return float(np.sum(np.abs(spectrum.coeffs) ** 2) / spectrum.M)


def mise_one(estimate: SampledField, truth: SampledField) -> float:
    """Squared ``L^2`` distance between an estimate and the truth."""
    return l2_norm_sq(estimate - truth)
