"""
Adaptive hard-thresholding estimator for blind functional deconvolution.

Pipeline, for row spectra ``y`` (observations) and ``g_delta`` (noisy kernel):

1. truncate the kernel spectrum, keeping ``1/g_delta`` only where
   ``|g_delta| > kappa * sigma2 * sqrt(ln(MN)/MN)``;
2. choose the finest levels ``J`` (band energy rule) and ``J'`` (noise rule,
   capped at ``log2 M - 1``);
3. form ``y / g_delta`` on the surviving entries, transform along ``u`` with
   the periodized Daubechies pyramid and along ``t`` with Meyer wavelets;
4. hard-threshold every detail level ``j`` at ``lambda_j``;
5. synthesize back to the grid.

Coefficients are stored per ``t``-level as arrays of shape ``(2^j, 2^J')``:
row ``k`` is the Meyer shift, column is the Daubechies index in the flat
pyramid layout of :mod:`deconwave.daubechies`.  The ``t`` scaling block
(periodized Meyer scaling functions at level ``m0``) is stored under key
``m0 - 1``.
"""

from __future__ import annotations

import logging
import math
import warnings
from dataclasses import dataclass, field, asdict, replace
from typing import NamedTuple

import numpy as np

from . import daubechies as db
from .meyer_fourier import band_indices, psi_table, analyze_t, synthesize_t
from .signal_core import RowSpectrum, SampledField, DimensionError, idft_rows

log = logging.getLogger(__name__)

TRUNCATION_MODES = ("pointwise", "min_over_l")


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class EstimatorConfig:
    """
    Tuning constants and noise levels of the estimator.

    ``kappa`` scales the kernel truncation level; ``rho`` only enters through
    the constraints ``rho * kappa > 2`` and ``(rho * kappa)^2 >= 20`` that the
    theory requires of ``kappa``.  ``gamma1``/``gamma2`` multiply the two
    branches of the threshold.
    """

    kappa: float = 12.0
    rho: float = 0.4
    gamma1: float = 1.0
    gamma2: float = 1.0
    sigma1: float = 0.0
    sigma2: float = 0.0
    m0: int = 3
    m0p: int = 3
    J_override: int | None = None
    Jp_override: int | None = None
    truncation: str = "pointwise"
    vanishing_moments: int = 6

    def __post_init__(self):
        if not 0 < self.rho < 0.5:
            raise ConfigError(f"rho={self.rho} must lie in (0, 1/2)")
        if not self.kappa > 0:
            raise ConfigError(f"kappa={self.kappa} must be positive")
        if not self.rho * self.kappa > 2:
            raise ConfigError(f"rho*kappa={self.rho * self.kappa} must exceed 2")
        if (self.rho * self.kappa) ** 2 < 20:
            raise ConfigError(f"(rho*kappa)^2={(self.rho * self.kappa) ** 2} must be >= 20")
        if not (self.gamma1 > 0 and self.gamma2 > 0):
            raise ConfigError("gamma1 and gamma2 must be positive")
        if self.sigma1 < 0 or self.sigma2 < 0:
            raise ConfigError("noise scales must be nonnegative")
        if self.m0 < 1 or self.m0p < 1:
            raise ConfigError("coarse levels m0, m0p must be >= 1")
        if self.truncation not in TRUNCATION_MODES:
            raise ConfigError(f"truncation must be one of {TRUNCATION_MODES}")

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class InvKernelSpectrum:
    inv: np.ndarray
    mask: np.ndarray
    tau: float

    @property
    def truncated_count(self) -> int:
        return int(self.mask.size - np.count_nonzero(self.mask))


@dataclass
class WaveletCoeffs2D:
    """Tensor Meyer x Daubechies coefficients over ``Omega(J, J')`` plus coarse blocks."""

    blocks: dict[int, np.ndarray]
    J: int
    Jp: int
    m0: int
    m0p: int
    M: int
    N: int

    @property
    def scaling_key(self) -> int:
        return self.m0 - 1

    @property
    def detail_levels(self) -> range:
        return range(self.m0, self.J)

    def u_index(self, jp: int, kp: int) -> int:
        if jp == self.m0p - 1:
            if not 0 <= kp < 2 ** self.m0p:
                raise IndexError(f"u shift {kp} out of range")
            return kp
        if not (self.m0p <= jp < self.Jp and 0 <= kp < 2 ** jp):
            raise IndexError(f"(j'={jp}, k'={kp}) outside the u index set")
        return 2 ** jp + kp

    def entry(self, j: int, k: int, jp: int, kp: int) -> complex:
        """``beta_{j,k;j',k'}``; ``j = m0-1`` / ``j' = m0p-1`` address the scaling blocks."""
        return complex(self.blocks[j][k, self.u_index(jp, kp)])

    def replace_blocks(self, blocks: dict[int, np.ndarray]) -> "WaveletCoeffs2D":
        return WaveletCoeffs2D(blocks, self.J, self.Jp, self.m0, self.m0p, self.M, self.N)

    def energy(self) -> float:
        return float(sum(np.sum(np.abs(b) ** 2) for b in self.blocks.values()))

    def count(self) -> int:
        return sum(b.size for b in self.blocks.values())


@dataclass(frozen=True)
class RateParams:
    s1: float
    s2: float
    p: float
    q: float
    nu: float

    def __post_init__(self):
        if not (1 <= self.p < math.inf and 1 <= self.q < math.inf):
            raise ValueError(f"need 1 <= p, q < inf (got p={self.p}, q={self.q})")
        if not self.nu > 0:
            raise ValueError(f"nu={self.nu} must be positive")
        if min(self.s1, self.s2) < max(1 / self.p, 0.5):
            raise ValueError("need min(s1, s2) >= max(1/p, 1/2)")


@dataclass
class Diagnostics:
    J: int
    Jp: int
    tau: float
    lambdas: dict[int, float]
    band_energy: dict[int, float]
    survivors: dict[int, int]
    totals: dict[int, int]
    kernel_survival: float
    truncated_count: int
    imag_energy: float
    warnings: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["lambdas"] = {str(k): v for k, v in self.lambdas.items()}
        d["band_energy"] = {str(k): v for k, v in self.band_energy.items()}
        d["survivors"] = {str(k): v for k, v in self.survivors.items()}
        d["totals"] = {str(k): v for k, v in self.totals.items()}
        return d


def truncation_level(sigma2: float, kappa: float, M, N) -> float:
    MN = M * N
    return kappa * sigma2 * math.sqrt(math.log(MN) / MN)


def truncate_kernel(g_spec: RowSpectrum, cfg: EstimatorConfig) -> InvKernelSpectrum:
    """Entrywise reciprocal of the kernel spectrum, zero where it is too small to invert."""
    tau = truncation_level(cfg.sigma2, cfg.kappa, g_spec.M, g_spec.N)
    g = g_spec.coeffs
    mask = np.abs(g) > tau
    if cfg.truncation == "min_over_l":
        mask = np.broadcast_to(mask.all(axis=0), g.shape).copy()
    inv = np.zeros_like(g)
    np.divide(1.0, g, out=inv, where=mask)
    inv.setflags(write=False)
    mask.setflags(write=False)
    return InvKernelSpectrum(inv, mask, tau)


def known_kernel_inverse(g_spec: RowSpectrum) -> InvKernelSpectrum:
    """Reciprocal of an exactly known kernel spectrum; only exact zeros are dropped."""
    g = g_spec.coeffs
    mask = g != 0
    inv = np.zeros_like(g)
    np.divide(1.0, g, out=inv, where=mask)
    return InvKernelSpectrum(inv, mask, 0.0)


def _check_levels(J: int, Jp: int, m0: int, m0p: int, M: int, N: int) -> None:
    nN = N.bit_length() - 1
    nM = M.bit_length() - 1
    if not m0 <= J <= nN - 1:
        raise ConfigError(f"J={J} outside [{m0}, log2(N)-1={nN - 1}]")
    if not m0p <= Jp <= nM - 1:
        raise ConfigError(f"J'={Jp} outside [{m0p}, log2(M)-1={nM - 1}]")


def _t_levels(J: int, m0: int):
    """(key, level, scaling) triples of the t-direction blocks."""
    yield m0 - 1, m0, True
    for j in range(m0, J):
        yield j, j, False


def estimate_coeffs(y_spec: RowSpectrum, invk: InvKernelSpectrum, J: int, Jp: int,
                    m0: int = 3, m0p: int = 3, vanishing_moments: int = 6) -> WaveletCoeffs2D:
    """
    Truncated coefficient estimates, the sample analogue of
    ``(1/M) sum_l sum_{m in W_j} y_m(u_l)/g_m(u_l) eta_{j',k'}(u_l) conj(psi_{j,k,m})``.
    """
    M, N = y_spec.shape
    if invk.inv.shape != y_spec.shape:
        raise DimensionError(f"kernel spectrum {invk.inv.shape} vs data {y_spec.shape}")
    _check_levels(J, Jp, m0, m0p, M, N)
    # only |m| < 2^(J+1)/3 is touched by levels below J
    top = int(np.ceil(2 ** (J + 1) / 3)) - 1
    cols = np.arange(-top, top + 1) % N
    ratio = y_spec.coeffs[:, cols] * invk.inv[:, cols]
    U = db.dwt_flat(ratio, m0p, axis=0, vanishing_moments=vanishing_moments)[: 2 ** Jp]
    U *= M ** -0.5
    pos = {c: i for i, c in enumerate(cols)}
    blocks = {}
    for key, level, scaling in _t_levels(J, m0):
        idx = psi_table(level, N, scaling).indices
        sub = U[:, [pos[c] for c in idx % N]]
        blocks[key] = analyze_t(sub, level, N, scaling).T
    return WaveletCoeffs2D(blocks, J, Jp, m0, m0p, M, N)


def analyze_field(spec: RowSpectrum, J: int, Jp: int, m0: int = 3, m0p: int = 3,
                  vanishing_moments: int = 6) -> WaveletCoeffs2D:
    """Forward analysis of a field given by its row spectrum (no deconvolution)."""
    ones = InvKernelSpectrum(np.ones(spec.shape, complex), np.ones(spec.shape, bool), 0.0)
    return estimate_coeffs(spec, ones, J, Jp, m0, m0p, vanishing_moments)


def band_energy(invk: InvKernelSpectrum, g_spec: RowSpectrum, j: int, clip: bool = False) -> float:
    """``(1/M) sum_l sum_{m in W_j, surviving} |g_delta_m(u_l)|^2``."""
    cols = band_indices(j, g_spec.N, clip=clip).indices % g_spec.N
    g = g_spec.coeffs[:, cols]
    return float(np.sum(np.abs(g) ** 2 * invk.mask[:, cols]) / g_spec.M)


def threshold_lambda(j: int, S_j: float, cfg: EstimatorConfig, M, N) -> float:
    """
    Level-``j`` threshold
    ``2^{j/2} S_j^{-1/2} max(gamma1 sqrt(sigma1^2 ln(MN)/MN), gamma2 sqrt(sigma2^2 ln^2(MN)/MN))``.

    A dead level (``S_j = 0``) gets ``inf``.
    """
    if S_j <= 0:
        return math.inf
    MN = M * N
    L = math.log(MN)
    branch1 = cfg.gamma1 * math.sqrt(cfg.sigma1 ** 2 * L / MN)
    branch2 = cfg.gamma2 * math.sqrt(cfg.sigma2 ** 2 * L ** 2 / MN)
    return 2 ** (j / 2) * S_j ** -0.5 * max(branch1, branch2)


def _noise_level(cfg: EstimatorConfig, M, N) -> float:
    return max(cfg.sigma1 ** 2 / (M * N), cfg.sigma2 ** 2 / (M * N))


def select_J(g_spec: RowSpectrum, invk: InvKernelSpectrum, cfg: EstimatorConfig,
             M: int | None = None, N: int | None = None) -> int:
    """
    Largest ``j <= log2(N) - 1`` with ``1/S_j <= 2^{-2j} / max(sigma1^2, sigma2^2) * MN``.

    Falls back to ``m0`` (coarse-only estimate) with a warning when no level
    qualifies.
    """
    M = g_spec.M if M is None else M
    N = g_spec.N if N is None else N
    noise = _noise_level(cfg, M, N)
    cap = N.bit_length() - 2
    best = None
    for j in range(cfg.m0, cap + 1):
        if noise == 0:
            best = j
            continue
        S = band_energy(invk, g_spec, j, clip=True)
        if S > 0 and 1.0 / S <= 2.0 ** (-2 * j) / noise:
            best = j
    if best is None:
        warnings.warn("no resolution level passes the band-energy rule; using coarse-only estimate",
                      RuntimeWarning, stacklevel=2)
        return cfg.m0
    return best


def select_Jprime(cfg: EstimatorConfig, M: int, N: int) -> int:
    """``min(floor(log2(MN / max(sigma1^2, sigma2^2))), log2(M) - 1)``, at least ``m0p``."""
    cap = M.bit_length() - 2
    noise = _noise_level(cfg, M, N)
    if noise == 0:
        return max(cap, cfg.m0p)
    return max(cfg.m0p, min(int(math.floor(-math.log2(noise))), cap))


def hard_threshold(coeffs: WaveletCoeffs2D, lambdas: dict[int, float]) -> WaveletCoeffs2D:
    """Keep detail coefficients with ``|beta| > lambda_j``; the scaling block passes through."""
    out = {}
    for key, block in coeffs.blocks.items():
        if key == coeffs.scaling_key:
            out[key] = block
        else:
            out[key] = np.where(np.abs(block) > lambdas[key], block, 0)
    return coeffs.replace_blocks(out)


def coefficients_to_spectrum(coeffs: WaveletCoeffs2D, vanishing_moments: int = 6) -> RowSpectrum:
    M, N = coeffs.M, coeffs.N
    top = int(np.ceil(2 ** (coeffs.J + 1) / 3)) - 1
    cols = np.arange(-top, top + 1) % N
    pos = {c: i for i, c in enumerate(cols)}
    C = np.zeros((M, cols.size), complex)
    for key, level, scaling in _t_levels(coeffs.J, coeffs.m0):
        idx = psi_table(level, N, scaling).indices
        C[: 2 ** coeffs.Jp, [pos[c] for c in idx % N]] += synthesize_t(
            coeffs.blocks[key].T, level, N, scaling)
    C = db.idwt_flat(C, coeffs.m0p, axis=0, vanishing_moments=vanishing_moments) * M ** 0.5
    full = np.zeros((M, N), complex)
    full[:, cols] = C
    return RowSpectrum(full)


def reconstruct(coeffs: WaveletCoeffs2D, vanishing_moments: int = 6) -> SampledField:
    """Synthesize the sampled field ``sum beta psi_{j,k}(t_i) eta_{j',k'}(u_l)`` (real part)."""
    return idft_rows(coefficients_to_spectrum(coeffs, vanishing_moments))


def _synthesize(kept: WaveletCoeffs2D, vanishing_moments: int):
    """Real field plus the energy of the imaginary part that taking ``.real`` discards."""
    C = coefficients_to_spectrum(kept, vanishing_moments).coeffs
    N = C.shape[1]
    mirror = np.conj(C[:, (-np.arange(N)) % N])
    herm, anti = (C + mirror) / 2, (C - mirror) / 2
    values = np.fft.irfft(herm[:, : N // 2 + 1], n=N, axis=1) * N
    # Parseval: the anti-Hermitian part synthesizes i * Im(field)
    imag = float(np.sum(np.abs(anti) ** 2) / C.shape[0])
    return SampledField(values), imag


def _run(y_spec, g_spec, invk, cfg, levels=None):
    """Estimates for each finest level in ``levels`` (``None``: the configured/selected J)."""
    M, N = y_spec.shape
    if g_spec.shape != y_spec.shape:
        raise DimensionError(f"kernel {g_spec.shape} vs data {y_spec.shape}")
    notes = []
    if not invk.mask.any():
        notes.append("fully truncated kernel: every kernel coefficient was discarded")
        log.warning(notes[-1])
    if levels is None:
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always")
            J = cfg.J_override if cfg.J_override is not None else select_J(g_spec, invk, cfg)
        notes.extend(str(w.message) for w in caught)
        levels = [J]
    Jp = cfg.Jp_override if cfg.Jp_override is not None else select_Jprime(cfg, M, N)
    # blocks below J do not depend on J, so one analysis serves every level
    full = estimate_coeffs(y_spec, invk, max(levels), Jp, cfg.m0, cfg.m0p, cfg.vanishing_moments)
    S, lambdas = {}, {}
    for j in full.detail_levels:
        S[j] = band_energy(invk, g_spec, j)
        lambdas[j] = threshold_lambda(j, S[j], cfg, M, N)
    results = []
    for J in levels:
        beta = WaveletCoeffs2D({k: b for k, b in full.blocks.items() if k < J},
                               J, Jp, cfg.m0, cfg.m0p, M, N)
        kept = hard_threshold(beta, lambdas)
        field_, imag = _synthesize(kept, cfg.vanishing_moments)
        levels_here = list(beta.detail_levels)
        diag = Diagnostics(
            J=J, Jp=Jp, tau=invk.tau,
            lambdas={j: lambdas[j] for j in levels_here},
            band_energy={j: S[j] for j in levels_here},
            survivors={j: int(np.count_nonzero(kept.blocks[j])) for j in levels_here},
            totals={j: int(kept.blocks[j].size) for j in levels_here},
            kernel_survival=float(np.mean(invk.mask)),
            truncated_count=invk.truncated_count,
            imag_energy=imag,
            warnings=list(notes))
        results.append((field_, diag))
    return results


def estimate(y_spec: RowSpectrum, g_spec: RowSpectrum, cfg: EstimatorConfig):
    """
    Run the full blind estimator.

    Returns
    -------
    (SampledField, Diagnostics)
    """
    return _run(y_spec, g_spec, truncate_kernel(g_spec, cfg), cfg)[0]


def estimate_levels(y_spec: RowSpectrum, g_spec: RowSpectrum, cfg: EstimatorConfig, levels):
    """:func:`estimate` at several fixed finest levels ``J``, sharing the coefficient analysis."""
    if not levels:
        raise ValueError("no levels requested")
    return _run(y_spec, g_spec, truncate_kernel(g_spec, cfg), cfg, list(levels))


def estimate_known_kernel(y_spec: RowSpectrum, g_spec: RowSpectrum, cfg: EstimatorConfig):
    """Deconvolution estimator for an exactly known kernel: no truncation, sigma1-only threshold."""
    cfg = replace(cfg, sigma2=0.0)
    return _run(y_spec, g_spec, known_kernel_inverse(g_spec), cfg)[0]


class RateResult(NamedTuple):
    d: float
    d1: float
    branch: int


def rate_exponent(rp: RateParams) -> RateResult:
    """
    Minimax rate exponent ``d``, log-power ``d1`` and the branch (1, 2 or 3) taken.

    Branches: dense-in-``u`` (``s2(2nu+1) <= s1``), dense-in-``t`` and sparse.
    """
    s1, s2, p, nu = rp.s1, rp.s2, rp.p, rp.nu
    sparse_edge = (2 * nu + 1) * (1 / p - 0.5)
    dense_edge = s2 * (2 * nu + 1)
    if dense_edge <= s1:
        d, branch = 2 * s2 / (2 * s2 + 1), 1
    elif sparse_edge < s1:
        d, branch = 2 * s1 / (2 * s1 + 2 * nu + 1), 2
    else:
        s1p = s1 + 0.5 - 1 / min(p, 2.0)
        d, branch = 2 * s1p / (2 * s1p + 2 * nu), 3
    close = lambda a, b: math.isclose(a, b, rel_tol=1e-12, abs_tol=1e-12)
    d1 = float(close(s1, sparse_edge)) + float(close(s1, dense_edge))
    return RateResult(d, d1, branch)
