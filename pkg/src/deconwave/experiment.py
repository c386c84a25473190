"""
Simulation study: test functions, kernel, noisy Fourier-domain data and
Monte-Carlo MISE.
"""

from __future__ import annotations

import math
import statistics
from collections import Counter
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, asdict, replace
from functools import lru_cache

import numpy as np

from .blind_deconv import EstimatorConfig, estimate, estimate_levels
from .signal_core import (RowSpectrum, SampledField, dft_rows, l2_norm_sq, mise_one,
                          spectrum_norm_sq)

T_SIGNALS = ("HeaviSine", "Doppler", "Bumps", "Blip")
U_SIGNALS = ("Quadratic", "Bumps", "Blip")
NOISE_CONVENTIONS = ("paper", "sample")
KERNEL_FORMS = ("circular", "linear")

_BUMP_POS = np.array([.1, .13, .15, .23, .25, .40, .44, .65, .76, .78, .81])
_BUMP_HGT = np.array([4, 5, 3, 4, 5, 4.2, 2.1, 4.3, 3.1, 5.1, 4.2])
_BUMP_WTH = np.array([.005, .005, .006, .01, .01, .03, .01, .01, .005, .008, .005])


def heavisine(x):
    return 4 * np.sin(4 * np.pi * x) - np.sign(x - 0.3) - np.sign(0.72 - x)


def doppler(x):
    return np.sqrt(x * (1 - x)) * np.sin(2 * np.pi * 1.05 / (x + 0.05))


def bumps(x):
    x = np.asarray(x, dtype=float)[..., None]
    return np.sum(_BUMP_HGT / (1 + np.abs((x - _BUMP_POS) / _BUMP_WTH)) ** 4, axis=-1)


def blip(x):
    # Marron, Adak, Johnstone, Neumann & Patil (1998)
    x = np.asarray(x, dtype=float)
    left = 0.32 + 0.6 * x + 0.3 * np.exp(-100 * (x - 0.3) ** 2)
    right = -0.28 + 0.6 * x + 0.3 * np.exp(-100 * (x - 1.3) ** 2)
    return np.where(x <= 0.8, left, right)


def quadratic(x):
    return (np.asarray(x, dtype=float) - 0.5) ** 2


SIGNALS = {
    "HeaviSine": heavisine,
    "Doppler": doppler,
    "Bumps": bumps,
    "Blip": blip,
    "Quadratic": quadratic,
}


def canonical_name(name: str, allowed=None) -> str:
    lookup = {k.lower(): k for k in SIGNALS}
    key = lookup.get(str(name).lower())
    if key is None or (allowed is not None and key not in allowed):
        choices = ", ".join(allowed or SIGNALS)
        raise ValueError(f"unknown test function {name!r}; choose from {choices}")
    return key


def grid(M: int, N: int):
    """Sample positions ``t_i = i/N`` and ``u_l = l/M``."""
    return np.arange(N) / N, np.arange(M) / M


def make_test_function(f_t: str, f_u: str, M: int, N: int) -> SampledField:
    """Separable ``f(t, u) = f1(t) f2(u)`` rescaled to unit discrete L2 norm."""
    f1 = SIGNALS[canonical_name(f_t, T_SIGNALS)]
    f2 = SIGNALS[canonical_name(f_u, U_SIGNALS)]
    t, u = grid(M, N)
    values = np.outer(f2(u), f1(t))
    values /= math.sqrt(np.mean(values ** 2))
    return SampledField(values)


def make_kernel(M: int, N: int, form: str = "circular") -> SampledField:
    """
    ``g(t, u) = 0.5 exp(-|t| (1 + (u - 0.5)^2))``.

    ``form="circular"`` reads ``|t|`` as the distance to 0 on the circle,
    ``min(t, 1 - t)``, which keeps ``g`` continuous under periodization.
    ``form="linear"`` uses ``t`` itself on ``[0, 1)``; the periodized kernel
    then jumps at ``t = 0`` and its spectrum decays like ``1/|m|``.
    """
    t, u = grid(M, N)
    if form == "circular":
        dist = np.minimum(t, 1 - t)
    elif form == "linear":
        dist = t
    else:
        raise ValueError(f"unknown kernel form {form!r}; use 'circular' or 'linear'")
    return SampledField(0.5 * np.exp(-np.outer(1 + (u - 0.5) ** 2, dist)))


def sigma_from_snr(snr_db: float, energy: float) -> float:
    """Noise scale with ``10 log10(energy / sigma^2) = snr_db``."""
    if not energy > 0:
        raise ValueError(f"signal energy must be positive, got {energy}")
    if not math.isfinite(snr_db):
        raise ValueError(f"SNR must be finite, got {snr_db}")
    return math.sqrt(energy * 10 ** (-snr_db / 10))


def hermitian_noise(rng: np.random.Generator, M: int, N: int) -> np.ndarray:
    """
    Complex Gaussian row spectra with ``E|z_m|^2 = 1`` and ``z_{-m} = conj(z_m)``.

    Columns ``0`` and ``N/2`` are real.  The inverse DFT of such a row is a
    real sequence.
    """
    half = N // 2
    z = np.zeros((M, N), complex)
    z[:, 0] = rng.standard_normal(M)
    z[:, half] = rng.standard_normal(M)
    re = rng.standard_normal((M, half - 1))
    im = rng.standard_normal((M, half - 1))
    z[:, 1:half] = (re + 1j * im) / math.sqrt(2)
    z[:, half + 1:] = np.conj(z[:, 1:half][:, ::-1])
    return z


def coefficient_noise_scale(sigma: float, M: int, N: int, convention: str = "paper") -> float:
    """
    Standard deviation of each Fourier-domain noise coefficient.

    ``"paper"``: ``sigma / sqrt(MN)``, the per-coefficient level that the
    truncation and threshold rules are calibrated against.
    ``"sample"``: ``sigma / sqrt(N)``, i.e. i.i.d. ``N(0, sigma^2)`` noise on
    every grid sample, seen through the ``1/N`` DFT.
    """
    if convention == "paper":
        return sigma / math.sqrt(M * N)
    if convention == "sample":
        return sigma / math.sqrt(N)
    raise ValueError(f"unknown noise convention {convention!r}")


def generate_observation(f: SampledField, g: SampledField, sigma1: float, sigma2: float,
                         seed, convention: str = "paper"):
    """
    Noisy spectra ``y_m = f_m g_m + s1 z1_m`` and ``g_delta_m = g_m + s2 z2_m``.

    ``z1`` and ``z2`` are independent Hermitian unit-variance fields drawn from
    two children of ``SeedSequence(seed)``.
    """
    if f.shape != g.shape:
        raise ValueError(f"shape mismatch: f {f.shape} vs g {g.shape}")
    M, N = f.shape
    f_spec, g_spec = dft_rows(f), dft_rows(g)
    ss1, ss2 = np.random.SeedSequence(seed).spawn(2)
    y = f_spec.coeffs * g_spec.coeffs
    gd = g_spec.coeffs
    if sigma1 > 0:
        y = y + coefficient_noise_scale(sigma1, M, N, convention) * hermitian_noise(
            np.random.default_rng(ss1), M, N)
    if sigma2 > 0:
        gd = gd + coefficient_noise_scale(sigma2, M, N, convention) * hermitian_noise(
            np.random.default_rng(ss2), M, N)
    return RowSpectrum(y), RowSpectrum(gd)


@dataclass(frozen=True)
class ExperimentSpec:
    """
    One simulation cell.

    ``J_mode`` is ``"auto"`` (data-driven level), ``"oracle"`` (best level in
    hindsight over ``{3, ..., log2 N - 1}``) or an integer fixed level.
    """

    f_t: str = "HeaviSine"
    f_u: str = "Quadratic"
    M: int = 128
    N: int = 512
    snr1_db: float = 10.0
    snr2_db: float = 30.0
    n_rep: int = 100
    seed: int = 0
    J_mode: str | int = "auto"
    noise: str = "paper"
    kernel: str = "circular"

    def __post_init__(self):
        object.__setattr__(self, "f_t", canonical_name(self.f_t, T_SIGNALS))
        object.__setattr__(self, "f_u", canonical_name(self.f_u, U_SIGNALS))
        if not (math.isfinite(self.snr1_db) and math.isfinite(self.snr2_db)):
            raise ValueError("SNR values must be finite")
        if self.n_rep < 1:
            raise ValueError(f"n_rep={self.n_rep} must be >= 1")
        if self.noise not in NOISE_CONVENTIONS:
            raise ValueError(f"noise convention must be one of {NOISE_CONVENTIONS}")
        if self.kernel not in KERNEL_FORMS:
            raise ValueError(f"kernel form must be one of {KERNEL_FORMS}")
        mode = self.J_mode
        if isinstance(mode, str) and mode not in ("auto", "oracle"):
            try:
                mode = int(mode)
            except ValueError:
                raise ValueError(f"J_mode must be 'auto', 'oracle' or an integer, got {mode!r}")
            object.__setattr__(self, "J_mode", mode)

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class MiseReport:
    mean_mise: float
    sd_mise: float
    chosen_J: int
    chosen_Jp: int
    per_rep: list[float]
    spec: dict = field(default_factory=dict)
    config: dict = field(default_factory=dict)
    J_curve: dict[int, float] | None = None


@lru_cache(maxsize=32)
def _truth(f_t: str, f_u: str, M: int, N: int, kernel: str = "circular"):
    f = make_test_function(f_t, f_u, M, N)
    g = make_kernel(M, N, kernel)
    f_spec, g_spec = dft_rows(f), dft_rows(g)
    conv_energy = spectrum_norm_sq(RowSpectrum(f_spec.coeffs * g_spec.coeffs))
    return f, g, conv_energy, l2_norm_sq(g)


def calibrated_config(spec: ExperimentSpec, cfg: EstimatorConfig) -> EstimatorConfig:
    """``cfg`` with ``sigma1``/``sigma2`` set from the cell's SNRs."""
    _, _, conv_energy, g_energy = _truth(spec.f_t, spec.f_u, spec.M, spec.N, spec.kernel)
    return replace(cfg, sigma1=sigma_from_snr(spec.snr1_db, conv_energy),
                   sigma2=sigma_from_snr(spec.snr2_db, g_energy))


def _replicate(spec: ExperimentSpec, cfg: EstimatorConfig, rep: int, levels):
    """MISE of one repetition for each J in ``levels`` (``None`` = data-driven)."""
    f, g, _, _ = _truth(spec.f_t, spec.f_u, spec.M, spec.N, spec.kernel)
    y_spec, g_spec = generate_observation(f, g, cfg.sigma1, cfg.sigma2, spec.seed + rep, spec.noise)
    if levels == (None,):
        results = [estimate(y_spec, g_spec, cfg)]
    else:
        results = estimate_levels(y_spec, g_spec, cfg, levels)
    return [(mise_one(f_hat, f), diag.J, diag.Jp) for f_hat, diag in results]


def _replicate_star(args):
    return _replicate(*args)


def _run_reps(spec: ExperimentSpec, cfg: EstimatorConfig, levels, jobs: int = 1):
    tasks = [(spec, cfg, rep, tuple(levels)) for rep in range(spec.n_rep)]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            return list(pool.map(_replicate_star, tasks, chunksize=max(1, len(tasks) // (4 * jobs))))
    return [_replicate(*t) for t in tasks]


def _summary(values: list[float]) -> tuple[float, float]:
    mean = float(np.mean(values))
    sd = statistics.stdev(values) if len(values) > 1 else 0.0
    return mean, float(sd)


def default_J_set(N: int) -> list[int]:
    return list(range(3, N.bit_length() - 1))


def run_benchmark(spec: ExperimentSpec, cfg: EstimatorConfig | None = None,
                  jobs: int = 1) -> MiseReport:
    """
    Monte-Carlo MISE of one cell; repetition ``r`` uses seed ``spec.seed + r``.

    Noise scales in ``cfg`` are replaced by the SNR-calibrated ones.
    """
    cfg = calibrated_config(spec, cfg or EstimatorConfig())
    if spec.J_mode == "oracle":
        return oracle_J_search(spec, cfg, default_J_set(spec.N), jobs=jobs)[1]
    level = None if spec.J_mode == "auto" else int(spec.J_mode)
    rows = [r[0] for r in _run_reps(spec, cfg, [level], jobs)]
    per_rep = [r[0] for r in rows]
    mean, sd = _summary(per_rep)
    chosen_J = Counter(r[1] for r in rows).most_common(1)[0][0]
    chosen_Jp = Counter(r[2] for r in rows).most_common(1)[0][0]
    return MiseReport(mean, sd, chosen_J, chosen_Jp, per_rep, spec.to_dict(), cfg.to_dict())


def oracle_J_search(spec: ExperimentSpec, cfg: EstimatorConfig | None = None,
                    J_set=None, jobs: int = 1):
    """
    Mean MISE for every fixed ``J`` in ``J_set`` under common random numbers.

    Returns ``(best_J, report)`` where ``report`` describes the best level and
    carries the whole curve in ``J_curve``.
    """
    cfg = calibrated_config(spec, cfg or EstimatorConfig())
    J_set = sorted(J_set) if J_set is not None else default_J_set(spec.N)
    if not J_set:
        raise ValueError("J_set is empty")
    rows = _run_reps(spec, cfg, J_set, jobs)
    curve = {}
    per_J = {}
    for i, J in enumerate(J_set):
        per_J[J] = [r[i][0] for r in rows]
        curve[J] = float(np.mean(per_J[J]))
    best = min(J_set, key=lambda J: curve[J])
    mean, sd = _summary(per_J[best])
    Jp = rows[0][0][2]
    report = MiseReport(mean, sd, best, Jp, per_J[best],
                        {**spec.to_dict(), "J_mode": "oracle"}, cfg.to_dict(), curve)
    return best, report
