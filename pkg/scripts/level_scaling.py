"""
Growth of the data-driven level 2^J with the sample size MN.

Uses the synthetic kernel g_m = |m|^{-nu} (every profile identical) with
sigma1 = 1 and fits the slope of J against log2(MN).  The level rule depends
on M only through MN, so the kernel is tabulated once on a fixed N and the
nominal M is varied.

    python scripts/level_scaling.py --nu 1 2
"""

import argparse
import warnings

import numpy as np

from deconwave.blind_deconv import EstimatorConfig, select_J, truncate_kernel
from deconwave.signal_core import RowSpectrum


def power_law_spectrum(N: int, nu: float, rows: int = 8) -> RowSpectrum:
    m = np.abs(np.fft.fftfreq(N, 1 / N))
    g = np.ones(N)
    g[1:] = m[1:] ** -nu
    return RowSpectrum(np.tile(g, (rows, 1)).astype(complex))


def main(argv=None):
    ap = argparse.ArgumentParser(description="select_J growth exponent")
    ap.add_argument("--nu", type=float, nargs="+", default=[1.0, 2.0])
    ap.add_argument("--log2-n", type=int, default=15)
    ap.add_argument("--log2-mn", type=int, nargs=2, default=[14, 40])
    args = ap.parse_args(argv)

    N = 2 ** args.log2_n
    cfg = EstimatorConfig(sigma1=1.0)
    xs = np.arange(args.log2_mn[0], args.log2_mn[1] + 1)
    print("nu,log2_MN,J")
    for nu in args.nu:
        gs = power_law_spectrum(N, nu)
        invk = truncate_kernel(gs, cfg)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RuntimeWarning)
            J = [select_J(gs, invk, cfg, M=2 ** int(x - args.log2_n), N=N) for x in xs]
        for x, j in zip(xs, J):
            print(f"{nu},{x},{j}")
        slope = np.polyfit(xs, J, 1)[0]
        print(f"# nu={nu}: fitted exponent {slope:.4f}, 1/(2nu+1) = {1 / (2 * nu + 1):.4f}")


if __name__ == "__main__":
    main()
