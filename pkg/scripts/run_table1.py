"""
Monte-Carlo MISE grid in the layout of the published simulation table.

For every (f_t, f_u, M x N, SNR1) cell, search the finest level J over
{3, ..., log2 N - 1} with common random numbers and report the best mean
MISE, its standard deviation and the winning J.

    python scripts/run_table1.py --reps 100 --out table1.csv
"""

import argparse
import csv
import itertools
import sys
import time

from deconwave.blind_deconv import EstimatorConfig
from deconwave.experiment import T_SIGNALS, ExperimentSpec, oracle_J_search


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[1])
    ap.add_argument("--reps", type=int, default=100)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--signals", nargs="+", default=list(T_SIGNALS))
    ap.add_argument("--f-u", default="Quadratic")
    ap.add_argument("--snr1", type=float, nargs="+", default=[10, 20, 30])
    ap.add_argument("--snr2", type=float, default=30)
    ap.add_argument("--kernel", choices=["circular", "linear"], default="circular")
    ap.add_argument("--kappa", type=float, default=12.0)
    ap.add_argument("--jobs", type=int, default=1)
    ap.add_argument("--out", default="-")
    args = ap.parse_args(argv)

    cfg = EstimatorConfig(kappa=args.kappa)
    handle = sys.stdout if args.out == "-" else open(args.out, "w", newline="")
    writer = csv.writer(handle)
    writer.writerow(["f_t", "f_u", "M", "N", "snr1_db", "snr2_db", "kernel", "best_J",
                     "mean_mise", "sd_mise", "n_rep", "seed", "wall_time_s"])
    for f_t, (M, N), snr1 in itertools.product(args.signals, ((128, 512), (256, 1024)), args.snr1):
        spec = ExperimentSpec(f_t, args.f_u, M, N, snr1_db=snr1, snr2_db=args.snr2,
                              n_rep=args.reps, seed=args.seed, kernel=args.kernel)
        t0 = time.perf_counter()
        best, rep = oracle_J_search(spec, cfg, jobs=args.jobs)
        writer.writerow([f_t, args.f_u, M, N, snr1, args.snr2, args.kernel, best,
                         repr(rep.mean_mise), repr(rep.sd_mise), args.reps, args.seed,
                         f"{time.perf_counter() - t0:.2f}"])
        handle.flush()
    if handle is not sys.stdout:
        handle.close()


if __name__ == "__main__":
    main()
