"""
Mean MISE of the data-driven estimator for every (f_t, f_u) pair, both grid
sizes and SNR1 in {10, 20, 30} dB, written as long-format CSV.

    python scripts/monotonicity_sweep.py --reps 100 --out sweep.csv
"""

import argparse
import csv
import itertools
import sys

from deconwave.experiment import T_SIGNALS, U_SIGNALS, ExperimentSpec, run_benchmark


def main(argv=None):
    ap = argparse.ArgumentParser(description="SNR and sample-size sweep")
    ap.add_argument("--reps", type=int, default=100)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--jobs", type=int, default=1)
    ap.add_argument("--out", default="-")
    args = ap.parse_args(argv)

    handle = sys.stdout if args.out == "-" else open(args.out, "w", newline="")
    w = csv.writer(handle)
    w.writerow(["f_t", "f_u", "M", "N", "snr1_db", "J", "mean_mise", "sd_mise"])
    for (f_t, f_u), (M, N), snr in itertools.product(
            itertools.product(T_SIGNALS, U_SIGNALS), ((128, 512), (256, 1024)), (10, 20, 30)):
        rep = run_benchmark(ExperimentSpec(f_t, f_u, M, N, snr1_db=snr, n_rep=args.reps,
                                           seed=args.seed), jobs=args.jobs)
        w.writerow([f_t, f_u, M, N, snr, rep.chosen_J, repr(rep.mean_mise), repr(rep.sd_mise)])
        handle.flush()
    if handle is not sys.stdout:
        handle.close()


if __name__ == "__main__":
    main()
