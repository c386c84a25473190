"""
Command-line front end.

Subcommands
-----------
benchmark   Monte-Carlo MISE over a grid of cells, one CSV row per cell.
search-j    Mean MISE as a function of the finest level J (oracle search).
simulate    Write a synthetic observation pair (y, g_delta) and the truth.
estimate    Run the estimator on matrix files.
rates       Print the minimax rate exponent for given smoothness parameters.

Settings are resolved as defaults < config file (``--config``) < flags.  The
config file is one flat YAML/JSON mapping whose keys are the fields of
:class:`RunConfig`; grid axes (``f_t``, ``f_u``, ``M``, ``N``, ``snr1_db``)
accept a scalar or a list.  ``DECONWAVE_SEED`` overrides the default seed.

Exit codes: 0 success, 1 runtime failure, 2 usage or configuration error.

Matrix files are CSV (row ``l``, column ``i``, ``#`` comment lines allowed)
or the binary layout ``b"FDC1"`` + little-endian uint64 ``M``, ``N`` +
row-major float64 values; the binary form is chosen by a ``.bin`` suffix.
"""

from __future__ import annotations

import argparse
import itertools
import json
import logging
import os
import struct
import sys
import time
from dataclasses import asdict, dataclass, replace
from pathlib import Path

import numpy as np
import yaml

from .blind_deconv import (ConfigError, EstimatorConfig, RateParams, estimate, rate_exponent)
from .experiment import (T_SIGNALS, U_SIGNALS, ExperimentSpec, _truth, calibrated_config,
                         canonical_name, generate_observation, oracle_J_search, run_benchmark)
from .signal_core import DimensionError, SampledField, dft_rows, idft_rows

log = logging.getLogger("deconwave")

MAGIC = b"FDC1"
SEED_ENV = "DECONWAVE_SEED"
GRID_KEYS = ("f_t", "f_u", "M", "N", "snr1_db")


class UsageError(Exception):
    """Bad configuration or input; maps to exit code 2."""


@dataclass
class RunConfig:
    """Everything a subcommand needs.  Grid axes are lists."""

    f_t: list = None
    f_u: list = None
    M: list = None
    N: list = None
    snr1_db: list = None
    snr2_db: float = 30.0
    n_rep: int = 100
    seed: int = 0
    J_mode: str = "auto"
    noise: str = "paper"
    kernel: str = "circular"
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
    jobs: int = 1
    out: str | None = None
    per_rep_out: str | None = None
    plot_data: str | None = None
    verbose: bool = False

    def __post_init__(self):
        defaults = {"f_t": ["HeaviSine"], "f_u": ["Quadratic"], "M": [128], "N": [512],
                    "snr1_db": [10.0]}
        for key, val in defaults.items():
            if getattr(self, key) is None:
                setattr(self, key, val)

    def estimator(self) -> EstimatorConfig:
        return EstimatorConfig(
            kappa=self.kappa, rho=self.rho, gamma1=self.gamma1, gamma2=self.gamma2,
            sigma1=self.sigma1, sigma2=self.sigma2, m0=self.m0, m0p=self.m0p,
            J_override=self.J_override, Jp_override=self.Jp_override,
            truncation=self.truncation, vanishing_moments=self.vanishing_moments)

    def cells(self):
        for f_t, f_u, M, N, snr1 in itertools.product(self.f_t, self.f_u, self.M, self.N,
                                                      self.snr1_db):
            yield ExperimentSpec(f_t=f_t, f_u=f_u, M=M, N=N, snr1_db=snr1,
                                 snr2_db=self.snr2_db, n_rep=self.n_rep, seed=self.seed,
                                 J_mode=self.J_mode, noise=self.noise, kernel=self.kernel)


_FIELD_TYPES = {
    "f_t": str, "f_u": str, "M": int, "N": int, "snr1_db": float, "snr2_db": float,
    "n_rep": int, "seed": int, "J_mode": str, "noise": str, "kernel": str,
    "kappa": float, "rho": float, "gamma1": float, "gamma2": float,
    "sigma1": float, "sigma2": float, "m0": int, "m0p": int,
    "J_override": int, "Jp_override": int, "truncation": str,
    "vanishing_moments": int, "jobs": int, "out": str, "per_rep_out": str,
    "plot_data": str, "verbose": bool,
}


def _coerce_scalar(key: str, value):
    kind = _FIELD_TYPES[key]
    if value is None and key in ("J_override", "Jp_override", "out", "per_rep_out", "plot_data"):
        return None
    try:
        if kind is int:
            if isinstance(value, bool) or (isinstance(value, float) and not value.is_integer()):
                raise ValueError
            return int(value)
        if kind is float:
            if isinstance(value, bool):
                raise ValueError
            return float(value)
        if kind is bool:
            if not isinstance(value, bool):
                raise ValueError
            return value
        return str(value)
    except (TypeError, ValueError):
        raise UsageError(f"config key {key!r}: cannot interpret {value!r} as {kind.__name__}")


def _coerce(key: str, value):
    if key in GRID_KEYS:
        values = value if isinstance(value, (list, tuple)) else [value]
        if not values:
            raise UsageError(f"config key {key!r}: empty list")
        return [_coerce_scalar(key, v) for v in values]
    if isinstance(value, (list, tuple, dict)):
        raise UsageError(f"config key {key!r}: expected a scalar, got {value!r}")
    return _coerce_scalar(key, value)


def load_config_file(path: str) -> dict:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise UsageError(f"cannot read config file {path}: {exc}")
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise UsageError(f"config file {path} is not valid YAML/JSON: {exc}")
    if data is None:
        return {}
    if not isinstance(data, dict):
        raise UsageError(f"config file {path} must hold a flat mapping")
    out = {}
    for raw_key, value in data.items():
        key = str(raw_key).replace("-", "_")
        if key not in _FIELD_TYPES:
            raise UsageError(f"unknown config key {raw_key!r}")
        out[key] = _coerce(key, value)
    return out


def resolve_config(file_values: dict, flag_values: dict) -> RunConfig:
    """Defaults, then the environment seed, then the file, then flags."""
    merged = {}
    env_seed = os.environ.get(SEED_ENV)
    if env_seed is not None:
        merged["seed"] = _coerce_scalar("seed", env_seed) if env_seed.strip() else 0
    merged.update(file_values)
    merged.update({k: _coerce(k, v) for k, v in flag_values.items() if v is not None})
    cfg = RunConfig(**merged)
    _validate(cfg)
    return cfg


def _validate(cfg: RunConfig) -> None:
    if cfg.n_rep < 1:
        raise UsageError(f"config key 'n_rep': invalid repetition count {cfg.n_rep} (need >= 1)")
    if cfg.jobs < 1:
        raise UsageError(f"config key 'jobs': need at least one worker, got {cfg.jobs}")
    if cfg.seed < 0:
        raise UsageError(f"config key 'seed': must be nonnegative, got {cfg.seed}")
    try:
        cfg.estimator()
    except ConfigError as exc:
        raise UsageError(f"estimator configuration: {exc}")
    for key in ("M", "N"):
        for v in getattr(cfg, key):
            if v < 8 or v & (v - 1):
                raise UsageError(f"config key {key!r}: {v} is not a power of two >= 8")
    for key, allowed in (("f_t", T_SIGNALS), ("f_u", U_SIGNALS)):
        try:
            setattr(cfg, key, [canonical_name(n, allowed) for n in getattr(cfg, key)])
        except ValueError as exc:
            raise UsageError(f"config key {key!r}: {exc}")
    try:
        list(cfg.cells())
    except ValueError as exc:
        raise UsageError(f"experiment configuration: {exc}")


def _fmt(x) -> str:
    if isinstance(x, float):
        return format(x, ".17g")
    return str(x)


def _config_header(cfg: RunConfig, command: str) -> list[str]:
    return [f"deconwave {command}", "config: " + json.dumps(asdict(cfg), sort_keys=True)]


def _open_out(path: str | None):
    if path is None or path == "-":
        return sys.stdout, False
    return open(path, "w", newline=""), True


def _write_table(path, header_lines, columns, rows):
    handle, close = _open_out(path)
    try:
        for line in header_lines:
            handle.write(f"# {line}\n")
        handle.write(",".join(columns) + "\n")
        for row in rows:
            handle.write(",".join(_fmt(v) for v in row) + "\n")
    finally:
        if close:
            handle.close()


# -- matrix files -------------------------------------------------------------

def write_matrix(path, values: np.ndarray, header_lines=()) -> None:
    values = np.asarray(values, dtype="<f8")
    if values.ndim != 2:
        raise ValueError("matrix must be two-dimensional")
    if str(path).endswith(".bin"):
        with open(path, "wb") as fh:
            fh.write(MAGIC + struct.pack("<QQ", *values.shape))
            fh.write(np.ascontiguousarray(values).tobytes())
    else:
        np.savetxt(path, values, fmt="%.17g", delimiter=",",
                   header="\n".join(header_lines), comments="# ")


def read_matrix(path) -> np.ndarray:
    """Read a CSV or ``FDC1`` binary matrix; malformed content raises :class:`UsageError`."""
    path = str(path)
    try:
        if path.endswith(".bin"):
            raw = Path(path).read_bytes()
            if len(raw) < 20 or raw[:4] != MAGIC:
                raise UsageError(f"{path}: missing FDC1 header")
            M, N = struct.unpack("<QQ", raw[4:20])
            if len(raw) != 20 + 8 * M * N:
                raise UsageError(f"{path}: expected {M}x{N} values, file size disagrees")
            return np.frombuffer(raw, dtype="<f8", offset=20).reshape(M, N).astype(float)
        return np.loadtxt(path, delimiter=",", comments="#", ndmin=2, dtype=float)
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc}")
    except ValueError as exc:
        raise UsageError(f"{path}: malformed matrix ({exc})")


# -- subcommands ---------------------------------------------------------------

BENCH_COLUMNS = ["f_t", "f_u", "M", "N", "snr1_db", "snr2_db", "J", "Jprime",
                 "mean_mise", "sd_mise", "n_rep", "seed", "wall_time_s"]


def cmd_benchmark(cfg: RunConfig) -> int:
    est = cfg.estimator()
    rows, rep_rows, plot_rows = [], [], []
    for spec in cfg.cells():
        t0 = time.perf_counter()
        report = run_benchmark(spec, est, jobs=cfg.jobs)
        wall = time.perf_counter() - t0
        rows.append([spec.f_t, spec.f_u, spec.M, spec.N, float(spec.snr1_db),
                     float(spec.snr2_db), report.chosen_J, report.chosen_Jp,
                     report.mean_mise, report.sd_mise, spec.n_rep, spec.seed, wall])
        for r, mise in enumerate(report.per_rep):
            rep_rows.append([spec.f_t, spec.f_u, spec.M, spec.N, float(spec.snr1_db),
                             float(spec.snr2_db), r, spec.seed + r, mise])
        plot_rows.append([float(spec.snr1_db), report.mean_mise,
                          f"{spec.f_t}x{spec.f_u}@{spec.M}x{spec.N}"])
        log.info("%s x %s %dx%d snr1=%s: MISE %.6g (J=%d)", spec.f_t, spec.f_u, spec.M,
                 spec.N, spec.snr1_db, report.mean_mise, report.chosen_J)
    header = _config_header(cfg, "benchmark")
    _write_table(cfg.out, header, BENCH_COLUMNS, rows)
    if cfg.per_rep_out:
        _write_table(cfg.per_rep_out, header,
                     ["f_t", "f_u", "M", "N", "snr1_db", "snr2_db", "rep", "seed", "mise"],
                     rep_rows)
    if cfg.plot_data:
        _write_table(cfg.plot_data, header, ["x", "y", "series"], plot_rows)
    return 0


def cmd_search_j(cfg: RunConfig) -> int:
    est = cfg.estimator()
    rows, plot_rows = [], []
    for spec in cfg.cells():
        best, report = oracle_J_search(spec, est, jobs=cfg.jobs)
        label = f"{spec.f_t}x{spec.f_u}@{spec.M}x{spec.N}/snr1={_fmt(float(spec.snr1_db))}"
        for J, mise in sorted(report.J_curve.items()):
            rows.append([spec.f_t, spec.f_u, spec.M, spec.N, float(spec.snr1_db),
                         float(spec.snr2_db), J, report.chosen_Jp, mise, int(J == best)])
            plot_rows.append([J, mise, label])
    header = _config_header(cfg, "search-j")
    _write_table(cfg.out, header, ["f_t", "f_u", "M", "N", "snr1_db", "snr2_db", "J",
                                   "Jprime", "mean_mise", "best"], rows)
    if cfg.plot_data:
        _write_table(cfg.plot_data, header, ["x", "y", "series"], plot_rows)
    return 0


def cmd_simulate(cfg: RunConfig, out_dir: str, fmt: str) -> int:
    specs = list(cfg.cells())
    if len(specs) != 1:
        raise UsageError("simulate needs exactly one cell (scalar f_t, f_u, M, N, snr1_db)")
    spec = specs[0]
    est = calibrated_config(spec, cfg.estimator())
    f, g, _, _ = _truth(spec.f_t, spec.f_u, spec.M, spec.N, spec.kernel)
    y_spec, g_spec = generate_observation(f, g, est.sigma1, est.sigma2, spec.seed, spec.noise)
    resolved = replace(cfg, sigma1=est.sigma1, sigma2=est.sigma2)
    header = _config_header(resolved, "simulate")
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    ext = ".bin" if fmt == "bin" else ".csv"
    write_matrix(out / f"y{ext}", idft_rows(y_spec).values, header)
    write_matrix(out / f"gdelta{ext}", idft_rows(g_spec).values, header)
    write_matrix(out / f"f_true{ext}", f.values, header)
    (out / "config.json").write_text(json.dumps(asdict(resolved), indent=2, sort_keys=True) + "\n")
    print(json.dumps({"sigma1": est.sigma1, "sigma2": est.sigma2}))
    return 0


def cmd_estimate(cfg: RunConfig, y_path: str, g_path: str, out_path: str,
                 diag_path: str | None) -> int:
    y, gd = read_matrix(y_path), read_matrix(g_path)
    if y.shape != gd.shape:
        raise UsageError(f"dimension mismatch: y is {y.shape[0]}x{y.shape[1]}, "
                         f"gdelta is {gd.shape[0]}x{gd.shape[1]}")
    try:
        y_field, g_field = SampledField(y), SampledField(gd)
    except ValueError as exc:
        raise UsageError(str(exc))
    f_hat, diag = estimate(dft_rows(y_field), dft_rows(g_field), cfg.estimator())
    for note in diag.warnings:
        print(f"warning: {note}", file=sys.stderr)
    header = _config_header(cfg, "estimate")
    write_matrix(out_path, f_hat.values, header)
    record = {"config": asdict(cfg), "diagnostics": diag.to_dict()}
    text = json.dumps(record, indent=2, sort_keys=True) + "\n"
    if diag_path:
        Path(diag_path).write_text(text)
    else:
        sys.stdout.write(text)
    return 0


def cmd_rates(s1: float, s2: float, p: float, q: float, nu: float) -> int:
    try:
        rp = RateParams(s1, s2, p, q, nu)
    except ValueError as exc:
        raise UsageError(str(exc))
    res = rate_exponent(rp)
    print(f"branch={res.branch} d={_fmt(res.d)} d1={_fmt(res.d1)}")
    return 0


# -- argument parsing ------------------------------------------------------------

def _add_common(p: argparse.ArgumentParser, grid: bool = True) -> None:
    p.add_argument("--config", help="flat YAML/JSON settings file")
    p.add_argument("-v", "--verbose", action="store_const", const=True, default=None)
    nargs = "+" if grid else None
    p.add_argument("--f-t", dest="f_t", nargs=nargs)
    p.add_argument("--f-u", dest="f_u", nargs=nargs)
    p.add_argument("--M", dest="M", nargs=nargs)
    p.add_argument("--N", dest="N", nargs=nargs)
    p.add_argument("--snr1", dest="snr1_db", nargs=nargs)
    p.add_argument("--snr2", dest="snr2_db")
    p.add_argument("--seed")
    p.add_argument("--noise", choices=["paper", "sample"])
    p.add_argument("--kernel", choices=["circular", "linear"])
    for name in ("kappa", "rho", "gamma1", "gamma2", "m0", "m0p", "truncation",
                 "vanishing_moments"):
        p.add_argument(f"--{name.replace('_', '-')}", dest=name)


def _add_mc(p: argparse.ArgumentParser) -> None:
    p.add_argument("--reps", dest="n_rep")
    p.add_argument("--jobs")
    p.add_argument("--table1-cell", nargs=4, metavar=("FT", "FU", "M", "N"))
    p.add_argument("--out", help="CSV output path (default stdout)")
    p.add_argument("--emit-plot-data", dest="plot_data", metavar="PATH",
                   help="long-format x,y,series CSV")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="deconwave",
                                     description="Blind functional deconvolution by wavelets")
    sub = parser.add_subparsers(dest="command", required=True)

    b = sub.add_parser("benchmark", help="Monte-Carlo MISE over a grid of cells")
    _add_common(b)
    _add_mc(b)
    b.add_argument("--J", dest="J_mode", help="'auto', 'oracle' or a fixed level")
    b.add_argument("--per-rep-out", dest="per_rep_out")

    s = sub.add_parser("search-j", help="oracle search over the finest level J")
    _add_common(s)
    _add_mc(s)

    sim = sub.add_parser("simulate", help="write a synthetic y / g_delta pair")
    _add_common(sim, grid=False)
    sim.add_argument("--out-dir", required=True)
    sim.add_argument("--format", choices=["csv", "bin"], default="csv")

    e = sub.add_parser("estimate", help="estimate f from matrix files")
    e.add_argument("--config")
    e.add_argument("-v", "--verbose", action="store_const", const=True, default=None)
    e.add_argument("--y", required=True)
    e.add_argument("--gdelta", required=True)
    e.add_argument("--out", required=True, help="output matrix (.csv or .bin)")
    e.add_argument("--diagnostics", help="JSON diagnostics path (default stdout)")
    e.add_argument("--sigma1")
    e.add_argument("--sigma2")
    e.add_argument("--J", dest="J_override")
    e.add_argument("--Jprime", dest="Jp_override")
    for name in ("kappa", "rho", "gamma1", "gamma2", "m0", "m0p", "truncation",
                 "vanishing_moments"):
        e.add_argument(f"--{name.replace('_', '-')}", dest=name)

    r = sub.add_parser("rates", help="minimax rate exponent")
    r.add_argument("--s1", type=float, required=True)
    r.add_argument("--s2", type=float, required=True)
    r.add_argument("--p", type=float, required=True)
    r.add_argument("--q", type=float, default=2.0)
    r.add_argument("--nu", type=float, required=True)
    return parser


_NOT_CONFIG = {"command", "config", "table1_cell", "out_dir", "format", "y", "gdelta",
               "diagnostics"}


def _run_command(args) -> int:
    if args.command == "rates":
        return cmd_rates(args.s1, args.s2, args.p, args.q, args.nu)
    flags = {k: v for k, v in vars(args).items() if k not in _NOT_CONFIG}
    if getattr(args, "table1_cell", None):
        ft, fu, M, N = args.table1_cell
        flags.update(f_t=[ft], f_u=[fu], M=[M], N=[N])
    if args.command == "estimate":
        flags["out"] = None  # the matrix path is not a table output
    file_values = load_config_file(args.config) if args.config else {}
    cfg = resolve_config(file_values, flags)
    logging.basicConfig(level=logging.INFO if cfg.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if args.command == "benchmark":
        return cmd_benchmark(cfg)
    if args.command == "search-j":
        return cmd_search_j(cfg)
    if args.command == "simulate":
        return cmd_simulate(cfg, args.out_dir, args.format)
    return cmd_estimate(cfg, args.y, args.gdelta, args.out, args.diagnostics)


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code is not None else 0
    try:
        return _run_command(args)
    except (UsageError, DimensionError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # runtime failure
        log.debug("runtime failure", exc_info=True)
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
